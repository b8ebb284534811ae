//! Double-double arithmetic (~31 significant decimal digits).
//!
//! The alternating series in the closed-form violation probabilities cancel
//! catastrophically: individual terms reach ~1e14 while the sum is ~1e-3, so
//! plain f64 loses every digit. Evaluating the term recurrences in
//! double-double keeps ~15 digits after a 1e17-fold cancellation.
//!
//! Only the operations the series need are implemented: field ops, exp, ln,
//! integer powers and ln-gamma. Accuracy is pinned by tests against values
//! computed with 40-digit arithmetic.

/// A number represented as an unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    pub const LN2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };
    /// ln(2*pi)/2 to double-double precision.
    pub const HALF_LN_2PI: Dd = Dd {
        hi: 0.918_938_533_204_672_8,
        lo: -3.878_294_158_067_241_4e-17,
    };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[cfg_attr(not(test), allow(dead_code))]
    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s1, e1) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s1, e1 + f);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, b: Dd) -> Dd {
        self.add(-b)
    }

    #[inline]
    pub fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self.sub(b.mul_f64(q1));
        let q2 = r.hi / b.hi;
        let r2 = r.sub(b.mul_f64(q2));
        let q3 = r2.hi / b.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add(Dd::from_f64(q3))
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Dd {
        self.div(Dd::from_f64(b))
    }

    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    /// Integer power by binary exponentiation; `n` may be negative.
    pub fn powi(self, n: i64) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }

    /// exp(self). Accurate to ~1e-31 relative for |x| < 700.
    pub fn exp(self) -> Dd {
        let x = self;
        if x.hi < -745.0 {
            return Dd::ZERO;
        }
        if x.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        // range-reduce: x = k ln2 + r, |r| <= ln2/2
        let k = (x.hi / Dd::LN2.hi).round();
        let r = x.sub(Dd::LN2.mul_f64(k));
        // Taylor series of exp(r); |r| <= 0.35 so ~26 terms reach 1e-33
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for i in 1..40 {
            term = term.mul(r).div_f64(i as f64);
            sum = sum.add(term);
            if term.hi.abs() < 1.0e-35 {
                break;
            }
        }
        // scale by 2^k exactly
        let scale = (k as i32).max(-1022);
        let f = libm_ldexp(1.0, scale);
        Dd {
            hi: sum.hi * f,
            lo: sum.lo * f,
        }
    }

    /// ln(self) for self > 0, by Newton refinement of the f64 logarithm.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let mut y = Dd::from_f64(self.hi.ln());
        // y += x*exp(-y) - 1, twice (each step roughly squares the error)
        for _ in 0..2 {
            let e = self.mul((-y).exp());
            y = y.add(e.sub(Dd::ONE));
        }
        y
    }

    /// self^p for self > 0 and real exponent.
    pub fn powf(self, p: Dd) -> Dd {
        self.ln().mul(p).exp()
    }

}

impl std::ops::Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

#[inline]
fn libm_ldexp(x: f64, e: i32) -> f64 {
    // exact scaling by 2^e; e is clamped well inside the exponent range
    if e >= 0 {
        x * f64::from_bits(((1023 + e) as u64) << 52)
    } else {
        x / f64::from_bits(((1023 - e) as u64) << 52)
    }
}

/// ln Gamma(x) for x > 0 to ~1e-29 absolute.
///
/// Stirling's series at z >= 24, with the argument shifted up by the
/// recurrence lnG(x) = lnG(x+n) - sum ln(x+i).
pub(crate) fn ln_gamma_dd(x: Dd) -> Dd {
    debug_assert!(x.hi > 0.0);
    // Bernoulli coefficients B_{2j} / (2j (2j-1)) as exact rationals
    const COEF: [(f64, f64); 11] = [
        (1.0, 12.0),
        (-1.0, 360.0),
        (1.0, 1260.0),
        (-1.0, 1680.0),
        (1.0, 1188.0),
        (-691.0, 360360.0),
        (1.0, 156.0),
        (-3617.0, 122400.0),
        (43867.0, 244188.0),
        (-174611.0, 125400.0),
        (77683.0, 5796.0),
    ];
    let mut shift = Dd::ZERO;
    let mut z = x;
    while z.hi < 24.0 {
        shift = shift.add(z.ln());
        z = z.add(Dd::ONE);
    }
    let lnz = z.ln();
    let mut s = z.sub(Dd::from_f64(0.5)).mul(lnz).sub(z).add(Dd::HALF_LN_2PI);
    let z2 = z.mul(z).recip();
    let mut zp = z.recip();
    for (num, den) in COEF {
        s = s.add(zp.mul_f64(num).div_f64(den));
        zp = zp.mul(z2);
    }
    s.sub(shift)
}

/// Gamma(x) in double-double (x moderate; overflows above ~170 like f64).
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn gamma_dd(x: Dd) -> Dd {
    ln_gamma_dd(x).exp()
}

/// Lower incomplete gamma function, gamma(a, x), for a > 0, x >= 0.
///
/// All-positive series x^a e^{-x} sum_j x^j / (a (a+1) .. (a+j)); no
/// cancellation for any x, so double-double accuracy is preserved.
pub(crate) fn lower_gamma_dd(a: Dd, x: Dd) -> Dd {
    if x.hi <= 0.0 {
        return Dd::ZERO;
    }
    let pref = a.mul(x.ln()).sub(x).exp();
    let mut denom = a;
    let mut term = a.recip();
    let mut sum = term;
    for _ in 0..10_000 {
        denom = denom.add(Dd::ONE);
        term = term.mul(x).div(denom);
        sum = sum.add(term);
        if term.hi < sum.hi * 1.0e-34 {
            break;
        }
    }
    pref.mul(sum)
}

/// Kummer's 1F1(a; b; z) for a, b > 0, z >= 0 (all-positive series).
pub(crate) fn kummer_pos_dd(a: Dd, b: Dd, z: Dd) -> Dd {
    debug_assert!(z.hi >= 0.0);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut an = a;
    let mut bn = b;
    for j in 1..20_000 {
        term = term.mul(an).mul(z).div(bn).div_f64(j as f64);
        sum = sum.add(term);
        if term.hi < sum.hi * 1.0e-34 {
            break;
        }
        an = an.add(Dd::ONE);
        bn = bn.add(Dd::ONE);
    }
    sum
}
