//! End-to-end runs of the binary: schemas, exit codes, determinism,
//! round-trip parsing.

use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chainfresh"));
    c.env_remove("CHAINFRESH_SEED");
    c
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<String>], idx: usize) -> Vec<f64> {
    rows.iter().map(|r| r[idx].parse().unwrap()).collect()
}

#[test]
fn analyze_default_grid_schema_and_monotonicity() {
    let text = run_ok(&["analyze"]);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["v", "avg_aoi", "p_v", "p_pv", "method_flags"]);
    assert_eq!(rows.len(), 8);
    for col in [2, 3] {
        let vals = column(&rows, col);
        assert!(vals.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "column {col} not non-increasing");
    }
    // the series handles small targets; deep-tail targets switch to the
    // quadrature oracle once the alternating sums cancel past certification
    assert!(rows.iter().all(|r| r[4] == "series" || r[4] == "quadrature"));
    assert_eq!(rows[0][4], "series");
}

#[test]
fn analyze_leading_targets_below_t_tx_are_certain() {
    // zeta = 0.95 pushes the channel rate low enough that t_tx exceeds the
    // first targets
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "zeta = 0.95\ngamma.source = \"table\"\ngamma.knob = \"target_stp\"\ngamma.value = 0.9\n",
    )
    .unwrap();
    let text = run_ok(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--v-grid",
        "0.5,1,2,4",
    ]);
    let (_, rows) = parse_csv(&text);
    let pv = column(&rows, 2);
    assert_eq!(pv[0], 1.0);
    assert_eq!(pv[1], 1.0);
    assert!(pv[3] < 1.0);
}

#[test]
fn simulate_deterministic_and_seed_sources() {
    let args = ["simulate", "--stop-updates", "2000", "--seed", "99", "--v-grid", "2,4"];
    let a = run_ok(&args);
    let b = run_ok(&args);
    assert_eq!(a, b);
    // env var supplies the seed when the flag is absent, flag wins over env
    let via_env = bin()
        .env("CHAINFRESH_SEED", "99")
        .args(["simulate", "--stop-updates", "2000", "--v-grid", "2,4"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(via_env.stdout).unwrap(), a);
    let flag_beats_env = bin()
        .env("CHAINFRESH_SEED", "1234")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(flag_beats_env.stdout).unwrap(), a);
}

#[test]
fn simulate_schema_and_low_sample_flag() {
    let text = run_ok(&["simulate", "--stop-updates", "100", "--seed", "5"]);
    let (header, rows) = parse_csv(&text);
    assert_eq!(
        header,
        ["v", "avg_aoi_sim", "p_v_sim", "p_pv_sim", "n_effective", "seed", "flags"]
    );
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[6] == "low_sample" && r[5] == "5"));
    let text = run_ok(&["simulate", "--stop-updates", "5000", "--seed", "5", "--v-grid", "3"]);
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows[0][6], "");
}

#[test]
fn simulate_horizon_stop_and_conflicting_stops() {
    let text = run_ok(&["simulate", "--stop-horizon", "500", "--seed", "3", "--v-grid", "2"]);
    let (_, rows) = parse_csv(&text);
    assert!(column(&rows, 4)[0] > 100.0);
    let out = bin()
        .args(["simulate", "--stop-horizon", "500", "--stop-updates", "10"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn analyze_vs_simulate_agree_on_default_grid() {
    let a = run_ok(&["analyze"]);
    let s = run_ok(&["simulate", "--stop-updates", "200000", "--seed", "31"]);
    let (_, arows) = parse_csv(&a);
    let (_, srows) = parse_csv(&s);
    for (ar, sr) in arows.iter().zip(&srows) {
        let (p, ps): (f64, f64) = (ar[2].parse().unwrap(), sr[2].parse().unwrap());
        assert!((p - ps).abs() <= 0.01, "v={}: {p} vs {ps}", ar[0]);
    }
}

#[test]
fn compare_emits_consistent_differences() {
    let text = run_ok(&[
        "compare",
        "--stop-updates",
        "20000",
        "--seed",
        "8",
        "--v-grid",
        "2,4,6",
    ]);
    let (header, rows) = parse_csv(&text);
    assert_eq!(
        header,
        ["v", "avg_aoi", "p_v", "p_pv", "avg_aoi_sim", "p_v_sim", "p_pv_sim",
         "d_avg_aoi", "d_p_v", "d_p_pv"]
    );
    for r in &rows {
        let f = |i: usize| -> f64 { r[i].parse().unwrap() };
        assert!((f(8) - (f(2) - f(5)).abs()).abs() <= 1e-8);
        assert!((f(9) - (f(3) - f(6)).abs()).abs() <= 1e-8);
    }
}

#[test]
fn fit_recovers_synthetic_trace_and_feeds_back_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("trace.txt");
    let gamma = rand_distr::Gamma::new(5.42, 1.0 / 2.84).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let lines: Vec<String> = (0..1000)
        .map(|_| format!("{:.9}", gamma.sample(&mut rng)))
        .collect();
    std::fs::write(&trace_path, lines.join("\n")).unwrap();

    let snippet_path = dir.path().join("fitted.toml");
    let report = run_ok(&[
        "fit",
        trace_path.to_str().unwrap(),
        "--out",
        snippet_path.to_str().unwrap(),
    ]);
    let get = |key: &str| -> f64 {
        report
            .lines()
            .find(|l| l.starts_with(key))
            .unwrap()
            .split('=')
            .nth(1)
            .unwrap()
            .trim()
            .split(' ')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((get("alpha") - 5.42).abs() / 5.42 < 0.05);
    assert!(get("ks_statistic") < 0.0515);
    assert!(report.contains("ks_pass = true"));

    // the emitted snippet plus explicit source must be a valid config
    let cfg = dir.path().join("exp.toml");
    let snippet = std::fs::read_to_string(&snippet_path).unwrap();
    std::fs::write(&cfg, snippet).unwrap();
    let text = run_ok(&["analyze", "--config", cfg.to_str().unwrap(), "--v-grid", "2,5"]);
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 2);
}

#[test]
fn fit_degenerate_trace_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("flat.txt");
    std::fs::write(&trace_path, "2.0\n".repeat(50)).unwrap();
    let out = bin().args(["fit", trace_path.to_str().unwrap()]).output().unwrap();
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn sweep_schema_round_trip_and_interior_minima() {
    let text = run_ok(&["sweep", "--knob", "target_stp", "--v", "5.5", "--d-bits", "250000"]);
    assert!(text.starts_with("# note:"));
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["knob_value", "alpha", "beta", "t_tx", "avg_aoi", "p_v", "p_pv"]);
    assert_eq!(rows.len(), 8);
    // the zeta = 1 row has zero channel rate: infinite latency, certain violation
    let last = rows.last().unwrap();
    assert_eq!(last[3], "inf");
    assert_eq!(last[5], "1");
    // exact unit conversion shows up in the zeta = 0.6 transmission latency
    let t_tx: f64 = rows[3][3].parse().unwrap();
    assert!((t_tx - 0.131753738).abs() < 1e-6);
    for col in [4, 5, 6] {
        let vals = column(&rows, col);
        let (idx, _) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert!(idx != 0 && idx != vals.len() - 1, "column {col} minimum at the edge");
    }
}

#[test]
fn sweep_rejects_unknown_knob() {
    let out = bin().args(["sweep", "--knob", "batch"]).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown knob"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let write_cfg = |name: &str, body: &str| -> String {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    };
    let cases = [
        write_cfg("unknown.toml", "zeta = 0.6\nbogus_key = 1\n"),
        write_cfg("bad_zeta.toml", "zeta = 1.5\n"),
        write_cfg("bad_grid.toml", "v_grid = [2.0, 1.0]\n"),
        write_cfg("two_sources.toml", "gamma.source = \"explicit\"\ngamma.alpha = 5.0\ngamma.beta = 2.0\ngamma.knob = \"timeout\"\n"),
        write_cfg("no_row.toml", "gamma.source = \"table\"\ngamma.value = 0.65\n"),
    ];
    for cfg in &cases {
        let out = bin().args(["analyze", "--config", cfg]).output().unwrap();
        assert_eq!(exit_code(&out), 2, "config {cfg} should exit 2");
    }
    let out = bin()
        .env("CHAINFRESH_SEED", "not-a-number")
        .args(["simulate", "--stop-updates", "10"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let stdout = run_ok(&["analyze", "--v-grid", "1,3,5"]);
    run_ok(&["analyze", "--v-grid", "1,3,5", "--out", path.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
}

#[test]
fn trace_source_drives_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("trace.txt");
    let gamma = rand_distr::Gamma::new(5.94, 1.0 / 2.45).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(12);
    let lines: Vec<String> = (0..2000)
        .map(|_| format!("{:.9}", gamma.sample(&mut rng)))
        .collect();
    std::fs::write(&trace_path, lines.join("\n")).unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "gamma.source = \"trace\"\ngamma.trace = {:?}\n",
            trace_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let text = run_ok(&["analyze", "--config", cfg.to_str().unwrap(), "--v-grid", "2,5"]);
    let (_, rows) = parse_csv(&text);
    // the fitted source must land near an explicit run with the true shape
    let explicit = dir.path().join("explicit.toml");
    std::fs::write(
        &explicit,
        "gamma.source = \"explicit\"\ngamma.alpha = 5.94\ngamma.beta = 2.45\n",
    )
    .unwrap();
    let want = run_ok(&["analyze", "--config", explicit.to_str().unwrap(), "--v-grid", "2,5"]);
    let (_, wrows) = parse_csv(&want);
    for col in [1, 2, 3] {
        let got: f64 = rows[0][col].parse().unwrap();
        let exp: f64 = wrows[0][col].parse().unwrap();
        assert!((got - exp).abs() < 0.12, "column {col}: {got} vs {exp}");
    }
}
