use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_itscale");

fn itscale(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).env_remove("ITSCALE_CONFIG").args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = itscale(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(dir: &Path, name: &str, length: &str) {
    ok(
        dir,
        &[
            "simulate", "--d", "0.24", "--nu", "4.0", "--scale", "0.01", "--tau-c", "500", "--window", "100", "--mode",
            "conditional", "--length", length, "--seed", "42", "--out", name,
        ],
    );
}

/// Columns of the data rows of a TSV text, comment lines skipped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split('\t').map(String::from).collect()).collect()
}

fn column(text: &str, k: usize) -> Vec<f64> {
    rows(text).iter().map(|r| r[k].parse().unwrap()).collect()
}

fn close(a: f64, b: f64) -> bool {
    // nine significant digits in the files
    (a - b).abs() <= 5.1e-9 * a.abs().max(b.abs()) + 1e-300
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "a.tsv", "27000");
    simulate(dir.path(), "b.tsv", "27000");
    let a = std::fs::read(dir.path().join("a.tsv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.tsv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(rows(&text).len(), 27000);
    assert!(text.contains("# seed = 42\n"));
}

#[test]
fn stdout_and_file_outputs_match() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["theory", "autocorr", "--max-lag", "30", "--fit-range", "1:20"];
    let stdout = ok(dir.path(), &args);
    ok(dir.path(), &[&args[..], &["--out", "c.tsv"]].concat());
    assert_eq!(stdout, std::fs::read_to_string(dir.path().join("c.tsv")).unwrap());
}

#[test]
fn autocorr_format_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "a.tsv", "3000");
    let text = ok(dir.path(), &["analyze", "autocorr", "--input", "a.tsv", "--max-lag", "20", "--fit-range", "1:10"]);
    let golden = include_str!("golden/autocorr.tsv");
    assert_eq!(text, golden);

    let lines: Vec<&str> = text.lines().collect();
    let columns = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    assert_eq!(lines[columns], "tau\tc");
    assert!(lines[..columns].iter().all(|l| l.starts_with("# ")));
    let footer = lines.last().unwrap();
    let rest = footer.strip_prefix("# beta=").unwrap();
    let (beta, stderr) = rest.split_once(" stderr=").unwrap();
    let beta: f64 = beta.parse().unwrap();
    let _: f64 = stderr.parse().unwrap();

    // independent c(τ) and log-log fit from the simulated file
    let sim = std::fs::read_to_string(dir.path().join("a.tsv")).unwrap();
    let r = column(&sim, 1);
    let m = r.iter().sum::<f64>() / r.len() as f64;
    let abs: Vec<f64> = r.iter().map(|x| (x - m).abs()).collect();
    let c = column(&text, 1);
    assert_eq!(c.len(), 21);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (tau, got) in c.iter().enumerate() {
        let n = abs.len() - tau;
        let (x, y) = (&abs[..n], &abs[tau..]);
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let var: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let want = cov / var;
        assert!((got - want).abs() < 1e-8, "tau {tau}: {got} vs {want}");
        if (1..=10).contains(&tau) && want > 0.0 {
            xs.push((tau as f64).ln());
            ys.push(want.ln());
        }
    }
    let (mx, my) = (xs.iter().sum::<f64>() / xs.len() as f64, ys.iter().sum::<f64>() / ys.len() as f64);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    assert!((beta + sxy / sxx).abs() < 1e-7, "{beta} vs {}", -sxy / sxx);
}

#[test]
fn theory_moments_exponents_match_direct_regression() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["theory", "moments", "--q", "1,2,3,4,5", "--d", "0.24", "--tau-c", "500", "--t-range", "1:50"]);
    let table = rows(&text);
    assert_eq!(table.len(), 250);
    let d: f64 = 0.24;
    for q in 1..=5 {
        let ts: Vec<f64> = (1..=50).map(|t| t as f64).collect();
        let sums: Vec<f64> = ts
            .iter()
            .map(|t| {
                (0..500)
                    .map(|s| {
                        let s = s as f64;
                        ((s + t).powf(2.0 * d) - s.powf(2.0 * d)).powf(0.5 * q as f64)
                    })
                    .sum::<f64>()
                    / 500.0
            })
            .collect();
        let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = sums.iter().map(|s| s.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 50.0, ys.iter().sum::<f64>() / 50.0);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let want = sxy / sxx;
        for row in table.iter().filter(|r| r[0].parse::<f64>().unwrap() == q as f64) {
            let got: f64 = row[3].parse().unwrap();
            assert!(close(got, want), "q={q}: {got} vs {want}");
        }
    }
    // S_q is reported only where μ_q is finite (q < ν = 4)
    assert!(table.iter().filter(|r| r[0].starts_with('4') || r[0].starts_with('5')).all(|r| r[2] == "nan"));
    assert!(table.iter().filter(|r| r[0].starts_with('1')).all(|r| r[2] != "nan"));
}

#[test]
fn header_command_reproduces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "a.tsv", "5000");
    ok(dir.path(), &["analyze", "moments", "--input", "a.tsv", "--q", "1,2", "--t-range", "1:8", "--out", "m.tsv"]);
    let first = std::fs::read_to_string(dir.path().join("m.tsv")).unwrap();
    let command = first.lines().find_map(|l| l.strip_prefix("# command: itscale ")).unwrap();
    let mut args: Vec<&str> = command.split(' ').collect();
    args.extend(["--out", "again.tsv"]);
    ok(dir.path(), &args);
    assert_eq!(first, std::fs::read_to_string(dir.path().join("again.tsv")).unwrap());

    let sim = std::fs::read_to_string(dir.path().join("a.tsv")).unwrap();
    let command = sim.lines().find_map(|l| l.strip_prefix("# command: itscale ")).unwrap();
    let mut args: Vec<&str> = command.split(' ').collect();
    args.extend(["--out", "b.tsv"]);
    ok(dir.path(), &args);
    assert_eq!(sim, std::fs::read_to_string(dir.path().join("b.tsv")).unwrap());
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "d = 0.3\nseed = 7\nlength = 50\nmax-lag = 9\n").unwrap();
    let text = ok(dir.path(), &["simulate", "--config", "run.toml", "--seed", "8"]);
    assert!(text.contains("# d = 0.3\n"));
    assert!(text.contains("# seed = 8\n"));
    assert!(text.contains("# length = 50\n"));
    assert!(text.contains("# nu = 4\n"));
    assert_eq!(rows(&text).len(), 50);

    let via_env = Command::new(BIN)
        .current_dir(dir.path())
        .env("ITSCALE_CONFIG", "run.toml")
        .args(["simulate", "--seed", "8"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(via_env.stdout).unwrap(), text);

    std::fs::write(dir.path().join("bad.toml"), "dee = 0.3\n").unwrap();
    let out = itscale(dir.path(), &["simulate", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key dee"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = itscale(dir.path(), &["simulate", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(out.stdout.is_empty());

    let out = itscale(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    let out = itscale(dir.path(), &["simulate", "--d", "0.7", "--length", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("D"), "{}", String::from_utf8_lossy(&out.stderr));

    let out = itscale(dir.path(), &["theory", "autocorr", "--epoch-mode", "geometric"]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(itscale(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(itscale(dir.path(), &["--version"]).status.code(), Some(0));

    simulate(dir.path(), "a.tsv", "5000");
    let out = itscale(
        dir.path(),
        &["calibrate", "--input", "a.tsv", "--q", "1,2,3", "--t-range", "1:8", "--max-iter", "1", "--out", "cal.tsv"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let cal = std::fs::read_to_string(dir.path().join("cal.tsv")).unwrap();
    assert!(cal.contains("converged\tfalse"));
}

#[test]
fn parallel_grids_match_sequential() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "a.tsv", "20000");
    let cases: [&[&str]; 4] = [
        &["analyze", "moments", "--input", "a.tsv"],
        &["analyze", "autocorr", "--input", "a.tsv"],
        &["theory", "autocorr", "--max-lag", "300"],
        &["theory", "gbar", "--t", "1,4", "--points", "41"],
    ];
    for args in cases {
        let seq = ok(dir.path(), &[args, &["--threads", "1"]].concat());
        let par = ok(dir.path(), &[args, &["--threads", "3"]].concat());
        assert_eq!(seq, par, "{args:?}");
    }
}

#[test]
fn pipeline_ingest_calibrate_simulate_analyze() {
    use itscale_core::model::ModelParams;
    use itscale_core::sampler::{prices_from_returns, sample, SamplingMode};

    let dir = tempfile::tempdir().unwrap();
    let params = ModelParams::new(0.24, 500, 4.0, 0.01).unwrap().with_window(100);
    let returns = sample(27_000, &params, 3, SamplingMode::Conditional).unwrap().returns;
    let prices = prices_from_returns(&returns, 100.0).unwrap();
    let mut csv = String::from("date,close\n");
    let mut day = chrono::NaiveDate::from_ymd_opt(1900, 1, 1).unwrap();
    for p in &prices {
        csv.push_str(&format!("{day},{p}\n"));
        day = day.succ_opt().unwrap();
    }
    std::fs::write(dir.path().join("index.csv"), csv).unwrap();

    ok(dir.path(), &["ingest", "--input", "index.csv", "--out", "prices.tsv"]);
    let cal = ok(
        dir.path(),
        &["calibrate", "--input", "prices.tsv", "--q", "1,2,3", "--t-range", "1:10", "--emit-config", "fit.toml"],
    );
    assert!(cal.contains("converged\ttrue"));
    let fit = std::fs::read_to_string(dir.path().join("fit.toml")).unwrap();
    let sim = ok(dir.path(), &["simulate", "--config", "fit.toml", "--length", "8000", "--out", "sim.tsv"]);
    assert!(sim.is_empty());
    let header = std::fs::read_to_string(dir.path().join("sim.tsv")).unwrap();
    let fitted_d = fit.lines().find_map(|l| l.strip_prefix("d = ")).unwrap();
    assert!(header.contains(&format!("# d = {fitted_d}\n")));

    for sub in ["collapse", "moments", "autocorr", "conditional"] {
        let text = ok(dir.path(), &["analyze", sub, "--input", "sim.tsv"]);
        assert!(text.contains("# input: seed = 0"), "{sub}");
        assert!(!rows(&text).is_empty(), "{sub}");
    }
    let text = ok(dir.path(), &["analyze", "moments", "--input", "prices.tsv", "--q", "2"]);
    assert!(rows(&text).iter().all(|r| r[0] == "2.00000000"));
}
