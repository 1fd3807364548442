use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use polsym::io::{strip_comments, write_field};
use polsym_core::{GridSpec, MultiField, ScalarField};

fn polsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polsym"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_with(dir: &Path, name: &str, command: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{name}.cfg"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    polsym(&args)
}

fn csv(dir: &Path, run: &str, file: &str) -> String {
    strip_comments(&fs::read_to_string(dir.join(run).join(file)).unwrap())
}

const VERIFY: &str = "command = verify\ndim = 2\nn = 9\nhalf_width = 2.0\nseed = 5\ntrials = 10\nassumption_trials = 50\n";
const SYMMETRIZE: &str = "command = symmetrize\ndim = 2\nn = 17\nhalf_width = 2.0\nseed = 5\nm = 2\nmax_iter = 200\n";

#[test]
fn verify_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_with(dir.path(), "a", "verify", VERIFY, &[]);
    let b = run_with(dir.path(), "b", "verify", VERIFY, &[]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    for file in ["suite.csv", "assumptions.csv"] {
        assert_eq!(csv(dir.path(), "a", file), csv(dir.path(), "b", file), "{file}");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    run_with(dir.path(), "a", "symmetrize", SYMMETRIZE, &[]);
    run_with(dir.path(), "b", "symmetrize", SYMMETRIZE, &["--seed", "6"]);
    let c = run_with(dir.path(), "c", "symmetrize", &SYMMETRIZE.replace("seed = 5", "seed = 6"), &[]);
    assert_eq!(c.status.code(), Some(0));
    let (a, b, c) = (
        csv(dir.path(), "a", "trace.csv"),
        csv(dir.path(), "b", "trace.csv"),
        csv(dir.path(), "c", "trace.csv"),
    );
    assert_ne!(a, b);
    assert_eq!(b, c);
}

#[test]
fn symmetrize_writes_a_contracting_trace_for_a_shifted_bump() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(2, 17, 2.0).unwrap();
    let bump = ScalarField::from_fn(spec, |x| (-((x[0] - 0.75).powi(2) + (x[1] + 0.5).powi(2))).exp()).unwrap();
    let input = dir.path().join("bump.rfld");
    write_field(&input, &MultiField::single(bump)).unwrap();
    let config = format!(
        "command = symmetrize\ndim = 2\nn = 17\nhalf_width = 2.0\nm = 1\ninput = {}\n",
        input.display()
    );
    let out = run_with(dir.path(), "s", "symmetrize", &config, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let trace = csv(dir.path(), "s", "trace.csv");
    let dists: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(dists.len() > 1);
    assert!(dists.windows(2).all(|w| w[1] <= w[0]));
    for file in ["initial.rfld", "final.rfld", "schwarz.rfld", "summary.txt"] {
        assert!(dir.path().join("s").join(file).exists(), "{file}");
    }
}

#[test]
fn failed_checks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = VERIFY.to_owned() + "model = control_nonmonotone_g\n";
    let out = run_with(dir.path(), "v", "verify", &config, &[]);
    assert_eq!(out.status.code(), Some(1));
    let summary = fs::read_to_string(dir.path().join("v/summary.txt")).unwrap();
    assert!(summary.contains("assumptions_passed = false"));
    assert!(summary.contains("assumption.G4"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("dim = 4\nn = 9\nhalf_width = 1\n", "dim must be 1, 2, or 3"),
        ("dim = 2\nn = 9\nhalf_width = 1\nfoo = 1\n", "unknown key 'foo'"),
        ("dim = 2\nn = 9\nn = 11\nhalf_width = 1\n", "duplicate key at line 3"),
        ("n = 9\nhalf_width = 1\n", "missing required key 'dim'"),
        ("command = minimize\ndim = 2\nn = 9\nhalf_width = 1\n", "config is for 'minimize'"),
    ];
    for (i, (config, msg)) in cases.iter().enumerate() {
        let out = run_with(dir.path(), &format!("e{i}"), "verify", config, &[]);
        assert_eq!(out.status.code(), Some(2), "{config}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(msg), "{stderr}");
    }
    let missing = polsym(&["verify", "--config", dir.path().join("none.cfg").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn minimize_rejects_a_model_of_the_wrong_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let config = "command = minimize\ndim = 2\nn = 9\nhalf_width = 2\nmodel = example_paper\n";
    let out = run_with(dir.path(), "m", "minimize", config, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("3-dimensional"));
}

#[test]
fn minimize_writes_its_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = "command = minimize\ndim = 3\nn = 9\nhalf_width = 4\nmodel = example_paper\nmax_steps = 20\nk_pol = 5\nconvolution = direct\n";
    let out = run_with(dir.path(), "m", "minimize", config, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["energy_trace.csv", "schwarz_events.csv", "dilation.csv", "final.rfld", "summary.txt"] {
        assert!(dir.path().join("m").join(file).exists(), "{file}");
    }
    let events = csv(dir.path(), "m", "schwarz_events.csv");
    assert!(events.lines().count() >= 2, "{events}");
    let trace = csv(dir.path(), "m", "energy_trace.csv");
    let totals: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(totals.len() > 1);
}
