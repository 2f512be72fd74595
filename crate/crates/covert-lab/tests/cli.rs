//! End-to-end tests of the `covert-lab` binary: exit codes, artifact
//! round-trips, and byte-level determinism of result CSVs.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_covert-lab"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const BUFFERING_CFG: &str = r#"
schema_version = 1
kind = "buffering"
seed = 424242
trials = 30

[channel]
family = "exponential"
rate = 1.0

[strategy]
epsilon = 0.5

[grid]
n = [300, 900]

[output]
csv = "buffering.csv"
svg = "buffering.svg"
"#;

#[test]
fn sweep_writes_csv_and_svg_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", BUFFERING_CFG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let res = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
            "sweep",
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let a = std::fs::read(out_a.join("buffering.csv")).unwrap();
    let b = std::fs::read(out_b.join("buffering.csv")).unwrap();
    assert_eq!(a, b, "result CSV differs across identical reruns");
    let svg = std::fs::read_to_string(out_a.join("buffering.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("slope ="));
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", BUFFERING_CFG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let base = |out: &Path| {
        vec![
            "--config".to_string(),
            cfg.to_str().unwrap().to_string(),
            "--out".to_string(),
            out.to_str().unwrap().to_string(),
            "--quiet".to_string(),
        ]
    };
    let res = bin().args(base(&out_a)).arg("sweep").output().unwrap();
    assert!(res.status.success());
    let res = bin()
        .args(base(&out_b))
        .args(["--seed", "7", "sweep"])
        .output()
        .unwrap();
    assert!(res.status.success());
    let a = std::fs::read(out_a.join("buffering.csv")).unwrap();
    let b = std::fs::read(out_b.join("buffering.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn missing_or_invalid_config_exits_2() {
    let res = run(&["sweep"]);
    assert_eq!(res.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "schema_version = 1\nnot toml [");
    let res = run(&["--config", bad.to_str().unwrap(), "sweep"]);
    assert_eq!(res.status.code(), Some(2));

    let unknown = write(
        dir.path(),
        "unknown.toml",
        &BUFFERING_CFG.replace("[strategy]", "mystery = 1\n[strategy]"),
    );
    let res = run(&["--config", unknown.to_str().unwrap(), "sweep"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn failed_assertion_exits_3() {
    // gamma barely above 1/2 at a tiny horizon: insertion is far below the
    // detector threshold, so the error sum stays near 1 and the built-in
    // supercritical check must fail.
    let cfg_text = r#"
schema_version = 1
kind = "poisson-converse"
seed = 5
trials = 120

[channel]
family = "exponential"
rate = 1.0

[detector]
alpha = 0.05

[grid]
t = [100.0]
gamma = [0.6]

[output]
csv = "converse.csv"
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", cfg_text);
    let out = dir.path().join("out");
    let res = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
        "--assert",
        "sweep",
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(stdout(&res).contains("FAIL"));
    // Without --assert the same run exits 0 but still reports FAIL lines.
    let res = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
        "sweep",
    ]);
    assert_eq!(res.status.code(), Some(0));
    assert!(stdout(&res).contains("FAIL"));
}

#[test]
fn passing_assertions_exit_0() {
    let cfg_text = r#"
schema_version = 1
kind = "fisher"
seed = 1
trials = 1

[channel]
family = "exponential"
rate = 1.0

[[grid.families]]
family = "gamma"
shape = 2.0
scale = 0.5

[[grid.families]]
family = "weibull"
shape = 2.0
scale = 1.0

[output]
csv = "fisher.csv"
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", cfg_text);
    let out = dir.path().join("out");
    let res = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
        "--assert",
        "sweep",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", stdout(&res));
    assert!(stdout(&res).contains("PASS"));
    let csv = std::fs::read_to_string(out.join("fisher.csv")).unwrap();
    assert!(csv.starts_with("family,analytic,quadrature,abs_diff"));
    assert_eq!(csv.lines().count(), 3);
}

const SIMULATE_CFG: &str = r#"
schema_version = 1
kind = "poisson-achievability"
seed = 99
trials = 100

[channel]
family = "exponential"
rate = 2.0

[strategy]
epsilon = 0.3

[detector]
kind = "count-threshold"
alpha = 0.05

[simulate]
horizon = 200.0

[grid]
t = [200.0]

[output]
csv = "ach.csv"
"#;

#[test]
fn simulate_detect_trace_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", SIMULATE_CFG);
    let out = dir.path().join("out");
    let res = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "simulate",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let jack = out.join("jack.csv");
    let observed = out.join("observed.csv");
    assert!(jack.exists() && observed.exists());
    let text = std::fs::read_to_string(&jack).unwrap();
    assert!(text.starts_with("index,timestamp_s,source\n"));
    assert!(text.lines().nth(1).unwrap().ends_with(",jack"));

    // Detector runs on the clean trace and reports a decision.
    let res = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "detect",
        "--trace",
        jack.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let report = stdout(&res);
    assert!(report.contains("detector=count-threshold"));
    assert!(report.contains("decision=H0"), "{report}");

    // Trace summary plus verified canonical rewrite.
    let copy = out.join("copy.csv");
    let res = run(&[
        "trace",
        "--input",
        jack.to_str().unwrap(),
        "--output",
        copy.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert_eq!(
        std::fs::read(&jack).unwrap(),
        std::fs::read(&copy).unwrap(),
        "canonical rewrite should be byte-identical for a canonical input"
    );

    // A corrupted tag is a runtime error naming the line.
    let mut broken = std::fs::read_to_string(&jack).unwrap();
    broken = broken.replacen(",jack\n", ",mallory\n", 1);
    let bad = write(dir.path(), "bad_trace.csv", &broken);
    let res = run(&["trace", "--input", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("mallory"));
}

#[test]
fn help_lists_all_subcommands() {
    let res = run(&["--help"]);
    assert!(res.status.success());
    let text = stdout(&res);
    for cmd in ["simulate", "detect", "sweep", "kl", "fisher", "trace"] {
        assert!(text.contains(cmd), "help missing `{cmd}`");
    }
    for flag in ["--config", "--seed", "--out", "--assert", "--trials", "--quiet"] {
        assert!(text.contains(flag), "help missing `{flag}`");
    }
}

#[test]
fn simulate_two_phase_writes_alice_and_bob_traces() {
    let cfg_text = r#"
schema_version = 1
kind = "two-phase"
seed = 31
trials = 10

[channel]
family = "exponential"
rate = 1.0

[strategy]
epsilon = 0.5
psi = 0.5

[simulate]
count = 600

[grid]
n = [400]

[output]
csv = "tp.csv"
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", cfg_text);
    let out = dir.path().join("out");
    let res = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
        "simulate",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let alice = std::fs::read_to_string(out.join("alice.csv")).unwrap();
    let bob = std::fs::read_to_string(out.join("bob.csv")).unwrap();
    // Alice relays 400 packets total; Bob emits fewer by his backlog and
    // only ever forwards Jack's.
    assert_eq!(alice.lines().count(), 401);
    assert!(alice.contains(",alice"));
    assert!(bob.lines().count() <= 401);
    assert!(!bob.contains(",alice"));
}

#[test]
fn kl_and_fisher_commands_print_tables() {
    let cfg_text = r#"
schema_version = 1
kind = "kl-expansion"
seed = 3
trials = 1

[channel]
family = "exponential"
rate = 2.0

[strategy]
epsilon = 0.1

[simulate]
horizon = 100.0

[grid]
rho = [0.02, 0.01]

[output]
csv = "kl.csv"
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", cfg_text);
    let res = run(&["--config", cfg.to_str().unwrap(), "kl"]);
    assert!(res.status.success());
    let text = stdout(&res);
    assert!(text.starts_with("quantity,family,param,value"));
    assert!(text.contains("poisson-count-kl,"));
    assert!(text.contains("scaled-kl,exponential,rho=0.02,"));
    assert!(text.contains("covertness-lower-bound,"));

    let res = run(&["--config", cfg.to_str().unwrap(), "fisher"]);
    assert!(res.status.success());
    let text = stdout(&res);
    assert!(text.starts_with("family,analytic,quadrature,abs_diff"));
    assert!(text.contains("exponential,1,"));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", BUFFERING_CFG);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let res = bin()
            .env("COVERT_LAB_THREADS", threads)
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--quiet",
                "sweep",
            ])
            .output()
            .unwrap();
        assert!(res.status.success());
        outputs.push(std::fs::read(out.join("buffering.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "CSV depends on worker count");
}

#[test]
fn thread_cap_env_is_honored_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", BUFFERING_CFG);
    let out = dir.path().join("out");
    let res = bin()
        .env("COVERT_LAB_THREADS", "2")
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
            "sweep",
        ])
        .output()
        .unwrap();
    assert!(res.status.success());

    let res = bin()
        .env("COVERT_LAB_THREADS", "zero")
        .args(["--config", cfg.to_str().unwrap(), "sweep"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn trials_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", BUFFERING_CFG);
    let res = run(&["--config", cfg.to_str().unwrap(), "--trials", "0", "sweep"]);
    assert_eq!(res.status.code(), Some(2));
}
