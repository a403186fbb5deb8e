//! Exercises the installed binary end to end: subcommands, overrides,
//! output files, and the exit-code contract (0 ok, 1 usage, 2 numerical
//! or i/o, 3 validation).

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_idrf"))
}

fn tmp_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("idrf-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let path = tmp_dir().join(name);
    fs::write(&path, body).unwrap();
    path
}

const STEP_CONFIG: &str = "
[kernel]
name = pyramid
a = 1
b = 1
support_halfwidth = 1

[measure]
name = stable
alpha = 1.5
beta = 0.0

[method]
name = step
n = 8
window = 1.0
grid = 6
realizations = 2
seed = 5
";

const GAUSS_CONFIG: &str = "
[kernel]
name = gaussian_bell
a = 0.05
b = 1.0
support_halfwidth = 1.0

[measure]
name = gaussian

[method]
name = step
n = 20
window = 0.5
grid = 4
realizations = 5
seed = 1
";

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["simulate"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--bogus"]).status.code(), Some(1));
    let bad = write_config("bad.conf", &STEP_CONFIG.replace("seed = 5", "sede = 5"));
    let out = run(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_config_file_exits_two() {
    assert_eq!(
        run(&["simulate", "--config", "/definitely/not/there.conf"]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_writes_requested_outputs() {
    let cfg = write_config("sim.conf", STEP_CONFIG);
    let out_path = tmp_dir().join("field.csv");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--realizations",
        "1",
        "--out",
        out_path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# method=step"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 36);

    // seed override changes the data, repeating a seed reproduces it
    let bin_a = tmp_dir().join("a.bin");
    let bin_b = tmp_dir().join("b.bin");
    let bin_c = tmp_dir().join("c.bin");
    for (path, seed) in [(&bin_a, "7"), (&bin_b, "7"), (&bin_c, "8")] {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--realizations",
            "1",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
            "--format",
            "bin",
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&bin_a).unwrap(), fs::read(&bin_b).unwrap());
    assert_ne!(fs::read(&bin_a).unwrap(), fs::read(&bin_c).unwrap());
}

#[test]
fn simulate_threads_do_not_change_output() {
    let cfg = write_config("threads.conf", STEP_CONFIG);
    let one = tmp_dir().join("one.bin");
    let four = tmp_dir().join("four.bin");
    for (path, threads) in [(&one, "1"), (&four, "4")] {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            path.to_str().unwrap(),
            "--format",
            "bin",
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let suffixed = |p: &PathBuf, i: &str| p.with_file_name(
        format!("{}_{i}.bin", p.file_stem().unwrap().to_str().unwrap()),
    );
    assert_eq!(
        fs::read(suffixed(&one, "000")).unwrap(),
        fs::read(suffixed(&four, "000")).unwrap()
    );
    assert_eq!(
        fs::read(suffixed(&one, "001")).unwrap(),
        fs::read(suffixed(&four, "001")).unwrap()
    );
}

#[test]
fn count_reports_table_counters() {
    let cfg = write_config("count.conf", STEP_CONFIG);
    let out = run(&["count", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("summands=256"), "{text}");
    assert!(text.contains("random_variables=256"), "{text}");
}

#[test]
fn bound_prints_rows_for_each_resolution() {
    let cfg = write_config("bound.conf", STEP_CONFIG);
    let out = run(&["bound", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("n,holder_bound,polar_bound,err_s"), "{text}");
    for n in [2, 4, 8, 16, 32] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{n},"))), "{text}");
    }
}

#[test]
fn validate_gaussian_exit_codes() {
    // loose tolerance passes
    let ok = write_config("vg-ok.conf", &format!("{GAUSS_CONFIG}tolerance = 10.0\n"));
    assert_eq!(run(&["validate-gaussian", "--config", ok.to_str().unwrap()]).status.code(), Some(0));
    // unreachable tolerance fails validation
    let tight = write_config("vg-tight.conf", &format!("{GAUSS_CONFIG}tolerance = 1e-12\n"));
    let out = run(&["validate-gaussian", "--config", tight.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("validation"));
    // wrong measure is a usage error
    let wrong = write_config("vg-wrong.conf", STEP_CONFIG);
    assert_eq!(
        run(&["validate-gaussian", "--config", wrong.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn bench_reports_timing_split() {
    let cfg = write_config(
        "bench.conf",
        "
[kernel]
name = pyramid
a = 1
b = 1

[measure]
name = stable
alpha = 1.5
beta = 0.0

[method]
name = wavelet
epsilon = 0.5
window = 1.0
grid = 3
realizations = 4
seed = 2
",
    );
    let out = run(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("cold:"), "{text}");
    assert!(text.contains("warm:"), "{text}");
}

#[test]
fn coefficient_cache_is_reused() {
    let cfg = write_config(
        "cache.conf",
        "
[kernel]
name = pyramid
a = 1
b = 1

[measure]
name = stable
alpha = 1.5
beta = 0.0

[method]
name = wavelet
epsilon = 0.5
window = 1.0
grid = 3
realizations = 1
seed = 2
",
    );
    let cache = tmp_dir().join("coef-cache");
    let a = tmp_dir().join("cache-a.bin");
    let b = tmp_dir().join("cache-b.bin");
    for path in [&a, &b] {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--coef-cache",
            cache.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
            "--format",
            "bin",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(cache.read_dir().unwrap().next().is_some(), "cache directory stayed empty");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
