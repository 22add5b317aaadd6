use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fluxdec");

/// Superconducting block with a vacuum core, driven by a current loop, with snapshots.
const SMALL_RUN: &str = r#"
[grid]
cells = [6, 6, 6]
spacing = [0.5, 0.5, 0.5]

[regions.background]
name = "sc"
lambda = 0.6

[[regions.paint]]
name = "vacuum"
lambda = 0.0
lo = [1.0, 1.0, 1.0]
hi = [2.0, 2.0, 2.0]

[scales]
eta = 0.01

[time]
dt = 0.05
steps = 120

[[sources.loops]]
normal = "z"
corner = [2, 2, 3]
size = [2, 2]
amplitude = 0.05
profile = { kind = "sinusoid", omega = 0.7 }

[[probes]]
kind = "edge_flux"
label = "flux"
axis = "x"
at = [2, 3, 3]

[[probes]]
kind = "energy"
label = "energy"

[[probes]]
kind = "total_charge"
label = "charge"

[output]
every = 2
snapshot_every = 40
"#;

fn workdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn fluxdec(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fluxdec(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

/// Every file under `dir`, relative path to contents, in sorted order.
fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_writes_the_documented_layout() {
    let w = workdir();
    let cfg = write_config(w.path(), "run.toml", SMALL_RUN);
    let out = w.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(first_line(&out.join("series.csv")), "step,tau,flux,energy,charge");
    assert_eq!(first_line(&out.join("snapshots/phi_00000040.csv")), "i,j,k,axis,value");
    assert_eq!(first_line(&out.join("snapshots/drho_00000040.csv")), "i,j,k,value");
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("schema = 1"));
    assert!(summary.contains("charge_drift = "));
    assert!(summary.contains("probe energy: min = "));
    // 120 steps sampled every 2, plus the initial row
    let rows = fs::read_to_string(out.join("series.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 61);
    // the resolved config parses back
    let rendered = fs::read_to_string(out.join("config.toml")).unwrap();
    fluxdec::config::parse_config(&rendered, &[]).unwrap();
}

#[test]
fn series_values_read_back_bit_for_bit() {
    let w = workdir();
    let cfg = write_config(w.path(), "run.toml", SMALL_RUN);
    let out = w.path().join("out");
    assert!(run(&cfg, &out, &[]).status.success());
    let doc = fluxdec::config::parse_config(SMALL_RUN, &[]).unwrap();
    let direct = fluxdec::scenarios::run_document(&doc).unwrap();
    let text = fs::read_to_string(out.join("series.csv")).unwrap();
    for (line, row) in text.lines().skip(1).zip(&direct.rows) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0].parse::<usize>().unwrap(), row.step);
        assert_eq!(cols[1].parse::<f64>().unwrap().to_bits(), row.tau.to_bits());
        for (c, v) in cols[2..].iter().zip(&row.values) {
            assert_eq!(c.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let w = workdir();
    let cfg = write_config(w.path(), "run.toml", SMALL_RUN);
    let (a, b) = (w.path().join("a"), w.path().join("b"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let w = workdir();
    let cfg = write_config(w.path(), "run.toml", SMALL_RUN);
    let (a, b) = (w.path().join("a"), w.path().join("b"));
    assert!(run(&cfg, &a, &["--threads", "1"]).status.success());
    assert!(run(&cfg, &b, &["--threads", "3"]).status.success());
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn unknown_key_is_a_config_error_naming_it() {
    let w = workdir();
    let cfg = write_config(w.path(), "bad.toml", &format!("foo = 1\n{SMALL_RUN}"));
    let o = run(&cfg, &w.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("foo"), "{err}");
    assert!(err.contains("fluxdec-error kind=config code=2"), "{err}");
}

#[test]
fn syntax_error_reports_a_line() {
    let w = workdir();
    let cfg = write_config(w.path(), "bad.toml", "[grid]\ncells = [1, 1\n");
    let o = run(&cfg, &w.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn dt_override_above_the_limit_cites_cfl_max_dt() {
    let w = workdir();
    let cfg = write_config(w.path(), "run.toml", SMALL_RUN);
    let o = run(&cfg, &w.path().join("out"), &["--override", "time.dt=1.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cfl_max_dt"), "{}", stderr(&o));
}

#[test]
fn override_changes_the_run() {
    let w = workdir();
    let cfg = write_config(w.path(), "run.toml", SMALL_RUN);
    let out = w.path().join("out");
    assert!(run(&cfg, &out, &["--override", "time.steps=10", "--override", "output.snapshot_every=0"])
        .status
        .success());
    let rows = fs::read_to_string(out.join("series.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 6);
    assert!(!out.join("snapshots").exists());
}

#[test]
fn depleted_condensate_exits_with_the_numerical_code() {
    let text = r#"
[grid]
cells = [2, 2, 2]
spacing = [0.5, 0.5, 0.5]
[regions.background]
name = "sc"
lambda = 1.0
[scales]
eta = 0.05
[time]
dt = 0.05
steps = 200
[[sources.charges]]
at = [1, 1, 1]
amplitude = 1000.0
profile = { kind = "linear_ramp", rate = 1.0 }
"#;
    let w = workdir();
    let cfg = write_config(w.path(), "neg.toml", text);
    let o = run(&cfg, &w.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("kind=numerical code=3"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let w = workdir();
    let o = run(&w.path().join("nope.toml"), &w.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_passes_on_a_fresh_checkout() {
    let o = fluxdec(&["validate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().count() > 0);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn modes_writes_five_rows_for_the_empty_cavity() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/cavity_lambda_0.toml");
    let w = workdir();
    let out = w.path().join("out");
    let o = fluxdec(&["modes", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("modes.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "index,eigenvalue,mode_number,curl_fraction,residual");
    let numbers: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(numbers.len(), 5);
    let expected = [1.0, 1.0, 2f64.sqrt(), 2.0, 2.0];
    for (n, e) in numbers.iter().zip(expected) {
        assert!((n - e).abs() < 0.01 * e, "{numbers:?}");
    }
    for i in 0..5 {
        assert_eq!(first_line(&out.join(format!("mode_{i:02}_face_flux.csv"))), "i,j,k,normal,value");
    }
}

#[test]
fn sweep_writes_its_table() {
    let text = format!("{SMALL_RUN}\n[sweep]\nparameter = \"omega\"\nvalues = [0.5, 0.7]\nprobe = \"flux\"\n");
    let w = workdir();
    let cfg = write_config(w.path(), "sweep.toml", &text);
    let out = w.path().join("out");
    let o = fluxdec(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "value,amplitude");
    assert_eq!(table.lines().count(), 3);
    assert!(fs::read_to_string(out.join("summary.txt")).unwrap().contains("argmax = "));
}

#[test]
fn scenario_shorthand_runs_from_the_cli() {
    let w = workdir();
    let cfg = write_config(w.path(), "s.toml", "scenario = \"waveguide_1d\"\n[params]\nlength = 20.0\nt_total = 2.0\n");
    let out = w.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(first_line(&out.join("series.csv")), "step,tau,energy");
}
