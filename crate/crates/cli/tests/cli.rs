//! End-to-end runs of the `rydberg` binary.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rydberg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydberg")).args(args).output().expect("spawn rydberg")
}

fn run_ok(args: &[&str]) -> Output {
    let out = rydberg(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn command(sub: &str, config: &Path, out: &Path) -> Output {
    rydberg(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const LOSS_WITH_SHOTS: &str = r#"
scenario = "single_atom_loss"
initial_state = "0"
outputs = ["loss"]
seed = 5

[parameters]
w = 0.0
gamma = 0.11

[grid]
t1 = 5.0
n_steps = 20

[spam]
p_u = 0.93
p_l = 0.35

[shots]
n = 500
"#;

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "loss.toml", LOSS_WITH_SHOTS);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(command("evolve", &cfg, &a).status.success());
    assert!(command("evolve", &cfg, &b).status.success());
    let ta = std::fs::read(a.join("timeseries.csv")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("timeseries.csv")).unwrap());

    let c = dir.path().join("c");
    run_ok(&["evolve", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(ta, std::fs::read(c.join("timeseries.csv")).unwrap());
    assert_eq!(manifest(&c)["seed"], 6);
}

#[test]
fn post_processing_tracks_in_order() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "loss.toml", LOSS_WITH_SHOTS);
    let out = dir.path().join("o");
    assert!(command("evolve", &cfg, &out).status.success());
    let (header, rows) = read_csv(&out.join("timeseries.csv"));
    assert_eq!(header, ["t_us", "loss", "loss_bare", "loss_meas", "loss_meas_stderr", "loss_meas_renorm"]);
    // at t = 0 nothing is lost: the bare signal sits on the floor P_l
    assert_eq!(rows[0][1], 0.0);
    assert!((rows[0][2] - 0.35).abs() < 1e-15);
    let text = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("0.0000000000000000e0,"));
}

#[test]
fn manifest_echo_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "loss.toml", LOSS_WITH_SHOTS);
    let first = dir.path().join("first");
    assert!(command("evolve", &cfg, &first).status.success());
    let m = manifest(&first);
    assert_eq!(m["command"], "evolve");
    assert_eq!(m["status"], "ok");
    let echo = write_config(&dir, "echo.toml", m["config_toml"].as_str().unwrap());
    let second = dir.path().join("second");
    assert!(command("evolve", &echo, &second).status.success());
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for o in outputs {
        let name = o["file"].as_str().unwrap();
        let bytes = std::fs::read(second.join(name)).unwrap();
        assert_eq!(bytes, std::fs::read(first.join(name)).unwrap(), "{name}");
        let digest = sha2_hex(&bytes);
        assert_eq!(o["sha256"].as_str().unwrap(), digest);
    }
}

fn sha2_hex(bytes: &[u8]) -> String {
    rydberg_cli::output::sha256_hex(bytes)
}

#[test]
fn lossless_two_level_peaks_at_pi_time() {
    let dir = TempDir::new().unwrap();
    let w = 0.15;
    let cfg = write_config(
        &dir,
        "rabi.toml",
        &format!(
            "scenario = \"single_atom_loss\"\ninitial_state = \"0\"\noutputs = [\"P_1_site0\"]\n\
             [parameters]\nw = {w}\ngamma = 0.0\n[grid]\nt1 = {}\nn_steps = 200\n",
            1.0 / (2.0 * w)
        ),
    );
    let out = dir.path().join("o");
    assert!(command("evolve", &cfg, &out).status.success());
    let (_, rows) = read_csv(&out.join("timeseries.csv"));
    let (t_max, p_max) = rows.iter().map(|r| (r[0], r[1])).fold((0.0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
    assert!((t_max - 1.0 / (4.0 * w)).abs() < 1e-9, "peak at {t_max}");
    assert!((p_max - 1.0).abs() < 1e-9);
    for r in &rows {
        assert!((r[1] - (2.0 * PI * w * r[0]).sin().powi(2)).abs() < 1e-8);
    }
}

#[test]
fn scan_outputs_suffix_tracks_and_collect_finals() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "scan.toml",
        "scenario = \"pair_exchange\"\ninitial_state = \"00\"\noutputs = [\"manifold_loss\"]\n\
         [parameters]\ngamma = 0.13\nv = 0.0\n[grid]\nt1 = 1.0\nn_steps = 10\n\
         [scan]\nname = \"wc_over_gamma\"\nvalues = [1.0, 2.0]\n",
    );
    let out = dir.path().join("o");
    assert!(command("evolve", &cfg, &out).status.success());
    let (header, _) = read_csv(&out.join("timeseries.csv"));
    assert_eq!(header, ["t_us", "manifold_loss@wc_over_gamma=1", "manifold_loss@wc_over_gamma=2"]);
    let (header, rows) = read_csv(&out.join("scan.csv"));
    assert_eq!(header, ["wc_over_gamma", "manifold_loss_final"]);
    assert_eq!(rows.len(), 2);
    assert!(rows[1][1] < rows[0][1], "Zeno suppression of loss");
}

#[test]
fn sweep_writes_long_format() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sweep.toml",
        "[parameters]\ngamma = 1.0\nv = 0.0\n[sweep]\nfamily = \"pair_exchange\"\n\
         [[sweep.axes]]\nname = \"wc_over_gamma\"\nlo = 0.0\nhi = 3.0\nn = 31\n",
    );
    let out = dir.path().join("o");
    assert!(command("sweep", &cfg, &out).status.success());
    let (header, rows) = read_csv(&out.join("sweep.csv"));
    assert_eq!(header, ["wc_over_gamma", "branch_index", "re_lambda_MHz", "im_lambda_MHz"]);
    assert_eq!(rows.len(), 31 * 3);
    // the trace fixes Σ Im λ = −γ/2 · (0 + 1 + 2) in MHz
    for pt in rows.chunks(3) {
        let s: f64 = pt.iter().map(|r| r[3]).sum();
        assert!((s + 1.5).abs() < 1e-9, "{s}");
    }
}

#[test]
fn two_dimensional_sweep_row_count() {
    let dir = TempDir::new().unwrap();
    let example: PathBuf = [env!("CARGO_MANIFEST_DIR"), "examples", "fig2b_sweep.toml"].iter().collect();
    let out = dir.path().join("o");
    assert!(command("sweep", &example, &out).status.success());
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 201 * 201 * 3);
    assert!(text.starts_with("wc_over_gamma,V_over_gamma,branch_index,"));
}

#[test]
fn ep_reports_and_error_paths() {
    let dir = TempDir::new().unwrap();
    let single = write_config(
        &dir,
        "ep.toml",
        "[parameters]\ngamma = 0.2\n[ep]\nfamily = \"single_atom\"\naxis = \"w_over_gamma\"\nlo = 0.0\nhi = 1.0\n",
    );
    let out = dir.path().join("o");
    assert!(command("ep", &single, &out).status.success());
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("ep.json")).unwrap()).unwrap();
    assert!((report["location"].as_f64().unwrap() - 0.25).abs() < 1e-6);

    let hermitian = write_config(
        &dir,
        "herm.toml",
        "[parameters]\ngamma = 0.0\nw = 0.1\n[ep]\nfamily = \"pair_exchange\"\naxis = \"v\"\nlo = -1.0\nhi = 1.0\n",
    );
    let r = command("ep", &hermitian, &dir.path().join("h"));
    assert_eq!(code(&r), 4, "{}", stderr(&r));
    assert!(stderr(&r).contains("no exceptional point"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("unknown key", "scenario = \"single_atom_loss\"\nbogus = 1\n", "bogus"),
        (
            "missing parameter",
            "scenario = \"single_atom_loss\"\ninitial_state = \"0\"\noutputs = [\"loss\"]\n\
             [parameters]\nw = 0.1\n[grid]\nt1 = 1.0\nn_steps = 10\n",
            "gamma",
        ),
        (
            "unused parameter",
            "scenario = \"single_atom_loss\"\ninitial_state = \"0\"\noutputs = [\"loss\"]\n\
             [parameters]\nw = 0.1\ngamma = 0.1\nv = 3.0\n[grid]\nt1 = 1.0\nn_steps = 10\n",
            "parameters.v",
        ),
        (
            "engine not available",
            "scenario = \"effective_pair\"\nengine = \"lindblad\"\ninitial_state = \"upup\"\noutputs = [\"norm\"]\n\
             [parameters]\nw = 0.1\ngamma_eff = 1.0\n[grid]\nt1 = 1.0\nn_steps = 10\n",
            "engine",
        ),
        (
            "unknown output",
            "scenario = \"single_atom_loss\"\ninitial_state = \"0\"\noutputs = [\"nonsense\"]\n\
             [parameters]\nw = 0.1\ngamma = 0.1\n[grid]\nt1 = 1.0\nn_steps = 10\n",
            "nonsense",
        ),
        (
            "empty sweep axis",
            "[parameters]\ngamma = 1.0\nv = 0.0\n[sweep]\nfamily = \"pair_exchange\"\n\
             [[sweep.axes]]\nname = \"wc_over_gamma\"\nvalues = []\n",
            "sweep.axes[0]",
        ),
    ];
    for (label, text, needle) in cases {
        let cfg = write_config(&dir, "bad.toml", text);
        let sub = if text.contains("[sweep]") { "sweep" } else { "evolve" };
        let r = command(sub, &cfg, &dir.path().join("o"));
        assert_eq!(code(&r), 2, "{label}: {}", stderr(&r));
        assert!(stderr(&r).contains(needle), "{label}: {}", stderr(&r));
    }
    let r = command("evolve", &dir.path().join("missing.toml"), &dir.path().join("o"));
    assert_eq!(code(&r), 2);
}

fn write_series(dir: &TempDir, name: &str, f: impl Fn(f64) -> f64, n: usize, t1: f64) -> PathBuf {
    let mut text = String::from("t_us,signal\n");
    for i in 0..n {
        let t = t1 * i as f64 / (n - 1) as f64;
        text.push_str(&format!("{t:.16e},{:.16e}\n", f(t)));
    }
    write_config(dir, name, &text)
}

fn fit(dir: &TempDir, input: &Path, model: &str) -> (Output, PathBuf) {
    let out = dir.path().join(format!("fit-{model}"));
    let r = rydberg(&["fit", "--input", input.to_str().unwrap(), "--model", model, "--out", out.to_str().unwrap()]);
    (r, out)
}

#[test]
fn fit_round_trips() {
    let dir = TempDir::new().unwrap();
    let loss = write_series(&dir, "loss.csv", |t| 1.0 - (-2.0 * PI * 0.11 * t).exp(), 40, 8.0);
    let (r, out) = fit(&dir, &loss, "exp-loss");
    assert!(r.status.success(), "{}", stderr(&r));
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("fit.json")).unwrap()).unwrap();
    let gamma = report["params"].as_array().unwrap().iter().find(|p| p["name"] == "gamma_mhz").unwrap();
    assert!((gamma["value"].as_f64().unwrap() - 0.11).abs() < 1e-6);
    assert_eq!(report["track"], "signal");
    assert_eq!(manifest(&out)["command"], "fit");

    let rabi = write_series(&dir, "rabi.csv", |t| 0.5 + 0.5 * (4.0 * PI * 0.15 * t).cos(), 60, 10.0);
    let (r, out) = fit(&dir, &rabi, "cosine");
    assert!(r.status.success(), "{}", stderr(&r));
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("fit.json")).unwrap()).unwrap();
    let nu = report["params"].as_array().unwrap().iter().find(|p| p["name"] == "nu_mhz").unwrap();
    assert!((nu["value"].as_f64().unwrap() - 0.15).abs() < 1e-6);
}

#[test]
fn fit_input_errors() {
    let dir = TempDir::new().unwrap();
    let two = write_series(&dir, "two.csv", |t| t, 2, 1.0);
    let (r, _) = fit(&dir, &two, "exp-loss");
    assert_eq!(code(&r), 2, "{}", stderr(&r));
    assert!(stderr(&r).contains("precondition"));

    let bad = write_config(&dir, "bad.csv", "time,x\n0,1\n");
    let (r, _) = fit(&dir, &bad, "cosine");
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("t_us"));

    let flat = write_series(&dir, "flat.csv", |_| 0.5, 20, 1.0);
    let (r, out) = fit(&dir, &flat, "cosine");
    assert_eq!(code(&r), 4, "{}", stderr(&r));
    assert_eq!(manifest(&out)["status"], "not converged");
}

/// Every shipped example runs under its own subcommand.
#[test]
fn shipped_examples_run() {
    let dir = TempDir::new().unwrap();
    let examples: PathBuf = [env!("CARGO_MANIFEST_DIR"), "examples"].iter().collect();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&examples).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    let mut seen = 0;
    for path in paths {
        let text = std::fs::read_to_string(&path).unwrap();
        let table: toml::Table = text.parse().unwrap();
        let sub = if table.contains_key("scenario") {
            "evolve"
        } else if table.contains_key("sweep") {
            "sweep"
        } else {
            "ep"
        };
        let name = path.file_stem().unwrap().to_str().unwrap();
        // the 2D grid is covered by its own test
        if name == "fig2b_sweep" {
            continue;
        }
        let out = dir.path().join(name);
        let r = command(sub, &path, &out);
        assert!(r.status.success(), "{name}: {}", stderr(&r));
        assert!(out.join("manifest.json").exists());
        seen += 1;
    }
    assert!(seen >= 30, "only {seen} examples");
}
