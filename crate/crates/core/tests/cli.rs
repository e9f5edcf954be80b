//! End-to-end runs of the `nlok` binary: one per command plus the
//! configuration error paths.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use nlok::functionals::{self, EvalOptions};
use nlok::sets::{IntervalSet, StarShape2D};
use nlok::{Ball, Params, SetGeometry};

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Run { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn geometry(&self, name: &str, g: &SetGeometry) -> String {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string(g).unwrap()).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn nlok(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_nlok"))
            .args(args)
            .arg("--out")
            .arg(self.path("out"))
            .env_remove("NLOK_THREADS")
            .output()
            .unwrap()
    }

    fn csv(&self, command: &str) -> Vec<Vec<String>> {
        let text = std::fs::read_to_string(self.path("out").join(format!("{command}.csv"))).unwrap();
        text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
    }

    fn sidecar(&self, command: &str) -> Value {
        read_json(&self.path("out").join(format!("{command}.json")))
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(cell: &str) -> f64 {
    cell.parse().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn two_segments() -> SetGeometry {
    IntervalSet::new(vec![(0.0, 0.5), (2.0, 2.5)]).unwrap().into()
}

#[test]
fn energy_matches_library() {
    let run = Run::new();
    let g = two_segments();
    let input = run.geometry("two.json", &g);
    let out = run.nlok(&["energy", "--input", &input, "--s", "0.3", "--alpha", "0.6", "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = run.csv("energy");
    assert_eq!(rows[0][..4], ["perimeter_term", "riesz_term", "total_f", "total_f_eps"]);
    let p = Params::new(1, 0.3, 0.6, 0.01).unwrap();
    let e = functionals::energy(&g, &p, &EvalOptions::default()).unwrap();
    assert_eq!(num(&rows[1][0]), e.perimeter_term);
    assert_eq!(num(&rows[1][1]), e.riesz_term);
    assert_eq!(num(&rows[1][3]), e.total_f_eps);
    let meta = run.sidecar("energy");
    assert_eq!(meta["parameters"]["s"], 0.3);
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(meta["version"].is_string());
}

#[test]
fn curvature_on_line_fixture_passes_library_values_through() {
    let run = Run::new();
    let g = two_segments();
    let input = run.geometry("two.json", &g);
    let out = run.nlok(&["curvature", "--input", &input, "--eps", "1e-2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = run.csv("curvature");
    assert_eq!(rows[0], ["index", "x", "kappa", "potential", "tangential_grad", "zeta"]);
    let p = Params::new(1, 0.5, 0.5, 1e-2).unwrap();
    let table = functionals::boundary_table(&g, &p, &EvalOptions::default()).unwrap();
    assert_eq!(rows.len(), 1 + table.len());
    for (row, want) in rows[1..].iter().zip(&table) {
        assert_eq!(num(&row[1]), want.point[0]);
        assert_eq!(num(&row[2]), want.kappa);
        assert_eq!(num(&row[3]), want.potential);
        assert_eq!(row[4], "");
        assert_eq!(num(&row[5]), want.zeta);
    }
}

#[test]
fn potential_at_points() {
    let run = Run::new();
    let g: SetGeometry = StarShape2D::disk([0.0, 0.0], 1.0).unwrap().into();
    let input = run.geometry("disk.json", &g);
    let out = run.nlok(&["potential", "--input", &input, "--set", "points=0,0; 0.3,0.1", "--resolution", "128"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = run.csv("potential");
    assert_eq!(rows[0], ["index", "x", "y", "potential", "grad_x", "grad_y"]);
    // V at the center of the unit disk is 2π/(2 − α)
    let v0 = num(&rows[1][3]);
    assert!((v0 - 2.0 * std::f64::consts::PI / 1.5).abs() < 1e-8, "{v0}");
    assert!(num(&rows[2][4]) < 0.0);

    let out = run.nlok(&["potential", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagnose_ball_fixture() {
    let run = Run::new();
    let g: SetGeometry = Ball::with_volume(2, 1.0).unwrap().into();
    let input = run.geometry("ball.json", &g);
    let out = run.nlok(&["diagnose", "--input", &input, "--eps", "1e-3", "--resolution", "128"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = &run.sidecar("diagnose")["result"];
    assert!(report["rho"].as_f64().unwrap() <= 1e-12);
    assert!(report["el_residual"].as_f64().unwrap() <= 1e-5);
    let rows = run.csv("diagnose");
    assert!(rows.iter().any(|r| r[0] == "rho"));
}

#[test]
fn onedim_root_and_no_root() {
    let run = Run::new();
    let out = run.nlok(&["onedim-root", "--eps", "1e-4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = run.csv("onedim-root");
    assert!(num(&rows[1][1]) > num(&rows[1][2]));
    assert!(num(&rows[1][4]).abs() <= 1e-10);

    let run = Run::new();
    let out = run.nlok(&["onedim-root", "--eps", "100"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no root"), "{}", stderr(&out));
}

#[test]
fn onedim_sweep_default_grid() {
    let run = Run::new();
    let out = run.nlok(&["onedim-sweep"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = run.csv("onedim-sweep");
    assert_eq!(rows[0], ["eps", "d_star", "d_eps", "diameter", "f_at_root", "residual"]);
    assert!(rows.len() >= 5);
    let summary = &run.sidecar("onedim-sweep")["result"];
    let slope = summary["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.03, "{slope}");
    for key in ["target_slope", "rel_error", "C_o_implied"] {
        assert!(summary[key].is_number(), "{key}");
    }
}

#[test]
fn optimize2d_writes_history_and_shape() {
    let run = Run::new();
    let out = run.nlok(&["optimize2d", "--eps", "1e-3", "--resolution", "128", "--modes", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = run.csv("optimize2d");
    assert_eq!(rows[0], ["iteration", "residual", "energy"]);
    assert!(num(&rows.last().unwrap()[1]) <= 1e-3);
    let shape: SetGeometry = serde_json::from_value(read_json(&run.path("out").join("optimize2d_shape.json"))).unwrap();
    assert!((shape.volume() - 1.0).abs() < 1e-10);
    assert_eq!(run.sidecar("optimize2d")["result"]["converged"], true);

    // the final shape can be fed back in as the initial one
    let input = run.path("out").join("optimize2d_shape.json");
    let again = Run::new();
    let out = again.nlok(&[
        "optimize2d",
        "--init",
        input.to_str().unwrap(),
        "--eps",
        "1e-3",
        "--resolution",
        "128",
        "--modes",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(again.sidecar("optimize2d")["result"]["iterations"], 0);
}

#[test]
fn optimize2d_out_of_iterations_is_a_domain_failure() {
    let run = Run::new();
    let out = run.nlok(&["optimize2d", "--eps", "1e-3", "--resolution", "64", "--modes", "8", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run.sidecar("optimize2d")["status"], "failed");
    assert_eq!(run.csv("optimize2d").len(), 3);
}

#[test]
fn calibrate_is_radius_independent() {
    let run = Run::new();
    let out = run.nlok(&["calibrate", "--s", "0.5", "--resolution", "128"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = run.csv("calibrate");
    assert_eq!(rows.len(), 4);
    let spread = run.sidecar("calibrate")["result"]["spread"].as_f64().unwrap();
    assert!(spread < 1e-4);
}

#[test]
fn config_file_with_flag_override() {
    let run = Run::new();
    let cfg = run.path("run.cfg");
    std::fs::write(&cfg, "# two-segment root\ncommand = onedim-root\ns = 0.75\nalpha = 0.25\neps = 1e-3\n").unwrap();
    let out = run.nlok(&["--config", cfg.to_str().unwrap(), "--eps", "1e-5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let meta = run.sidecar("onedim-root");
    assert_eq!(meta["parameters"]["eps"], 1e-5);
    assert_eq!(meta["parameters"]["s"], 0.75);
}

#[test]
fn configuration_errors_exit_with_2() {
    let run = Run::new();
    let cfg = run.path("bad.cfg");

    std::fs::write(&cfg, "s=1.5\n").unwrap();
    let out = run.nlok(&["onedim-root", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`s`"), "{}", stderr(&out));

    std::fs::write(&cfg, "s=0.5\nfoo=1\n").unwrap();
    let out = run.nlok(&["onedim-root", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(":2: unknown key `foo`"), "{}", stderr(&out));

    std::fs::write(&cfg, "s=0.5\n\nalpha\n").unwrap();
    let out = run.nlok(&["onedim-root", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(":3:"), "{}", stderr(&out));

    let out = run.nlok(&["onedim-root", "--config", "/no/such/file.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not found"), "{}", stderr(&out));

    let out = run.nlok(&[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run.nlok(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run.nlok(&["energy"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let run = Run::new();
    let out = Command::new(env!("CARGO_BIN_EXE_nlok"))
        .args(["onedim-root", "--eps", "1e-3", "--out"])
        .arg(run.path("out"))
        .env("NLOK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
