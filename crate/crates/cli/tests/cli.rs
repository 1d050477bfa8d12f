//! Black-box checks of the command-line surface: exit codes, error
//! reporting, output formats, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_game-lab")
}

struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("game-lab-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write_config(&self, name: &str, doc: &Value) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(doc).unwrap()).unwrap();
        p
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut command = Command::new(bin());
    command.arg(cmd).arg("--config").arg(config).arg("--out").arg(out).args(extra);
    command.env_remove("GAME_LAB_THREADS");
    for (k, v) in envs {
        command.env(k, v);
    }
    command.output().unwrap()
}

fn assert_exit(output: &Output, code: i32, needle: &str) {
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert_eq!(output.status.code(), Some(code), "stderr: {stderr}");
    assert!(stderr.contains(needle), "stderr {stderr:?} does not mention {needle:?}");
}

fn access_scenario() -> Value {
    json!({"game": {"aloha": {
        "players": [
            {"arctan": {"demand": 0.5333333333333333}},
            {"arctan": {"demand": 0.06666666666666667}}
        ],
        "alpha": 0.5
    }}})
}

fn linear_basin_scenario() -> Value {
    json!({
        "game": {"linear": {"u": [3.0, 2.0], "alpha": 0.5}},
        "basin": {
            "grid": {
                "x": {"start": 0.025, "stop": 0.975, "count": 20},
                "y": {"start": 0.025, "stop": 0.975, "count": 20}
            },
            "attractors": [[0.0, 1.0], [1.0, 0.0], [0.3333333333333333, 0.6666666666666666]],
            "response": "bang-bang",
            "t_end": 50.0,
            "dt": 0.02
        }
    })
}

#[test]
fn nep_rejects_csv_format() {
    let ws = Workspace::new("nepcsv");
    let cfg = ws.write_config("game.json", &access_scenario());
    let out = run("nep", &cfg, &ws.path("out.csv"), &["--format", "csv"], &[]);
    assert_exit(&out, 2, "JSON");
}

#[test]
fn nep_stdout_matches_file() {
    let ws = Workspace::new("nepstdout");
    let cfg = ws.write_config("game.json", &access_scenario());
    let out_path = ws.path("nep.json");
    let out = run("nep", &cfg, &out_path, &[], &[]);
    assert!(out.status.success());
    let file = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), file);
    let doc: Value = serde_json::from_str(&file).unwrap();
    assert_eq!(doc["game"], "aloha");
}

#[test]
fn unknown_config_field_is_rejected() {
    let ws = Workspace::new("unknown");
    let mut scenario = access_scenario();
    scenario["game"]["aloha"]["typo"] = json!(1);
    let cfg = ws.write_config("game.json", &scenario);
    let out = run("nep", &cfg, &ws.path("out.json"), &[], &[]);
    assert_exit(&out, 2, "typo");
}

#[test]
fn gmsk_without_kappa_is_rejected() {
    let ws = Workspace::new("gmsk");
    let scenario = json!({"game": {"power": {
        "channel": {"noise": 1.0, "gains": {"linear": [[0.1, 0.005], [0.005, 0.1]]}},
        "modulation": {"scheme": "gmsk", "bits_per_frame": 100},
        "demands": [0.9, 0.9],
        "alpha": 1.0
    }}});
    let cfg = ws.write_config("game.json", &scenario);
    let out = run("nep", &cfg, &ws.path("out.json"), &[], &[]);
    assert_exit(&out, 2, "kappa");
}

#[test]
fn invalid_thread_count_is_rejected() {
    let ws = Workspace::new("threads");
    let cfg = ws.write_config("game.json", &access_scenario());
    for bad in ["zero", "0", "-2"] {
        let out =
            run("nep", &cfg, &ws.path("out.json"), &[], &[("GAME_LAB_THREADS", bad)]);
        assert_exit(&out, 2, "GAME_LAB_THREADS");
    }
}

#[test]
fn missing_command_block_is_rejected() {
    let ws = Workspace::new("noblock");
    let cfg = ws.write_config("game.json", &access_scenario());
    let out = run("simulate", &cfg, &ws.path("out.csv"), &[], &[]);
    assert_exit(&out, 2, "simulate");
}

#[test]
fn missing_config_file_is_rejected() {
    let ws = Workspace::new("nocfg");
    let out = run("nep", &ws.path("absent.json"), &ws.path("out.json"), &[], &[]);
    assert_exit(&out, 2, "absent.json");
}

#[test]
fn unwritable_output_path_exits_with_io_code() {
    let ws = Workspace::new("badout");
    let cfg = ws.write_config("game.json", &access_scenario());
    let out = run("nep", &cfg, &ws.path("no-such-dir/out.json"), &[], &[]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(1), "stderr: {stderr}");
}

#[test]
fn singular_energy_node_exits_with_numeric_code() {
    let ws = Workspace::new("singular");
    let mut scenario = access_scenario();
    // The grid's last x node sits exactly on q = 1 where the selfish energy
    // diverges.
    scenario["contour"] = json!({
        "grid": {
            "x": {"start": 0.5, "stop": 1.0, "count": 3},
            "y": {"start": 0.1, "stop": 0.3, "count": 3}
        },
        "lyapunov": "selfish"
    });
    let cfg = ws.write_config("game.json", &scenario);
    let out = run("contour", &cfg, &ws.path("out.csv"), &[], &[]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(3), "stderr: {stderr}");
}

#[test]
fn simulate_csv_shape() {
    let ws = Workspace::new("simcsv");
    let mut scenario = access_scenario();
    scenario["simulate"] = json!({
        "start": [0.5, 0.5],
        "dt": 0.1,
        "t_end": 5.0,
        "response": "selfish",
        "lyapunov": "selfish"
    });
    let cfg = ws.write_config("game.json", &scenario);
    let out_path = ws.path("traj.csv");
    let out = run("simulate", &cfg, &out_path, &[], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,q_1,q_2,lyapunov,descent_flag"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 51, "expected t = 0..=5 at dt = 0.1");
    for row in &rows {
        assert!(row.ends_with(",0"), "descent flag raised in {row:?}");
    }
}

#[test]
fn simulate_json_shape() {
    let ws = Workspace::new("simjson");
    let mut scenario = access_scenario();
    scenario["simulate"] = json!({
        "start": [0.5, 0.5],
        "dt": 0.1,
        "t_end": 5.0,
        "response": "selfish",
        "lyapunov": "selfish"
    });
    let cfg = ws.write_config("game.json", &scenario);
    let out_path = ws.path("traj.json");
    let out = run("simulate", &cfg, &out_path, &["--format", "json"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let times = doc["times"].as_array().unwrap();
    let states = doc["states"].as_array().unwrap();
    let energies = doc["lyapunov"].as_array().unwrap();
    assert_eq!(times.len(), 51);
    assert_eq!(states.len(), 51);
    assert_eq!(energies.len(), 51);
    assert_eq!(doc["descent_violations"], 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let ws = Workspace::new("repeat");
    let mut scenario = access_scenario();
    scenario["sweep"] = json!({"alphas": [0.0, 0.25, 0.5, 0.75, 1.0]});
    let cfg = ws.write_config("game.json", &scenario);

    let a_path = ws.path("a.csv");
    let b_path = ws.path("b.csv");
    let a = run("sweep-alpha", &cfg, &a_path, &[], &[]);
    let b = run("sweep-alpha", &cfg, &b_path, &[], &[]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read(&a_path).unwrap(), std::fs::read(&b_path).unwrap());
}

#[test]
fn thread_count_does_not_change_basin_output() {
    let ws = Workspace::new("basindet");
    let cfg = ws.write_config("game.json", &linear_basin_scenario());

    let mut outputs = Vec::new();
    for (name, envs) in [
        ("default.csv", vec![]),
        ("one.csv", vec![("GAME_LAB_THREADS", "1")]),
        ("four.csv", vec![("GAME_LAB_THREADS", "4")]),
    ] {
        let out_path = ws.path(name);
        let out = run("basin", &cfg, &out_path, &[], &envs);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "single-threaded run differs");
    assert_eq!(outputs[0], outputs[2], "four-threaded run differs");
}
