use caustiq_cli::{run, Command, Overrides, RunConfig};
use std::path::Path;
use std::process::Command as Process;

const SEPARABLE: &str = "[model]\nomega_x = 1.1\nomega_y = 1.0\nlambda = 0.0\n";

fn caustiq(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_caustiq")).current_dir(dir).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn num(cell: &str) -> f64 {
    cell.parse().unwrap()
}

#[test]
fn missing_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = caustiq(dir.path(), &["trace", "--config", "absent.toml", "--out", "run"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("absent.toml"));
    assert!(!dir.path().join("run").exists());
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[search]\nstep = -1.0\n").unwrap();
    for args in [
        vec!["trace", "--config", "bad.toml", "--out", "a"],
        vec!["arc", "--arc", "7", "--out", "b"],
        vec!["arc", "--state", "2", "--out", "c"],
        vec!["spectrum", "--e-max", "9.5", "--out", "d"],
        vec!["action-surface", "--out", "e"],
    ] {
        let (code, err) = caustiq(dir.path(), &args);
        assert_eq!(code, 2, "{args:?}: {err}");
    }
    for sub in ["a", "b", "c", "d", "e"] {
        assert!(!dir.path().join(sub).exists());
    }
}

#[test]
fn separable_trace_gives_a_rectangle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sep.toml"), SEPARABLE).unwrap();
    let (code, err) = caustiq(dir.path(), &["trace", "--config", "sep.toml", "--energy", "3.0", "--out", "run"]);
    assert_eq!(code, 0, "{err}");
    let run = dir.path().join("run");
    // start at rest on the diagonal: each oscillator sits at its turning point
    let a = (3.0f64 / (0.5 * 1.21 + 0.5)).sqrt();
    let (header, rows) = read_csv(&run.join("vertices.csv"));
    assert_eq!(header, ["vertex", "x", "y", "residual"]);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert!((num(&row[1]).abs() - a).abs() < 1e-6 && (num(&row[2]).abs() - a).abs() < 1e-6, "{row:?}");
    }
    let (_, arcs) = read_csv(&run.join("arcs.csv"));
    for row in &arcs {
        let (x, y) = (num(&row[2]), num(&row[3]));
        let off = match row[0].as_str() {
            "1" | "3" => x.abs(),
            _ => y.abs(),
        };
        assert!((off - a).abs() < 1e-6, "{row:?}");
    }
    let (header, traj) = read_csv(&run.join("trajectory.csv"));
    assert_eq!(header, ["t", "x", "y", "px", "py"]);
    assert_eq!(traj.len(), 100_001);
    assert!(run.join("caustic_points.csv").exists() && run.join("trace.json").exists());
}

#[test]
fn separable_arc_bundle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sep.toml"), SEPARABLE).unwrap();
    let (code, err) = caustiq(dir.path(), &["arc", "--config", "sep.toml", "--state", "1,2", "--arc", "2", "--grid", "1200", "--out", "run"]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&dir.path().join("run/arc.csv"));
    assert_eq!(header, ["parameter", "x", "y", "U", "g", "psi", "psi_oracle", "X", "Y"]);
    assert_eq!(rows.len(), 1200);
    // top side y = b: U parabolic in x plus a constant, g ≡ 1
    let b2 = 2.0 * 2.5;
    let a = (2.0 * 1.65f64 / 1.21).sqrt();
    for row in &rows {
        let x = num(&row[0]);
        assert!((num(&row[3]) - 0.5 * 1.21 * x * x - 0.5 * b2).abs() < 1e-6);
        assert!((num(&row[4]) - 1.0).abs() < 1e-9);
        if x.abs() <= a {
            assert!((num(&row[5]) - num(&row[6])).abs() < 1e-3, "{row:?}");
        }
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/arc.json")).unwrap()).unwrap();
    assert_eq!(report["nodes"], 1);
    assert!(report["oracle_correlation"].as_f64().unwrap() > 0.999999);
}

#[test]
fn coupled_action_surface_is_refused() {
    let mut config = RunConfig::default();
    config.apply(Command::ActionSurface, &Overrides::default());
    assert!(config.validate(Command::ActionSurface).is_err());
    config.model.lambda = 0.0;
    assert!(config.validate(Command::ActionSurface).is_ok());
    config.surface.resolution = 15;
    let out = run(Command::ActionSurface, &config).unwrap();
    let (_, rows) = {
        let text = out.get("action_classical.csv").unwrap();
        let mut lines = text.lines();
        (lines.next().unwrap().to_string(), lines.map(String::from).collect::<Vec<_>>())
    };
    assert_eq!(rows.len(), 15 * 15);
    // the padded grid corners lie outside Ω_F
    assert!(rows[0].ends_with(','));
    assert!(rows[rows.len() - 1].ends_with(','));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("out = \"{}\"\n{SEPARABLE}[spectrum]\ne_max = 3.3\n", dir.path().join("run").display());
    let config = RunConfig::from_toml(&text).unwrap();
    config.validate(Command::Spectrum).unwrap();
    let first = run(Command::Spectrum, &config).unwrap();
    let second = run(Command::Spectrum, &config).unwrap();
    assert_eq!(first, second);
    let csv = first.get("spectrum.csv").unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    for line in csv.lines().skip(1) {
        let delta = num(line.rsplit(',').next().unwrap());
        assert!(delta <= 1e-8, "{line}");
    }
    let report: serde_json::Value = serde_json::from_str(first.get("spectrum.json").unwrap()).unwrap();
    assert_eq!(report["config"]["spectrum"]["e_max"], 3.3);
    assert!(report["entries"][0]["ebk_residuals"].is_array());
    first.write(&config.out).unwrap();
    assert_eq!(std::fs::read_to_string(config.out.join("spectrum.csv")).unwrap(), csv);
}

#[test]
fn oracle_command_reports_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = caustiq(dir.path(), &["oracle", "--out", "run"]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&dir.path().join("run/oracle.csv"));
    assert_eq!(header, ["index", "E", "m", "n", "converged"]);
    assert_eq!(rows.len(), 36);
    assert!((num(&rows[0][1]) - 1.04795).abs() < 2e-5);
    assert_eq!((rows[12][2].as_str(), rows[12][3].as_str()), ("2", "2"));
    assert!(rows.iter().all(|r| r[4] == "true"));
}
