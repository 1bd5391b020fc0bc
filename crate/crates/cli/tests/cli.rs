use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fxdyn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fxdyn")).args(args).current_dir(dir).output().expect("spawn fxdyn")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn bytes(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn equilibria_lists_three_points_with_saddle_centre() {
    let tmp = TempDir::new().unwrap();
    let out = fxdyn(&["equilibria", "--out", "eq"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = stdout.lines().filter(|l| l.starts_with('P')).collect();
    assert_eq!(rows.len(), 3, "{stdout}");
    assert!(rows[0].starts_with("P1") && rows[0].contains("saddle"));
    assert!(rows[1..].iter().all(|r| r.contains("stable")));

    let json: serde_json::Value = serde_json::from_slice(&bytes(tmp.path().join("eq/equilibria.json"))).unwrap();
    assert!(json.to_string().contains("saddle"));
    assert!(tmp.path().join("eq/manifest.json").exists());
}

#[test]
fn shares_not_summing_to_one_exit_with_code_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "command = \"equilibria\"\n[params]\nw_f = 0.9\nw_c = 0.2\n");
    let out = fxdyn(&["equilibria", "--config", &cfg, "--out", "bad"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sum to 1"));
}

#[test]
fn unknown_preset_and_conflicting_sources_are_rejected() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(fxdyn(&["repro", "flip-z"], tmp.path()).status.code(), Some(1));
    let cfg = write(tmp.path(), "c.toml", "command = \"equilibria\"\n");
    let out = fxdyn(&["equilibria", "--config", &cfg, "--preset", "basins"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let out = fxdyn(&["simulate", "--preset", "basins"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_near_flip_onset_doubles_period_after_root() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "flip.toml",
        "command = \"sweep\"\n[params]\nmu = 4.5\nsigma = 0.0\n\
         [sweep]\naxis = \"mu\"\nrange = [5.45, 5.55]\nn = 11\ntransient = 200000\nsamples = 50\n",
    );
    let out = fxdyn(&["sweep", "--config", &cfg, "--out", "flip"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&bytes(tmp.path().join("flip/summary.json"))).unwrap();
    let text = summary.to_string();
    assert!(text.contains("5.51"), "{text}");

    let csv = String::from_utf8(bytes(tmp.path().join("flip/sweep.csv"))).unwrap();
    let distinct_at = |mu: &str| {
        let mut e: Vec<f64> = csv
            .lines()
            .filter(|l| l.starts_with(&format!("{mu},P2,")))
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        e.sort_by(f64::total_cmp);
        // Same clustering tolerance as the sweep itself.
        1 + e.windows(2).filter(|w| w[1] - w[0] > 1e-9).count()
    };
    assert_eq!(distinct_at("5.5"), 1);
    assert_eq!(distinct_at("5.51"), 2);
}

#[test]
fn simulate_reruns_and_manifest_replay_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "sim.toml",
        "command = \"simulate\"\n[params]\nmu = 4.5\n[simulate]\nstart = \"p2\"\nhorizon = 730\nburn_in = 100\n",
    );
    for dir in ["a", "b"] {
        let out = fxdyn(&["simulate", "--config", &cfg, "--seed", "7", "--out", dir], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let manifest = tmp.path().join("a/manifest.json").to_string_lossy().into_owned();
    let out = fxdyn(&["simulate", "--config", &manifest, "--out", "replay"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for file in ["trajectory.csv", "returns.csv", "annual.csv", "qq.csv"] {
        let a = bytes(tmp.path().join("a").join(file));
        assert_eq!(a, bytes(tmp.path().join("b").join(file)), "{file}");
        assert_eq!(a, bytes(tmp.path().join("replay").join(file)), "{file} replay");
    }
    let other = fxdyn(&["simulate", "--config", &cfg, "--seed", "8", "--out", "c"], tmp.path());
    assert!(other.status.success());
    assert_ne!(bytes(tmp.path().join("a/returns.csv")), bytes(tmp.path().join("c/returns.csv")));
}

#[test]
fn stats_reads_a_column_from_csv() {
    let tmp = TempDir::new().unwrap();
    let rows: String = (0..200).map(|i| format!("{i},{}\n", ((i * 37 % 101) as f64 - 50.0) / 50.0)).collect();
    let input = write(tmp.path(), "series.csv", &format!("t,x\n{rows}"));
    let out = fxdyn(&["stats", "--input", &input, "--column", "x", "--out", "st"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats: serde_json::Value = serde_json::from_slice(&bytes(tmp.path().join("st/stats.json"))).unwrap();
    assert!(stats.to_string().contains("\"n\":200"), "{stats}");
    assert!(tmp.path().join("st/qq.csv").exists());

    let out = fxdyn(&["stats", "--input", &input, "--column", "missing", "--out", "st2"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

fn macro_csv(flat_output: bool) -> String {
    let mut text = String::from("year,y,m,z,rer\n");
    for t in 0..30 {
        let tf = t as f64;
        let y = if flat_output { 10.0 } else { 10.0 + 0.03 * tf + 0.01 * (0.7 * tf).sin() };
        let rer = 0.1 * (0.4 * tf).cos();
        let m = 2.0 * y + 0.8 * rer + 0.005 * (1.3 * tf).sin();
        let z = 5.0 + 0.05 * tf;
        text.push_str(&format!("{},{y},{m},{z},{rer}\n", 1980 + t));
    }
    text
}

#[test]
fn estimate_writes_elasticity_path() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "macro.csv", &macro_csv(false));
    let out = fxdyn(&["estimate", "--input", &input, "--out", "est"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tvp = String::from_utf8(bytes(tmp.path().join("est/tvp.csv"))).unwrap();
    assert_eq!(tvp.lines().count(), 31);
    assert!(tvp.starts_with("year,pi_t,se,dy_bp_t,flagged"));
}

#[test]
fn estimate_on_flat_output_is_a_numerical_failure() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "flat.csv", &macro_csv(true));
    let out = fxdyn(&["estimate", "--input", &input, "--out", "flat"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn small_basin_grid_is_worker_count_invariant() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "b.toml",
        "command = \"basins\"\n[params]\nsigma = 0.0\n\
         [basins]\ne_range = [-0.7000003, 0.6999997]\ndy_range = [-0.49997, 0.50003]\nnx = 60\nny = 61\nrle = true\n",
    );
    for (dir, workers) in [("one", "1"), ("four", "4")] {
        let out = fxdyn(&["basins", "--config", &cfg, "--workers", workers, "--out", dir], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["basins.csv", "basins.rle"] {
        assert_eq!(bytes(tmp.path().join("one").join(file)), bytes(tmp.path().join("four").join(file)));
    }
}
