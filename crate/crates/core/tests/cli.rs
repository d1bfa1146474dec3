use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use droplet_corral::cli::RunConfig;
use droplet_corral::export::{parse_grid_csv, read_grid_csv};

fn corral(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corral")).args(args).output().unwrap()
}

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

/// A short-run configuration so the simulate path stays quick.
fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "[modes]\ncache = 256\ngrid = 40\n\n[sim]\nmax_total_iters = 3000\n\n[stats]\nbins = 30\nmc_draws = 500\n",
    )
    .unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn committed_config_matches_defaults() {
    assert_eq!(RunConfig::load(&default_config()).unwrap(), RunConfig::default());
}

#[test]
fn modes_prints_q_and_writes_requested_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = corral(&["modes", "--grid", "64", "--out", s(&a)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("q(1,5)-odd = 21.988057"), "{stdout}");
    assert!(stdout.contains("q(4,4)-even = 21.429423"), "{stdout}");
    let grid = read_grid_csv(&a.join("mode_4_4_even.csv")).unwrap();
    assert_eq!((grid.nx, grid.ny), (64, 64));
    assert!(a.join("metadata.json").exists());

    assert!(corral(&["modes", "--grid", "64", "--out", s(&b)]).status.success());
    for f in ["mode_1_5_odd.csv", "mode_4_4_even.pgm", "q_values.txt", "metadata.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_is_reproducible_and_seed_sensitive() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = corral(&["simulate", "--config", s(&cfg), "--seed", seed, "--weights", "0.5", "0.5", "--out", s(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out.join("weights_0.5_0.5")
    };
    let (a, b, c) = (run("a", "42"), run("b", "42"), run("c", "43"));
    for f in ["trajectory.csv", "counts.csv", "displacement.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(c.join("trajectory.csv")).unwrap());

    let counts = read_grid_csv(&a.join("counts.csv")).unwrap();
    assert_eq!((counts.nx, counts.ny), (30, 30));
    assert_eq!(counts.total(), 3000.0);
    let traj = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("run_id,iter,x_mm,y_mm,w,p_drawn"));
    assert_eq!(traj.lines().count(), 3001);

    let meta: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("a/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 42);
    assert!(meta["generator"].as_str().unwrap().contains("ChaCha20"));
    assert!(meta["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(meta["q"]["(1,5)-odd"].as_f64().is_some());
}

#[test]
fn simulate_accepts_anti_gradient() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("o");
    let o = corral(&["simulate", "--config", s(&cfg), "--propulsion", "anti_gradient", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for case in ["equal", "even_dominant", "odd_dominant"] {
        assert!(out.join(case).join("counts.pgm").exists());
    }
    let meta = fs::read_to_string(out.join("metadata.json")).unwrap();
    assert!(meta.contains("anti_gradient"));
}

#[test]
fn avgfield_writes_both_fields_and_rejects_null_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("o");
    let o = corral(&["avgfield", "--config", s(&cfg), "--mc", "2000", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for case in ["equal", "even_dominant", "odd_dominant"] {
        let analytic = read_grid_csv(&out.join(format!("{case}_analytic.csv"))).unwrap();
        assert!((analytic.max_abs() - 1.0).abs() < 1e-12);
        assert!(out.join(format!("{case}_mc.pgm")).exists());
        let dev = fs::read_to_string(out.join(format!("{case}_deviation.txt"))).unwrap();
        assert!(dev.starts_with("max_abs_deviation="));
    }

    let o = corral(&["avgfield", "--config", s(&cfg), "--weights", "0", "0", "--out", s(&out)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("identically zero"));
}

#[test]
fn render_saturates_and_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("g.csv");
    let mut text = String::from("# kind=counts nx=3 ny=2 xmin=-1 xmax=1 ymin=-1 ymax=1\nix,iy,x,y,value\n");
    for (i, v) in [0, 5, 0, 0, 300, 0].iter().enumerate() {
        text += &format!("{},{},0,0,{v}\n", i % 3, i / 3);
    }
    fs::write(&csv, &text).unwrap();
    let out = tmp.path().join("g.pgm");
    assert!(corral(&["render", s(&csv), "--out", s(&out)]).status.success());
    let first = fs::read(&out).unwrap();
    assert!(corral(&["render", s(&csv), "--out", s(&out)]).status.success());
    assert_eq!(first, fs::read(&out).unwrap());
    let header = b"P5\n3 2\n255\n";
    assert_eq!(&first[..header.len()], header);
    // top image row is iy = 1
    assert_eq!(&first[header.len()..], &[0, 255, 0, 0, 6, 0]);
    assert!(tmp.path().join("g.pgm.txt").exists());

    let zero = tmp.path().join("z.csv");
    fs::write(&zero, text.replace(",5\n", ",0\n").replace(",300\n", ",0\n")).unwrap();
    assert!(corral(&["render", s(&zero)]).status.success());
    let img = fs::read(tmp.path().join("z.pgm")).unwrap();
    assert!(img[header.len()..].iter().all(|&v| v == 0));
    assert!(parse_grid_csv(&text, "g").is_ok());
}

#[test]
fn render_reports_the_bad_line() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("bad.csv");
    fs::write(
        &csv,
        "# kind=counts nx=2 ny=1 xmin=-1 xmax=1 ymin=-1 ymax=1\nix,iy,x,y,value\n0,0,0,0,1\n1,0,0,zero\n",
    )
    .unwrap();
    let o = corral(&["render", s(&csv)]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv:4"), "{err}");
}

#[test]
fn config_typos_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("typo.toml");
    fs::write(&cfg, "[sim]\nmax_total_iter = 10\n").unwrap();
    let o = corral(&["modes", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("typo.toml:2") && err.contains("max_total_iter"), "{err}");
}
