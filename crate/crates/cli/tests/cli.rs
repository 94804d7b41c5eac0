use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use prpd_core::features::align_phases;
use prpd_core::signal::{load_dataset, save_dataset};
use prpd_core::{Dataset, Dims, PrpdSignal};
use tempfile::TempDir;

fn prpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prpd"))
        .args(args)
        .output()
        .expect("spawn prpd")
}

fn ok(args: &[&str]) -> Output {
    let out = prpd(args);
    assert!(
        out.status.success(),
        "prpd {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &TempDir, name: &str, counts: &str, seed: &str) -> PathBuf {
    let out = p(dir, name);
    ok(&["generate", "--out", s(&out), "--seed", seed, "--counts", counts]);
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn generate_default_corpus_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.csv");
    let b = p(&dir, "b.csv");
    ok(&["generate", "--out", s(&a), "--seed", "7"]);
    ok(&["generate", "--out", s(&b), "--seed", "7"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let ds = load_dataset(&a, true).unwrap();
    assert_eq!(ds.len(), 328);
    assert_eq!(ds.class_counts(), [85, 99, 80, 64]);
}

#[test]
fn generate_zero_counts_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let out = generate(&dir, "e.csv", "0,0,0,0", "1");
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("id,label,v0,"));
}

#[test]
fn generate_with_profile_file() {
    let dir = TempDir::new().unwrap();
    let prof = p(&dir, "profile.toml");
    fs::write(&prof, "version = 1\n[corona]\nrandom_offset = false\n").unwrap();
    let out = p(&dir, "d.csv");
    ok(&[
        "generate",
        "--out",
        s(&out),
        "--counts",
        "3,0,0,0",
        "--profile-file",
        s(&prof),
    ]);
    assert_eq!(load_dataset(&out, true).unwrap().len(), 3);

    fs::write(&prof, "version = 1\n[corona]\nrandom_ofset = false\n").unwrap();
    let bad = prpd(&["generate", "--out", s(&out), "--profile-file", s(&prof)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn extract_meta_shape_and_threshold_column() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", "85,99,80,64", "3");
    let m4 = p(&dir, "m4.csv");
    let m5 = p(&dir, "m5.csv");
    ok(&["extract", "--in", s(&data), "--features", "meta", "--out", s(&m4)]);
    ok(&[
        "extract",
        "--in",
        s(&data),
        "--features",
        "meta",
        "--threshold",
        "0.5",
        "--out",
        s(&m5),
    ]);
    let a = csv_rows(&m4);
    let b = csv_rows(&m5);
    assert_eq!(a[0], ["id", "label", "f0", "f1", "f2"]);
    assert_eq!(a.len(), 329);
    assert!(a.iter().all(|r| r.len() == 5));
    for (ra, rb) in a.iter().zip(&b).skip(1) {
        assert_eq!(ra[..4], rb[..4]);
    }
    // sharp synthetic bands rarely move at 0.5, but 0.9 cuts into band edges
    let m9 = p(&dir, "m9.csv");
    ok(&[
        "extract",
        "--in",
        s(&data),
        "--features",
        "meta",
        "--threshold",
        "0.9",
        "--out",
        s(&m9),
    ]);
    let c = csv_rows(&m9);
    let mut changed = 0;
    for (ra, rc) in a.iter().zip(&c).skip(1) {
        assert_eq!(ra[..4], rc[..4]);
        changed += usize::from(ra[4] != rc[4]);
    }
    assert!(changed > 0);
}

#[test]
fn aligned_equals_phase_on_prealigned_data() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", "5,5,5,5", "4");
    let ds = load_dataset(&data, true).unwrap();
    let aligned = p(&dir, "aligned.csv");
    save_dataset(&ds.map_samples(align_phases), &aligned).unwrap();
    let fa = p(&dir, "fa.csv");
    let fp = p(&dir, "fp.csv");
    ok(&["extract", "--in", s(&aligned), "--features", "aligned", "--out", s(&fa)]);
    ok(&["extract", "--in", s(&aligned), "--features", "phase", "--out", s(&fp)]);
    assert_eq!(fs::read(fa).unwrap(), fs::read(fp).unwrap());
}

#[test]
fn train_is_deterministic_and_needs_labels() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", "10,10,10,10", "5");
    let a = p(&dir, "a.json");
    let b = p(&dir, "b.json");
    ok(&[
        "train",
        "--in",
        s(&data),
        "--model",
        "stack",
        "--seed",
        "3",
        "--out",
        s(&a),
    ]);
    ok(&[
        "train",
        "--in",
        s(&data),
        "--model",
        "stack",
        "--seed",
        "3",
        "--out",
        s(&b),
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.contains("\"prpd-model\""));

    let ds = load_dataset(&data, true).unwrap();
    let unlabeled = Dataset::from_samples(
        ds.dims(),
        ds.samples().iter().map(|x| x.clone().with_label(None)).collect(),
    )
    .unwrap();
    let u = p(&dir, "u.csv");
    save_dataset(&unlabeled, &u).unwrap();
    let out = prpd(&["train", "--in", s(&u), "--model", "rf", "--out", s(&b)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("training requires labels"));
}

#[test]
fn train_with_config_file() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", "8,8,8,8", "6");
    let cfg = p(&dir, "c.toml");
    fs::write(&cfg, "version = 1\n[random_forest]\nn_trees = 3\n").unwrap();
    let m = p(&dir, "m.json");
    ok(&[
        "train",
        "--in",
        s(&data),
        "--model",
        "rf",
        "--config",
        s(&cfg),
        "--out",
        s(&m),
    ]);
    assert!(fs::read_to_string(&m).unwrap().contains("\"n_trees\":3"));

    fs::write(&cfg, "version = 1\n[random_forest]\ntrees = 3\n").unwrap();
    let out = prpd(&[
        "train",
        "--in",
        s(&data),
        "--model",
        "rf",
        "--config",
        s(&cfg),
        "--out",
        s(&m),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", "4,4,4,4", "1");
    let out = p(&dir, "x");
    for args in [
        vec!["train", "--in", s(&data), "--model", "knn", "--out", s(&out)],
        vec!["extract", "--in", s(&data), "--threshold", "1.0", "--out", s(&out)],
        vec!["evaluate", "--in", s(&data), "--trials", "0"],
        vec!["evaluate", "--in", s(&data), "--train-frac", "1.5"],
        vec!["generate", "--out", s(&out), "--counts", "1,2,3"],
        vec!["frobnicate"],
    ] {
        assert_eq!(prpd(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn evaluate_single_trial_has_zero_std() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", "12,12,12,12", "8");
    let report = p(&dir, "r.json");
    let out = ok(&[
        "evaluate",
        "--in",
        s(&data),
        "--model",
        "lr,rf",
        "--features",
        "meta,aligned",
        "--trials",
        "1",
        "--report",
        s(&report),
    ]);
    let table = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(
        header,
        ["Model", "Features", "Corona", "Floating", "Particle", "Void", "Total"]
    );
    assert_eq!(table.lines().count(), 5);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let entries = json["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    for e in entries {
        assert_eq!(e["accuracy"]["std"], 0.0);
        assert_eq!(e["trials"], 1);
    }
}

#[test]
fn classify_outputs_simplex_rows_and_recovers_training_labels() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", "10,10,10,10", "9");
    let cfg = p(&dir, "c.toml");
    fs::write(&cfg, "version = 1\n[random_forest]\nbootstrap = false\n").unwrap();
    let m = p(&dir, "m.json");
    ok(&[
        "train",
        "--in",
        s(&data),
        "--model",
        "rf",
        "--config",
        s(&cfg),
        "--features",
        "aligned",
        "--out",
        s(&m),
    ]);
    let out = p(&dir, "c.csv");
    ok(&["classify", "--in", s(&data), "--model", s(&m), "--out", s(&out)]);
    let rows = csv_rows(&out);
    assert_eq!(
        rows[0],
        ["id", "label", "p_corona", "p_floating", "p_particle", "p_void"]
    );
    let truth = load_dataset(&data, true).unwrap();
    for (row, sample) in rows[1..].iter().zip(truth.samples()) {
        let probs: Vec<f64> = row[2..].iter().map(|v| v.parse().unwrap()).collect();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(probs.iter().all(|&v| v >= 0.0));
        assert_eq!(row[0], sample.id());
        assert_eq!(row[1], sample.label().unwrap().name());
    }
}

#[test]
fn classify_with_missing_model_fails() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", "2,2,2,2", "1");
    let out = prpd(&[
        "classify",
        "--in",
        s(&data),
        "--model",
        s(&p(&dir, "none.json")),
        "--out",
        s(&p(&dir, "c.csv")),
    ]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

fn pgm_pixels(bytes: &[u8]) -> (usize, usize, &[u8]) {
    let text = std::str::from_utf8(&bytes[..15]).unwrap_or("");
    let mut parts = text.split_whitespace();
    assert_eq!(parts.next(), Some("P5"));
    let w: usize = parts.next().unwrap().parse().unwrap();
    let h: usize = parts.next().unwrap().parse().unwrap();
    (w, h, &bytes[bytes.len() - w * h..])
}

#[test]
fn render_zero_sample_and_unknown_id() {
    let dir = TempDir::new().unwrap();
    let dims = Dims::default();
    let mut ds = Dataset::new(dims);
    ds.push(PrpdSignal::new("z", None, dims, vec![0.0; dims.len()]).unwrap())
        .unwrap();
    let data = p(&dir, "z.csv");
    save_dataset(&ds, &data).unwrap();
    let img = p(&dir, "z.pgm");
    ok(&["render", "--in", s(&data), "--id", "z", "--out", s(&img)]);
    let bytes = fs::read(&img).unwrap();
    let (w, h, px) = pgm_pixels(&bytes);
    assert_eq!((w, h), (60, 64));
    assert!(px.iter().all(|&v| v == 0));

    let out = prpd(&["render", "--in", s(&data), "--id", "missing", "--out", s(&img)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn render_corona_shows_one_band() {
    let dir = TempDir::new().unwrap();
    let prof = p(&dir, "profile.toml");
    fs::write(
        &prof,
        "version = 1\n[corona]\nrandom_offset = false\ncenter_jitter = 0.0\nwidth_jitter = 0.0\n",
    )
    .unwrap();
    let data = p(&dir, "d.csv");
    ok(&[
        "generate",
        "--out",
        s(&data),
        "--counts",
        "1,0,0,0",
        "--profile-file",
        s(&prof),
    ]);
    let img = p(&dir, "c.pgm");
    ok(&["render", "--in", s(&data), "--id", "corona-000", "--out", s(&img)]);
    let bytes = fs::read(&img).unwrap();
    let (w, h, px) = pgm_pixels(&bytes);
    // rows run top to bottom from the last phase to phase 0
    let centre = 0.25 * 64.0;
    let spread = 0.09 * 64.0;
    let (mut bright, mut inside) = (0, 0);
    for (row, line) in px.chunks(w).enumerate() {
        let phase = (h - 1 - row) as f64;
        for &v in line {
            if v >= 128 {
                bright += 1;
                inside += usize::from((phase - centre).abs() <= spread);
            }
        }
    }
    assert!(bright > 0);
    assert!(inside as f64 >= 0.9 * bright as f64, "{inside}/{bright}");
}
