use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pdnet_core::io::manifest::{read_manifest, MANIFEST_FILE, TRANSFORMS_FILE};
use pdnet_core::io::nvol::read_nvol;
use pdnet_core::io::report::{checkpoint_file, FOLDS_FILE, ROC_FILE, SCORES_FILE, SUMMARY_FILE};

fn pdnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdnet")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate_shaped(dir: &Path, n_control: &str, n_pd: &str, shape: &str) -> Output {
    pdnet(&["phantom", "generate", "--out", s(dir), "--n-control", n_control, "--n-pd", n_pd, "--seed", "5", "--shape", shape])
}

fn generate(dir: &Path, n_control: &str, n_pd: &str) -> Output {
    generate_shaped(dir, n_control, n_pd, "16x18x16")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&pdnet(&["--help"])), 0);
    assert_eq!(code(&pdnet(&["--version"])), 0);
    assert_eq!(code(&pdnet(&[])), 1);
    assert_eq!(code(&pdnet(&["bogus"])), 1);
}

#[test]
fn phantom_generate_twenty_subjects_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = generate(a.path(), "10", "10");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&generate(b.path(), "10", "10")), 0);
    let fa = files(a.path());
    let nvols = fa.iter().filter(|(n, _)| n.ends_with(".nvol")).count();
    assert_eq!(nvols, 20);
    assert_eq!(read_manifest(&a.path().join(MANIFEST_FILE)).unwrap().rows.len(), 20);
    assert_eq!(fa, files(b.path()));
}

#[test]
fn phantom_usage_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&generate(d.path(), "0", "10")), 1);
    assert_eq!(code(&generate(d.path(), "10", "-3")), 1);
    let bad_shape = pdnet(&["phantom", "generate", "--out", s(d.path()), "--n-control", "2", "--n-pd", "2", "--seed", "1", "--shape", "16x18"]);
    assert_eq!(code(&bad_shape), 1);
}

#[test]
fn preprocess_tags() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("data");
    assert_eq!(code(&generate(&data, "3", "3")), 0);
    let manifest = data.join(MANIFEST_FILE);

    let no_u = d.path().join("no_u");
    assert_eq!(code(&pdnet(&["preprocess", "--manifest", s(&manifest), "--tag", "no_u", "--out", s(&no_u)])), 0);
    let original = read_manifest(&manifest).unwrap();
    let processed = read_manifest(&no_u.join(MANIFEST_FILE)).unwrap();
    for (o, p) in original.rows.iter().zip(&processed.rows) {
        assert_eq!(fs::read(original.resolve(o)).unwrap(), fs::read(processed.resolve(p)).unwrap());
        assert_eq!(p.provenance.as_deref(), Some("no_u"));
    }

    let int_u = d.path().join("int_u");
    assert_eq!(code(&pdnet(&["preprocess", "--manifest", s(&manifest), "--tag", "int_u", "--out", s(&int_u)])), 0);
    let m = read_manifest(&int_u.join(MANIFEST_FILE)).unwrap();
    for row in &m.rows {
        let mean = read_nvol(&m.resolve(row)).unwrap().mean();
        assert!((mean - 1.0).abs() <= 1e-5, "{mean}");
    }

    let max_w = d.path().join("max_w");
    let missing = pdnet(&["preprocess", "--manifest", s(&manifest), "--tag", "max_w", "--out", s(&max_w)]);
    assert_eq!(code(&missing), 2);
    let transforms = data.join(TRANSFORMS_FILE);
    let ok = pdnet(&["preprocess", "--manifest", s(&manifest), "--tag", "max_w", "--out", s(&max_w), "--transforms", s(&transforms)]);
    assert_eq!(code(&ok), 0);

    assert_eq!(code(&pdnet(&["preprocess", "--manifest", s(&manifest), "--tag", "int_x", "--out", s(&max_w)])), 1);
    let nowhere = d.path().join("nope.csv");
    assert_eq!(code(&pdnet(&["preprocess", "--manifest", s(&nowhere), "--tag", "int_u", "--out", s(&max_w)])), 2);
}

/// Phantom data plus a config file that refers to it by a relative path.
fn train_fixture(root: &Path) -> PathBuf {
    assert_eq!(code(&generate_shaped(&root.join("data"), "6", "6", "24x28x24")), 0);
    let cfg = root.join("run.cfg");
    fs::write(
        &cfg,
        "# tiny run\nmodel = alexnet3d\nwidth_scale = 0.25\ntag = int_u\nfolds = 2\nepochs = 2\nbatch_size = 4\nseed = 3\nmanifest = data/manifest.csv\n",
    )
    .unwrap();
    cfg
}

fn train(cfg: &Path, out: &Path) -> Output {
    pdnet(&["train", "--config", s(cfg), "--out", s(out)])
}

#[test]
fn train_writes_results_reproducibly() {
    let d = tempfile::tempdir().unwrap();
    let cfg = train_fixture(d.path());
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let out = train(&cfg, &a);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&train(&cfg, &b)), 0);
    for f in [FOLDS_FILE, ROC_FILE, SCORES_FILE, SUMMARY_FILE, &checkpoint_file(0), &checkpoint_file(1)] {
        assert!(a.join(f).is_file(), "{f} missing");
    }
    let csv = |dir: &Path| files(dir).into_iter().filter(|(n, _)| n.ends_with(".csv")).collect::<Vec<_>>();
    let ca = csv(&a);
    assert!(ca.len() >= 6);
    assert_eq!(ca, csv(&b));

    let over = pdnet(&["train", "--config", s(&cfg), "--out", s(&d.path().join("c")), "--folds", "1"]);
    assert_eq!(code(&over), 2);
    let missing = pdnet(&["train", "--config", s(&d.path().join("none.cfg")), "--out", s(&d.path().join("c"))]);
    assert_eq!(code(&missing), 2);
}

fn pgm_dims(bytes: &[u8]) -> (usize, usize) {
    let text = String::from_utf8_lossy(&bytes[..bytes.len().min(32)]).into_owned();
    let mut it = text.split_ascii_whitespace();
    assert_eq!(it.next(), Some("P5"));
    (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
}

#[test]
fn saliency_and_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = train_fixture(d.path());
    let results = d.path().join("results");
    let run = results.join("int_u");
    assert_eq!(code(&train(&cfg, &run)), 0);

    let ck = run.join(checkpoint_file(0));
    let vol = d.path().join("data/sub-0001.nvol");
    let sal = |class: &str, out: &Path| {
        pdnet(&["saliency", "--checkpoint", s(&ck), "--volume", s(&vol), "--class", class, "--out", s(out)])
    };
    assert_eq!(code(&sal("2", &d.path().join("bad"))), 1);
    let (s1, s2) = (d.path().join("s1"), d.path().join("s2"));
    let out = sal("1", &s1);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&sal("1", &s2)), 0);
    assert_eq!(files(&s1), files(&s2));
    let [_, h, w] = read_nvol(&vol).unwrap().dims();
    assert_eq!(pgm_dims(&fs::read(s1.join("saliency_axial.pgm")).unwrap()), (w, h));
    assert_eq!(read_nvol(&s1.join("saliency.nvol")).unwrap().dims(), read_nvol(&vol).unwrap().dims());

    let report = d.path().join("report.md");
    let out = pdnet(&["report", "--results", s(&results), "--out", s(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(&report).unwrap();
    let rows = table.lines().filter(|l| l.starts_with('|')).count();
    assert_eq!(rows, 3, "header, separator and one run:\n{table}");
    let svgs = files(d.path()).into_iter().filter(|(n, _)| n.ends_with(".svg")).count();
    assert_eq!(svgs, 2);

    let empty = d.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(code(&pdnet(&["report", "--results", s(&empty), "--out", s(&d.path().join("r2.md"))])), 2);
}
