use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rbc_core::{save_pgm, GrayImage, RadonBarcode};

fn rbc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RBC_SIZE")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn barcode_equidistant_eight() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbc(
        &[
            "barcode",
            "phantom:shepp-logan",
            "--angles",
            "equidistant:8",
            "--size",
            "32",
            "-o",
            "bc.pgm",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "total_bits 376");
    let bc: RadonBarcode = fs::read_to_string(dir.path().join("bc.txt"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert_eq!(bc.angles().len(), 8);
    assert!(fs::read(dir.path().join("bc.pgm")).unwrap().starts_with(b"P5"));
}

#[test]
fn barcode_of_zero_image_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    save_pgm(&GrayImage::constant(32, 32, 0.0).unwrap(), dir.path().join("zero.pgm")).unwrap();
    let o = rbc(&["barcode", "zero.pgm", "--angles", "0", "-o", "z.pgm"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let bc: RadonBarcode = fs::read_to_string(dir.path().join("z.txt"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert_eq!(bc.angles().angles(), &[0.0]);
    assert!(bc.bits().iter().all(|b| !b));
}

#[test]
fn barcode_explicit_angle_list_and_env_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rbc"))
        .args([
            "barcode",
            "phantom:disk",
            "--angles",
            "30,50,120,160",
            "-o",
            "out/b.pgm",
        ])
        .current_dir(dir.path())
        .env("RBC_SIZE", "16")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    // 16 px -> 23 bins per fragment
    assert_eq!(stdout(&o).trim(), "total_bits 92");
    let text = fs::read_to_string(dir.path().join("out/b.txt")).unwrap();
    assert!(text.starts_with("30;50;120;160|"));
}

#[test]
fn barcode_failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = rbc(&["barcode", "nope.png"], dir.path());
    assert!(!missing.status.success());
    assert!(stderr(&missing).contains("error"));
    let bad_angle = rbc(&["barcode", "phantom:disk", "--angles", "200"], dir.path());
    assert!(!bad_angle.status.success());
    let bad_kind = rbc(&["barcode", "phantom:teapot"], dir.path());
    assert!(!bad_kind.status.success());
}

#[test]
fn optimize_brute_force_four_of_sixteen() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbc(
        &[
            "optimize",
            "phantom:shepp-logan",
            "-n",
            "4",
            "--method",
            "bf",
            "--candidates",
            "equidistant:16",
            "-o",
            "bf",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("evaluations 1820"));
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("bf/result.json")).unwrap()).unwrap();
    assert_eq!(json["evaluations"], 1820);
    assert_eq!(json["params"]["method"], "bf");
    assert_eq!(json["params"]["budget_cap"], 10_000);
    assert_eq!(json["best_angles"].as_array().unwrap().len(), 4);
    let history = fs::read_to_string(dir.path().join("bf/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1821);
    assert!(dir.path().join("bf/reconstruction.pgm").is_file());
}

#[test]
fn optimize_mde_four_of_180_preset_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, jobs: &'static str| {
        [
            "optimize",
            "phantom:disk",
            "-n",
            "4",
            "--method",
            "mde",
            "--np",
            "6",
            "--f",
            "0.5",
            "--cr",
            "0.9",
            "--nfc",
            "300",
            "--seed",
            "7",
            "--jobs",
            jobs,
            "-o",
            out,
        ]
    };
    let a = rbc(&args("a", "1"), dir.path());
    let b = rbc(&args("b", "3"), dir.path());
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    let ja = fs::read(dir.path().join("a/result.json")).unwrap();
    assert_eq!(ja, fs::read(dir.path().join("b/result.json")).unwrap());
    assert_eq!(stdout(&a), stdout(&b));

    let json: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(json["evaluations"], 300);
    assert_eq!(json["params"]["de"]["population_size"], 6);
    assert_eq!(json["params"]["de"]["seed"], 7);
    for angle in json["best_angles"].as_array().unwrap() {
        assert_eq!(angle.as_f64().unwrap() % 10.0, 0.0);
    }
}

#[test]
fn optimize_brute_force_over_180_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbc(
        &[
            "optimize",
            "phantom:disk",
            "-n",
            "4",
            "--method",
            "bf",
            "--candidates",
            "equidistant:180",
        ],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("42296805"), "{}", stderr(&o));
    assert!(!dir.path().join("rbc-optimize").exists());
}

#[test]
fn experiment_series_two_reruns_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, jobs: &str| {
        rbc(
            &[
                "experiment",
                "--series",
                "2",
                "--images",
                "phantoms",
                "--seed",
                "42",
                "--runs",
                "2",
                "--size",
                "16",
                "--jobs",
                jobs,
                "--svg",
                "-o",
                out,
            ],
            dir.path(),
        )
    };
    let a = run("a", "1");
    let b = run("b", "4");
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(b.status.success(), "{}", stderr(&b));
    for file in [
        "report.json",
        "per_run.csv",
        "params.json",
        "fitness_curves.svg",
        "barcodes/disk_MDE-8of180.txt",
    ] {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/report.json")).unwrap()).unwrap();
    let methods: Vec<&str> = report["per_image"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["image_id"] == "disk")
        .map(|s| s["method"].as_str().unwrap())
        .collect();
    assert_eq!(methods, ["BF-4/16", "MDE-4/180", "MDE-8/180"]);
    let out = stdout(&a);
    assert!(out.contains("MDE-8/180"));
}

#[test]
fn experiment_series_one_pairs_bf_with_grid_mde() {
    let dir = tempfile::tempdir().unwrap();
    let imgs = dir.path().join("imgs");
    fs::create_dir(&imgs).unwrap();
    let img = GrayImage::from_fn(20, 20, |r, c| ((r * c) % 7) as f64 / 7.0).unwrap();
    save_pgm(&img, imgs.join("pattern.pgm")).unwrap();
    fs::write(dir.path().join("classes.txt"), "pattern.pgm,textures\n").unwrap();
    let o = rbc(
        &[
            "experiment",
            "--series",
            "1",
            "--images",
            "imgs",
            "--classes",
            "classes.txt",
            "--runs",
            "2",
            "--size",
            "16",
            "-o",
            "s1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("s1/report.json")).unwrap()).unwrap();
    let classes: Vec<(&str, &str)> = report["per_class"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["class"].as_str().unwrap(), c["method"].as_str().unwrap()))
        .collect();
    assert_eq!(classes, [("textures", "BF-4/16"), ("textures", "MDE-4/16")]);
    for s in report["per_image"].as_array().unwrap() {
        for a in s["best_angles"].as_array().unwrap() {
            assert_eq!(a.as_f64().unwrap() % 11.25, 0.0);
        }
    }
}

#[test]
fn experiment_rejects_unreadable_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbc(&["experiment", "--series", "2", "--images", "missing-dir"], dir.path());
    assert!(!o.status.success());
    let bad_series = rbc(&["experiment", "--series", "3"], dir.path());
    assert!(!bad_series.status.success());
}
