use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{seq::index::sample, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbc_core::experiments::{load_image_dir, mean_std, parse_class_map};
use rbc_core::*;

fn suite(size: usize) -> Vec<LabeledImage> {
    phantom_suite(size).unwrap()
}

#[test]
fn quarter_turn_reverses_transposed_projection() {
    for img in suite(24) {
        let p90 = project(&img.image, 90.0).unwrap();
        let mut p0_t = project(&img.image.transpose(), 0.0).unwrap();
        p0_t.reverse();
        for (a, b) in p90.iter().zip(&p0_t) {
            assert!((a - b).abs() < 1e-12, "{}", img.id);
        }
    }
}

#[test]
fn inverse_radon_is_linear() {
    let angles = equidistant_angles(12).unwrap();
    let s1 = sinogram(&make_phantom(PhantomKind::SheppLogan, 32).unwrap(), &angles).unwrap();
    let s2 = sinogram(&make_phantom(PhantomKind::Gradient, 32).unwrap(), &angles).unwrap();
    let (a, b) = (0.7, -1.3);
    let mixed = Sinogram::from_rows(
        angles.clone(),
        s1.rows()
            .zip(s2.rows())
            .map(|(r1, r2)| r1.iter().zip(r2).map(|(x, y)| a * x + b * y).collect())
            .collect(),
    )
    .unwrap();
    let r1 = inverse_radon(&s1, 32).unwrap();
    let r2 = inverse_radon(&s2, 32).unwrap();
    let rm = inverse_radon(&mixed, 32).unwrap();
    let scale = rm.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for ((m, x), y) in rm.values().iter().zip(r1.values()).zip(r2.values()) {
        assert!((m - (a * x + b * y)).abs() <= 1e-6 * scale);
    }
}

#[test]
fn doubling_equidistant_angles_improves_mean_fidelity() {
    let images = suite(32);
    let mean_at = |k: usize| {
        let angles = equidistant_angles(k).unwrap();
        let scores: Vec<f64> = images
            .iter()
            .map(|i| reconstruction_fitness(&i.image, &angles).unwrap().rank())
            .collect();
        mean_std(&scores).unwrap().0
    };
    for k in [4, 8, 16, 45] {
        let (lo, hi) = (mean_at(k), mean_at(2 * k));
        assert!(hi > lo, "{k}: {lo} vs {}: {hi}", 2 * k);
    }
}

#[test]
fn full_angle_set_beats_its_subsets() {
    let full = equidistant_angles(180).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for img in suite(32) {
        let top = reconstruction_fitness(&img.image, &full).unwrap().rank();
        let mut subsets: Vec<AngleSet> = [4, 16, 60, 90, 179]
            .into_iter()
            .map(|k| equidistant_angles(k).unwrap())
            .collect();
        for k in [2, 8, 30, 120, 179] {
            let mut idx = sample(&mut rng, 180, k).into_vec();
            idx.sort_unstable();
            subsets.push(full.subset(&idx).unwrap());
        }
        for s in subsets {
            let c = reconstruction_fitness(&img.image, &s).unwrap().rank();
            assert!(top >= c - 0.01, "{} with {} angles: {c} > {top}", img.id, s.len());
        }
    }
}

#[test]
fn barcode_length_and_scaling() {
    let img = make_phantom(PhantomKind::SheppLogan, 32).unwrap();
    let bc = generate_barcode(&img, &equidistant_angles(4).unwrap()).unwrap();
    assert_eq!(bc.fragment_len(), 47);
    assert_eq!(bc.total_bits(), 4 * 47);

    let dimmer = GrayImage::from_fn(32, 32, |r, c| 0.25 * img.get(r, c)).unwrap();
    assert_eq!(generate_barcode(&dimmer, bc.angles()).unwrap(), bc);
}

fn tiny(max_evaluations: usize) -> (DEConfig, DEConfig) {
    (
        DEConfig {
            max_evaluations,
            ..DEConfig::four_of_180(0)
        },
        DEConfig {
            max_evaluations,
            ..DEConfig::eight_of_180(0)
        },
    )
}

#[test]
fn summaries_recompute_from_per_run_csv() {
    let images = suite(16);
    let settings = RunSettings {
        runs: 4,
        master_seed: 3,
        ..RunSettings::default()
    };
    let (c4, c8) = tiny(24);
    let out = run_series2(&images, &c4, &c8, &settings).unwrap();

    let csv_bytes = out.per_run_csv().unwrap();
    let mut reader = csv::Reader::from_reader(csv_bytes.as_slice());
    let mut by_key: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        rows += 1;
        if !rec[5].is_empty() {
            by_key
                .entry((rec[0].to_string(), rec[2].to_string()))
                .or_default()
                .push(rec[5].parse().unwrap());
        }
    }
    // one BF run plus `runs` runs of each MDE variant per image
    assert_eq!(rows, images.len() * (1 + 2 * settings.runs));

    for s in &out.report.per_image {
        let scores = &by_key[&(s.image_id.clone(), s.method.label().to_string())];
        let (m, sd) = mean_std(scores).unwrap();
        assert!((s.score_mean.unwrap() - m).abs() <= 1e-12);
        assert!((s.score_std.unwrap() - sd).abs() <= 1e-12);
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(s.best_score.rank(), best);
    }
    for c in &out.report.per_class {
        let pooled: Vec<f64> = by_key
            .iter()
            .filter(|((id, m), _)| *m == c.method.label() && images.iter().any(|i| &i.id == id && i.class == c.class))
            .flat_map(|(_, v)| v.iter().cloned())
            .collect();
        assert_eq!(c.samples, pooled.len());
        let (m, _) = mean_std(&pooled).unwrap();
        assert!((c.score_mean.unwrap() - m).abs() <= 1e-12);
    }
}

#[test]
fn reruns_with_same_seed_are_identical_and_seed_matters() {
    let images = suite(16);
    let (c4, c8) = tiny(18);
    let settings = RunSettings {
        runs: 2,
        master_seed: 9,
        ..RunSettings::default()
    };
    let a = run_series2(&images, &c4, &c8, &settings).unwrap();
    let b = run_series2(&images, &c4, &c8, &settings).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.per_run_csv().unwrap(), b.per_run_csv().unwrap());

    let other = RunSettings {
        master_seed: 10,
        ..settings
    };
    let c = run_series2(&images, &c4, &c8, &other).unwrap();
    assert_ne!(a.per_run_csv().unwrap(), c.per_run_csv().unwrap());
}

#[test]
fn artifacts_land_on_disk() {
    let images = suite(16);
    let settings = RunSettings {
        runs: 2,
        master_seed: 1,
        ..RunSettings::default()
    };
    let out = run_series1(
        &images,
        &DEConfig {
            max_evaluations: 12,
            ..DEConfig::sixteen_grid(0)
        },
        &settings,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write_artifacts(dir.path()).unwrap();

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["series"], 1);
    assert!(dir.path().join("per_run.csv").is_file());
    let curve = std::fs::read_to_string(dir.path().join("fitness_curves/disk_MDE-4of16_0.csv")).unwrap();
    assert_eq!(curve.lines().count(), 13);
    assert!(dir.path().join("barcodes/disk_BF-4of16.pgm").is_file());
    assert!(dir.path().join("barcodes/disk_BF-4of16.txt").is_file());
}

#[test]
fn image_directory_with_class_map() {
    let dir = tempfile::tempdir().unwrap();
    for (name, kind) in [("b.pgm", PhantomKind::Disk), ("a.pgm", PhantomKind::Square)] {
        save_pgm(&make_phantom(kind, 20).unwrap(), dir.path().join(name)).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let map = parse_class_map("# file,class\na.pgm, boxes\n\n").unwrap();
    let images = load_image_dir(dir.path(), Some(&map), 16).unwrap();
    let ids: Vec<_> = images.iter().map(|i| (i.id.as_str(), i.class.as_str())).collect();
    assert_eq!(ids[0], ("a", "boxes"));
    assert_eq!(ids[1].0, "b");
    assert_eq!(images[0].image.width(), 16);
    assert!(parse_class_map("no comma here").is_err());

    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(load_image_dir(empty.path(), None, 16), Err(Error::NoImages)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sinogram_is_linear(
        side in 4usize..20,
        a in 0.0f64..2.0,
        b in 0.0f64..2.0,
        seed in any::<u64>(),
        theta in 0.0f64..180.0,
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pix = || (0..side * side).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
        let (fv, gv) = (pix(), pix());
        let f = GrayImage::new(side, side, fv.clone()).unwrap();
        let g = GrayImage::new(side, side, gv.clone()).unwrap();
        let angles = AngleSet::new(vec![theta]).unwrap();
        let sf = sinogram(&f, &angles).unwrap();
        let sg = sinogram(&g, &angles).unwrap();
        let s = (a + b).max(1.0);
        let h = GrayImage::new(side, side, fv.iter().zip(&gv).map(|(x, y)| (a * x + b * y) / s).collect()).unwrap();
        let sh = sinogram(&h, &angles).unwrap();
        for ((m, x), y) in sh.row(0).iter().zip(sf.row(0)).zip(sg.row(0)) {
            prop_assert!((m * s - (a * x + b * y)).abs() <= 1e-9);
        }
    }
}
