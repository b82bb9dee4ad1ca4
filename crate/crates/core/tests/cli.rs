mod common;

use std::fs;

use common::{num, read_csv, run, run_ok, same_12};
use relboost::amplitudes::{build_matrix, BoostModel, ModeRange};
use relboost::entanglement::JointProbability;
use relboost::kinematics::LorentzFactor;
use relboost::quadrature::QuadratureSpec;
use relboost::report::{colormap, luminance};

#[test]
fn gamma_below_one_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["amplitudes", "--gamma", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--gamma"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn comma_and_repeated_gamma_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["sweep", "--model", "zero-rm", "--gamma", "20,1", "--gamma", "5", "--lmax", "3"], dir.path());
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    let gammas: Vec<f64> = rows.iter().map(|r| num(&r[1])).collect();
    assert_eq!(gammas, vec![1.0, 5.0, 20.0]);
}

#[test]
fn joint_grid_round_trips_and_peaks_at_origin_for_rm2() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["amplitudes", "--model", "non-zero-rm2", "--gamma", "10000", "--complex"], dir.path());
    let (header, rows) = read_csv(&dir.path().join("joint_non-zero-rm2_10000.csv"));
    assert_eq!(header[0], "k\\m");
    assert_eq!(header.len(), 42);
    assert_eq!(rows.len(), 41);

    let a = build_matrix(
        BoostModel::NonZeroRm2,
        LorentzFactor::new(1e4).unwrap(),
        ModeRange::new(20),
        &QuadratureSpec::default(),
    )
    .unwrap();
    let joint = JointProbability::from_amplitudes(&a).unwrap();
    let mut best = (f64::MIN, 0, 0);
    for (r, row) in rows.iter().enumerate() {
        assert_eq!(num(&row[0]) as i32, r as i32 - 20);
        for c in 0..41 {
            let p = num(&row[c + 1]);
            assert!(same_12(p, joint.at(r, c)), "({r},{c})");
            if p > best.0 {
                best = (p, num(&row[0]) as i32, num(&header[c + 1]) as i32);
            }
        }
    }
    assert_eq!((best.1, best.2), (0, 0));

    let (header, rows) = read_csv(&dir.path().join("amplitude_non-zero-rm2_10000.csv"));
    assert_eq!(header, ["k", "m", "re", "im"]);
    for row in rows {
        let z = a.get(num(&row[0]) as i32, num(&row[1]) as i32);
        assert!(same_12(num(&row[2]), z.re) && same_12(num(&row[3]), z.im));
    }
}

#[test]
fn json_output_carries_schema_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["amplitudes", "--model", "rm1", "--gamma", "5", "--lmax", "4", "--format", "json"], dir.path());
    let text = fs::read_to_string(dir.path().join("joint_non-zero-rm1_5.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["schema"], 1);
    let a = build_matrix(
        BoostModel::NonZeroRm1,
        LorentzFactor::new(5.0).unwrap(),
        ModeRange::new(4),
        &QuadratureSpec::default(),
    )
    .unwrap();
    let joint = JointProbability::from_amplitudes(&a).unwrap();
    for r in 0..9 {
        for c in 0..9 {
            assert_eq!(doc["p"][r][c].as_f64().unwrap(), joint.at(r, c));
        }
    }
}

#[test]
fn data_files_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        run_ok(&["sweep", "--lmax", "6", "--points", "5"], dir.path());
        run_ok(&["amplitudes", "--model", "rm1", "--gamma", "20", "--lmax", "6", "--heatmap"], dir.path());
    }
    for name in ["sweep.csv", "joint_non-zero-rm1_20.csv", "joint_non-zero-rm1_20.png"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    // provenance lives beside the data, not in it
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("sweep.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["schema"], 1);
    assert!(meta["created_unix"].as_u64().is_some());
}

#[test]
fn heatmap_color_order_matches_value_order() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &["amplitudes", "--model", "rm1", "--gamma", "5", "--lmax", "5", "--heatmap", "--scale", "3"],
        dir.path(),
    );
    let img = image::open(dir.path().join("joint_non-zero-rm1_5.png")).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (33, 33));
    let (_, rows) = read_csv(&dir.path().join("joint_non-zero-rm1_5.csv"));
    let mut cells = Vec::new();
    for row in &rows {
        let k = num(&row[0]) as i32;
        // image row 0 is the largest k
        let y = (5 - k) as u32 * 3 + 1;
        for c in 0..11 {
            let px = img.get_pixel(c as u32 * 3 + 1, y).0;
            cells.push((num(&row[c + 1]), luminance(px)));
        }
    }
    for &(p1, l1) in &cells {
        for &(p2, l2) in &cells {
            if p1 < p2 {
                assert!(l1 <= l2, "value {p1} < {p2} but luminance {l1} > {l2}");
            }
        }
    }
    assert_eq!(luminance(colormap(1.0)), cells.iter().map(|c| c.1).fold(0.0, f64::max));
}

#[test]
fn rest_frame_heatmap_is_the_anti_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["amplitudes", "--model", "zero-rm", "--gamma", "1", "--lmax", "3", "--heatmap", "--scale", "1"], dir.path());
    let img = image::open(dir.path().join("joint_zero-rm_1.png")).unwrap().to_rgb8();
    let dark = colormap(0.0);
    for y in 0..7u32 {
        let k = 3 - y as i32;
        for x in 0..7u32 {
            let m = x as i32 - 3;
            assert_eq!(img.get_pixel(x, y).0 != dark, k == -m, "({k},{m})");
        }
    }
}

#[test]
fn marginals_and_schmidt_tables_are_normalized() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["marginals", "--lmax", "6", "--gamma", "1,20"], dir.path());
    run_ok(&["schmidt", "--lmax", "6", "--gamma", "1,20"], dir.path());
    let (header, rows) = read_csv(&dir.path().join("marginals.csv"));
    assert_eq!(header, ["model", "gamma", "l", "p_k", "p_m"]);
    assert_eq!(rows.len(), 3 * 2 * 13);
    for block in rows.chunks(13) {
        let pk: f64 = block.iter().map(|r| num(&r[3])).sum();
        let pm: f64 = block.iter().map(|r| num(&r[4])).sum();
        assert!((pk - 1.0).abs() < 1e-10 && (pm - 1.0).abs() < 1e-10);
        if num(&block[0][1]) == 1.0 {
            assert!(block.iter().all(|r| (num(&r[3]) - 1.0 / 13.0).abs() < 1e-12));
        }
    }
    let (_, rows) = read_csv(&dir.path().join("schmidt.csv"));
    let rest: Vec<_> = rows.iter().filter(|r| r[0] == "zero-rm" && num(&r[1]) == 1.0).collect();
    assert_eq!(rest.len(), 13);
    assert!((num(&rest[12][4]) - 1.0).abs() < 1e-12);
}

#[test]
fn table_prints_one_block_per_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["table", "--gamma", "1", "--lmax", "1"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.matches("1.5850").count(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["result"]["records"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_exit_code_tracks_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let ok = std::process::Command::new(common::BIN).args(["verify"]).current_dir(dir.path()).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = std::process::Command::new(common::BIN)
        .args(["verify", "--tol", "1e-3"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stdout).contains("[FAIL]"));
}

#[test]
fn thread_env_does_not_change_output() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (d, threads) in dirs.iter().zip(["1", "3"]) {
        let o = std::process::Command::new(common::BIN)
            .args(["sweep", "--lmax", "5", "--points", "4", "--quiet", "--out"])
            .arg(d.path())
            .env("RELBOOST_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    assert_eq!(
        fs::read(dirs[0].path().join("sweep.csv")).unwrap(),
        fs::read(dirs[1].path().join("sweep.csv")).unwrap()
    );
}
