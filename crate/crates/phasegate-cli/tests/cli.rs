use std::path::Path;
use std::process::{Command, Output};

fn phasegate(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasegate"))
        .args(args)
        .current_dir(dir)
        .env_remove("PHASEGATE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = phasegate(dir, args);
    assert!(
        out.status.success(),
        "`{}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn with_phantoms() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "phantom", "--rows", "48", "--cols", "48", "--coils", "2", "--count", "2", "--out",
            "data",
        ],
    );
    dir
}

/// Columns of a CSV file, keyed by header.
fn columns(path: &Path, names: &[&str]) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let h = r.headers().unwrap().clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| h.iter().position(|x| x == *n).unwrap())
        .collect();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            idx.iter().map(|&i| rec[i].to_string()).collect()
        })
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(phasegate(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(phasegate(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn bad_parameters_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["phantom", "--rows", "nope", "--out", "x"],
        vec!["frobnicate"],
        vec![],
        vec!["maskgen", "kspace", "--out", "m.arr"],
        vec![
            "maskgen",
            "kspace",
            "--n-lines",
            "32",
            "--acs",
            "24",
            "--accel",
            "4",
            "--out",
            "m.arr",
        ],
        vec![
            "maskgen",
            "patch",
            "--patches",
            "4",
            "--geometry",
            "hexagonal",
            "--out",
            "m.arr",
        ],
        vec!["validate", "all", "--quick", "--out", "v", "--bogus"],
    ] {
        assert_eq!(
            phasegate(dir.path(), &args).status.code(),
            Some(3),
            "{args:?}"
        );
    }
}

#[test]
fn io_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = phasegate(
        dir.path(),
        &[
            "audit", "--input", "absent", "--kspace", "--family", "random", "--out", "a",
        ],
    );
    assert_eq!(missing.status.code(), Some(2));
    std::fs::write(dir.path().join("junk.arr"), b"not an array").unwrap();
    let junk = phasegate(
        dir.path(),
        &[
            "audit", "--input", "junk.arr", "--kspace", "--family", "random", "--out", "a",
        ],
    );
    assert_eq!(junk.status.code(), Some(2));
    let cfg = phasegate(
        dir.path(),
        &["validate", "all", "--config", "nope.json", "--out", "v"],
    );
    assert_eq!(cfg.status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical() {
    let dir = with_phantoms();
    let args = [
        "audit", "--input", "data", "--kspace", "--family", "random", "--acs", "8", "--win", "16",
        "--out",
    ];
    let run = |out: &str| {
        let mut a = args.to_vec();
        a.push(out);
        ok(dir.path(), &a);
        ["audit.csv", "summary.json"].map(|f| std::fs::read(dir.path().join(out).join(f)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
    let csv = std::fs::read(dir.path().join("a/audit.csv")).unwrap();
    assert!(!csv.contains(&b'\r'));
}

#[test]
fn mask_file_sidecar_and_inline_spec_agree() {
    let dir = with_phantoms();
    ok(
        dir.path(),
        &[
            "maskgen",
            "kspace",
            "--n-lines",
            "48",
            "--acs",
            "8",
            "--accel",
            "3",
            "--family",
            "random",
            "--seed",
            "5",
            "--out",
            "m.arr",
        ],
    );
    let side = json(&dir.path().join("m.json"));
    assert_eq!(side["spec"]["kind"], "kspace");
    assert_eq!(side["keep_count"], 48 * 16);
    let common = [
        "audit", "--input", "data", "--kspace", "--win", "16", "--acs", "8", "--accel", "3",
    ];
    let mut variants: Vec<Vec<&str>> = vec![
        vec!["--mask", "m.arr", "--out", "by_file"],
        vec!["--mask", "m.json", "--out", "by_sidecar"],
        vec!["--family", "random", "--mask-seed", "5", "--out", "inline"],
    ];
    for v in &mut variants {
        let mut a = common.to_vec();
        a.append(v);
        ok(dir.path(), &a);
    }
    let cols = [
        "id",
        "keep_fraction",
        "s_ref",
        "s_acq",
        "delta_s",
        "psnr_db",
        "ssim",
        "kspace_l2",
    ];
    let base = columns(&dir.path().join("by_file/audit.csv"), &cols);
    assert_eq!(base.len(), 2);
    for d in ["by_sidecar", "inline"] {
        assert_eq!(
            columns(&dir.path().join(d).join("audit.csv"), &cols),
            base,
            "{d}"
        );
    }
}

#[test]
fn presets_and_overrides_reach_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "mimo",
            "--realizations",
            "2",
            "--intervals",
            "2",
            "--iters",
            "2",
            "--out",
            "m",
        ],
    );
    let h = &json(&dir.path().join("m/manifest.json"))["config"]["husimi"];
    assert_eq!(
        (
            h["params"]["win"].as_u64(),
            h["params"]["sigma"].as_f64(),
            h["params"]["hop"].as_u64()
        ),
        (Some(4), Some(1.0), Some(1))
    );
    assert_eq!(h["weighting"], "energy");

    std::fs::write(
        dir.path().join("c.json"),
        r#"{"win": 2, "hop": 2, "weighting": "uniform", "realizations": 2}"#,
    )
    .unwrap();
    ok(
        dir.path(),
        &[
            "mimo",
            "--config",
            "c.json",
            "--win",
            "3",
            "--intervals",
            "2",
            "--iters",
            "2",
            "--out",
            "n",
        ],
    );
    let h = &json(&dir.path().join("n/manifest.json"))["config"]["husimi"];
    assert_eq!(h["params"]["win"].as_u64(), Some(3));
    assert_eq!(h["params"]["hop"].as_u64(), Some(2));
    assert_eq!(h["weighting"], "uniform");
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_phasegate"))
        .args([
            "phantom", "--rows", "32", "--cols", "32", "--coils", "1", "--out", "p",
        ])
        .current_dir(dir.path())
        .env("PHASEGATE_SEED", "77")
        .output()
        .unwrap();
    assert!(out.status.success());
    let m = json(&dir.path().join("p/manifest.json"));
    assert_eq!(m["seed"], 77);
    assert_eq!(m["details"]["layout"]["centered"], true);
    assert!(m.to_string().find("time").is_none());
}

#[test]
fn correlate_fits_a_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xy.csv"), "a,b\n1,3\n2,5\n3,7\n4,9\n").unwrap();
    ok(
        dir.path(),
        &[
            "correlate",
            "--input",
            "xy.csv",
            "--x",
            "a",
            "--y",
            "b",
            "--no-timestamp",
            "--out",
            "c",
        ],
    );
    let fit = &json(&dir.path().join("c/fit.json"))["fit"];
    assert!((fit["slope"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((fit["intercept"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((fit["pearson_r"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let svg = std::fs::read_to_string(dir.path().join("c/scatter.svg")).unwrap();
    assert!(svg.starts_with("<svg") && !svg.contains("unix time"));
    let missing = phasegate(
        dir.path(),
        &[
            "correlate",
            "--input",
            "xy.csv",
            "--x",
            "a",
            "--y",
            "zz",
            "--out",
            "c",
        ],
    );
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn select_and_ablate_write_their_tables() {
    let dir = with_phantoms();
    ok(
        dir.path(),
        &[
            "select",
            "--calibration",
            "data",
            "--acs",
            "8",
            "--alphas",
            "0,1",
            "--betas",
            "0,2",
            "--win",
            "16",
            "--out",
            "s",
        ],
    );
    let sel = json(&dir.path().join("s/selection.json"));
    assert_eq!(sel["score_table"].as_array().unwrap().len(), 4);
    assert_eq!(sel["calibration_ids"][1], "phantom_001");
    ok(
        dir.path(),
        &[
            "ablate",
            "--input",
            "data",
            "--wins",
            "16,32,64",
            "--sigma-ratios",
            "0.5",
            "--hop-ratios",
            "0.5",
            "--families",
            "periodic,random",
            "--acs",
            "8",
            "--out",
            "ab",
        ],
    );
    let cells = columns(&dir.path().join("ab/cells.csv"), &["win", "skipped"]);
    assert_eq!(cells.len(), 6);
    assert!(cells.iter().any(|c| c[0] == "64" && c[1] == "true"));
    assert_eq!(
        columns(&dir.path().join("ab/neighbours.csv"), &["win_a"]).len(),
        2
    );
}

#[test]
fn image_audit_with_patch_masks() {
    let dir = tempfile::tempdir().unwrap();
    let field: Vec<phasegate::numerics::Complex64> = (0..64 * 64)
        .map(|i| phasegate::numerics::Complex64::new(((i * 7919) % 101) as f64 / 101.0 + 1.0, 0.0))
        .collect();
    let g = phasegate::numerics::Grid2C::from_vec(64, 64, field).unwrap();
    std::fs::write(
        dir.path().join("f.arr"),
        phasegate::arr1::Arr1::from_grid(&g).to_bytes(),
    )
    .unwrap();
    ok(
        dir.path(),
        &[
            "audit",
            "--input",
            "f.arr",
            "--patch-px",
            "8",
            "--k",
            "2",
            "--out",
            "v",
        ],
    );
    let rows = columns(&dir.path().join("v/audit.csv"), &["id", "keep_fraction"]);
    assert_eq!(rows, vec![vec!["f".to_string(), "0.25".to_string()]]);
    let scales = columns(&dir.path().join("v/scales.csv"), &["win"]);
    assert_eq!(scales.len(), 3);
}

#[test]
fn validate_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["validate", "all", "--quick", "--out", "v"]);
    let r = json(&dir.path().join("v/report.json"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["contracts"].as_array().unwrap().len(), 7);
}
