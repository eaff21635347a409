use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn hcurve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcurve"))
        .args(args)
        .env_remove("HC_OUT_DIR")
        .output()
        .expect("spawn hcurve")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", out]);
    hcurve(&args)
}

#[test]
fn run_writes_all_artifacts() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("osc");
    let o = run_into(
        &dir,
        &[
            "oscillatory-p512",
            "--xi-min",
            "5",
            "--xi-max",
            "8",
            "--mu-star",
            "0",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("xi,mu,residual_norm,U_norm,newton_iters,converged")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 31);
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 6);
        for v in &f[..4] {
            v.parse::<f64>().unwrap();
        }
        assert_eq!(f[5], "true");
    }
    let asym = fs::read_to_string(dir.join("asymptote.csv")).unwrap();
    assert!(asym.starts_with("xi,mu_asymptotic\n"));
    let analysis = fs::read_to_string(dir.join("analysis.txt")).unwrap();
    assert!(analysis.contains("global minimum"));
    assert!(analysis.contains("solutions at mu* = 0"));
}

#[test]
fn csv_values_round_trip() {
    let tmp = tempdir().unwrap();
    let o = run_into(
        tmp.path(),
        &["cubic", "--xi-min", "-1", "--xi-max", "1", "--step", "0.1"],
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(tmp.path().join("curve.csv")).unwrap();
    for row in csv.lines().skip(1) {
        for v in row.split(',').take(4) {
            let x: f64 = v.parse().unwrap();
            assert_eq!(format!("{x}"), v);
        }
    }
}

#[test]
fn no_asymptote_file_without_a_family() {
    let tmp = tempdir().unwrap();
    let o = run_into(tmp.path(), &["cubic", "--xi-min", "-1", "--xi-max", "1"]);
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("curve.csv").exists());
    assert!(!tmp.path().join("asymptote.csv").exists());
}

#[test]
fn identical_runs_give_identical_csv() {
    let tmp = tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = run_into(d, &["amann-hess-type", "--xi-min", "-10", "--xi-max", "10"]);
        assert_eq!(code(&o), 0);
    }
    let ca = fs::read(a.join("curve.csv")).unwrap();
    let cb = fs::read(b.join("curve.csv")).unwrap();
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
}

#[test]
fn svg_is_well_formed_and_self_contained() {
    let tmp = tempdir().unwrap();
    let o = run_into(
        tmp.path(),
        &[
            "resonance-k7",
            "--xi-min",
            "10",
            "--xi-max",
            "20",
            "--modes",
            "64",
        ],
    );
    assert_eq!(code(&o), 0);
    let svg = fs::read_to_string(tmp.path().join("curve.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("well-formed XML");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert!(doc.descendants().any(|n| n.tag_name().name() == "polyline"));
    for n in doc.descendants().filter(|n| n.is_element()) {
        assert!(!matches!(
            n.tag_name().name(),
            "image" | "script" | "use" | "foreignObject"
        ));
        for a in n.attributes() {
            assert_ne!(
                a.name(),
                "href",
                "external reference on <{}>",
                n.tag_name().name()
            );
            if let Some(rest) = a.value().strip_prefix("url(") {
                assert!(rest.starts_with('#'), "non-local url in {}", a.value());
            }
        }
    }
}

#[test]
fn env_var_sets_output_root() {
    let tmp = tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hcurve"))
        .args(["run", "cubic", "--xi-min", "0", "--xi-max", "1"])
        .env("HC_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("cubic").join("curve.csv").exists());
}

#[test]
fn config_file_and_overrides() {
    let tmp = tempdir().unwrap();
    let cfg = tmp.path().join("sine.toml");
    fs::write(
        &cfg,
        "[problem]\nname = \"sine\"\ng = \"pi^2*u + sin(u)\"\ne = [[2, 0.3]]\n\n[run]\nxi_min = -2.0\nxi_max = 2.0\nxi_step = 0.5\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = run_into(
        &out,
        &[cfg.to_str().unwrap(), "--step", "0.25", "--tol", "1e-12"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 17);
}

#[test]
fn bad_configs_exit_2() {
    let tmp = tempdir().unwrap();
    let cases = [
        (
            "resonant_e.toml",
            "[problem]\ng = \"pi^2*u\"\ne = [[1, 0.5]]\n",
        ),
        ("unknown_key.toml", "[problem]\ng = \"u\"\ncolour = 1\n"),
        ("bad_expr.toml", "[problem]\ng = \"u +* 2\"\n"),
        (
            "bad_range.toml",
            "[problem]\ng = \"u\"\n[run]\nxi_min = 3.0\nxi_max = 1.0\n",
        ),
        ("not_toml.toml", "this is not toml"),
    ];
    for (name, body) in cases {
        let path = tmp.path().join(name);
        fs::write(&path, body).unwrap();
        let o = run_into(&tmp.path().join("out"), &[path.to_str().unwrap()]);
        assert_eq!(
            code(&o),
            2,
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = run_into(&tmp.path().join("out"), &["no-such-problem"]);
    assert_eq!(code(&o), 2);
    let o = run_into(&tmp.path().join("out"), &["cubic", "--step", "-1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn orthogonality_error_is_explained() {
    let tmp = tempdir().unwrap();
    let path = tmp.path().join("e.toml");
    fs::write(
        &path,
        "[problem]\nk = 2\ng = \"4*pi^2*u\"\ne = [[2, 1.0]]\n",
    )
    .unwrap();
    let o = run_into(&tmp.path().join("out"), &[path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("orthogonal"));
}

#[test]
fn too_many_gaps_exit_3() {
    let tmp = tempdir().unwrap();
    let path = tmp.path().join("hard.toml");
    fs::write(
        &path,
        "[problem]\ncatalog = \"cubic\"\n[run]\nmax_iter = 1\nnewton_tol = 1e-14\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = run_into(&out, &[path.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    // Artifacts are still written for inspection.
    let csv = fs::read_to_string(out.join("curve.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|r| r.ends_with(",false")));
}

#[test]
fn directory_runs_in_parallel_and_isolated() {
    let tmp = tempdir().unwrap();
    let cfgs = tmp.path().join("cfgs");
    fs::create_dir(&cfgs).unwrap();
    for (i, g) in [
        "pi^2*u + sin(u)",
        "pi^2*u + arctan(u)",
        "4.934802200544679*u - u^3",
    ]
    .iter()
    .enumerate()
    {
        fs::write(
            cfgs.join(format!("p{i}.toml")),
            format!("[problem]\ng = \"{g}\"\n[run]\nxi_min = -1.0\nxi_max = 1.0\n"),
        )
        .unwrap();
    }
    fs::write(cfgs.join("broken.toml"), "[problem]\n").unwrap();
    fs::write(cfgs.join("ignored.txt"), "not a config").unwrap();
    let out = tmp.path().join("out");
    let o = run_into(&out, &[cfgs.to_str().unwrap(), "--jobs", "3"]);
    assert_eq!(code(&o), 2, "one broken config makes the batch fail");
    for i in 0..3 {
        assert!(out.join(format!("p{i}")).join("curve.csv").exists());
    }
    assert!(!out.join("broken").exists());
    assert!(!out.join("ignored").exists());

    let serial = tmp.path().join("serial");
    fs::remove_file(cfgs.join("broken.toml")).unwrap();
    let o = run_into(&serial, &[cfgs.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(code(&o), 0);
    for i in 0..3 {
        let name = format!("p{i}");
        assert_eq!(
            fs::read(out.join(&name).join("curve.csv")).unwrap(),
            fs::read(serial.join(&name).join("curve.csv")).unwrap()
        );
    }
}

#[test]
fn verify_linear_passes() {
    let o = hcurve(&["verify", "linear"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("STATUS\tSUITE\tCHECK\tDETAIL"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    for r in rows {
        let f: Vec<&str> = r.split('\t').collect();
        assert_eq!(f.len(), 4);
        assert_eq!(f[0], "PASS");
        assert_eq!(f[1], "linear");
    }
}

#[test]
fn verify_rejects_unknown_suite() {
    let o = hcurve(&["verify", "everything"]);
    assert_ne!(code(&o), 0);
}
