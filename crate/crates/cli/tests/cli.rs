use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn modelspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modelspace"))
        .args(args)
        .env_remove("MODELSPACE_GRID")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn distance_on_the_sphere() {
    let o = modelspace(&["distance", "--space", "Ell2", "--x", "[1,0,0]", "--y", "[0,1,0]"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    let d: f64 = lines.next().unwrap().parse().unwrap();
    assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!(out.starts_with("1.5707963"));
    assert_eq!(lines.next(), Some("elliptic"));
}

#[test]
fn distance_json() {
    let o = modelspace(&["distance", "--space", "Hyp2", "--x", "[0,0,1]", "--y", "[0.5,0,1]", "--emit", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["distance"].as_f64().unwrap() - 0.5f64.atanh()).abs() < 1e-12);
    assert_eq!(v["line"], "hyperbolic");
}

#[test]
fn point_outside_the_space_is_a_validation_error() {
    let o = modelspace(&["distance", "--space", "Hyp2", "--x", "[0,0,1]", "--y", "[2,0,1]"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_line_reports_absolute_points() {
    let o = modelspace(&["classify-line", "--space", "Hyp2", "--x", "[0,0,1]", "--y", "[0.5,0,1]"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("hyperbolic\n"));
    assert_eq!(out.matches("absolute point").count(), 2);
}

#[test]
fn dual_of_ball_of_radius_two() {
    let o = modelspace(&[
        "dualize",
        "--flavor",
        "euclidean",
        "--body",
        data("ball_r2.json").to_str().unwrap(),
        "--grid",
        "16",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("support constant 0.5\n"));
    let o = modelspace(&[
        "dualize",
        "--flavor",
        "euclidean",
        "--body",
        data("ball_r2.json").to_str().unwrap(),
        "--grid",
        "8",
        "--emit",
        "csv",
    ]);
    let out = stdout(&o);
    let mut rows = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(rows.headers().unwrap().iter().next_back(), Some("support"));
    for r in rows.records() {
        let r = r.unwrap();
        let h: f64 = r[r.len() - 1].parse().unwrap();
        assert!((h - 0.5).abs() < 1e-12);
    }
}

#[test]
fn dual_of_hyperboloid() {
    let o = modelspace(&[
        "dualize",
        "--flavor",
        "minkowski",
        "--body",
        data("hyperboloid_r2.json").to_str().unwrap(),
        "--grid",
        "12",
        "--emit",
        "csv",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    // H_{1/2}, sampled on unit future directions u: h(u) = -1/2
    for r in csv::Reader::from_reader(out.as_bytes()).records() {
        let r = r.unwrap();
        let (x, y, t, h): (f64, f64, f64, f64) =
            (r[1].parse().unwrap(), r[2].parse().unwrap(), r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!((x * x + y * y - t * t + 1.0).abs() < 1e-12);
        assert!((h + 0.5).abs() < 1e-12);
    }
    let wrong =
        modelspace(&["dualize", "--flavor", "euclidean", "--body", data("hyperboloid_r2.json").to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let o = modelspace(&["dualize", "--flavor", "euclidean", "--body", data("malformed.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 4 column 3"), "{err}");
}

#[test]
fn unknown_tags_are_rejected() {
    let o = modelspace(&["dualize", "--flavor", "euclidean", "--body", data("unknown_tag.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("unknown variant `torus`"));
}

#[test]
fn transition_of_a_given_path() {
    let o = modelspace(&[
        "transition",
        "--space",
        "AdS3",
        "--path",
        data("ads_path.json").to_str().unwrap(),
        "--tol",
        "1e-6",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("target group: Isom(Min)"));
}

#[test]
fn tolerance_breach_exits_three_with_worst_offender() {
    let o = modelspace(&[
        "check-surface",
        "--space",
        "Hyp3",
        "--patch",
        data("hyp_sphere.json").to_str().unwrap(),
        "--grid",
        "9",
        "--tol",
        "1e-12",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("worst offender: node ("), "{err}");
}

#[test]
fn check_surface_csv_columns() {
    let o = modelspace(&[
        "check-surface",
        "--space",
        "Hyp3",
        "--patch",
        data("hyp_sphere.json").to_str().unwrap(),
        "--grid",
        "9",
        "--emit",
        "csv",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut rows = csv::Reader::from_reader(out.as_bytes());
    let head: Vec<String> = rows.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&head[..11], ["u", "v", "E", "F", "G", "B11", "B12", "B21", "B22", "K_I", "det_B"]);
    let want = 0.7f64.tanh().recip();
    let recs: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(recs.len(), 81);
    for r in &recs {
        let b11: f64 = r[5].parse().unwrap();
        assert!((b11 - want).abs() < 1e-12);
    }
}

#[test]
fn surface_text_report() {
    let o = modelspace(&[
        "check-surface",
        "--space",
        "Hyp3",
        "--patch",
        data("hyp_sphere.json").to_str().unwrap(),
        "--grid",
        "17",
    ]);
    let out = stdout(&o);
    for key in ["K_I", "det B", "gauss residual", "codazzi residual"] {
        assert!(out.contains(key), "{key}");
    }
    let dual = modelspace(&[
        "dual-surface",
        "--space",
        "Hyp3",
        "--patch",
        data("hyp_sphere.json").to_str().unwrap(),
        "--grid",
        "17",
    ]);
    assert!(stdout(&dual).starts_with("space dS"));
}

#[test]
fn surface_transition_matches_co_space_data() {
    let o = modelspace(&[
        "transition-surface",
        "--space",
        "Ell3",
        "--patch",
        data("sphere_graph.json").to_str().unwrap(),
        "--grid",
        "17",
        "--tol",
        "1e-5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("limit in coEuc"));
}

#[test]
fn environment_grid_is_the_default() {
    let run = |grid: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_modelspace"));
        c.args(["check-surface", "--space", "Hyp3", "--patch", data("hyp_sphere.json").to_str().unwrap()]);
        match grid {
            Some(g) => c.env("MODELSPACE_GRID", g),
            None => c.env_remove("MODELSPACE_GRID"),
        };
        String::from_utf8(c.output().unwrap().stdout).unwrap()
    };
    assert!(run(Some("11")).contains("nodes 121"));
    assert!(run(None).contains("nodes 4096"));
}

#[test]
fn same_seed_same_bytes() {
    let args = ["check-connection", "--space", "coMin3", "--seed", "7", "--emit", "json"];
    let a = modelspace(&args);
    let b = modelspace(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = modelspace(&["check-connection", "--space", "coMin3", "--seed", "8", "--emit", "json"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn pogorelov_report() {
    let o = modelspace(&["pogorelov", "--space", "Hyp3", "--samples", "2", "--emit", "csv", "--tol", "1e-6"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("index,source_residual,image_residual\n"));
    assert_eq!(modelspace(&["pogorelov", "--space", "Ell3"]).status.code(), Some(2));
}

#[test]
fn acceptance_single_criterion() {
    let o = modelspace(&["acceptance", "--only", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("PASS 3 "));
}
