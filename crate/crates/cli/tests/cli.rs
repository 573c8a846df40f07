mod common;

use common::*;
use serde_json::{json, Value};

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of the solve table: (part, anchor xyz, residual).
fn solve_rows(out: &str) -> Vec<(String, [f64; 3], f64)> {
    out.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let n = |i: usize| f[i].parse::<f64>().unwrap();
            (f[0].to_string(), [n(1), n(2), n(3)], n(4))
        })
        .collect()
}

#[test]
fn solve_consistent_model_has_tiny_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("m.json"), dir.path().join("s.json"));
    write_json(&input, &model_json(&ANCHORS, &VIEWS, |_, _| [0.0, 0.0]));
    let o = toon25(&["solve", p(&input), p(&output)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = solve_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    for ((name, xyz, residual), (id, a)) in rows.iter().zip(ANCHORS) {
        assert_eq!(name, id);
        assert!(*residual < 1e-9);
        for k in 0..3 {
            assert!((xyz[k] - a[k]).abs() < 1e-6);
        }
    }
    let saved: Value = serde_json::from_slice(&std::fs::read(&output).unwrap()).unwrap();
    assert!(saved["solved"].is_object());
}

#[test]
fn single_view_model_reports_zero_depth() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("m.json"), dir.path().join("s.json"));
    write_json(&input, &model_json(&ANCHORS, &VIEWS[..1], |_, _| [0.0, 0.0]));
    let o = toon25(&["solve", p(&input), p(&output)]);
    assert!(o.status.success());
    for (_, xyz, _) in solve_rows(&stdout(&o)) {
        assert_eq!(xyz[2], 0.0);
    }
}

#[test]
fn malformed_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.json");
    let mut doc = model_json(&ANCHORS, &VIEWS, |_, _| [0.0, 0.0]);
    doc["key_views"][1]["parts"]["ear"]["vertices"][2] = json!("oops");
    write_json(&input, &doc);
    let o = toon25(&["solve", p(&input), p(&dir.path().join("s.json"))]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("key_views[1].parts.ear.vertices[2]"), "{err}");

    let missing = toon25(&["solve", p(&dir.path().join("none.json")), p(&dir.path().join("s.json"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.json");
    write_json(&input, &model_json(&ANCHORS, &VIEWS, |_, _| [0.0, 0.0]));
    let o = toon25(&["render", p(&input), "--weight-method", "delaunay", "--out", p(&dir.path().join("a.svg"))]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(toon25(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(toon25(&["render", p(&input)]).status.code(), Some(2));
}

fn render_frame(dir: &std::path::Path, model: &Value, extra: &[&str]) -> (Value, std::process::Output) {
    let input = dir.join("in.json");
    write_json(&input, model);
    let (svg, frame) = (dir.join("out.svg"), dir.join("frame.json"));
    let mut args = vec!["render", p(&input), "--out", p(&svg), "--dump-frame", p(&frame)];
    args.extend_from_slice(extra);
    let o = toon25(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
    (serde_json::from_slice(&std::fs::read(&frame).unwrap()).unwrap(), o)
}

fn assert_close(a: &Value, b: &Value, tol: f64) {
    let a = a.as_array().unwrap();
    let b = b.as_array().unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        if x.is_array() {
            assert_close(x, y, tol);
        } else {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }
}

#[test]
fn render_at_key_view_reproduces_authored_data() {
    let dir = tempfile::tempdir().unwrap();
    let distort = |j: usize, i: usize| if j == 1 && i == 1 { [0.07, -0.03] } else { [0.0, 0.0] };
    let doc = model_json(&ANCHORS, &VIEWS, distort);
    let (frame, _) = render_frame(dir.path(), &doc, &["--yaw", "90"]);
    let authored = &doc["key_views"][1]["parts"];
    for part in frame["parts"].as_array().unwrap() {
        let want = &authored[part["part_id"].as_str().unwrap()];
        assert_close(&part["position"], &want["anchor"], 1e-12);
        assert_close(&part["vertices"], &want["vertices"], 1e-9);
        assert_eq!(part["color"], want["color"]);
    }
    assert_eq!(frame["draw_order"].as_array().unwrap().len(), 3);
}

#[test]
fn no_vdd_is_off_by_the_stored_distortion() {
    let dir = tempfile::tempdir().unwrap();
    let doc = model_json(&ANCHORS, &VIEWS, |j, i| if j == 1 && i == 1 { [0.07, -0.03] } else { [0.0, 0.0] });
    let (vdd, _) = render_frame(dir.path(), &doc, &["--yaw", "90"]);
    let (plain, _) = render_frame(dir.path(), &doc, &["--yaw", "90", "--anchor-method", "no-vdd"]);

    let solved_path = dir.path().join("solved.json");
    let input = dir.path().join("in.json");
    assert!(toon25(&["solve", p(&input), p(&solved_path)]).status.success());
    let solved: Value = serde_json::from_slice(&std::fs::read(&solved_path).unwrap()).unwrap();
    for (k, part) in vdd["parts"].as_array().unwrap().iter().enumerate() {
        let id = part["part_id"].as_str().unwrap();
        let d = &solved["solved"]["parts"][id]["distortions"][1];
        for c in 0..2 {
            let diff = part["position"][c].as_f64().unwrap() - plain["parts"][k]["position"][c].as_f64().unwrap();
            assert!((diff - d[c].as_f64().unwrap()).abs() < 1e-12);
        }
    }
    let ear = &solved["solved"]["parts"]["ear"]["distortions"][1];
    assert!(ear[0].as_f64().unwrap().abs() > 0.01);
}

const ROLLS: [(f64, f64, f64); 3] = [(0.0, 0.0, 0.0), (0.0, 0.0, 90.0), (0.0, 0.0, 180.0)];

#[test]
fn ray_angle_on_roll_only_model_blends_equally_and_warns() {
    let dir = tempfile::tempdir().unwrap();
    let doc = model_json(&ANCHORS[..1], &ROLLS, |_, _| [0.0, 0.0]);
    let (frame, o) = render_frame(dir.path(), &doc, &["--roll", "135", "--weight-method", "ray-angle"]);
    assert!(stderr(&o).contains("warning: ray-angle ignores roll"), "{}", stderr(&o));
    let views = doc["key_views"].as_array().unwrap();
    let colors: Vec<f64> = views.iter().map(|v| v["parts"]["head"]["color"][0].as_f64().unwrap()).collect();
    let mean = colors.iter().sum::<f64>() / 3.0;
    let got = frame["parts"][0]["color"][0].as_f64().unwrap();
    assert!((got - mean).abs() < 1e-12);
}

#[test]
fn weights_at_roll_135() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.json");
    write_json(&input, &model_json(&ANCHORS[..1], &ROLLS, |_, _| [0.0, 0.0]));
    let o = toon25(&["weights", p(&input), "--roll", "135", "--json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let m = &v["methods"];
    let w: Vec<f64> = m["frobenius"]["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((w[1] - w[2]).abs() < 1e-12);
    assert!(w[1] > w[0]);
    // d(0°) = 2√2 sin(67.5°), d(90°) = d(180°) = 2√2 sin(22.5°)
    let s = |deg: f64| (deg.to_radians() / 2.0).sin().powi(-4);
    let w0 = s(135.0) / (s(135.0) + 2.0 * s(45.0));
    assert!((w[0] - w0).abs() < 1e-9);
    assert_eq!(m["yaw-pitch-knn"]["error"], "degenerate");
    assert_eq!(m["position-distance"]["error"], "degenerate");
    for x in m["ray-angle"]["weights"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    let table = toon25(&["weights", p(&input), "--roll", "135"]);
    let text = stdout(&table);
    assert!(text.contains("degenerate"));
    assert!(text.contains("0.333333333333"));
}

#[test]
fn animate_start_matches_first_keyframe_render() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    write_json(&a, &model_json(&ANCHORS, &VIEWS, |_, _| [0.0, 0.0]));
    write_json(&b, &model_json(&ANCHORS, &VIEWS, |j, _| [0.05 * j as f64, 0.0]));
    let track = dir.path().join("track.json");
    write_json(&track, &json!([{"time": 0.0, "model": "a.json"}, {"time": 1.0, "model": "b.json"}]));
    let out = dir.path().join("anim");
    let o = toon25(&["animate", p(&track), "--fps", "4", "--yaw", "20", "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["frames"].as_array().unwrap().len(), 5);

    let direct = dir.path().join("direct.svg");
    assert!(toon25(&["render", p(&a), "--yaw", "20", "--out", p(&direct)]).status.success());
    assert_eq!(std::fs::read(out.join("frame_0000.svg")).unwrap(), std::fs::read(direct).unwrap());
}

#[test]
fn turntable_writes_36_frames() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.json");
    write_json(&input, &model_json(&ANCHORS, &VIEWS, |_, _| [0.0, 0.0]));
    let out = dir.path().join("tt");
    let o = toon25(&["turntable", p(&input), "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let frames = manifest["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 36);
    for f in frames {
        assert!(out.join(f["file"].as_str().unwrap()).is_file());
    }
}
