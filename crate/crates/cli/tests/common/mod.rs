#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

pub type M3 = [[f64; 3]; 3];

fn mul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// `Rz(roll) · Rx(pitch) · Ry(yaw)`, angles in degrees.
pub fn rot(yaw: f64, pitch: f64, roll: f64) -> M3 {
    let (sy, cy) = yaw.to_radians().sin_cos();
    let (sp, cp) = pitch.to_radians().sin_cos();
    let (sr, cr) = roll.to_radians().sin_cos();
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
    let rz = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
    mul(&rz, &mul(&rx, &ry))
}

pub fn image(r: &M3, p: [f64; 3]) -> [f64; 2] {
    let row = |i: usize| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2];
    [row(0), row(1)]
}

pub fn frobenius(a: &M3, b: &M3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (a[i][j] - b[i][j]).powi(2);
        }
    }
    s.sqrt()
}

/// A model of square parts placed at the images of 3D anchors, with
/// `distort(view, part)` added to the authored 2D anchor of each part.
pub fn model_json(
    anchors: &[(&str, [f64; 3])],
    views: &[(f64, f64, f64)],
    distort: impl Fn(usize, usize) -> [f64; 2],
) -> Value {
    let parts: Vec<Value> = anchors
        .iter()
        .map(|(id, _)| json!({"part_id": id, "vertex_count": 4, "triangles": [[0, 1, 2], [0, 2, 3]]}))
        .collect();
    let key_views: Vec<Value> = views
        .iter()
        .enumerate()
        .map(|(j, &(y, p, r))| {
            let rm = rot(y, p, r);
            let mut pv = serde_json::Map::new();
            for (i, (id, a)) in anchors.iter().enumerate() {
                let c = image(&rm, *a);
                let d = distort(j, i);
                let c = [c[0] + d[0], c[1] + d[1]];
                let s = 0.1 + 0.02 * i as f64;
                pv.insert(
                    id.to_string(),
                    json!({
                        "anchor": c,
                        "vertices": [[c[0] - s, c[1] - s], [c[0] + s, c[1] - s], [c[0] + s, c[1] + s], [c[0] - s, c[1] + s]],
                        "color": [0.1 * (j % 10) as f64, 0.5, 0.2 + 0.1 * (i % 5) as f64, 1.0],
                    }),
                );
            }
            json!({"euler": {"yaw": y, "pitch": p, "roll": r}, "parts": pv})
        })
        .collect();
    json!({"format_version": 1, "parts": parts, "key_views": key_views})
}

pub const ANCHORS: [(&str, [f64; 3]); 3] = [
    ("head", [0.0, 0.8, 0.1]),
    ("ear", [0.45, 1.1, -0.2]),
    ("tail", [-0.3, -0.2, -0.7]),
];

pub const VIEWS: [(f64, f64, f64); 3] = [(0.0, 0.0, 0.0), (90.0, 0.0, 0.0), (0.0, 60.0, 0.0)];

pub fn write_json(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_vec_pretty(v).unwrap()).unwrap();
}

pub fn toon25(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toon25"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
