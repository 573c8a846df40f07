use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use toon25_core::animation::AnimationError;
use toon25_core::baselines::camera_position_spread;
use toon25_core::blend::{BlendError, BlendedFrame};
use toon25_core::document::{load_track, TrackLoadError};
use toon25_core::svg::{turntable_views, Axis, RenderError};
use toon25_core::{
    frame_to_json, load_model, quantize_view, render_frame, save_model, solve_with_diagnostics,
    weights_alternative, ArapCache, BlendParams, DegenerateConfiguration, EvalError,
    FrameEvaluator, Model25, ModelError, RenderOptions, ShapeOptions, ViewRotation, WeightMethod,
};

use crate::{AnimateArgs, AxisArg, CanvasArgs, EvalArgs, RenderArgs, TurntableArgs, ViewArgs, WeightsArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: ModelError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Weights(#[from] DegenerateConfiguration),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Params(#[from] BlendError),
    #[error("{}: {source}", path.display())]
    Track { path: PathBuf, source: TrackLoadError },
    #[error(transparent)]
    Animation(#[from] AnimationError),
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_owned(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Write {
        path: path.to_owned(),
        source,
    })
}

fn read_model(path: &Path) -> Result<Model25> {
    load_model(&read(path)?).map_err(|source| CliError::Model {
        path: path.to_owned(),
        source,
    })
}

fn solved(model: Model25, path: &Path) -> Result<Model25> {
    if model.is_solved() {
        return Ok(model);
    }
    eprintln!("note: {} is not solved; solving in memory", path.display());
    let (m, _) = solve_with_diagnostics(&model).map_err(|source| CliError::Model {
        path: path.to_owned(),
        source,
    })?;
    Ok(m)
}

fn params(quantize: f64) -> Result<BlendParams> {
    Ok(BlendParams::default().with_quantize_step(quantize)?)
}

fn options(canvas: &CanvasArgs) -> Result<RenderOptions> {
    let base = RenderOptions::centered(canvas.width, canvas.height, canvas.scale)?;
    let offset = base.to_canvas(toon25_core::Vec2::zero());
    Ok(RenderOptions::new(
        canvas.width,
        canvas.height,
        canvas.scale,
        offset,
        canvas.stroke_width,
        toon25_core::Rgba::new(1.0, 1.0, 1.0, 1.0),
    )?)
}

fn view(v: &ViewArgs) -> Result<ViewRotation> {
    if ![v.yaw, v.pitch, v.roll].iter().all(|a| a.is_finite()) {
        return Err(CliError::Invalid("view angles must be finite".into()));
    }
    Ok(ViewRotation::from_euler(v.yaw, v.pitch, v.roll))
}

fn shape_options(eval: &EvalArgs) -> ShapeOptions {
    ShapeOptions {
        unweighted_assembly: eval.unweighted_assembly,
    }
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Notes on roll-blind weighting and on the kNN stand-in.
fn method_warnings(method: WeightMethod, keys: &[ViewRotation]) {
    if method == WeightMethod::YawPitchKnn {
        eprintln!(
            "note: yaw-pitch-knn is a k-nearest-neighbour stand-in for Delaunay interpolation of the yaw/pitch plane"
        );
    }
    if method.is_roll_blind() && keys.len() >= 2 {
        let mut shared = 0;
        for (i, a) in keys.iter().enumerate() {
            if keys[..i]
                .iter()
                .any(|b| (a.camera_position() - b.camera_position()).norm() < 1e-9)
            {
                shared += 1;
            }
        }
        if camera_position_spread(keys) < 1e-9 {
            eprintln!(
                "warning: {method} ignores roll and all key views differ only by roll; it cannot tell them apart"
            );
        } else if shared > 0 {
            eprintln!("warning: {method} ignores roll; some key views differ only by roll");
        }
    }
}

pub fn solve(model_in: &Path, model_out: &Path, unweighted_assembly: bool) -> Result<()> {
    let model = read_model(model_in)?;
    let (solved, report) = solve_with_diagnostics(&model).map_err(|source| CliError::Model {
        path: model_in.to_owned(),
        source,
    })?;
    ArapCache::build(&solved, ShapeOptions { unweighted_assembly }).map_err(EvalError::from)?;
    write(model_out, &save_model(&solved))?;

    let views = solved.key_views().len();
    let mut header = format!(
        "{:<16} {:>12} {:>12} {:>12} {:>12}",
        "part", "anchor_x", "anchor_y", "anchor_z", "residual"
    );
    for j in 0..views {
        header.push_str(&format!(" {:>12}", format!("|d_{j}|")));
    }
    println!("{header}");
    for d in &report {
        let mut line = format!(
            "{:<16} {:>12} {:>12} {:>12} {:>12.3e}",
            d.part_id,
            fmt_num(d.anchor3d[0]),
            fmt_num(d.anchor3d[1]),
            fmt_num(d.anchor3d[2]),
            d.residual
        );
        for n in &d.distortion_norms {
            line.push_str(&format!(" {n:>12.3e}"));
        }
        println!("{line}");
    }
    Ok(())
}

fn evaluate(ev: &FrameEvaluator, cur: &ViewRotation, eval: &EvalArgs) -> Result<BlendedFrame> {
    Ok(ev.evaluate_with(
        cur,
        &params(eval.quantize)?,
        eval.anchor_method.into(),
        eval.weight_method.into(),
    )?)
}

pub fn render(a: &RenderArgs) -> Result<()> {
    let cur = view(&a.view)?;
    let opts = options(&a.canvas)?;
    let model = solved(read_model(&a.model_in)?, &a.model_in)?;
    let ev = FrameEvaluator::new(model, shape_options(&a.eval))?;
    method_warnings(a.eval.weight_method.into(), ev.key_rotations());
    let frame = evaluate(&ev, &cur, &a.eval)?;
    write(&a.out, &render_frame(&frame, &opts))?;
    if let Some(path) = &a.dump_frame {
        write(path, &frame_to_json(&frame))?;
    }
    Ok(())
}

pub fn turntable(a: &TurntableArgs) -> Result<()> {
    let opts = options(&a.canvas)?;
    let axis = match a.axis {
        AxisArg::X => Axis::X,
        AxisArg::Y => Axis::Y,
        AxisArg::Z => Axis::Z,
    };
    let views = turntable_views(axis, a.degrees_per_frame)?;
    let model = solved(read_model(&a.model_in)?, &a.model_in)?;
    let ev = FrameEvaluator::new(model, shape_options(&a.eval))?;
    method_warnings(a.eval.weight_method.into(), ev.key_rotations());
    create_dir(&a.out_dir)?;
    let mut entries = Vec::with_capacity(views.len());
    for (k, v) in views.iter().enumerate() {
        let frame = evaluate(&ev, v, &a.eval)?;
        let file = format!("frame_{k:04}.svg");
        write(&a.out_dir.join(&file), &render_frame(&frame, &opts))?;
        entries.push(json!({"file": file, "angle": k as f64 * a.degrees_per_frame}));
    }
    let manifest = json!({
        "axis": format!("{:?}", a.axis).to_lowercase(),
        "degrees_per_frame": a.degrees_per_frame,
        "quantize": a.eval.quantize,
        "frames": entries,
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write(&a.out_dir.join("manifest.json"), &bytes)?;
    println!("wrote {} frames to {}", views.len(), a.out_dir.display());
    Ok(())
}

pub fn animate(a: &AnimateArgs) -> Result<()> {
    if !(a.fps > 0.0) || !a.fps.is_finite() {
        return Err(CliError::Invalid(format!("fps must be positive, got {}", a.fps)));
    }
    let cur = view(&a.view)?;
    let opts = options(&a.canvas)?;
    let base = a.track.parent().unwrap_or(Path::new("."));
    let track = load_track(&read(&a.track)?, base).map_err(|source| CliError::Track {
        path: a.track.clone(),
        source,
    })?;
    let t0 = a.t0.unwrap_or(track.start());
    let t1 = a.t1.unwrap_or(track.end());
    if !(t1 >= t0) {
        return Err(CliError::Invalid(format!("empty time range [{t0}, {t1}]")));
    }
    let count = ((t1 - t0) * a.fps + 1e-9).floor() as usize + 1;
    create_dir(&a.out_dir)?;
    let mut entries = Vec::with_capacity(count);
    for k in 0..count {
        let t = (t0 + k as f64 / a.fps).min(t1);
        let model = track.sample(t)?;
        let ev = FrameEvaluator::new(model, shape_options(&a.eval))?;
        if k == 0 {
            method_warnings(a.eval.weight_method.into(), ev.key_rotations());
        }
        let frame = evaluate(&ev, &cur, &a.eval)?;
        let file = format!("frame_{k:04}.svg");
        write(&a.out_dir.join(&file), &render_frame(&frame, &opts))?;
        entries.push(json!({"file": file, "time": t}));
    }
    let manifest = json!({"fps": a.fps, "t0": t0, "t1": t1, "frames": entries});
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write(&a.out_dir.join("manifest.json"), &bytes)?;
    println!("wrote {count} frames to {}", a.out_dir.display());
    Ok(())
}

pub fn weights(a: &WeightsArgs) -> Result<()> {
    let model = read_model(&a.model_in)?;
    if model.key_views().is_empty() {
        return Err(CliError::Model {
            path: a.model_in.clone(),
            source: ModelError::EmptyModel,
        });
    }
    let p = params(a.quantize)?;
    let cur = quantize_view(&view(&a.view)?, p.quantize_step());
    let keys: Vec<ViewRotation> = model.key_views().iter().map(|kv| kv.rotation).collect();
    let results: Vec<(WeightMethod, std::result::Result<Vec<f64>, DegenerateConfiguration>)> =
        WeightMethod::ALL
            .iter()
            .map(|&m| (m, weights_alternative(m, &cur, &keys, &p).map(|w| w.into_vec())))
            .collect();
    for &m in &WeightMethod::ALL[1..] {
        method_warnings(m, &keys);
    }

    if a.json {
        let methods: serde_json::Map<String, serde_json::Value> = results
            .iter()
            .map(|(m, r)| {
                let mut entry = match r {
                    Ok(w) => json!({"weights": w}),
                    Err(e) => json!({"error": "degenerate", "detail": e.to_string()}),
                };
                entry["roll_blind"] = json!(m.is_roll_blind());
                if *m == WeightMethod::YawPitchKnn {
                    entry["stand_in"] = json!(true);
                }
                (m.as_str().to_string(), entry)
            })
            .collect();
        let e = cur.to_euler();
        let out = json!({
            "view": {"yaw": e.yaw, "pitch": e.pitch, "roll": e.roll},
            "methods": methods,
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
        return Ok(());
    }

    let e = cur.to_euler();
    println!(
        "view: yaw {} pitch {} roll {}",
        fmt_num(e.yaw),
        fmt_num(e.pitch),
        fmt_num(e.roll)
    );
    let mut header = format!("{:>4} {:>10} {:>10} {:>10}", "key", "yaw", "pitch", "roll");
    for (m, _) in &results {
        let label = if *m == WeightMethod::YawPitchKnn {
            format!("{m}*")
        } else {
            m.to_string()
        };
        header.push_str(&format!(" {label:>18}"));
    }
    println!("{header}");
    for (j, kv) in model.key_views().iter().enumerate() {
        let mut line = format!(
            "{j:>4} {:>10} {:>10} {:>10}",
            fmt_num(kv.euler.yaw),
            fmt_num(kv.euler.pitch),
            fmt_num(kv.euler.roll)
        );
        for (_, r) in &results {
            let cell = match r {
                Ok(w) => format!("{:.12}", w[j]),
                Err(_) => "degenerate".to_string(),
            };
            line.push_str(&format!(" {cell:>18}"));
        }
        println!("{line}");
    }
    println!("* yaw-pitch-knn is a k-nearest-neighbour stand-in, not a Delaunay interpolation");
    Ok(())
}
