//! `toon25`: solve, render and inspect 2.5D cartoon models from the command
//! line.
//!
//! Exit codes: 0 success, 1 invalid input or failed evaluation, 2 usage.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use toon25_core::{AnchorMethod, WeightMethod};

#[derive(Debug, Parser)]
#[command(name = "toon25", version, about = "2.5D cartoon model engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Triangulate anchors and distortions, write the solved model.
    Solve {
        model_in: PathBuf,
        model_out: PathBuf,
        #[arg(long)]
        unweighted_assembly: bool,
    },
    /// Evaluate one view and write it as SVG.
    Render(RenderArgs),
    /// Render a full turn about one axis plus a manifest.
    Turntable(TurntableArgs),
    /// Sample an animation track over time and render each frame.
    Animate(AnimateArgs),
    /// Print the key-view weights of every weighting method at one view.
    Weights(WeightsArgs),
}

#[derive(Debug, Clone, Copy, Args)]
struct ViewArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    yaw: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pitch: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    roll: f64,
}

#[derive(Debug, Clone, Copy, Args)]
struct CanvasArgs {
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    /// Pixels per model unit.
    #[arg(long, default_value_t = 100.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.0)]
    stroke_width: f64,
}

#[derive(Debug, Clone, Copy, Args)]
struct EvalArgs {
    /// Camera quantization step in degrees; 0 disables it.
    #[arg(long, default_value_t = 0.0)]
    quantize: f64,
    #[arg(long, value_enum, default_value_t = AnchorArg::Vdd)]
    anchor_method: AnchorArg,
    #[arg(long, value_enum, default_value_t = WeightArg::Frobenius)]
    weight_method: WeightArg,
    /// Unweighted triangle terms in the shape assembly.
    #[arg(long)]
    unweighted_assembly: bool,
}

#[derive(Debug, Args)]
struct RenderArgs {
    model_in: PathBuf,
    #[command(flatten)]
    view: ViewArgs,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    canvas: CanvasArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the evaluated frame as JSON.
    #[arg(long)]
    dump_frame: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TurntableArgs {
    model_in: PathBuf,
    #[arg(long, value_enum, default_value_t = AxisArg::Y)]
    axis: AxisArg,
    #[arg(long, default_value_t = 10.0)]
    degrees_per_frame: f64,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    canvas: CanvasArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct AnimateArgs {
    track: PathBuf,
    #[arg(long, default_value_t = 24.0)]
    fps: f64,
    /// Defaults to the first keyframe time.
    #[arg(long, allow_negative_numbers = true)]
    t0: Option<f64>,
    /// Defaults to the last keyframe time.
    #[arg(long, allow_negative_numbers = true)]
    t1: Option<f64>,
    #[command(flatten)]
    view: ViewArgs,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    canvas: CanvasArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    model_in: PathBuf,
    #[command(flatten)]
    view: ViewArgs,
    #[arg(long, default_value_t = 0.0)]
    quantize: f64,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnchorArg {
    Vdd,
    NoVdd,
    #[value(name = "pure-2d")]
    Pure2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightArg {
    Frobenius,
    YawPitchKnn,
    PositionDistance,
    RayAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

impl From<AnchorArg> for AnchorMethod {
    fn from(a: AnchorArg) -> Self {
        match a {
            AnchorArg::Vdd => AnchorMethod::Vdd,
            AnchorArg::NoVdd => AnchorMethod::NoVdd,
            AnchorArg::Pure2d => AnchorMethod::Pure2D,
        }
    }
}

impl From<WeightArg> for WeightMethod {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Frobenius => WeightMethod::FrobeniusVdd,
            WeightArg::YawPitchKnn => WeightMethod::YawPitchKnn,
            WeightArg::PositionDistance => WeightMethod::PositionDistance,
            WeightArg::RayAngle => WeightMethod::RayAngle,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            model_in,
            model_out,
            unweighted_assembly,
        } => commands::solve(&model_in, &model_out, unweighted_assembly),
        Command::Render(a) => commands::render(&a),
        Command::Turntable(a) => commands::turntable(&a),
        Command::Animate(a) => commands::animate(&a),
        Command::Weights(a) => commands::weights(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
