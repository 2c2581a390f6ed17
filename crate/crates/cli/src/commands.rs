//! Batch subcommands: `run`, `sweep` and `render`.

use std::path::{Path, PathBuf};

use anyhow::Context;
use chainform_core::record::parse_trajectory;
use chainform_core::sweep::run_sweep;
use chainform_core::{
    load_scenario, render_svg, write_trajectory, Error, FrameRecord, Point2, RunOutcome, ScenarioFile, SvgStyle,
    SweepParam,
};

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;

/// A failure carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::NonConvergence { .. }) {
            EXIT_SOLVER
        } else {
            EXIT_INPUT
        };
        Self { code, error: e.into() }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub svg: bool,
    pub frames_every: Option<u64>,
}

fn create_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::input)
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::input)
}

fn style_for(scenario: &ScenarioFile) -> SvgStyle {
    SvgStyle {
        targets: scenario.outputs.targets.iter().map(|t| t.polyline.clone()).collect(),
        ..SvgStyle::default()
    }
}

/// Writes trajectory, metrics and optional SVG frames for a finished run.
pub fn write_outputs(outcome: &RunOutcome, out: &Path, svg: bool, frames_every: Option<u64>) -> CmdResult {
    create_dir(out)?;
    let file = &outcome.prepared.file;
    if file.outputs.csv {
        write_trajectory(&outcome.frames, &out.join("trajectory.csv"))?;
    }
    if file.outputs.metrics {
        let json = serde_json::to_string_pretty(&outcome.metrics).map_err(Failure::input)?;
        write_text(&out.join("metrics.json"), &(json + "\n"))?;
    }
    if svg || file.outputs.svg {
        let style = style_for(file);
        let frames_dir = out.join("frames");
        create_dir(&frames_dir)?;
        let every = frames_every.unwrap_or(1).max(1);
        let last = outcome.frames.last().map(|f| f.frame_index);
        for f in &outcome.frames {
            if f.frame_index % every == 0 || Some(f.frame_index) == last {
                write_text(
                    &frames_dir.join(format!("frame_{:06}.svg", f.frame_index)),
                    &render_svg(f, &style),
                )?;
            }
        }
        if let Some(f) = outcome.frames.last() {
            write_text(&out.join("final.svg"), &render_svg(f, &style))?;
        }
    }
    Ok(())
}

pub fn run(args: &RunArgs) -> CmdResult<RunOutcome> {
    let scenario = load_scenario(&args.scenario)?;
    tracing::info!(scenario = %scenario.name, "running");
    let outcome = chainform_core::run_scenario(&scenario)?;
    write_outputs(&outcome, &args.out, args.svg, args.frames_every)?;
    tracing::info!(frames = outcome.frames.len(), "done");
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub param: Option<SweepParam>,
    pub values: Option<Vec<f64>>,
}

/// Runs every sweep value and writes `sweep.json`, `sweep.txt` and one
/// run directory per value. Returns the printed table.
pub fn sweep(args: &SweepArgs) -> CmdResult<String> {
    let scenario = load_scenario(&args.scenario)?;
    let (param, values) = match (args.param, &args.values, &scenario.sweep) {
        (Some(p), Some(v), _) => (p, v.clone()),
        (Some(p), None, Some(s)) if s.param == p => (p, s.values.clone()),
        (None, values, Some(s)) => (s.param, values.clone().unwrap_or_else(|| s.values.clone())),
        _ => {
            return Err(Failure::input(anyhow::anyhow!(
                "no sweep parameter/values given and the scenario has no matching sweep section"
            )))
        }
    };
    if values.is_empty() {
        return Err(Failure::input(anyhow::anyhow!("--values must not be empty")));
    }
    for &v in &values {
        scenario
            .with_param(param, v)
            .and_then(|s| s.prepare().map(|_| ()))
            .map_err(|e| Failure::input(anyhow::anyhow!("{}={v}: {e}", param.as_str())))?;
    }
    let (report, outcomes) = run_sweep(&scenario, param, &values);
    create_dir(&args.out)?;
    for (value, outcome) in values.iter().zip(&outcomes) {
        if let Some(o) = outcome {
            write_outputs(o, &args.out.join(format!("{}={value}", param.as_str())), false, None)?;
        }
    }
    let json = serde_json::to_string_pretty(&report).map_err(Failure::input)?;
    write_text(&args.out.join("sweep.json"), &(json + "\n"))?;
    let table = report.table();
    write_text(&args.out.join("sweep.txt"), &table)?;
    if report.all_succeeded() {
        Ok(table)
    } else {
        Err(Failure {
            code: EXIT_SOLVER,
            error: anyhow::anyhow!("one or more sweep runs failed\n{table}"),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RenderArgs {
    pub trajectory: PathBuf,
    pub out: PathBuf,
    pub frame: Option<u64>,
}

/// Rebuilds a frame from a trajectory CSV and renders it.
pub fn render(args: &RenderArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.trajectory)
        .with_context(|| format!("reading {}", args.trajectory.display()))
        .map_err(Failure::input)?;
    let rows = parse_trajectory(&text)?;
    let wanted = match args.frame {
        Some(f) => f,
        None => rows
            .last()
            .map(|r| r.frame)
            .ok_or_else(|| Failure::input(anyhow::anyhow!("trajectory has no rows")))?,
    };
    let rows: Vec<_> = rows.into_iter().filter(|r| r.frame == wanted).collect();
    if rows.is_empty() {
        return Err(Failure::input(anyhow::anyhow!("frame {wanted} is not in the trajectory")));
    }
    let mut chain_lengths = Vec::new();
    let mut run = 0;
    let mut points: Vec<Point2> = Vec::with_capacity(rows.len());
    let mut elongations = Vec::new();
    let mut driven = None;
    for r in &rows {
        points.push(r.position);
        run += 1;
        match r.elongation_next {
            Some(e) => elongations.push(e),
            None => {
                chain_lengths.push(run);
                run = 0;
            }
        }
        if r.driven {
            driven = Some(r.point_id);
        }
    }
    let frame = FrameRecord {
        frame_index: wanted,
        points,
        chain_lengths,
        elongations,
        driven,
    };
    write_text(&args.out, &render_svg(&frame, &SvgStyle::default()))
}
