use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mobisim_core::analysis::{
    calibrate, find_events, sensitivity_with_step, sweep, CalibrationProblem, Direction,
    EventSpec, Metric, RowOutcome, SweepSpec, Variable, Which,
};
use mobisim_core::io::{
    atomic_write, content_hash, read_trajectory_file, trajectory_csv, trajectory_json, Format,
    RunManifest,
};
use mobisim_core::report::{overlay_plot, render_svg, trajectory_plot};
use mobisim_core::{
    equilibria, presets, rhs, simulate, Horizon, ModelParams, ParamKey, ScenarioSpec, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::{CliError, Command, DirectionArg, OutputFormat, ScenarioArgs, WhichArg};

pub(crate) fn execute(cmd: &Command) -> Result<String, CliError> {
    match cmd {
        Command::Scenarios { format } => cmd_scenarios(*format),
        Command::Simulate {
            scenario,
            out,
            plot,
        } => cmd_simulate(scenario, out, plot.as_deref()),
        Command::Figure { out } => cmd_figure(out).map(|s| s.text),
        Command::Equilibria { scenario, format } => cmd_equilibria(scenario, *format),
        Command::Threshold {
            scenario,
            variable,
            level,
            percent_of_amax,
            direction,
            which,
        } => cmd_threshold(scenario, variable, *level, *percent_of_amax, *direction, *which),
        Command::Sweep {
            scenario,
            param,
            from,
            to,
            steps,
            metric,
            out,
        } => cmd_sweep(scenario, param, *from, *to, *steps, metric, out.as_deref()),
        Command::Sensitivity {
            scenario,
            metric,
            params,
            relative_step,
            out,
        } => cmd_sensitivity(scenario, metric, params, *relative_step, out.as_deref()),
        Command::Calibrate {
            scenario,
            data,
            free,
            guess,
            out,
            format,
        } => cmd_calibrate(scenario, data, free, guess.as_deref(), out.as_deref(), *format),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    atomic_write(path, bytes)
        .map(|_| ())
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn cmd_scenarios(format: OutputFormat) -> Result<String, CliError> {
    let all = presets();
    Ok(match format {
        OutputFormat::Json => json(&all),
        OutputFormat::Text => {
            let mut out = String::new();
            for s in &all {
                let p = &s.params;
                let _ = writeln!(
                    out,
                    "{:<11} k1={} k2={} k3={} k4={} a_max={} C0={} A0={} t_end={}  {}",
                    s.name,
                    p.k1,
                    p.k2,
                    p.k3,
                    p.k4,
                    p.a_max,
                    s.initial.congestion,
                    s.initial.adoption,
                    s.horizon.t_end,
                    s.description
                );
            }
            out
        }
    })
}

fn diagnostics_note(tr: &Trajectory) -> String {
    let d = &tr.diagnostics;
    let mut notes = Vec::new();
    if d.congestion_went_negative {
        notes.push("congestion went negative");
    }
    if d.adoption_went_negative {
        notes.push("adoption went negative");
    }
    if notes.is_empty() {
        "no negative states".into()
    } else {
        notes.join(", ")
    }
}

fn summary_line(tr: &Trajectory) -> String {
    let f = tr.final_state();
    format!(
        "{}: C({})={} A({})={} steps={} rejected={} ({})",
        tr.scenario_name,
        tr.t_end(),
        f.congestion,
        tr.t_end(),
        f.adoption,
        tr.diagnostics.steps,
        tr.diagnostics.rejected_steps,
        diagnostics_note(tr)
    )
}

fn cmd_simulate(args: &ScenarioArgs, out: &Path, plot: Option<&Path>) -> Result<String, CliError> {
    let spec = args.resolve()?;
    let format = Format::from_path(out)?;
    if let Some(p) = plot {
        if p.extension().and_then(|e| e.to_str()) != Some("svg") {
            return Err(CliError::usage(format!("--plot {}: expected a .svg path", p.display())));
        }
    }
    let sol = simulate(&spec)?;
    let tr = &sol.trajectory;
    let manifest = RunManifest::new(&spec, tr);
    let body = match format {
        Format::Csv => trajectory_csv(tr),
        Format::Json => trajectory_json(tr, &manifest),
    };
    write_file(out, body.as_bytes())?;
    write_file(&sidecar(out), manifest.to_json().as_bytes())?;
    let mut text = summary_line(tr);
    text.push('\n');
    let _ = writeln!(text, "wrote {}", out.display());
    if let Some(p) = plot {
        let svg = render_svg(&trajectory_plot(tr))?;
        write_file(p, svg.as_bytes())?;
        let _ = writeln!(text, "wrote {}", p.display());
    }
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureRow {
    pub name: String,
    pub final_congestion: f64,
    pub final_adoption: f64,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSummary {
    pub rows: Vec<FigureRow>,
    pub files: Vec<PathBuf>,
    pub text: String,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    t_end: f64,
    scenarios: &'a [FigureRow],
    /// Scenario names by increasing final congestion.
    ordering: Vec<&'a str>,
}

/// Runs the four presets with their own settings and writes, into `dir`,
/// one CSV (plus manifest) and one chart per scenario, an overlay chart and
/// `summary.json`.
pub fn cmd_figure(dir: &Path) -> Result<FigureSummary, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
    let specs = presets();
    let runs: Vec<Result<Trajectory, CliError>> = specs
        .par_iter()
        .map(|s| {
            simulate(s)
                .map(|sol| sol.trajectory)
                .map_err(|e| CliError::numerical(format!("{}: {e}", s.name)))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (spec, tr) in specs.iter().zip(&runs) {
        let csv_path = dir.join(format!("{}.csv", spec.name));
        write_file(&csv_path, trajectory_csv(tr).as_bytes())?;
        let manifest_path = sidecar(&csv_path);
        write_file(&manifest_path, RunManifest::new(spec, tr).to_json().as_bytes())?;
        let svg_path = dir.join(format!("{}.svg", spec.name));
        write_file(&svg_path, render_svg(&trajectory_plot(tr))?.as_bytes())?;
        files.extend([csv_path, manifest_path, svg_path]);
        let f = tr.final_state();
        rows.push(FigureRow {
            name: spec.name.clone(),
            final_congestion: f.congestion,
            final_adoption: f.adoption,
            content_hash: content_hash(tr),
        });
    }
    let overlay = dir.join("overlay.svg");
    write_file(&overlay, render_svg(&overlay_plot(&runs))?.as_bytes())?;
    files.push(overlay);

    let mut order: Vec<&FigureRow> = rows.iter().collect();
    order.sort_by(|a, b| a.final_congestion.total_cmp(&b.final_congestion));
    let doc = SummaryDoc {
        t_end: runs[0].t_end(),
        scenarios: &rows,
        ordering: order.iter().map(|r| r.name.as_str()).collect(),
    };
    let summary = dir.join("summary.json");
    write_file(&summary, json(&doc).as_bytes())?;
    files.push(summary);

    let mut text = String::new();
    for tr in &runs {
        let _ = writeln!(text, "{}", summary_line(tr));
    }
    let _ = writeln!(
        text,
        "final congestion, lowest first: {}",
        doc.ordering.join(" < ")
    );
    let _ = writeln!(text, "wrote {} files to {}", files.len(), dir.display());
    Ok(FigureSummary { rows, files, text })
}

fn cmd_equilibria(args: &ScenarioArgs, format: OutputFormat) -> Result<String, CliError> {
    let spec = args.resolve()?;
    let fps = equilibria(&spec.params)?;
    if fps.is_empty() {
        return Err(CliError::no_result(format!(
            "{}: no real equilibria (k2·k4/(k1·k3) exceeds a_max²/4)",
            spec.name
        )));
    }
    Ok(match format {
        OutputFormat::Json => json(&fps),
        OutputFormat::Text => {
            let mut out = String::new();
            for fp in &fps {
                let [l1, l2] = fp.eigenvalues;
                let _ = writeln!(
                    out,
                    "C={} A={} {} eigenvalues=({}{:+}i, {}{:+}i) residual={:e}",
                    fp.state.congestion,
                    fp.state.adoption,
                    fp.classification,
                    l1.re,
                    l1.im,
                    l2.re,
                    l2.im,
                    fp.residual
                );
            }
            out
        }
    })
}

fn cmd_threshold(
    args: &ScenarioArgs,
    variable: &str,
    level: f64,
    percent: bool,
    direction: DirectionArg,
    which: WhichArg,
) -> Result<String, CliError> {
    let variable: Variable = variable.parse()?;
    let spec = args.resolve()?;
    let level = if percent {
        level / 100.0 * spec.params.a_max
    } else {
        level
    };
    let ev = EventSpec::new(
        variable,
        level,
        match direction {
            DirectionArg::Any => Direction::Any,
            DirectionArg::Upward => Direction::Upward,
            DirectionArg::Downward => Direction::Downward,
        },
        match which {
            WhichArg::First => Which::First,
            WhichArg::All => Which::All,
        },
    );
    let sol = simulate(&spec)?;
    let hits = find_events(&sol.trajectory, sol.dense.as_ref(), &ev)?;
    if hits.is_empty() {
        return Err(CliError::no_result(format!(
            "{}: no crossing of {variable} = {level}",
            spec.name
        )));
    }
    let mut out = String::new();
    for h in &hits {
        let d = rhs(h.state, &spec.params)?;
        let _ = writeln!(
            out,
            "t={} {variable}={} direction={} congestion={} dC/dt={}",
            h.t,
            variable.of(&h.state),
            match h.direction {
                mobisim_core::analysis::Crossing::Upward => "upward",
                mobisim_core::analysis::Crossing::Downward => "downward",
            },
            h.state.congestion,
            d.d_congestion
        );
    }
    Ok(out)
}

fn emit(table: String, out: Option<&Path>, note: String) -> Result<String, CliError> {
    match out {
        Some(p) => {
            write_file(p, table.as_bytes())?;
            Ok(format!("{note}wrote {}\n", p.display()))
        }
        None => Ok(table),
    }
}

fn cmd_sweep(
    args: &ScenarioArgs,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    metric: &str,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let key: ParamKey = param.parse()?;
    let metric: Metric = metric.parse()?;
    if steps == 0 {
        return Err(CliError::usage("--steps must be at least 1"));
    }
    let base = args.resolve()?;
    let rows = sweep(&base, &SweepSpec::linspace(key, from, to, steps, metric))?;
    let mut table = format!("{key},{metric},status\n");
    let (mut ok, mut failed) = (0, 0);
    for r in &rows {
        match &r.outcome {
            RowOutcome::Value(v) => {
                ok += 1;
                let _ = writeln!(table, "{},{v},ok", r.value);
            }
            RowOutcome::NoEvent => {
                let _ = writeln!(table, "{},,no-event", r.value);
            }
            RowOutcome::Failed(msg) => {
                failed += 1;
                log::warn!("{key}={}: {msg}", r.value);
                let _ = writeln!(table, "{},,failed", r.value);
            }
        }
    }
    if ok == 0 {
        if let Some(p) = out {
            write_file(p, table.as_bytes())?;
        }
        return Err(if failed > 0 {
            CliError::numerical(format!("every sweep row failed ({failed} failures)"))
        } else {
            CliError::no_result(format!("{metric} undefined for every sweep row"))
        });
    }
    emit(table, out, format!("{ok}/{} rows ok\n", rows.len()))
}

fn cmd_sensitivity(
    args: &ScenarioArgs,
    metric: &str,
    params: &str,
    relative_step: f64,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let metric: Metric = metric.parse()?;
    let keys = parse_keys(params)?;
    let base = args.resolve()?;
    let rows = sensitivity_with_step(&base, metric, &keys, relative_step)?;
    if rows.iter().all(|r| r.derivative.is_none()) {
        return Err(CliError::no_result(format!("{metric} is undefined near {}", base.name)));
    }
    let mut table = String::from("parameter,value,step,scheme,derivative\n");
    for r in &rows {
        let scheme = match r.scheme {
            mobisim_core::analysis::Scheme::Central => "central",
            mobisim_core::analysis::Scheme::Forward => "forward",
        };
        let d = r.derivative.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(table, "{},{},{},{scheme},{d}", r.parameter, r.value, r.step);
    }
    emit(table, out, String::new())
}

fn parse_keys(list: &str) -> Result<Vec<ParamKey>, CliError> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<ParamKey>().map_err(CliError::from))
        .collect()
}

fn cmd_calibrate(
    args: &ScenarioArgs,
    data: &Path,
    free: &str,
    guess: Option<&str>,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<String, CliError> {
    let free = parse_keys(free)?;
    let loaded = read_trajectory_file(data)
        .map_err(|e| CliError::usage(format!("{}: {e}", data.display())))?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", data.display());
    }
    let base = match args.base()? {
        Some(b) => Some(args.apply(b)?),
        None => {
            if !args.set.is_empty() {
                let mut b = ScenarioSpec::with_defaults("calibrated", 0.0, 0.0, 0.0, 0.0);
                for s in &args.set {
                    crate::apply_set(&mut b, s)?;
                }
                Some(b)
            } else {
                None
            }
        }
    };
    let mut start: ModelParams = base
        .as_ref()
        .map(|b| b.params)
        .unwrap_or_else(|| ModelParams::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN, 100.0));
    if let Some(g) = guess {
        let vals: Vec<f64> = g
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::usage(format!("--guess: `{s}` is not a number")))
            })
            .collect::<Result<_, _>>()?;
        if vals.len() != free.len() {
            return Err(CliError::usage(format!(
                "--guess has {} values for {} free constants",
                vals.len(),
                free.len()
            )));
        }
        for (k, v) in free.iter().zip(vals) {
            k.set_param(&mut start, v);
        }
    }
    for k in ParamKey::RATES {
        if k.param_value(&start).is_some_and(f64::is_nan) {
            return Err(CliError::usage(format!(
                "{k} has no value: pass --guess for free constants and --scenario, --config or \
                 --set for fixed ones"
            )));
        }
    }
    let integrator = base.as_ref().map(|b| b.integrator).unwrap_or_default();
    let problem = CalibrationProblem::from_samples(&loaded.samples, free.clone(), start, integrator)?;
    let result = calibrate(&problem)?;
    if !result.objective.is_finite() {
        return Err(CliError::numerical("calibration ended at a point where the model fails"));
    }

    let samples = &loaded.samples;
    let name = base
        .as_ref()
        .map(|b| format!("{}-fit", b.name))
        .unwrap_or_else(|| "calibrated".into());
    let fitted = ScenarioSpec {
        name,
        description: format!("fitted to {}", data.display()),
        params: result.params,
        initial: samples.states[0],
        horizon: Horizon::new(
            samples.times[0],
            *samples.times.last().expect("validated non-empty"),
            samples.times.len(),
        ),
        integrator,
    };
    let mut text = match format {
        OutputFormat::Json => json(&result),
        OutputFormat::Text => {
            let mut t = String::new();
            for k in &free {
                let _ = writeln!(t, "{k}={}", k.param_value(&result.params).unwrap());
            }
            let _ = writeln!(
                t,
                "objective={:e} iterations={} evaluations={} converged={}",
                result.objective, result.iterations, result.evaluations, result.converged
            );
            t
        }
    };
    if !result.converged {
        log::warn!("simplex did not converge within the iteration budget");
    }
    if let Some(p) = out {
        write_file(p, fitted.to_json().as_bytes())?;
        if format == OutputFormat::Text {
            let _ = writeln!(text, "wrote {}", p.display());
        }
    }
    Ok(text)
}
