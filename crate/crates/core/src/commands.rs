//! Subcommand bodies. Each returns an [`Outcome`] whose failure list decides
//! the exit status; hard errors (bad config, I/O) are returned as `Err`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::certify::{verify_symbols, Check};
use crate::config::{parse_config, FamilyKind, GridSection, RunConfig};
use crate::convergence::{
    order_parameter_gap_sweep, remainder_study, run_alpha_sweep, run_epsilon_sweep,
    ConvergenceReport, GapReport, RemainderReport, Verdict,
};
use crate::error::{Error, Result};
use crate::grid::make_grid;
use crate::io::{
    atomic_write, create_dir, history_csv, output_dir, read_snapshot, state_csv_1d,
    write_snapshot, Manifest,
};
use crate::lp::DyadicPartition;
use crate::plots::{emit_plot, RatePlot};
use crate::solver::{energy_diagnostics, simulate, EnergyDiagnostics, ModelConfig, State};

#[derive(Clone, Debug, Default, Serialize)]
pub struct Outcome {
    /// Human-readable summary, one line each.
    pub lines: Vec<String>,
    pub failures: Vec<String>,
    pub out_dir: Option<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, passed: bool, name: &str, detail: String) {
        let tag = if passed { "PASS" } else { "FAIL" };
        self.lines.push(format!("{tag} {name}: {detail}"));
        if !passed {
            self.failures.push(name.to_string());
        }
    }

    /// `{"status": ..., "failures": [...]}`.
    pub fn failure_json(&self) -> String {
        serde_json::json!({
            "status": if self.passed() { "pass" } else { "fail" },
            "failures": self.failures,
        })
        .to_string()
    }
}

struct OutputFiles {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputFiles {
    fn new(dir: PathBuf) -> Result<Self> {
        create_dir(&dir)?;
        Ok(OutputFiles {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn snapshot(&mut self, name: &str, state: &State) -> Result<()> {
        write_snapshot(&self.dir.join(name), state)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn plot(&mut self, plot: &RatePlot, name: &str) -> Result<()> {
        if let Some(path) = emit_plot(plot, &self.dir, name)? {
            let rel = path.strip_prefix(&self.dir).unwrap_or(&path);
            self.written.push(rel.display().to_string());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsSummary {
    pub run: String,
    pub eta: f64,
    pub eta_bound: f64,
    pub eta_admissible: bool,
    pub lower_bound_holds: bool,
    pub positivity_margin: f64,
    pub g_initial: f64,
    pub g_final: f64,
    pub growth: f64,
}

fn diagnose(cfg: &RunConfig, model: &ModelConfig, states: &[State]) -> Result<EnergyDiagnostics> {
    let d = &cfg.diagnostics;
    let partition = DyadicPartition::new(states[0].grid())?;
    let stepper = cfg.stepper_config()?;
    energy_diagnostics(
        states,
        &partition,
        model,
        d.m.unwrap_or(partition.j_max()),
        d.eta.expect("resolved"),
        d.s.expect("resolved"),
        (stepper.density_floor, stepper.density_ceiling),
    )
}

fn summarize(run: &str, d: &EnergyDiagnostics) -> DiagnosticsSummary {
    DiagnosticsSummary {
        run: run.into(),
        eta: d.eta,
        eta_bound: d.eta_bound,
        eta_admissible: d.eta_admissible,
        lower_bound_holds: d.lower_bound_holds(),
        positivity_margin: d.positivity_margin(),
        g_initial: d.g[0],
        g_final: *d.g.last().expect("samples"),
        growth: d.growth(),
    }
}

fn diagnostics_csv(d: &EnergyDiagnostics) -> String {
    let mut out = String::from("# schema=1\nt,g,min_margin\n");
    for ((t, g), (h2, un)) in d.times.iter().zip(&d.g).zip(d.h_sq.iter().zip(&d.u_norms)) {
        let margin = h2
            .iter()
            .zip(un)
            .map(|(h2, u)| h2 - 0.25 * d.c_lo * u * u)
            .fold(f64::INFINITY, f64::min);
        out.push_str(&format!("{t:.17e},{g:.17e},{margin:.17e}\n"));
    }
    out
}

fn check_diagnostics(outcome: &mut Outcome, s: &DiagnosticsSummary) {
    if !s.eta_admissible {
        outcome.lines.push(format!(
            "WARN diagnostics {}: eta {} exceeds the positivity bound {}",
            s.run, s.eta, s.eta_bound
        ));
        return;
    }
    outcome.record(
        s.lower_bound_holds,
        &format!("energy lower bound {}", s.run),
        format!("margin {:.3e}, g growth {:.3}", s.positivity_margin, s.growth),
    );
}

fn load(cfg_path: &Path) -> Result<(RunConfig, String)> {
    let resolved = parse_config(cfg_path)?.resolve()?;
    let hash = resolved.hash();
    Ok((resolved, hash))
}

#[derive(Serialize)]
struct SimulateResults {
    steps: usize,
    samples: usize,
    t_final: f64,
    mass_drift: Option<f64>,
    halted: Option<String>,
    diagnostics: Option<DiagnosticsSummary>,
}

/// Runs one configuration and writes its history, snapshots, diagnostics and
/// manifest.
pub fn cmd_simulate(cfg_path: &Path) -> Result<Outcome> {
    let (cfg, hash) = load(cfg_path)?;
    let mut files = OutputFiles::new(output_dir(&cfg.output.dir))?;
    files.write("config.toml", cfg.to_toml()?.as_bytes())?;
    let model = cfg.model_config();
    let stepper = cfg.stepper_config()?;
    let initial = cfg.initial_state()?;
    let mut outcome = Outcome {
        out_dir: Some(files.dir.clone()),
        ..Default::default()
    };
    let mut results = SimulateResults {
        steps: stepper.n_steps()?,
        samples: 0,
        t_final: 0.0,
        mass_drift: None,
        halted: None,
        diagnostics: None,
    };

    match simulate(&initial, &model, &stepper) {
        Ok(traj) => {
            results.samples = traj.states.len();
            results.t_final = traj.last().t;
            let drift = traj.mass_drift();
            results.mass_drift = Some(drift);
            outcome.lines.push(format!(
                "simulated {} steps to t = {}, mass drift {drift:.3e}",
                results.steps, results.t_final
            ));
            files.write("history.csv", history_csv(&traj.states).as_bytes())?;
            if cfg.output.snapshots {
                for (i, s) in traj.states.iter().enumerate() {
                    files.snapshot(&format!("snapshots/state_{i:05}.bin"), s)?;
                }
            }
            files.snapshot("final.bin", traj.last())?;
            if traj.grid().dim() == 1 {
                files.write("final.csv", state_csv_1d(traj.last())?.as_bytes())?;
            }
            if cfg.diagnostics.enabled {
                let d = diagnose(&cfg, &model, &traj.states)?;
                files.write("diagnostics.csv", diagnostics_csv(&d).as_bytes())?;
                let summary = summarize(model.capillary.name(), &d);
                check_diagnostics(&mut outcome, &summary);
                results.diagnostics = Some(summary);
            }
        }
        Err(Error::Halted { t, reason, snapshot }) => {
            files.snapshot("halted.bin", &snapshot)?;
            let msg = format!("halted at t = {t}: {reason}");
            outcome.record(false, "simulation", msg.clone());
            results.halted = Some(msg);
        }
        Err(e) => return Err(e),
    }

    let mut manifest = Manifest::new("simulate", hash, &cfg, &results);
    manifest.failures = outcome.failures.clone();
    files.written.push("manifest.json".into());
    manifest.outputs = files.written.clone();
    manifest.write(&files.dir.join("manifest.json"))?;
    Ok(outcome)
}

fn h_tag(h: f64) -> String {
    format!("h{h}")
}

#[derive(Serialize)]
struct SweepResults<'a> {
    reports: &'a [ConvergenceReport],
    remainder: &'a [RemainderReport],
    gap: Option<&'a GapReport>,
    diagnostics: &'a [DiagnosticsSummary],
}

fn verdict_passed(v: Verdict) -> bool {
    v != Verdict::Fail
}

/// Runs an ε or α sweep against the local model and writes rate tables,
/// plot scripts and the manifest.
pub fn cmd_sweep(cfg_path: &Path) -> Result<Outcome> {
    let (cfg, hash) = load(cfg_path)?;
    let spec = cfg.sweep_spec()?;
    let kind = cfg.sweep.as_ref().expect("sweep_spec checked").family;
    let mut files = OutputFiles::new(output_dir(&cfg.output.dir))?;
    files.write("config.toml", cfg.to_toml()?.as_bytes())?;
    let mut outcome = Outcome {
        out_dir: Some(files.dir.clone()),
        ..Default::default()
    };

    let (runs, reports) = match kind {
        FamilyKind::Epsilon => run_epsilon_sweep(&spec)?,
        FamilyKind::Alpha => run_alpha_sweep(&spec)?,
    };
    let partition = DyadicPartition::new(&spec.grid)?;
    let family = spec.family.name();

    for r in &reports {
        let name = format!("rate_{family}_{}", h_tag(r.h));
        files.write(&format!("{name}.csv"), r.to_csv().as_bytes())?;
        files.plot(&RatePlot::from_convergence(r), &name)?;
        let slope = r.fit.map(|f| format!("{:.4}", f.slope)).unwrap_or_else(|| "none".into());
        let label = if r.extrapolation { ", extrapolation" } else { "" };
        outcome.record(
            verdict_passed(r.verdict),
            &format!("{family} rate h={}", r.h),
            format!(
                "slope {slope} (threshold {:.2}), monotone {}, {:?}{label}",
                r.threshold, r.monotone, r.verdict
            ),
        );
    }
    for (p, run) in &runs.members {
        if let Err(reason) = run {
            outcome.record(false, &format!("{family} = {p}"), reason.clone());
        }
    }

    let mut remainder = Vec::new();
    let mut gap = None;
    match kind {
        FamilyKind::Epsilon if spec.model.params.kappa > 0.0 => {
            remainder = remainder_study(
                &runs.reference.times(),
                &runs.reference.q(),
                spec.family.params(),
                &spec.h_values,
                spec.model.params.kappa,
                &partition,
            )?;
            for r in &remainder {
                let name = format!("remainder_{}", h_tag(r.h));
                let mut csv = String::from("# schema=1\nepsilon,normalized\n");
                for (e, v) in r.epsilons.iter().zip(&r.normalized) {
                    csv.push_str(&format!("{e},{v:.17e}\n"));
                }
                files.write(&format!("{name}.csv"), csv.as_bytes())?;
                files.plot(&RatePlot::from_remainder(r), &name)?;
                let slope = r.fit.map(|f| format!("{:.4}", f.slope)).unwrap_or_else(|| "none".into());
                outcome.record(
                    verdict_passed(r.verdict),
                    &format!("remainder h={}", r.h),
                    format!("slope {slope}, monotone {}", r.monotone),
                );
            }
        }
        FamilyKind::Epsilon => outcome
            .lines
            .push("SKIP remainder: kappa = 0".into()),
        FamilyKind::Alpha => {
            let g = order_parameter_gap_sweep(&runs, &partition)?;
            let mut csv = String::from("# schema=1\nalpha,sup_norm,integral_norm\n");
            for x in &g.gaps {
                csv.push_str(&format!("{},{:.17e},{:.17e}\n", x.alpha, x.sup_norm, x.integral_norm));
            }
            files.write("gap.csv", csv.as_bytes())?;
            files.plot(&RatePlot::from_gap(&g), "gap")?;
            let slope = g.fit.map(|f| format!("{:.4}", f.slope)).unwrap_or_else(|| "none".into());
            outcome.record(
                verdict_passed(g.verdict),
                "order parameter gap",
                format!("slope {slope} (threshold {})", g.threshold),
            );
            gap = Some(g);
        }
    }

    let mut diagnostics = Vec::new();
    if cfg.diagnostics.enabled {
        let mut all = vec![("reference".to_string(), &runs.reference)];
        for (p, run) in &runs.members {
            if let Ok(t) = run {
                all.push((format!("{family}={p}"), t));
            }
        }
        for (name, traj) in all {
            let d = diagnose(&cfg, &traj.model, &traj.states)?;
            let summary = summarize(&name, &d);
            check_diagnostics(&mut outcome, &summary);
            diagnostics.push(summary);
        }
    }
    if cfg.output.snapshots {
        files.snapshot("snapshots/reference_final.bin", runs.reference.last())?;
        for (i, (_, run)) in runs.members.iter().enumerate() {
            if let Ok(t) = run {
                files.snapshot(&format!("snapshots/member_{i}_final.bin"), t.last())?;
            }
        }
    }

    let results = SweepResults {
        reports: &reports,
        remainder: &remainder,
        gap: gap.as_ref(),
        diagnostics: &diagnostics,
    };
    let mut manifest = Manifest::new("sweep", hash, &cfg, &results);
    manifest.failures = outcome.failures.clone();
    files.written.push("manifest.json".into());
    manifest.outputs = files.written.clone();
    manifest.write(&files.dir.join("manifest.json"))?;
    Ok(outcome)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormField {
    Density,
    Velocity,
}

/// Block decomposition of one snapshot field as CSV.
pub fn cmd_norms(snapshot: &Path, s: f64, beta: Option<f64>, field: NormField) -> Result<String> {
    if let Some(b) = beta {
        if !(b > 0.0) {
            return Err(Error::param("beta > 0"));
        }
    }
    let state = read_snapshot(snapshot)?;
    let partition = DyadicPartition::new(state.grid())?;
    let blocks = match field {
        NormField::Density => partition.decompose_scalar(&state.q),
        NormField::Velocity => partition.decompose_vector(&state.u),
    };
    Ok(blocks.to_csv(s, beta))
}

/// Parses `dim,n,length`.
pub fn parse_grid(text: &str) -> Result<GridSection> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Error::Grid(format!("expected `dim,n,length`, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(GridSection {
        dim: parts[0].parse().map_err(|_| bad())?,
        n: parts[1].parse().map_err(|_| bad())?,
        length: parts[2].parse().map_err(|_| bad())?,
    })
}

pub const DEFAULT_VERIFY_GRID: GridSection = GridSection {
    dim: 1,
    n: 256,
    length: std::f64::consts::TAU,
};

pub fn cmd_verify_symbols(grid: GridSection) -> Result<(Outcome, Vec<Check>)> {
    let g = make_grid(grid.dim, grid.n, grid.length)?;
    let checks = verify_symbols(&g);
    let mut outcome = Outcome::default();
    for c in &checks {
        outcome.lines.push(c.line());
        if !c.passed {
            outcome.failures.push(c.name.clone());
        }
    }
    Ok((outcome, checks))
}
