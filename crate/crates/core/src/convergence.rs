//! Parameter sweeps comparing the non-local models with the local Korteweg
//! reference, and the rate fits on top of them.
//!
//! One sweep solves the reference once and every family member on the same
//! grid and step size. The members are independent and run in parallel.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};
use crate::kernels::{remainder_r_eps, CapillaryModel};
use crate::lp::{
    time_reduce, trajectory_norm, BlockDecomposition, DyadicPartition, NormFlavor, TimeNorm,
    TrajectoryBlocks, TrajectoryNorms,
};
use crate::solver::{simulate, ModelConfig, State, StepperConfig, Trajectory};

/// Slope tolerance below the theoretical rate that still counts as PASS.
pub const RATE_TOLERANCE: f64 = 0.1;
/// Required fitted slope of the order-parameter gap.
pub const GAP_SLOPE: f64 = 1.8;

/// Ordinary least squares on `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!("{} abscissae for {} values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Fit("need at least 3 points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("all values must be positive and finite".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(Fit { slope, intercept, r2 })
}

/// The non-local family swept against the local reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Family {
    Epsilon(Vec<f64>),
    Alpha(Vec<f64>),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Epsilon(_) => "epsilon",
            Family::Alpha(_) => "alpha",
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Family::Epsilon(v) | Family::Alpha(v) => v,
        }
    }

    pub fn model(&self, param: f64) -> CapillaryModel {
        match self {
            Family::Epsilon(_) => CapillaryModel::Nsrw { epsilon: param },
            Family::Alpha(_) => CapillaryModel::Nsop { alpha: param },
        }
    }

    /// The small parameter: `ε`, or `1/α`.
    pub fn small(&self, param: f64) -> f64 {
        match self {
            Family::Epsilon(_) => param,
            Family::Alpha(_) => 1.0 / param,
        }
    }

    /// `β = 1/ε`, or `α`.
    pub fn beta(&self, param: f64) -> f64 {
        1.0 / self.small(param)
    }

    pub fn flavor(&self) -> NormFlavor {
        match self {
            Family::Epsilon(_) => NormFlavor::EBeta,
            Family::Alpha(_) => NormFlavor::FBeta,
        }
    }
}

/// A reference run plus the family members sharing its setup.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub grid: Arc<Grid>,
    /// Shared viscosities, capillarity and pressure; the capillary variant
    /// is replaced per member and by the local model for the reference.
    pub model: ModelConfig,
    pub stepper: StepperConfig,
    pub initial: State,
    pub family: Family,
    pub h_values: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let params = self.family.params();
        if params.len() < 3 {
            return Err(Error::Sweep(format!(
                "sweep requires ≥ 3 points, got {}",
                params.len()
            )));
        }
        for &p in params {
            self.family.model(p).validate()?;
        }
        let small: Vec<f64> = params.iter().map(|&p| self.family.small(p)).collect();
        if small.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Sweep(format!(
                "{} list must make the small parameter strictly decreasing",
                self.family.name()
            )));
        }
        for &p in params {
            let beta = self.family.beta(p);
            if beta < self.grid.k_min() || beta > self.grid.k_max() {
                return Err(Error::Sweep(format!(
                    "transition frequency {beta} for {} = {p} lies outside the resolved band [{}, {}]",
                    self.family.name(),
                    self.grid.k_min(),
                    self.grid.k_max()
                )));
            }
        }
        if self.h_values.is_empty() || self.h_values.iter().any(|h| !(*h >= 0.0)) {
            return Err(Error::Sweep("h values must be nonempty and >= 0".into()));
        }
        if !self.initial.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn reference_model(&self) -> ModelConfig {
        self.model.with_capillary(CapillaryModel::Nsk)
    }
}

/// Outcome of solving every member of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRuns {
    pub reference: Trajectory,
    /// `(parameter, trajectory or failure reason)`, in sweep order.
    pub members: Vec<(f64, std::result::Result<Trajectory, String>)>,
}

/// Solves the reference once, then all members concurrently.
pub fn solve_sweep(spec: &SweepSpec) -> Result<SweepRuns> {
    spec.validate()?;
    let reference = simulate(&spec.initial, &spec.reference_model(), &spec.stepper)?;
    let members = spec
        .family
        .params()
        .par_iter()
        .map(|&p| {
            let model = spec.model.with_capillary(spec.family.model(p));
            let run = simulate(&spec.initial, &model, &spec.stepper).map_err(|e| e.to_string());
            (p, run)
        })
        .collect();
    Ok(SweepRuns { reference, members })
}

fn check_same_sampling(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.states.len() != b.states.len() {
        return Err(Error::Sampling(format!(
            "{} samples against {}",
            a.states.len(),
            b.states.len()
        )));
    }
    if !a.grid().same_shape(b.grid()) {
        return Err(Error::GridMismatch);
    }
    for (x, y) in a.states.iter().zip(&b.states) {
        if (x.t - y.t).abs() > 1e-12 * x.t.abs().max(1.0) {
            return Err(Error::Sampling(format!("sample times {} and {} differ", x.t, y.t)));
        }
    }
    Ok(())
}

/// Block norms of `pert - ref`, with the `c_α - ρ` component when `pert`
/// carries an order parameter.
pub fn difference_blocks(
    reference: &Trajectory,
    pert: &Trajectory,
    partition: &DyadicPartition,
) -> Result<TrajectoryBlocks> {
    check_same_sampling(reference, pert)?;
    let times = reference.times();
    let dq: Vec<RealField> = reference
        .states
        .iter()
        .zip(&pert.states)
        .map(|(r, p)| &p.q - &r.q)
        .collect();
    let du: Vec<_> = reference
        .states
        .iter()
        .zip(&pert.states)
        .map(|(r, p)| &p.u - &r.u)
        .collect();
    let dc: Option<Vec<RealField>> = pert.order_parameter.as_ref().map(|c| {
        c.iter()
            .zip(&reference.states)
            .map(|(c, r)| c - &r.rho())
            .collect()
    });
    TrajectoryBlocks::from_fields(partition, &times, &dq, &du, dc.as_deref())
}

/// `‖(q_pert - q_ref, u_pert - u_ref)‖_{E_β^s}`.
pub fn trajectory_difference_norm(
    reference: &Trajectory,
    pert: &Trajectory,
    partition: &DyadicPartition,
    s: f64,
    beta: f64,
) -> Result<f64> {
    let blocks = difference_blocks(reference, pert, partition)?;
    Ok(trajectory_norm(&blocks, s, NormFlavor::EBeta, Some(beta))?.total())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Every member coincides with the reference (no capillarity).
    Degenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    pub small: f64,
    pub beta: f64,
    /// Difference in the sweep's norm flavor; `None` for a failed run.
    pub error: Option<f64>,
    /// Difference in the full `E^s` norm, which dominates `E_β^s`.
    pub error_full: Option<f64>,
    pub components: Option<TrajectoryNorms>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub family: String,
    pub norm_flavor: String,
    pub dim: usize,
    pub h: f64,
    pub s: f64,
    pub points: Vec<SweepPoint>,
    pub fit: Option<Fit>,
    /// Slope needed for PASS.
    pub threshold: f64,
    pub monotone: bool,
    /// `E^s >= E_β^s` on every point.
    pub flavor_ordering: bool,
    pub verdict: Verdict,
    /// One-dimensional runs extrapolate estimates that hold for `d >= 2`.
    pub extrapolation: bool,
    pub note: String,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Rows `param, error, norm_flavor, s, beta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema=1\nparam,error,norm_flavor,s,beta\n");
        for p in &self.points {
            let err = p.error.map(|e| format!("{e:.17e}")).unwrap_or_else(|| "nan".into());
            out.push_str(&format!(
                "{},{err},{},{},{}\n",
                p.param, self.norm_flavor, self.s, p.beta
            ));
        }
        out
    }
}

fn flavor_name(flavor: NormFlavor) -> &'static str {
    match flavor {
        NormFlavor::E => "E",
        NormFlavor::EBeta => "E_beta",
        NormFlavor::FBeta => "F_beta",
    }
}

/// Strictly decreasing as the small parameter decreases.
fn strictly_monotone(small: &[f64], errors: &[f64]) -> bool {
    let mut pairs: Vec<(f64, f64)> = small.iter().cloned().zip(errors.iter().cloned()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.windows(2).all(|w| w[1].1 < w[0].1)
}

/// Builds the report at rate index `h` from solved runs.
pub fn sweep_report(
    spec: &SweepSpec,
    runs: &SweepRuns,
    partition: &DyadicPartition,
    h: f64,
) -> Result<ConvergenceReport> {
    let dim = spec.grid.dim();
    let s = dim as f64 / 2.0 - h;
    let flavor = spec.family.flavor();
    let kappa = spec.model.params.kappa;

    let mut points = Vec::new();
    for (param, run) in &runs.members {
        let beta = spec.family.beta(*param);
        let small = spec.family.small(*param);
        let point = match run {
            Ok(traj) => {
                let blocks = difference_blocks(&runs.reference, traj, partition)?;
                let comps = trajectory_norm(&blocks, s, flavor, Some(beta))?;
                let full = trajectory_norm(&blocks, s, NormFlavor::E, None)?.total()
                    + comps.c_sup.unwrap_or(0.0)
                    + comps.c_int.unwrap_or(0.0);
                SweepPoint {
                    param: *param,
                    small,
                    beta,
                    error: Some(comps.total()),
                    error_full: Some(full),
                    components: Some(comps),
                    failure: None,
                }
            }
            Err(reason) => SweepPoint {
                param: *param,
                small,
                beta,
                error: None,
                error_full: None,
                components: None,
                failure: Some(reason.clone()),
            },
        };
        points.push(point);
    }

    let threshold = h - RATE_TOLERANCE;
    let survivors: Vec<&SweepPoint> = points.iter().filter(|p| p.error.is_some()).collect();
    let flavor_ordering = survivors
        .iter()
        .all(|p| p.error_full.unwrap() >= p.error.unwrap() * (1.0 - 1e-12));
    let mut report = ConvergenceReport {
        family: spec.family.name().into(),
        norm_flavor: flavor_name(flavor).into(),
        dim,
        h,
        s,
        points: Vec::new(),
        fit: None,
        threshold,
        monotone: false,
        flavor_ordering,
        verdict: Verdict::Fail,
        extrapolation: dim == 1,
        note: String::new(),
    };

    if kappa == 0.0 && survivors.iter().all(|p| p.error == Some(0.0)) {
        report.verdict = Verdict::Degenerate;
        report.note = "degenerate: models identical".into();
        report.points = points;
        return Ok(report);
    }
    if survivors.len() < 3 {
        report.note = format!("only {} runs survived, need 3 for a fit", survivors.len());
        report.points = points;
        return Ok(report);
    }
    let xs: Vec<f64> = survivors.iter().map(|p| p.small).collect();
    let ys: Vec<f64> = survivors.iter().map(|p| p.error.unwrap()).collect();
    report.monotone = strictly_monotone(&xs, &ys);
    match fit_slope(&xs, &ys) {
        Ok(fit) => {
            report.fit = Some(fit);
            let ok = fit.slope >= threshold && report.monotone;
            report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
            report.note = format!(
                "PASS iff slope >= h - {RATE_TOLERANCE} and errors decrease with the small parameter"
            );
        }
        Err(e) => report.note = e.to_string(),
    }
    if points.iter().any(|p| p.failure.is_some()) {
        report.note.push_str("; some members halted and were left out of the fit");
    }
    report.points = points;
    Ok(report)
}

/// Solves the ε family against the local reference and reports one rate per
/// requested `h`.
pub fn run_epsilon_sweep(spec: &SweepSpec) -> Result<(SweepRuns, Vec<ConvergenceReport>)> {
    if !matches!(spec.family, Family::Epsilon(_)) {
        return Err(Error::Sweep("epsilon sweep needs an epsilon family".into()));
    }
    run_sweep(spec)
}

/// As [`run_epsilon_sweep`] with `1/α` as the small parameter and the `F_α`
/// norm including `c_α - ρ`.
pub fn run_alpha_sweep(spec: &SweepSpec) -> Result<(SweepRuns, Vec<ConvergenceReport>)> {
    if !matches!(spec.family, Family::Alpha(_)) {
        return Err(Error::Sweep("alpha sweep needs an alpha family".into()));
    }
    run_sweep(spec)
}

fn run_sweep(spec: &SweepSpec) -> Result<(SweepRuns, Vec<ConvergenceReport>)> {
    let runs = solve_sweep(spec)?;
    let partition = DyadicPartition::new(&spec.grid)?;
    let reports = spec
        .h_values
        .iter()
        .map(|&h| sweep_report(spec, &runs, &partition, h))
        .collect::<Result<_>>()?;
    Ok((runs, reports))
}

/// `c_α - ρ_α` measured in `L̃^∞_T Ḃ^{d/2}` and `L¹_T Ḃ^{d/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapNorms {
    pub alpha: f64,
    pub sup_norm: f64,
    pub integral_norm: f64,
}

pub fn order_parameter_gap(traj: &Trajectory, partition: &DyadicPartition) -> Result<GapNorms> {
    let alpha = match traj.model.capillary {
        CapillaryModel::Nsop { alpha } => alpha,
        _ => return Err(Error::param("order-parameter gap needs an nsop trajectory")),
    };
    let c = traj
        .order_parameter
        .as_ref()
        .ok_or_else(|| Error::param("trajectory carries no order parameter"))?;
    let times = traj.times();
    let blocks: Vec<BlockDecomposition> = c
        .iter()
        .zip(&traj.states)
        .map(|(c, s)| partition.decompose_scalar(&(c - &s.rho())))
        .collect();
    let s = traj.grid().dim() as f64 / 2.0;
    Ok(GapNorms {
        alpha,
        sup_norm: time_reduce(&times, &blocks, TimeNorm::Sup)?.besov(s),
        integral_norm: time_reduce(&times, &blocks, TimeNorm::Integral)?.besov(s),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub gaps: Vec<GapNorms>,
    pub fit: Option<Fit>,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Gap norms over the members of an α sweep; PASS iff the `L¹` gap decays at
/// least like `α^{-1.8}`.
pub fn order_parameter_gap_sweep(runs: &SweepRuns, partition: &DyadicPartition) -> Result<GapReport> {
    let gaps: Vec<GapNorms> = runs
        .members
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .map(|t| order_parameter_gap(t, partition))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = gaps.iter().map(|g| 1.0 / g.alpha).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.integral_norm).collect();
    let fit = fit_slope(&xs, &ys).ok();
    let verdict = match fit {
        Some(f) if f.slope >= GAP_SLOPE => Verdict::Pass,
        _ if ys.iter().all(|&y| y == 0.0) => Verdict::Degenerate,
        _ => Verdict::Fail,
    };
    Ok(GapReport {
        gaps,
        fit,
        threshold: GAP_SLOPE,
        verdict,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderReport {
    pub h: f64,
    pub epsilons: Vec<f64>,
    /// `‖R_ε‖_{L¹ Ḃ^{d/2-h-1}} / (κ ‖q‖_{L¹ Ḃ^{d/2+2}})` per ε.
    pub normalized: Vec<f64>,
    pub fit: Option<Fit>,
    pub monotone: bool,
    pub verdict: Verdict,
}

/// Measures the remainder along a frozen local-model density trajectory.
/// PASS iff the fitted slope in ε is at least `h`; for `h = 0` only
/// monotone decay is required.
pub fn remainder_study(
    times: &[f64],
    q: &[RealField],
    eps_list: &[f64],
    h_values: &[f64],
    kappa: f64,
    partition: &DyadicPartition,
) -> Result<Vec<RemainderReport>> {
    if eps_list.len() < 3 {
        return Err(Error::Sweep(format!(
            "sweep requires ≥ 3 points, got {}",
            eps_list.len()
        )));
    }
    if !(kappa > 0.0) {
        return Err(Error::param("remainder study needs kappa > 0"));
    }
    let dim = partition.grid().dim() as f64;
    let q_blocks: Vec<BlockDecomposition> = q.iter().map(|f| partition.decompose_scalar(f)).collect();
    let q_int = time_reduce(times, &q_blocks, TimeNorm::Integral)?.besov(dim / 2.0 + 2.0);

    // block norms of R_ε, integrated in time, once per ε
    let r_int: Vec<BlockDecomposition> = eps_list
        .iter()
        .map(|&eps| {
            let blocks: Vec<BlockDecomposition> = q
                .iter()
                .map(|f| remainder_r_eps(f, eps, kappa).map(|r| partition.decompose_vector(&r)))
                .collect::<Result<_>>()?;
            time_reduce(times, &blocks, TimeNorm::Integral)
        })
        .collect::<Result<_>>()?;

    h_values
        .iter()
        .map(|&h| {
            let s = dim / 2.0 - h - 1.0;
            let normalized: Vec<f64> = r_int
                .iter()
                .map(|b| if q_int > 0.0 { b.besov(s) / (kappa * q_int) } else { 0.0 })
                .collect();
            let monotone = strictly_monotone(eps_list, &normalized);
            let fit = fit_slope(eps_list, &normalized).ok();
            let verdict = if normalized.iter().all(|&v| v == 0.0) {
                Verdict::Degenerate
            } else if h == 0.0 {
                if monotone {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            } else {
                match fit {
                    Some(f) if f.slope >= h => Verdict::Pass,
                    _ => Verdict::Fail,
                }
            };
            Ok(RemainderReport {
                h,
                epsilons: eps_list.to_vec(),
                normalized,
                fit,
                monotone,
                verdict,
            })
        })
        .collect()
}
