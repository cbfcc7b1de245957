//! Acceptance criteria, one PASS/FAIL line each. Runtime limits are part of
//! each criterion.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use capillarity::certify::{bessel_fourier_pair, partition_of_unity, symbol_taylor_bounds};
use capillarity::convergence::{
    order_parameter_gap_sweep, remainder_study, run_alpha_sweep, run_epsilon_sweep, Family,
    SweepSpec, Verdict,
};
use capillarity::kernels::order_parameter;
use capillarity::solver::{energy_diagnostics, eta_bound, make_initial_data, simulate, Profile};
use capillarity::{
    build_partition, make_grid, CapillaryModel, Grid, ModelConfig, PhysParams, PressureLaw,
    RealField, State, StepperConfig, Trajectory, VectorField,
};
use rustfft::num_complex::Complex64;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Runner {
    failures: Vec<usize>,
    /// Every trajectory produced so far, for the diagnostic criterion.
    runs: Vec<(String, Trajectory)>,
    /// Runs whose `g` growth is capped.
    capped: Vec<String>,
}

impl Runner {
    fn criterion(&mut self, id: usize, name: &str, limit: Duration, f: impl FnOnce(&mut Self) -> Outcome) {
        self.criterion_after(id, name, limit, Duration::ZERO, f)
    }

    /// As `criterion`, charging `carried` time spent on shared runs.
    fn criterion_after(
        &mut self,
        id: usize,
        name: &str,
        limit: Duration,
        carried: Duration,
        f: impl FnOnce(&mut Self) -> Outcome,
    ) {
        let start = Instant::now();
        let out = f(self);
        let elapsed = start.elapsed() + carried;
        let in_time = elapsed < limit;
        let passed = out.passed && in_time;
        let timing = format!("{:.2} s of {} s", elapsed.as_secs_f64(), limit.as_secs());
        let timing = if in_time { timing } else { format!("{timing}, over the limit") };
        println!(
            "{} {id:>2} {name}: {} [{timing}]",
            if passed { "PASS" } else { "FAIL" },
            out.detail
        );
        if !passed {
            self.failures.push(id);
        }
    }

    fn keep(&mut self, name: impl Into<String>, traj: Trajectory) {
        self.runs.push((name.into(), traj));
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

const VDW: PressureLaw = PressureLaw::VanDerWaals { a: 1.2, b: 1.0 / 3.0, rt: 1.0 };
const GAMMA: PressureLaw = PressureLaw::Gamma { a: 1.0, gamma: 1.4 };

fn stepper(initial: &State, dt: f64, t_end: f64, sample_every: usize) -> StepperConfig {
    let (lo, hi) = StepperConfig::default_bounds(&initial.q);
    StepperConfig {
        dt,
        t_end,
        sample_every,
        dealias: true,
        density_floor: lo,
        density_ceiling: hi,
        cfl: 0.5,
        max_steps: 10_000_000,
    }
}

fn model(capillary: CapillaryModel, kappa: f64, pressure: PressureLaw) -> ModelConfig {
    ModelConfig {
        capillary,
        params: PhysParams { mu: 1.0, lambda: 0.0, kappa },
        pressure,
    }
}

/// Two-phase Van der Waals data on a period of 10, local capillarity.
fn two_phase_spec(dim: usize, n: usize, t_end: f64, family: Family, h_values: Vec<f64>) -> SweepSpec {
    let grid = make_grid(dim, n, 10.0).unwrap();
    let initial = make_initial_data(
        &grid,
        &Profile::TwoPhase { rho1: 0.7, rho2: 1.3, interface_width: 1.0 },
    )
    .unwrap();
    SweepSpec {
        grid,
        model: model(CapillaryModel::Nsk, 0.05, VDW),
        stepper: stepper(&initial, 1e-3, t_end, 10),
        initial,
        family,
        h_values,
    }
}

fn slope_text(fit: Option<capillarity::convergence::Fit>) -> String {
    fit.map(|f| format!("{:.3}", f.slope)).unwrap_or_else(|| "none".into())
}

fn symbol_certification() -> Outcome {
    let g = make_grid(1, 256, 2.0 * std::f64::consts::PI).unwrap();
    let c = symbol_taylor_bounds(&g, &[0.2, 0.1, 0.05], &[5.0, 10.0, 20.0]);
    outcome(c.passed, format!("excess {:.1e}, {}", c.value, c.detail))
}

fn partition_unity() -> Outcome {
    let tau = 2.0 * std::f64::consts::PI;
    let checks: Vec<_> = [(1, 1024, tau), (2, 256, tau), (1, 1024, 10.0), (2, 256, 10.0)]
        .iter()
        .map(|&(d, n, l)| partition_of_unity(&make_grid(d, n, l).unwrap()))
        .collect();
    let worst = checks.iter().map(|c| c.value).fold(0.0, f64::max);
    outcome(
        checks.iter().all(|c| c.passed),
        format!("max defect {worst:.1e} over 1D n=1024 and 2D n=256"),
    )
}

fn bessel_pair() -> Outcome {
    let c = bessel_fourier_pair(1.0, 1024, 40.0, 10.0);
    outcome(c.passed, format!("max relative error {:.2e}, {}", c.value, c.detail))
}

fn hybrid_equivalence() -> Outcome {
    let g = make_grid(1, 256, 2.0 * std::f64::consts::PI).unwrap();
    let p = build_partition(&g).unwrap();
    let models = [
        CapillaryModel::Nsrw { epsilon: 0.2 },
        CapillaryModel::Nsrw { epsilon: 0.05 },
        CapillaryModel::Nsop { alpha: 5.0 },
        CapillaryModel::Nsop { alpha: 20.0 },
    ];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for seed in 0..20 {
        let f = make_initial_data(
            &g,
            &Profile::RandomBand {
                seed,
                amplitude: 0.5,
                velocity_amplitude: 0.0,
                k_lo: 1.0,
                k_hi: 80.0,
            },
        )
        .unwrap()
        .q;
        for m in &models {
            let (hybrid, cap) = p.hybrid_equivalence_ratio(&f, 0.5, m).unwrap();
            let r = hybrid / cap;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    outcome(
        lo >= 0.125 && hi <= 8.0,
        format!("ratios in [{lo:.3}, {hi:.3}] over 20 fields, nsrw and nsop"),
    )
}

fn max_difference(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            let dq = (&x.q - &y.q).max_abs();
            let du = x
                .u
                .components()
                .iter()
                .zip(y.u.components())
                .map(|(p, q)| (p - q).max_abs())
                .fold(0.0, f64::max);
            dq.max(du)
        })
        .fold(0.0, f64::max)
}

fn conservation(r: &mut Runner) -> Outcome {
    let g = make_grid(1, 256, 10.0).unwrap();
    let init = make_initial_data(
        &g,
        &Profile::TwoPhase { rho1: 0.7, rho2: 1.3, interface_width: 1.0 },
    )
    .unwrap();
    let cfg = stepper(&init, 1e-3, 10.0, 100);
    let traj = simulate(&init, &model(CapillaryModel::Nsk, 0.05, VDW), &cfg).unwrap();
    let drift = traj.mass_drift();
    let steps = cfg.n_steps().unwrap();
    r.keep("mass run", traj);

    let init = make_initial_data(
        &g,
        &Profile::RandomBand {
            seed: 7,
            amplitude: 0.1,
            velocity_amplitude: 0.05,
            k_lo: 1.0,
            k_hi: 30.0,
        },
    )
    .unwrap();
    let cfg = stepper(&init, 1e-3, 1.0, 10);
    let models = [
        CapillaryModel::Nsc,
        CapillaryModel::Nsk,
        CapillaryModel::Nsrw { epsilon: 0.1 },
        CapillaryModel::Nsop { alpha: 10.0 },
    ];
    let runs: Vec<Trajectory> = models
        .iter()
        .map(|&c| simulate(&init, &model(c, 0.0, GAMMA), &cfg).unwrap())
        .collect();
    let spread = runs[1..]
        .iter()
        .map(|t| max_difference(&runs[0], t))
        .fold(0.0, f64::max);
    for (m, t) in models.iter().zip(runs) {
        r.keep(format!("kappa=0 {}", m.name()), t);
    }
    outcome(
        drift < 1e-12 && spread <= 1e-12,
        format!("mass drift {drift:.1e} over {steps} steps, kappa=0 spread {spread:.1e}"),
    )
}

fn remainder_and_epsilon_1d(r: &mut Runner) -> (Outcome, Outcome) {
    let spec = two_phase_spec(1, 512, 0.5, Family::Epsilon(vec![0.2, 0.1, 0.05, 0.025]), vec![0.25, 0.5]);
    let (runs, reports) = run_epsilon_sweep(&spec).unwrap();
    let p = build_partition(&spec.grid).unwrap();
    let rem = remainder_study(
        &runs.reference.times(),
        &runs.reference.q(),
        &[0.2, 0.1, 0.05, 0.025],
        &[0.25, 0.5, 1.0],
        spec.model.params.kappa,
        &p,
    )
    .unwrap();
    let rem_out = outcome(
        rem.iter().all(|x| x.verdict == Verdict::Pass),
        rem.iter()
            .map(|x| format!("h={} slope {}", x.h, slope_text(x.fit)))
            .collect::<Vec<_>>()
            .join(", "),
    );
    let rate_out = rate_outcome(&reports, "1D n=512, extrapolation");
    keep_sweep(r, "1D epsilon", runs, true);
    (rem_out, rate_out)
}

fn rate_outcome(reports: &[capillarity::convergence::ConvergenceReport], label: &str) -> Outcome {
    outcome(
        reports.iter().all(|x| x.passed()),
        format!(
            "{label}: {}",
            reports
                .iter()
                .map(|x| format!("h={} slope {} monotone {}", x.h, slope_text(x.fit), x.monotone))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn keep_sweep(r: &mut Runner, label: &str, runs: capillarity::convergence::SweepRuns, capped: bool) {
    let name = format!("{label} reference");
    if capped {
        r.capped.push(name.clone());
    }
    r.keep(name, runs.reference);
    for (p, run) in runs.members {
        if let Ok(t) = run {
            let name = format!("{label} {p}");
            if capped {
                r.capped.push(name.clone());
            }
            r.keep(name, t);
        }
    }
}

fn epsilon_2d(r: &mut Runner) -> Outcome {
    let spec = two_phase_spec(2, 128, 0.5, Family::Epsilon(vec![0.2, 0.1, 0.05, 0.025]), vec![0.25, 0.5]);
    let (runs, reports) = run_epsilon_sweep(&spec).unwrap();
    keep_sweep(r, "2D epsilon", runs, true);
    rate_outcome(&reports, "2D n=128²")
}

fn alpha_1d(r: &mut Runner) -> (Outcome, Outcome) {
    let spec = two_phase_spec(1, 512, 0.5, Family::Alpha(vec![5.0, 10.0, 20.0, 40.0]), vec![0.5]);
    let (runs, reports) = run_alpha_sweep(&spec).unwrap();
    let p = build_partition(&spec.grid).unwrap();
    let gap = order_parameter_gap_sweep(&runs, &p).unwrap();

    // c_α against the elliptic equation Δc + α²(ρ - c) = 0, and against order_parameter
    let mut elliptic = 0.0f64;
    let mut direct = 0.0f64;
    for (alpha, run) in &runs.members {
        let t = run.as_ref().unwrap();
        for (c, s) in t.order_parameter.as_ref().unwrap().iter().zip(&t.states) {
            let rho = s.rho();
            let lap = c.forward().scale_modes(|m| -m.k2).inverse();
            let a2 = alpha * alpha;
            let residual = lap.zip_map(&(&rho - c), |l, d| l + a2 * d).max_abs();
            elliptic = elliptic.max(residual / (a2 * rho.max_abs()));
            direct = direct.max((c - &order_parameter(&rho, *alpha).unwrap()).max_abs());
        }
    }
    let gap_out = outcome(
        gap.verdict == Verdict::Pass && elliptic <= 1e-12 && direct <= 1e-12,
        format!(
            "gap slope {} (threshold {}), c residual {elliptic:.1e}, c mismatch {direct:.1e}",
            slope_text(gap.fit),
            gap.threshold
        ),
    );
    let rate_out = rate_outcome(&reports, "F norm, 1D n=512, extrapolation");
    keep_sweep(r, "1D alpha", runs, false);
    (gap_out, rate_out)
}

/// `exp(M t)` for a complex 2×2 matrix through `e^{τt}(cosh(δt) I + sinh(δt)/δ (M - τI))`.
fn expm2(m: [[Complex64; 2]; 2], t: f64) -> [[Complex64; 2]; 2] {
    let tau = (m[0][0] + m[1][1]) / 2.0;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let delta = (tau * tau - det).sqrt();
    let dt = delta * t;
    let ch = dt.cosh();
    let sh = if dt.norm() < 1e-8 {
        Complex64::new(t, 0.0)
    } else {
        dt.sinh() / delta
    };
    let e = (tau * t).exp();
    [
        [e * (ch + sh * (m[0][0] - tau)), e * sh * m[0][1]],
        [e * sh * m[1][0], e * (ch + sh * (m[1][1] - tau))],
    ]
}

fn linear_oracle(r: &mut Runner) -> Outcome {
    let g: Arc<Grid> = make_grid(1, 32, 2.0 * std::f64::consts::PI).unwrap();
    let amp = 1e-6;
    let q = RealField::from_fn(&g, |x| amp * (x[0].cos() + 0.5 * (3.0 * x[0]).cos()));
    let u = RealField::from_fn(&g, |x| amp * 0.3 * (2.0 * x[0]).sin());
    let init = State::new(0.0, q, VectorField::new(vec![u]).unwrap());
    let cfg = stepper(&init, 1e-4, 1.0, 100);
    let mut worst = 0.0f64;
    for capillary in [
        CapillaryModel::Nsk,
        CapillaryModel::Nsrw { epsilon: 0.2 },
        CapillaryModel::Nsop { alpha: 5.0 },
    ] {
        let m = model(capillary, 0.1, GAMMA);
        let traj = simulate(&init, &m, &cfg).unwrap();
        let p1 = m.pressure.reference_slope();
        let nu_l = 2.0 * m.params.mu + m.params.lambda;
        let q0 = init.q.forward();
        let u0 = init.u.forward();
        for mode_index in [1usize, 2, 3] {
            let mode = &g.modes()[mode_index];
            let k = mode.kd[0];
            let kn = k.abs();
            let sign = k.signum();
            let cap = p1 - m.params.kappa * m.capillary.symbol_k2(mode.k2);
            let i = Complex64::i();
            let mat = [
                [Complex64::new(0.0, 0.0), -i * kn],
                [-i * kn * cap, Complex64::new(-nu_l * mode.k2, 0.0)],
            ];
            let z0 = [q0.coeffs()[mode_index], sign * u0[0].coeffs()[mode_index]];
            let mut err = 0.0f64;
            let mut scale = 0.0f64;
            for s in &traj.states {
                let e = expm2(mat, s.t);
                let exact = [
                    e[0][0] * z0[0] + e[0][1] * z0[1],
                    e[1][0] * z0[0] + e[1][1] * z0[1],
                ];
                let got = [
                    s.q.forward().coeffs()[mode_index],
                    sign * s.u.forward()[0].coeffs()[mode_index],
                ];
                for c in 0..2 {
                    err = err.max((got[c] - exact[c]).norm());
                    scale = scale.max(exact[c].norm());
                }
            }
            worst = worst.max(err / scale);
        }
        r.keep(format!("linear {}", capillary.name()), traj);
    }
    outcome(
        worst <= 0.01,
        format!("max relative deviation {worst:.2e} over modes 1-3, nsk/nsrw/nsop"),
    )
}

fn energy_sanity(r: &mut Runner) -> Outcome {
    let mut worst_margin = f64::INFINITY;
    let mut bound_ok = true;
    let mut growth = 0.0f64;
    let mut samples = 0;
    for (name, t) in &r.runs {
        let p = build_partition(t.grid()).unwrap();
        let (lo, hi) = (t.stepper.density_floor, t.stepper.density_ceiling);
        let eta = 0.9 * eta_bound(t.model.params.nu(), lo, hi);
        let s = t.grid().dim() as f64 / 2.0;
        let d = energy_diagnostics(&t.states, &p, &t.model, p.j_max(), eta, s, (lo, hi)).unwrap();
        samples += t.states.len();
        bound_ok &= d.eta_admissible && d.lower_bound_holds();
        worst_margin = worst_margin.min(d.positivity_margin());
        if r.capped.contains(name) {
            growth = growth.max(d.growth());
        }
    }
    outcome(
        bound_ok && growth <= 10.0 && !r.capped.is_empty(),
        format!(
            "lower bound on {samples} samples of {} runs (min margin {worst_margin:.1e}), \
             max g growth {growth:.3} on {} rate runs",
            r.runs.len(),
            r.capped.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut r = Runner {
        failures: Vec::new(),
        runs: Vec::new(),
        capped: Vec::new(),
    };
    r.criterion(1, "symbol certification", secs(1), |_| symbol_certification());
    r.criterion(2, "partition of unity", secs(5), |_| partition_unity());
    r.criterion(3, "Bessel kernel Fourier pair", secs(1), |_| bessel_pair());
    r.criterion(4, "hybrid-norm equivalence", secs(10), |_| hybrid_equivalence());
    r.criterion(5, "conservation and degeneracy", secs(60), conservation);

    let start = Instant::now();
    let (rem, eps1) = remainder_and_epsilon_1d(&mut r);
    let shared = start.elapsed();
    // the remainder study reads the reference run of the 1D epsilon sweep
    r.criterion_after(6, "remainder bound", secs(120), shared, |_| rem);
    r.criterion_after(7, "epsilon rate 1D", secs(300), shared, |_| eps1);
    r.criterion(7, "epsilon rate 2D", secs(1800), epsilon_2d);

    let start = Instant::now();
    let (gap, alpha) = alpha_1d(&mut r);
    let shared = start.elapsed();
    r.criterion_after(8, "order-parameter gap", secs(600), shared, |_| gap);
    r.criterion_after(9, "alpha rate", secs(600), shared, |_| alpha);
    r.criterion(10, "linear-regime oracle", secs(60), linear_oracle);
    r.criterion(11, "energy diagnostic sanity", secs(600), energy_sanity);

    if r.failures.is_empty() {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAIL {:?}", r.failures);
        ExitCode::FAILURE
    }
}
