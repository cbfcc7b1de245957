use capillarity::solver::{make_initial_data, simulate, Profile, Stepper};
use capillarity::{
    make_grid, CapillaryModel, ModelConfig, PhysParams, PressureLaw, RealField, State,
    StepperConfig, VectorField,
};

fn vdw_model(capillary: CapillaryModel) -> ModelConfig {
    ModelConfig {
        capillary,
        params: PhysParams { mu: 1.0, lambda: 0.0, kappa: 0.05 },
        pressure: PressureLaw::VanDerWaals { a: 1.2, b: 1.0 / 3.0, rt: 1.0 },
    }
}

fn cfg(dt: f64, t_end: f64, sample_every: usize) -> StepperConfig {
    StepperConfig {
        dt,
        t_end,
        sample_every,
        dealias: true,
        density_floor: 0.5,
        density_ceiling: 2.0,
        cfl: 0.5,
        max_steps: 10_000_000,
    }
}

#[test]
fn equilibrium_survives_a_million_steps() {
    let g = make_grid(1, 16, 1.0).unwrap();
    let s = State::zeros(&g);
    let traj = simulate(&s, &vdw_model(CapillaryModel::Nsk), &cfg(1e-3, 1000.0, 250_000)).unwrap();
    assert_eq!(traj.states.len(), 5);
    for st in &traj.states {
        assert_eq!(st.q.max_abs(), 0.0);
        assert_eq!(st.u.max_abs(), 0.0);
    }
}

#[test]
fn every_model_keeps_mass_on_two_phase_data() {
    let g = make_grid(2, 32, 10.0).unwrap();
    let init = make_initial_data(&g, &Profile::TwoPhase { rho1: 0.7, rho2: 1.3, interface_width: 2.0 }).unwrap();
    for capillary in [
        CapillaryModel::Nsc,
        CapillaryModel::Nsk,
        CapillaryModel::Nsrw { epsilon: 0.3 },
        CapillaryModel::Nsop { alpha: 4.0 },
    ] {
        let c = StepperConfig {
            density_floor: 0.35,
            density_ceiling: 2.6,
            ..cfg(1e-3, 0.2, 50)
        };
        let traj = simulate(&init, &vdw_model(capillary), &c).unwrap();
        assert!(traj.mass_drift() < 1e-13, "{capillary:?}");
        assert_eq!(traj.order_parameter.is_some(), matches!(capillary, CapillaryModel::Nsop { .. }));
    }
}

#[test]
fn stepping_by_hand_matches_run() {
    let g = make_grid(1, 64, 10.0).unwrap();
    let q = RealField::from_fn(&g, |x| 0.05 * (2.0 * std::f64::consts::PI * x[0] / 10.0).cos());
    let init = State::new(0.0, q, VectorField::zeros(&g));
    let model = vdw_model(CapillaryModel::Nsrw { epsilon: 0.2 });
    let c = cfg(1e-3, 0.05, 50);
    let traj = simulate(&init, &model, &c).unwrap();
    let stepper = Stepper::new(&g, &model, &c).unwrap();
    let mut s = init;
    for _ in 0..50 {
        s = stepper.step(&s).unwrap();
    }
    let last = traj.last();
    assert!((s.t - last.t).abs() < 1e-12);
    assert!((&s.q - &last.q).max_abs() < 1e-13);
}
