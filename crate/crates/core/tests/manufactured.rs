//! One-step and steady manufactured checks of the full solve chain.

use std::sync::Arc;

use polyflow::geometry::Vec2;
use polyflow::timestepper::{BoundaryMode, CaseData, Simulation, TimeConfig};
use polyflow::verify::{BoundaryChoice, ManufacturedCase};
use polyflow::{CellField, HybridVelocity, Mesh};

/// One implicit transport step from exactly projected data reproduces the
/// advected density to truncation error, decaying under refinement.
#[test]
fn guermond_density_single_step_error_decays() {
    let case = ManufacturedCase::guermond(1.0);
    let mut errors = Vec::new();
    for n in [8, 16, 32] {
        // halve the step with the mesh, as in the refinement protocol
        let dt = 8e-3 / n as f64;
        let mesh = Mesh::build_triangular(n);
        let mut sim = Simulation::new(&mesh, case.case_data(BoundaryChoice::ExactDirichlet));
        let state = sim.initialize().unwrap();
        let rho_new = sim.density_step(&state, dt).unwrap();
        let exact = CellField::project(&mesh, |p| (case.rho)(p, dt));
        errors.push(rho_new.sub(&exact).l2_norm(&mesh));
    }
    println!("one-step density errors: {errors:?}");
    assert!(errors[1] < 0.7 * errors[0], "{errors:?}");
    assert!(errors[2] < 0.7 * errors[1], "{errors:?}");
}

/// One momentum step from exact data stays close to the exact interpolant,
/// with the gap decaying under refinement.
#[test]
fn guermond_momentum_single_step_error_decays() {
    let case = ManufacturedCase::guermond(1.0);
    let mut errors = Vec::new();
    for n in [8, 16, 32] {
        let dt = 8e-3 / n as f64;
        let mesh = Mesh::build_triangular(n);
        let mut sim = Simulation::new(&mesh, case.case_data(BoundaryChoice::ExactDirichlet));
        let state = sim.initialize().unwrap();
        let rho_new = CellField::project(&mesh, |p| (case.rho)(p, dt));
        let (u_new, _) = sim.momentum_step(&state, &rho_new, dt, 0).unwrap();
        let exact = HybridVelocity::interpolate(&mesh, |p| (case.velocity)(p, dt), false);
        let diff = u_new.sub(&exact);
        errors.push(polyflow::spaces::norm_0h(&mesh, &diff));
    }
    println!("one-step velocity errors: {errors:?}");
    assert!(errors[1] < 0.7 * errors[0], "{errors:?}");
    assert!(errors[2] < 0.7 * errors[1], "{errors:?}");
}

/// Steady affine manufactured flow: u = g (y, x), rho = 1, p = 0,
/// f = rho (u . grad) u = g^2 (x, y). The gradient reconstruction is exact
/// on affine fields, so the steady solve recovers the interpolant up to the
/// convective consistency error, which decays under refinement.
#[test]
fn steady_affine_momentum_recovers_interpolant() {
    let g = 0.8;
    let exact_u = move |p: Vec2| Vec2::new(p.y, p.x) * g;
    let case = CaseData {
        rho0: Arc::new(|_| 1.0),
        u0: Arc::new(exact_u),
        force: Arc::new(move |p: Vec2, _| Vec2::new(p.x, p.y) * (g * g)),
        force_is_zero: false,
        mu: 1.0,
        boundary: BoundaryMode::Dirichlet {
            velocity: Arc::new(move |p: Vec2, _| exact_u(p)),
            density: Arc::new(|_, _| 1.0),
        },
    };
    let mut errors = Vec::new();
    for n in [8, 16] {
        let mesh = Mesh::build_triangular(n);
        let mut sim = Simulation::new(&mesh, case.clone());
        let state = sim.initialize().unwrap();
        let rho = CellField::constant(&mesh, 1.0);
        let (u_new, p_new) = sim
            .momentum_step(&state, &rho, f64::INFINITY, 0)
            .unwrap();
        let exact = HybridVelocity::interpolate(&mesh, exact_u, false);
        errors.push(polyflow::spaces::norm_0h(&mesh, &u_new.sub(&exact)));
        // pressure stays near zero mean by construction
        assert!(p_new.mass(&mesh).abs() <= 1e-10 * (1.0 + p_new.l1_norm(&mesh)));
    }
    println!("steady affine errors: {errors:?}");
    assert!(errors[0] <= 0.05 * g);
    assert!(errors[1] < 0.7 * errors[0], "{errors:?}");
}

/// Short full run of the benchmark on a coarse mesh: invariants hold, the
/// errors against the exact solution stay small.
#[test]
fn guermond_short_run_stays_accurate() {
    let case = ManufacturedCase::guermond(1.0);
    let mesh = Mesh::build_triangular(4);
    let mut sim = Simulation::new(&mesh, case.case_data(BoundaryChoice::ExactDirichlet));
    let mut tracker = polyflow::verify::ErrorTracker::new(&mesh, case.clone());
    let config = TimeConfig::new(1e-3, 0.05);
    let (state, ledger) = sim
        .run(&config, |_, s, _| tracker.record(s))
        .unwrap();
    assert!((state.t - 0.05).abs() <= 1e-12);
    // density within the exact range seen so far
    assert!(state.rho.min() >= 2.0 - 1e-9);
    assert!(state.rho.max() <= 3.0 + 0.2);
    let err_rho = polyflow::verify::density_error(&tracker.series, config.dt);
    let err_u = polyflow::verify::velocity_error(&tracker.series, config.dt, 2.0, case.mu);
    println!("short-run errors: rho {err_rho:.3e}, u {err_u:.3e}");
    assert!(err_rho < 0.2);
    assert!(err_u < 0.5);
    assert!(ledger.rows.iter().all(|r| r.div_norm <= 1e-8 * (1.0 + r.kinetic)));
}
