//! The `check` subcommand: a fast sweep over the scheme's provable
//! invariants and algebraic identities, printed as a pass/fail table.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polyflow::convection::{c_h, d_h, d_h_jump_form, discrete_ibp_check, upwind_seminorm};
use polyflow::geometry::{Mat2, Rect, Vec2};
use polyflow::operators::{div_t, grad_t, stab_st};
use polyflow::spaces::interpolate_velocity;
use polyflow::timestepper::{Simulation, TimeConfig};
use polyflow::verify::{self, samples, ManufacturedCase};
use polyflow::Mesh;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn meshes() -> Vec<(&'static str, Mesh)> {
    vec![
        ("cartesian 2x2", Mesh::build_cartesian(2, 2, Rect::unit())),
        ("triangular n=1", Mesh::build_triangular(1)),
        ("hexagonal 0", Mesh::bundled_hexagonal(0).expect("bundled mesh")),
    ]
}

pub fn run_checks() -> Vec<CheckResult> {
    let mut results = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        results.push(CheckResult {
            name,
            passed,
            detail,
        });
    };

    // Geometric identities hold by construction; report the worst residual.
    {
        let mut worst = 0.0_f64;
        for (_, mesh) in meshes() {
            for t in 0..mesh.n_cells() {
                let mut closure = Vec2::zeros();
                let mut magic = Mat2::zeros();
                for (_, len, n_tf, x_f) in mesh.cell_face_geometry(t) {
                    closure += n_tf * len;
                    magic += len * n_tf * (x_f - mesh.cell_centroid(t)).transpose();
                }
                magic -= Mat2::identity() * mesh.cell_measure(t);
                worst = worst
                    .max(closure.norm())
                    .max(magic.norm() / mesh.cell_measure(t));
            }
        }
        push("mesh closure + gradient identities", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // Gradient exactness and stabilization kernel on affine fields.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst = 0.0_f64;
        for (_, mesh) in meshes() {
            use rand::Rng;
            let a = Mat2::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let b = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let v = interpolate_velocity(&mesh, |p| a * p + b, false);
            for t in 0..mesh.n_cells() {
                worst = worst.max((grad_t(&mesh, t, &v) - a).norm() / (1.0 + a.norm()));
                worst = worst.max(stab_st(&mesh, t, &v, &v).abs());
            }
        }
        push("gradient exact / stabilization zero on affine", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // Skew-symmetry of the convection form.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst = 0.0_f64;
        for (_, mesh) in meshes() {
            for _ in 0..100 {
                let rho = samples::random_cellfield(&mesh, &mut rng, 0.5, 3.0);
                let w = samples::random_hybrid(&mesh, &mut rng);
                let v = samples::random_hybrid(&mesh, &mut rng);
                worst = worst.max(c_h(&mesh, &rho, &w, &v, &v).abs());
            }
        }
        push("convection non-dissipativity", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // Advection coercivity identity and jump reformulation.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst = 0.0_f64;
        for (_, mesh) in meshes() {
            for _ in 0..100 {
                let w = samples::divergence_free(&mesh, &mut rng);
                let eta = samples::random_cellfield(&mesh, &mut rng, 0.5, 3.0);
                let chi = samples::random_cellfield(&mesh, &mut rng, -2.0, 2.0);
                let semi = upwind_seminorm(&mesh, &w, &eta);
                worst = worst.max(
                    (d_h(&mesh, &w, &eta, &eta) - semi * semi).abs() / (1.0 + semi * semi),
                );
                let a = d_h(&mesh, &w, &eta, &chi);
                let b = d_h_jump_form(&mesh, &w, &eta, &chi);
                worst = worst.max((a - b).abs() / (1.0 + a.abs()));
            }
        }
        push("advection coercivity + jump reformulation", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // Discrete integration by parts.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut worst = 0.0_f64;
        for (_, mesh) in meshes() {
            for _ in 0..50 {
                let rho = samples::random_cellfield(&mesh, &mut rng, 0.5, 3.0);
                let u = samples::divergence_free(&mesh, &mut rng);
                let v = samples::random_hybrid(&mesh, &mut rng);
                worst = worst.max(discrete_ibp_check(&mesh, &rho, &u, &v));
            }
        }
        push("discrete integration by parts", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // Divergence-free sampler really lands in the constrained space.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0_f64;
        for (_, mesh) in meshes() {
            for _ in 0..10 {
                let w = samples::divergence_free(&mesh, &mut rng);
                for t in 0..mesh.n_cells() {
                    worst = worst.max(div_t(&mesh, t, &w).abs());
                }
            }
        }
        push("divergence-free sampling", worst <= 1e-12, format!("worst {worst:.2e}"));
    }

    // Transport matrix is an M-matrix on divergence-free velocities.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut ok = true;
        let mut detail = String::from("off-diagonals <= 0, rows diagonally dominant");
        for (name, mesh) in meshes() {
            for &dt in &[1e-3, 0.1] {
                let u = samples::divergence_free(&mesh, &mut rng);
                let rho = polyflow::CellField::constant(&mesh, 1.0);
                let system = polyflow::assembly::assemble_density_transport(
                    &mesh,
                    &u,
                    &rho,
                    dt,
                    polyflow::assembly::StepBoundary::Homogeneous,
                );
                let m = system.matrix();
                for (r, c, v) in m.entries() {
                    if r != c && v > 1e-14 {
                        ok = false;
                        detail = format!("{name}: positive off-diagonal {v:.2e}");
                    }
                }
                for t in 0..mesh.n_cells() {
                    let diag = m.get(t, t);
                    let off: f64 = (0..mesh.n_cells())
                        .filter(|&c| c != t)
                        .map(|c| m.get(t, c).abs())
                        .sum();
                    if diag < off - 1e-12 * diag.abs() {
                        ok = false;
                        detail = format!("{name}: row {t} not diagonally dominant");
                    }
                }
            }
        }
        push("transport M-matrix structure", ok, detail);
    }

    // Conservation and energy decay over a short homogeneous run.
    {
        let mesh = Mesh::build_triangular(3);
        let mut sim = Simulation::new(&mesh, verify::guermond_enclosed(0.1));
        let config = TimeConfig::new(2e-3, 0.06);
        let mut kinetic = Vec::new();
        let outcome = sim.run(&config, |_, _, row| kinetic.push(row.kinetic));
        match outcome {
            Ok((_, ledger)) => {
                let mass0 = ledger.rows[0].mass;
                let drift = ledger
                    .rows
                    .iter()
                    .map(|r| (r.mass - mass0).abs())
                    .fold(0.0, f64::max);
                push(
                    "mass conservation + maximum principle (short run)",
                    drift <= 1e-10 * mass0,
                    format!("mass drift {drift:.2e}"),
                );
            }
            Err(e) => push(
                "mass conservation + maximum principle (short run)",
                false,
                e.to_string(),
            ),
        }
    }

    // Manufactured case against the PDE residual oracle.
    {
        let case = ManufacturedCase::guermond(1.0);
        match case.validate(200, 0x5eed) {
            Ok(worst) => push("manufactured solution residual oracle", true, format!("worst momentum residual {worst:.2e}")),
            Err(e) => push("manufactured solution residual oracle", false, e),
        }
    }

    results
}

/// Prints the table; returns whether everything passed.
pub fn print_table(results: &[CheckResult]) -> bool {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut all = true;
    for r in results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {:width$}  {}", r.name, r.detail);
        all &= r.passed;
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let results = run_checks();
        assert!(!results.is_empty());
        for r in &results {
            assert!(r.passed, "{} failed: {}", r.name, r.detail);
        }
    }
}
