//! Single runs and convergence studies over mesh families, with CSV, VTK,
//! and plot-script outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use polyflow::timestepper::{CaseData, Simulation, TimeConfig};
use polyflow::verify::{
    self, density_error, eoc, velocity_error, BoundaryChoice, ErrorTracker, ManufacturedCase,
};
use polyflow::{io as pio, CellField, Mesh};

use crate::config::RunConfig;

#[derive(Clone, Debug)]
pub enum Family {
    Triangular,
    Cartesian,
    Hexagonal,
    File(PathBuf),
}

impl Family {
    pub fn parse(name: &str) -> Family {
        match name {
            "triangular" => Family::Triangular,
            "cartesian" => Family::Cartesian,
            "hexagonal" => Family::Hexagonal,
            other => Family::File(PathBuf::from(other)),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::Triangular => "triangular".into(),
            Family::Cartesian => "cartesian".into(),
            Family::Hexagonal => "hexagonal".into(),
            Family::File(p) => p.display().to_string(),
        }
    }

    /// Mesh at refinement level `level` (level-0 sizes: triangular edge
    /// 0.25, Cartesian edge 0.2, hexagonal diameter ~0.12).
    pub fn mesh(&self, level: usize) -> Result<Mesh, String> {
        match self {
            Family::Triangular => Ok(Mesh::build_triangular(4 << level)),
            Family::Cartesian => Ok(Mesh::build_cartesian(
                5 << level,
                5 << level,
                polyflow::Rect::unit(),
            )),
            Family::Hexagonal => Mesh::bundled_hexagonal(level)
                .map_err(|e| format!("hexagonal level {level}: {e}")),
            Family::File(path) => {
                if level != 0 {
                    return Err(format!(
                        "mesh file `{}` has a single level; refinement is not available",
                        path.display()
                    ));
                }
                Mesh::load(path).map_err(|e| format!("loading {}: {e}", path.display()))
            }
        }
    }
}

/// The case as configured plus, when it exists, the exact solution used for
/// error measurement and Dirichlet data.
pub fn resolve_case(cfg: &RunConfig) -> Result<(CaseData, Option<ManufacturedCase>), String> {
    match cfg.case.as_str() {
        "guermond" => {
            let case = ManufacturedCase::guermond(cfg.mu);
            let choice = match cfg.boundary.as_str() {
                // The exact velocity has a nonzero boundary trace: exact
                // Dirichlet data is the meaningful default.
                "auto" | "exact" => BoundaryChoice::ExactDirichlet,
                "homogeneous" => BoundaryChoice::Homogeneous,
                other => return Err(format!("unknown boundary `{other}`")),
            };
            Ok((case.case_data(choice), Some(case)))
        }
        "guermond_enclosed" => {
            if cfg.boundary == "exact" {
                return Err(
                    "guermond_enclosed runs under homogeneous boundary conditions by construction"
                        .into(),
                );
            }
            Ok((verify::guermond_enclosed(cfg.mu), None))
        }
        "zero" => Ok((CaseData::quiescent(cfg.mu), None)),
        other => Err(format!(
            "unknown case `{other}` (expected guermond | guermond_enclosed | zero)"
        )),
    }
}

fn ensure_output_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir)
        .map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))?;
    // Probe writability up front so a run never computes before failing.
    let probe = dir.join(".write_probe");
    std::fs::write(&probe, b"ok")
        .map_err(|e| format!("output directory {} is not writable: {e}", dir.display()))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub rho_range: (f64, f64),
    pub diagnostics_path: PathBuf,
}

/// Runs one simulation at `cfg.level`, writing the diagnostics CSV and the
/// optional VTK snapshots and matrix dump.
pub fn run_single(cfg: &RunConfig) -> Result<RunSummary, String> {
    let out = cfg.output_dir();
    ensure_output_dir(&out)?;
    let (case_data, _exact) = resolve_case(cfg)?;
    let family = Family::parse(&cfg.family);
    let mesh = family.mesh(cfg.level)?;
    let dt = cfg.dt0 / (1 << cfg.level) as f64;
    let config = TimeConfig {
        dt,
        t_final: cfg.t_final,
        picard_iterations: cfg.picard_iterations,
        diagnostics_every: cfg.diagnostics_every,
    };

    let mut sim = Simulation::new(&mesh, case_data);

    if cfg.emit_matrix {
        // Dump the first momentum system for external inspection.
        let state = sim.initialize().map_err(|e| e.to_string())?;
        let rho_new = sim.density_step(&state, dt).map_err(|e| e.to_string())?;
        let system = sim.saddle_system(&state, &rho_new, dt);
        pio::write_matrix_market(
            out.join("saddle.mtx"),
            &system.matrix(),
            "momentum saddle system, first step",
        )
        .map_err(|e| format!("writing saddle.mtx: {e}"))?;
    }

    let vtk_every = cfg.vtk_every.max(1);
    let n_steps = config.n_steps();
    let mut vtk_error: Option<String> = None;
    let emit_vtk = cfg.emit_vtk;
    let out_ref = &out;
    let mesh_ref = &mesh;
    let (state, ledger) = sim
        .run(&config, |step, state, _| {
            if emit_vtk && (step % vtk_every == 0 || step == n_steps) && vtk_error.is_none() {
                let path = out_ref.join(format!("fields_{step:06}.vtk"));
                if let Err(e) = pio::write_vtk(
                    &path,
                    mesh_ref,
                    &state.rho,
                    &state.u,
                    &state.p,
                    &format!("step {step}"),
                ) {
                    vtk_error = Some(format!("writing {}: {e}", path.display()));
                }
            }
        })
        .map_err(|e| e.to_string())?;
    if let Some(e) = vtk_error {
        return Err(e);
    }

    let diagnostics_path = out.join("diagnostics.csv");
    std::fs::write(&diagnostics_path, pio::diagnostics_csv(&ledger))
        .map_err(|e| format!("writing diagnostics: {e}"))?;

    Ok(RunSummary {
        steps: n_steps,
        final_time: state.t,
        rho_range: (state.rho.min(), state.rho.max()),
        diagnostics_path,
    })
}

#[derive(Clone, Debug)]
pub struct ReportRow {
    pub family: String,
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub err_density: f64,
    pub err_velocity: f64,
    pub eoc_density: Option<f64>,
    pub eoc_velocity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub rows: Vec<ReportRow>,
    pub report_path: PathBuf,
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out =
        String::from("family,level,h,dt,err_density,err_velocity,eoc_density,eoc_velocity\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.level,
            fmt(r.h),
            fmt(r.dt),
            fmt(r.err_density),
            fmt(r.err_velocity),
            r.eoc_density.map(fmt).unwrap_or_default(),
            r.eoc_velocity.map(fmt).unwrap_or_default(),
        );
    }
    out
}

fn plot_script(rows: &[ReportRow]) -> String {
    let (h0, e_rho, e_u) = rows
        .first()
        .map(|r| (r.h, r.err_density, r.err_velocity))
        .unwrap_or((1.0, 1.0, 1.0));
    format!(
        "# log-log convergence plot; run: gnuplot plot.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 1200,500\n\
         set output 'convergence.png'\n\
         set multiplot layout 1,2\n\
         set logscale xy\n\
         set xlabel 'h'\n\
         set key bottom right\n\
         set title 'Density error (energy norm)'\n\
         plot 'report.csv' every ::1 using 3:5 with linespoints title 'error', \\\n\
              {cr:.6e}*sqrt(x) with lines dashtype 2 title 'h^{{1/2}}'\n\
         set title 'Velocity error (energy norm)'\n\
         plot 'report.csv' every ::1 using 3:6 with linespoints title 'error', \\\n\
              {cu:.6e}*x with lines dashtype 2 title 'h'\n\
         unset multiplot\n",
        cr = e_rho / h0.sqrt(),
        cu = e_u / h0,
    )
}

struct LevelOutput {
    row: ReportRow,
    diagnostics: String,
}

fn run_level(
    cfg: &RunConfig,
    family: &Family,
    exact: &ManufacturedCase,
    level: usize,
) -> Result<LevelOutput, String> {
    let mesh = family.mesh(level)?;
    let dt = cfg.dt0 / (1 << level) as f64;
    let config = TimeConfig {
        dt,
        t_final: cfg.t_final,
        picard_iterations: cfg.picard_iterations,
        diagnostics_every: cfg.diagnostics_every,
    };
    let (case_data, _) = resolve_case(cfg)?;
    let mut sim = Simulation::new(&mesh, case_data);
    let mut tracker = ErrorTracker::new(&mesh, exact.clone());
    let (_, ledger) = sim
        .run(&config, |_, state, _| tracker.record(state))
        .map_err(|e| format!("level {level}: {e}"))?;

    let rho_lwr = CellField::project(&mesh, |p| (exact.rho)(p, 0.0)).min();
    let err_density = density_error(&tracker.series, dt);
    let err_velocity = velocity_error(&tracker.series, dt, rho_lwr, exact.mu);
    Ok(LevelOutput {
        row: ReportRow {
            family: family.name(),
            level,
            h: mesh.h(),
            dt,
            err_density,
            err_velocity,
            eoc_density: None,
            eoc_velocity: None,
        },
        diagnostics: pio::diagnostics_csv(&ledger),
    })
}

/// Runs the refinement study: level `l` uses the family mesh at level `l`
/// and `dt = dt0 / 2^l`. Writes `report.csv`, per-level diagnostics, and a
/// gnuplot script. On failure writes `failure.txt` and returns the error.
pub fn run_convergence_study(cfg: &RunConfig) -> Result<StudyReport, String> {
    let out = cfg.output_dir();
    ensure_output_dir(&out)?;
    let result = run_convergence_study_inner(cfg, &out);
    if let Err(e) = &result {
        let _ = std::fs::write(out.join("failure.txt"), format!("study failed: {e}\n"));
    }
    result
}

fn run_convergence_study_inner(cfg: &RunConfig, out: &Path) -> Result<StudyReport, String> {
    let (_, exact) = resolve_case(cfg)?;
    let exact = exact.ok_or_else(|| {
        format!(
            "case `{}` has no exact solution; a convergence study needs one",
            cfg.case
        )
    })?;
    // Validate the manufactured force against the PDE residual oracle before
    // spending any time on runs.
    exact
        .validate(200, 0x5eed)
        .map_err(|e| format!("manufactured case fails the PDE residual oracle: {e}"))?;

    let family = Family::parse(&cfg.family);
    let levels: Vec<usize> = (0..cfg.levels).collect();

    let mut outputs: Vec<LevelOutput> = if cfg.serial {
        let mut v = Vec::new();
        for &l in &levels {
            v.push(run_level(cfg, &family, &exact, l)?);
        }
        v
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = levels
                .iter()
                .map(|&l| {
                    let family = &family;
                    let exact = &exact;
                    scope.spawn(move || run_level(cfg, family, exact, l))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("level thread"))
                .collect::<Result<Vec<_>, _>>()
        })?
    };

    let errs_rho: Vec<f64> = outputs.iter().map(|o| o.row.err_density).collect();
    let errs_u: Vec<f64> = outputs.iter().map(|o| o.row.err_velocity).collect();
    let hs: Vec<f64> = outputs.iter().map(|o| o.row.h).collect();
    if outputs.len() >= 2 {
        let r_rho = eoc(&errs_rho, &hs);
        let r_u = eoc(&errs_u, &hs);
        for (i, o) in outputs.iter_mut().enumerate().skip(1) {
            o.row.eoc_density = r_rho[i - 1];
            o.row.eoc_velocity = r_u[i - 1];
        }
    }

    for o in &outputs {
        let path = out.join(format!("diagnostics_level{}.csv", o.row.level));
        std::fs::write(&path, &o.diagnostics)
            .map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    let rows: Vec<ReportRow> = outputs.into_iter().map(|o| o.row).collect();
    let report_path = out.join("report.csv");
    std::fs::write(&report_path, report_csv(&rows))
        .map_err(|e| format!("writing report: {e}"))?;
    std::fs::write(out.join("plot.gp"), plot_script(&rows))
        .map_err(|e| format!("writing plot script: {e}"))?;

    Ok(StudyReport { rows, report_path })
}
