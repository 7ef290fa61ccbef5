use std::process::ExitCode;

use polyflow_cli::{check, config, study};

const USAGE: &str = "\
polyflow - variable-density incompressible flow on polygonal meshes

USAGE:
    polyflow run   [--config <path>] [--key value ...]
    polyflow study [--config <path>] [--key value ...]
    polyflow check

Any configuration key can be overridden with a flag of the same name, e.g.
`polyflow study --family cartesian --levels 3 --t_final 0.2`.

KEYS (defaults in parentheses):
    case (guermond)            guermond | guermond_enclosed | zero
    mu (1.0)                   shear viscosity
    family (triangular)        triangular | cartesian | hexagonal | <mesh file>
    levels (4)                 refinement levels of a study
    level (0)                  refinement level of a single run
    dt0 (1e-3)                 time step at level 0, halved per level
    t_final (1.0)              final time
    picard_iterations (0)      fixed-point re-upwinding cap (0 = semi-implicit)
    diagnostics_every (1)      ledger row stride
    output (out)               output directory (under $POLYFLOW_OUT if set)
    emit_vtk (false)           write VTK snapshots
    vtk_every (100)            snapshot stride
    emit_matrix (false)        dump the first momentum system (Matrix Market)
    boundary (auto)            auto | homogeneous | exact
    serial (true)              serial study execution (byte-reproducible)
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        print!("{USAGE}");
        return ExitCode::from(u8::from(args.is_empty()));
    }
    match run(&args) {
        Ok(clean) => {
            if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: &[String]) -> Result<bool, String> {
    let (sub, config_path, overrides) = config::parse_args(args)?;
    match sub.as_str() {
        "run" => {
            let cfg = config::RunConfig::from_sources(config_path.as_deref(), &overrides)?;
            let summary = study::run_single(&cfg)?;
            println!(
                "run complete: {} steps to t = {}, density range [{:.6}, {:.6}]",
                summary.steps, summary.final_time, summary.rho_range.0, summary.rho_range.1
            );
            println!("diagnostics: {}", summary.diagnostics_path.display());
            Ok(true)
        }
        "study" => {
            let cfg = config::RunConfig::from_sources(config_path.as_deref(), &overrides)?;
            let report = study::run_convergence_study(&cfg)?;
            println!("family,level,h,dt,err_density,err_velocity,eoc_density,eoc_velocity");
            for r in &report.rows {
                println!(
                    "{},{},{:.4e},{:.4e},{:.6e},{:.6e},{},{}",
                    r.family,
                    r.level,
                    r.h,
                    r.dt,
                    r.err_density,
                    r.err_velocity,
                    r.eoc_density.map(|v| format!("{v:.3}")).unwrap_or_default(),
                    r.eoc_velocity.map(|v| format!("{v:.3}")).unwrap_or_default(),
                );
            }
            println!("report: {}", report.report_path.display());
            Ok(true)
        }
        "check" => {
            if config_path.is_some() || !overrides.is_empty() {
                return Err("check takes no options".into());
            }
            let results = check::run_checks();
            Ok(check::print_table(&results))
        }
        other => Err(format!("unknown subcommand `{other}`; try --help")),
    }
}
