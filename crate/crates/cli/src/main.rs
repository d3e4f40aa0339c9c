//! Command-line front end: simulate benchmark panels, run estimators,
//! reproduce the relative-standard-error tables, verify moment robustness,
//! and export data.
//!
//! Every command is deterministic under a fixed configuration and seed;
//! numbers are serialized with 17 significant digits so files round-trip
//! exactly. Flags override values from `--config`; the resolved
//! configuration is echoed into every report.

mod config;
mod data;

use clap::{Parser, Subcommand};
use config::{Resolved, RunConfig};
use panel_mph::dgp::simulate_panel;
use panel_mph::estimate::{
    average_effect, efficiency_bound, gmm_solve, table_experiment_a, table_experiment_b,
    EffectFlavor,
};
use panel_mph::fhrcheck::{self, CandidateMoment};
use panel_mph::moments::{self, family_by_id, ash_value, Experiment, FamilyContext, Regime};
use panel_mph::mph::Theta;
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "panel-mph", about = "Robust moment machinery for panel duration models")]
struct Cli {
    /// JSON configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread cap (does not change results).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate panels from a benchmark design and write them as CSV.
    Simulate {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Include the latent heterogeneity column `v`.
        #[arg(long)]
        with_latent: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the common parameter from a panel CSV by just-identified GMM.
    Estimate {
        /// Input CSV with header unit,y0,x1,y1,x2,y2[,v].
        #[arg(long)]
        data: Option<PathBuf>,
        /// Moment family identifier: simple | ab | loceff | eff-fb | eff-se.
        #[arg(long)]
        moment: Option<String>,
        /// Working-model probability for the loceff family.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Efficiency bounds of a score family on simulated panels.
    Bounds {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        moment: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative-standard-error table for a benchmark design.
    Tables {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Robustness-condition check of a moment family against a model.
    Check {
        /// Model identifier: mph | logit | poisson.
        #[arg(long)]
        model: Option<String>,
        /// Candidate moment family (mph model): simple | ab | loceff | eff-fb | ash | asf.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average-structural-hazard estimate at an evaluation point.
    Ash {
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        yprev: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Influence-function flavor: efficient | working | simple.
        #[arg(long)]
        flavor: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let file_cfg = match cli.config.as_deref().map(RunConfig::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    if let Some(t) = cli.threads.or(file_cfg.threads) {
        // worker cap only; all reductions are order-deterministic
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let code = match run(cli.command, file_cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cmd: Command, file: RunConfig) -> Result<(), String> {
    match cmd {
        Command::Simulate { experiment, n, seed, with_latent, out } => {
            let r = Resolved::build(&file, experiment, n, seed)?;
            let with_latent = with_latent || file.with_latent.unwrap_or(false);
            let cfg = r.dgp_config()?;
            let panels = simulate_panel(&cfg, r.n, r.seed).map_err(|e| e.to_string())?;
            let csv = data::panels_to_csv(&panels, with_latent);
            let path = out.or(file.out.clone().map(PathBuf::from)).ok_or("missing --out path")?;
            std::fs::write(&path, csv).map_err(|e| format!("writing {}: {e}", path.display()))?;
            println!("wrote {} rows to {}", r.n, path.display());
            Ok(())
        }
        Command::Estimate { data, moment, p, experiment, out } => {
            let r = Resolved::build(&file, experiment, None, None)?;
            let data = data.or(file.data.clone().map(PathBuf::from)).ok_or("missing --data path")?;
            let fam_id = moment.or(file.moment.clone()).unwrap_or_else(|| "simple".into());
            let p = p.or(file.p).unwrap_or(0.5);
            let panels = data::panels_from_csv(&data)?;
            let ctx = FamilyContext { p, experiment: r.experiment, ..Default::default() };
            let fam = family_by_id(&fam_id, &ctx).ok_or(format!("unknown moment family {fam_id}"))?;
            let mut warnings = Vec::new();
            if fam.regime == Regime::StrictExogeneityOnly && r.experiment == Experiment::B {
                warnings
                    .push("strict-exogeneity score on a feedback design is inconsistent".to_string());
            }
            let init = r.theta0()?;
            let res = gmm_solve(&fam, &panels, &init, 1e-9, 200).map_err(|e| e.to_string())?;
            let report = json!({
                "config": r.echo(&file, &[("moment", json!(fam_id)), ("p", json!(p)),
                                          ("data", json!(data.display().to_string()))]),
                "theta_hat": {"alpha": fmt(res.theta_hat.alpha), "beta": fmt(res.theta_hat.beta),
                               "gamma": fmt(res.theta_hat.gamma)},
                "se": {"alpha": fmt(res.se[0]), "beta": fmt(res.se[1]), "gamma": fmt(res.se[2])},
                "converged": res.converged,
                "iterations": res.iterations,
                "moment_norm": fmt(res.moment_norm),
                "warnings": warnings,
            });
            emit(&report, out.or(file.out.map(PathBuf::from)))?;
            if res.converged {
                Ok(())
            } else {
                Err("estimation did not converge".into())
            }
        }
        Command::Bounds { experiment, moment, n, seed, out } => {
            let r = Resolved::build(&file, experiment, n, seed)?;
            let fam_id = moment.or(file.moment.clone()).unwrap_or_else(|| "eff-fb".into());
            let ctx = FamilyContext { experiment: r.experiment, ..Default::default() };
            let fam = family_by_id(&fam_id, &ctx).ok_or(format!("unknown moment family {fam_id}"))?;
            let cfg = r.dgp_config()?;
            let panels = simulate_panel(&cfg, r.n, r.seed).map_err(|e| e.to_string())?;
            let theta = r.theta0()?;
            let b = efficiency_bound(&fam, &panels, &theta).map_err(|e| e.to_string())?;
            let report = json!({
                "config": r.echo(&file, &[("moment", json!(fam_id))]),
                "bound_se": {"alpha": fmt(b.bound_se[0]), "beta": fmt(b.bound_se[1]),
                              "gamma": fmt(b.bound_se[2])},
            });
            emit(&report, out.or(file.out.map(PathBuf::from)))
        }
        Command::Tables { experiment, n, seed, out } => {
            let r = Resolved::build(&file, experiment, n, seed)?;
            let cfg = r.dgp_config()?;
            let panels = simulate_panel(&cfg, r.n, r.seed).map_err(|e| e.to_string())?;
            let theta = r.theta0()?;
            let table = match r.experiment {
                Experiment::A => table_experiment_a(&panels, &theta).map_err(|e| e.to_string())?,
                Experiment::B => {
                    let point = moments::HazardPoint { y: 1.0, y_prev: 1.0, x: 1.0 };
                    table_experiment_b(&panels, &theta, point).map_err(|e| e.to_string())?
                }
            };
            print!("{}", table.to_aligned_text());
            if let Some(path) = out.or(file.out.map(PathBuf::from)) {
                std::fs::write(&path, table.to_csv())
                    .map_err(|e| format!("writing {}: {e}", path.display()))?;
            }
            Ok(())
        }
        Command::Check { model, phi, tol, out } => {
            let model_id = model.or(file.model.clone()).unwrap_or_else(|| "mph".into());
            let tol = tol.or(file.tol).unwrap_or(1e-6);
            let report = match model_id.as_str() {
                "mph" => {
                    let phi_id = phi.or(file.phi.clone()).unwrap_or_else(|| "ab".into());
                    let ctx = FamilyContext { experiment: Experiment::B, ..Default::default() };
                    let theta = panel_mph::dgp::benchmark_theta();
                    let cand = mph_candidate(&phi_id, &ctx, &theta)?;
                    let m = fhrcheck::mph_model(2, 96);
                    let rep = fhrcheck::check_fhr(&m, &cand, &theta.to_vec(), tol);
                    json!({
                        "model": "mph", "phi": phi_id, "tol": tol,
                        "cond1_residual": fmt(rep.cond1_residual),
                        "cond2_variation": rep.cond2_variation.iter().map(|v| fmt(*v)).collect::<Vec<_>>(),
                        "pass": rep.pass(),
                    })
                }
                "logit" => {
                    let grid = gl_grid(12, 3.0);
                    let m = fhrcheck::logit_model(grid, vec![0.0, 1.0]);
                    let ns = fhrcheck::discrete_null_space(&m, &[0.7, 0.3], 1e-9);
                    json!({"model": "logit", "null_dimension": ns.dim,
                           "paths": ns.layout.n_paths(), "constraints": ns.n_constraints})
                }
                "poisson" => {
                    let grid: Vec<f64> = (0..12).map(|k| -5.0 + 1.8 * k as f64 / 11.0).collect();
                    let m = fhrcheck::poisson_model(20, grid, vec![0.0, 1.0]);
                    let ns = fhrcheck::discrete_null_space(&m, &[0.5, 0.2], 1e-9);
                    json!({"model": "poisson", "null_dimension": ns.dim,
                           "paths": ns.layout.n_paths(), "constraints": ns.n_constraints})
                }
                other => return Err(format!("unknown model {other}")),
            };
            emit(&report, out.or(file.out.map(PathBuf::from)))?;
            if report.get("pass").and_then(|v| v.as_bool()) == Some(false) {
                return Err("check failed".into());
            }
            Ok(())
        }
        Command::Ash { y, yprev, x, experiment, n, seed, flavor, out } => {
            let r = Resolved::build(&file, experiment, n, seed)?;
            let point = moments::HazardPoint {
                y: y.or(file.y).unwrap_or(1.0),
                y_prev: yprev.or(file.yprev).unwrap_or(1.0),
                x: x.or(file.x).unwrap_or(1.0),
            };
            let flavor_id = flavor.or(file.flavor.clone()).unwrap_or_else(|| "working".into());
            let cfg = r.dgp_config()?;
            let panels = simulate_panel(&cfg, r.n, r.seed).map_err(|e| e.to_string())?;
            let ctx = FamilyContext { experiment: r.experiment, ..Default::default() };
            let (score_id, flavor) = match flavor_id.as_str() {
                "efficient" => ("eff-fb", EffectFlavor::EfficientScore),
                "working" => ("loceff", EffectFlavor::WorkingModel),
                "simple" => ("simple", EffectFlavor::Simple),
                other => return Err(format!("unknown flavor {other}")),
            };
            let p_hat = panels.iter().map(|p| p.x[1]).sum::<f64>() / panels.len() as f64;
            let score =
                family_by_id(score_id, &FamilyContext { p: p_hat, ..ctx }).expect("known id");
            let init = r.theta0()?;
            let solved = gmm_solve(&score, &panels, &init, 1e-8, 200).map_err(|e| e.to_string())?;
            let effect = moments::ash_moment(point);
            let res = average_effect(&effect, &score, &panels, &solved.theta_hat, flavor)
                .map_err(|e| e.to_string())?;
            let report = json!({
                "config": r.echo(&file, &[("flavor", json!(flavor_id)),
                    ("y", json!(point.y)), ("yprev", json!(point.y_prev)), ("x", json!(point.x))]),
                "theta_hat": {"alpha": fmt(solved.theta_hat.alpha), "beta": fmt(solved.theta_hat.beta),
                               "gamma": fmt(solved.theta_hat.gamma)},
                "mu_hat": fmt(res.mu_hat),
                "se": fmt(res.se),
                "converged": solved.converged,
            });
            emit(&report, out.or(file.out.map(PathBuf::from)))?;
            if solved.converged {
                Ok(())
            } else {
                Err("estimation did not converge".into())
            }
        }
    }
}

/// Candidate for the robustness check, with the average-effect offsets for
/// the structural-hazard and structural-function moments.
fn mph_candidate(
    phi_id: &str,
    ctx: &FamilyContext,
    _theta: &Theta,
) -> Result<CandidateMoment, String> {
    let fam = family_by_id(phi_id, ctx).ok_or(format!("unknown moment family {phi_id}"))?;
    if fam.regime != Regime::Fhr {
        return Err(format!("{phi_id} is not a robust-regime family"));
    }
    let cand = CandidateMoment::from_moment(fam);
    Ok(match phi_id {
        "ash" => {
            let point = ctx.hazard_point;
            cand.with_offset(move |theta, a| {
                let th = Theta::from_slice(theta).expect("valid theta");
                vec![ash_value(&th, &point) * a.exp()]
            })
        }
        "asf" => {
            let point = ctx.structural_point;
            cand.with_offset(move |theta, a| {
                let th = Theta::from_slice(theta).expect("valid theta");
                let inv_a = 1.0 / th.alpha;
                let g = panel_mph::numerics::log_gamma(1.0 + inv_a).unwrap().exp();
                vec![
                    g * (-(point.x * th.beta + th.gamma * point.y_prev) * inv_a).exp()
                        * (-a * inv_a).exp(),
                ]
            })
        }
        _ => cand,
    })
}

fn gl_grid(n: usize, half_width: f64) -> Vec<f64> {
    let (x, _) = panel_mph::numerics::gauss_legendre(n);
    x.iter().map(|t| half_width * t).collect()
}

/// 17-significant-digit serialization for round-trip exactness.
fn fmt(v: f64) -> serde_json::Value {
    serde_json::Value::String(format!("{v:.16e}"))
}

fn emit(report: &serde_json::Value, out: Option<PathBuf>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(report).expect("serializable") + "\n";
    match out {
        Some(path) => {
            std::fs::write(&path, &text).map_err(|e| format!("writing {}: {e}", path.display()))?;
            println!("wrote report to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
