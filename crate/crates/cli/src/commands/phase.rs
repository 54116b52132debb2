use std::f64::consts::FRAC_PI_2;

use anyhow::Result;
use floquet_east::classical::ClassicalParams;
use floquet_east::large_deviations::{
    activity_density, activity_tangent, instantaneous_increment_series, partition_function, plateau_relative_change,
    refine_crossover, ActivityPoint,
};
use floquet_east::CircuitParams;
use rayon::prelude::*;
use serde_json::json;

use super::classical::{classical_curve, crossover_cells, grid_key, Curve, Search};
use crate::config::{load, Method, Mode, PhaseDiagramArgs, PhaseDiagramConfig};
use crate::output::{key_f64, num, opt_num, Output};
use crate::{Context, Failures};

struct Row {
    gamma: f64,
    sites: usize,
    steps: Option<usize>,
    curve: Curve,
}

pub fn run(ctx: &Context, args: &PhaseDiagramArgs) -> Result<Failures> {
    let mut cfg: PhaseDiagramConfig = load(ctx.config.as_deref())?;
    cfg.apply(args)?;
    let out = Output::new(&ctx.out, "phase-diagram", ctx.resume)?;
    let mut failures = Failures::new();
    let mut rows = Vec::new();

    match cfg.mode {
        Mode::Quantum => {
            for &gamma in &cfg.gamma {
                for &l in &cfg.sites {
                    let label = format!("gamma={gamma} L={l}");
                    match quantum_curve(&out, &cfg, gamma, l) {
                        Ok(curve) => {
                            if let Some(e) = &curve.error {
                                failures.push(format!("{label}: s* search failed: {e}"));
                            }
                            rows.push(Row { gamma, sites: l, steps: Some(cfg.steps), curve });
                        }
                        Err(e) => {
                            log::error!("{label}: {e:#}");
                            failures.push(format!("{label}: {e:#}"));
                        }
                    }
                }
            }
            if cfg.diagnostics {
                write_diagnostics(&out, &cfg, &mut failures)?;
            }
        }
        Mode::Classical => {
            let p = cfg.omega.sin().powi(2);
            let search = Search {
                tol: cfg.tol,
                refine: Some((cfg.refine_rounds, cfg.refine_points)),
            };
            for &l in &cfg.sites {
                let key = format!("classical_L{l}_p{}_grid{}", key_f64(p), grid_key(&cfg.s, cfg.tol, search.refine));
                let result = out.checkpointed(&key, || classical_curve(&ClassicalParams::new(l, p)?, &cfg.s, &search));
                match result {
                    Ok(curve) => {
                        if let Some(e) = &curve.error {
                            failures.push(format!("L={l}: s* search failed: {e}"));
                        }
                        rows.push(Row { gamma: FRAC_PI_2, sites: l, steps: None, curve });
                    }
                    Err(e) => failures.push(format!("L={l}: {e:#}")),
                }
            }
        }
    }

    let mut w = out.csv("activity.csv", &["gamma", "omega", "L", "T", "s", "theta", "a", "a_normalized"])?;
    for r in &rows {
        // a(0) is the stationary click rate sin²γ / 2.
        let a0 = r.gamma.sin().powi(2) / 2.0;
        for pt in &r.curve.points {
            w.write_record([
                num(r.gamma),
                num(cfg.omega),
                r.sites.to_string(),
                r.steps.map(|t| t.to_string()).unwrap_or_default(),
                num(pt.s),
                num(pt.theta),
                num(pt.a),
                opt_num((a0 > 0.0).then(|| pt.a / a0)),
            ])?;
        }
    }
    w.flush()?;
    out.sidecar("activity.csv", &cfg, json!({}))?;

    let mut w = out.csv(
        "s_star.csv",
        &["gamma", "omega", "L", "T", "s_star", "s_star_grid", "max_slope", "status"],
    )?;
    for r in &rows {
        let mut cells = crossover_cells(num(r.gamma), num(cfg.omega), &r.curve);
        cells.insert(2, r.sites.to_string());
        cells.insert(3, r.steps.map(|t| t.to_string()).unwrap_or_default());
        w.write_record(cells)?;
    }
    w.flush()?;
    out.sidecar("s_star.csv", &cfg, json!({}))?;
    Ok(failures)
}

fn quantum_curve(out: &Output, cfg: &PhaseDiagramConfig, gamma: f64, sites: usize) -> Result<Curve> {
    let params = CircuitParams::new(sites, cfg.steps, cfg.omega, gamma)?;
    let method = match cfg.method {
        Method::Tangent => "tangent".to_string(),
        Method::FiniteDifference => format!("fd{}", key_f64(cfg.ds)),
    };
    let prefix = format!("g{}_L{sites}_T{}_w{}_{method}", key_f64(gamma), cfg.steps, key_f64(cfg.omega));
    let point = |s: f64| -> Result<ActivityPoint> {
        out.checkpointed(&format!("{prefix}_s{}", key_f64(s)), || {
            Ok(match cfg.method {
                Method::Tangent => activity_tangent(&params, s)?,
                Method::FiniteDifference => ActivityPoint {
                    s,
                    theta: partition_function(&params, s, None)?.theta,
                    a: activity_density(&params, s, cfg.ds)?,
                },
            })
        })
    };
    let mut points = Vec::new();
    let mut first_error = None;
    let eval = |s_values: &[f64]| -> floquet_east::Result<Vec<f64>> {
        let batch: Vec<Result<ActivityPoint>> = s_values.par_iter().map(|&s| point(s)).collect();
        let mut a = Vec::with_capacity(batch.len());
        for r in batch {
            match r {
                Ok(p) => {
                    a.push(p.a);
                    points.push(p);
                }
                Err(e) => {
                    let msg = format!("{e:#}");
                    first_error.get_or_insert(msg.clone());
                    return Err(floquet_east::Error::DegenerateGrid(msg));
                }
            }
        }
        Ok(a)
    };
    let result = refine_crossover(eval, &cfg.s, cfg.refine_rounds, cfg.refine_points);
    if let Some(e) = first_error {
        anyhow::bail!(e);
    }
    points.sort_by(|x, y| x.s.total_cmp(&y.s));
    let (crossover, error) = match result {
        Ok((_, _, c)) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Curve { points, crossover, error })
}

/// `λ_{L,t}(s)` for every grid field, to check that `T` reaches the plateau.
fn write_diagnostics(out: &Output, cfg: &PhaseDiagramConfig, failures: &mut Failures) -> Result<()> {
    let mut w = out.csv("increments.csv", &["gamma", "L", "s", "t", "lambda"])?;
    let mut plateau = out.csv("plateau.csv", &["gamma", "L", "s", "relative_change_last_10pct"])?;
    for &gamma in &cfg.gamma {
        for &l in &cfg.sites {
            let runs: Vec<_> = cfg
                .s
                .par_iter()
                .map(|&s| {
                    let params = CircuitParams::new(l, cfg.steps, cfg.omega, gamma)?;
                    Ok::<_, floquet_east::Error>((s, instantaneous_increment_series(&partition_function(&params, s, None)?)))
                })
                .collect();
            for run in runs {
                match run {
                    Ok((s, lambdas)) => {
                        for (t, v) in lambdas.iter().enumerate() {
                            w.write_record([num(gamma), l.to_string(), num(s), (t + 1).to_string(), num(*v)])?;
                        }
                        let change = plateau_relative_change(&lambdas, 0.1);
                        plateau.write_record([num(gamma), l.to_string(), num(s), num(change)])?;
                    }
                    Err(e) => failures.push(format!("diagnostics gamma={gamma} L={l}: {e}")),
                }
            }
        }
    }
    w.flush()?;
    plateau.flush()?;
    out.sidecar("increments.csv", cfg, json!({}))?;
    out.sidecar("plateau.csv", cfg, json!({}))?;
    Ok(())
}
