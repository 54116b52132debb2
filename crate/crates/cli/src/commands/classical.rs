use anyhow::Result;
use floquet_east::classical::{classical_point, ClassicalParams, PowerOptions};
use floquet_east::large_deviations::{refine_crossover, ActivityPoint, Crossover};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load, ClassicalScgfArgs, ClassicalScgfConfig};
use crate::output::{key_f64, num, Output};
use crate::{Context, Failures};

/// Evaluated points of one curve plus its crossover, if one was searched for.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<ActivityPoint>,
    pub crossover: Option<Crossover>,
    pub error: Option<String>,
}

pub struct Search {
    pub tol: f64,
    /// `(rounds, points)` of the adaptive `s*` search; `None` evaluates the grid only.
    pub refine: Option<(usize, usize)>,
}

/// Evaluates `θ_L` and `a_L` on `grid`, warm-starting each point from the last
/// eigenvector, and optionally refines `s*`. Point failures abort the curve.
pub fn classical_curve(params: &ClassicalParams, grid: &[f64], search: &Search) -> Result<Curve> {
    let opts = PowerOptions {
        tol: search.tol,
        ..PowerOptions::default()
    };
    let mut points = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut eval = |s_values: &[f64]| -> floquet_east::Result<Vec<f64>> {
        let mut a = Vec::with_capacity(s_values.len());
        for &s in s_values {
            let p = classical_point(params, s, opts, warm.as_deref())?;
            points.push(ActivityPoint { s, theta: p.theta, a: p.a });
            a.push(p.a);
            warm = Some(p.eigen.vector);
        }
        Ok(a)
    };
    let (crossover, error) = match search.refine {
        Some((rounds, n)) => match refine_crossover(&mut eval, grid, rounds, n) {
            Ok((_, _, c)) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => {
            let mut sorted = grid.to_vec();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            eval(&sorted)?;
            (None, None)
        }
    };
    points.sort_by(|x, y| x.s.total_cmp(&y.s));
    Ok(Curve { points, crossover, error })
}

pub fn run(ctx: &Context, args: &ClassicalScgfArgs) -> Result<Failures> {
    let mut cfg: ClassicalScgfConfig = load(ctx.config.as_deref())?;
    cfg.apply(args)?;
    let p = cfg.flip_probability();
    let out = Output::new(&ctx.out, "classical-scgf", ctx.resume)?;
    let search = Search {
        tol: cfg.tol,
        refine: cfg.crossover.then_some((cfg.refine_rounds, cfg.refine_points)),
    };
    let mut failures = Failures::new();
    let mut curves = Vec::new();
    for &l in &cfg.sites {
        let key = format!("L{l}_p{}_grid{}", key_f64(p), grid_key(&cfg.s, search.tol, search.refine));
        let result = out.checkpointed(&key, || {
            let params = ClassicalParams::new(l, p)?;
            classical_curve(&params, &cfg.s, &search)
        });
        match result {
            Ok(c) => {
                if let Some(e) = &c.error {
                    failures.push(format!("L={l}: s* search failed: {e}"));
                }
                curves.push((l, c));
            }
            Err(e) => {
                log::error!("L = {l}: {e:#}");
                failures.push(format!("L={l}: {e:#}"));
            }
        }
    }

    let mut w = out.csv("scgf.csv", &["L", "p", "s", "theta", "a"])?;
    for (l, c) in &curves {
        for pt in &c.points {
            w.write_record([l.to_string(), num(p), num(pt.s), num(pt.theta), num(pt.a)])?;
        }
    }
    w.flush()?;
    out.sidecar("scgf.csv", &cfg, json!({ "p_effective": p }))?;

    if cfg.crossover {
        let mut w = out.csv("s_star.csv", &["L", "p", "s_star", "s_star_grid", "max_slope", "status"])?;
        for (l, c) in &curves {
            w.write_record(crossover_cells(l.to_string(), num(p), c))?;
        }
        w.flush()?;
        out.sidecar("s_star.csv", &cfg, json!({ "p_effective": p }))?;
    }
    Ok(failures)
}

/// `[prefix.., s_star, s_star_grid, max_slope, status]`.
pub fn crossover_cells(a: String, b: String, c: &Curve) -> Vec<String> {
    match (&c.crossover, &c.error) {
        (Some(x), _) => vec![a, b, num(x.refined), num(x.grid_argmax), num(x.max_slope), "ok".into()],
        (None, Some(e)) => vec![a, b, String::new(), String::new(), String::new(), e.clone()],
        (None, None) => vec![a, b, String::new(), String::new(), String::new(), "not searched".into()],
    }
}

/// Short stable digest of a grid and search settings for checkpoint keys.
pub fn grid_key(grid: &[f64], tol: f64, refine: Option<(usize, usize)>) -> String {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    grid.iter().for_each(|x| x.to_bits().hash(&mut h));
    tol.to_bits().hash(&mut h);
    refine.hash(&mut h);
    format!("{:016x}", h.finish())
}
