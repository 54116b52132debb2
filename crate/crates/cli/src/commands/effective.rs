use std::collections::HashMap;

use anyhow::{Context as _, Result};
use floquet_east::effective::{compare_effective_vs_full, effective_flip_rate, rescaled_time, CompareOptions};
use floquet_east::CircuitParams;
use serde_json::json;

use crate::config::{load, EffectiveArgs, EffectiveConfig, Initial};
use crate::output::{num, opt_num, Output};
use crate::{Context, Failures};

struct Entry {
    gamma: f64,
    omega: f64,
    form: &'static str,
    step: &'static str,
    omega_tilde_sq: Option<f64>,
    global: Option<f64>,
    local: Option<f64>,
    status: String,
}

pub fn run(ctx: &Context, args: &EffectiveArgs) -> Result<Failures> {
    let mut cfg: EffectiveConfig = load(ctx.config.as_deref())?;
    cfg.apply(args)?;
    let out = Output::new(&ctx.out, "effective", ctx.resume)?;
    let dim = 1usize << cfg.sites;
    let initial: Vec<f64> = match cfg.initial {
        Initial::AllDown => (0..dim).map(|m| if m == 0 { 1.0 } else { 0.0 }).collect(),
        Initial::Mixed => vec![1.0 / dim as f64; dim],
    };

    let mut failures = Failures::new();
    let mut entries = Vec::new();
    let mut series = out.csv("deviation_series.csv", &["gamma", "omega", "form", "step", "t", "global", "local"])?;
    for &gamma in &cfg.gamma {
        for &omega in &cfg.omega {
            for &form in &cfg.forms {
                for &step_form in &cfg.step_forms {
                    let opts = CompareOptions {
                        rate_form: form,
                        step_form,
                        min_gamma: cfg.min_gamma,
                    };
                    let result = CircuitParams::new(cfg.sites, cfg.horizon, omega, gamma)
                        .and_then(|p| compare_effective_vs_full(&p, cfg.horizon, &initial, opts));
                    let mut e = Entry {
                        gamma,
                        omega,
                        form: form.name(),
                        step: step_form.name(),
                        omega_tilde_sq: effective_flip_rate(omega, gamma, form).ok(),
                        global: None,
                        local: None,
                        status: "ok".into(),
                    };
                    match result {
                        Ok(d) => {
                            for (t, (g, l)) in d.global.iter().zip(&d.local).enumerate() {
                                series.write_record([
                                    num(gamma),
                                    num(omega),
                                    e.form.into(),
                                    e.step.into(),
                                    (t + 1).to_string(),
                                    num(*g),
                                    num(*l),
                                ])?;
                            }
                            e.global = Some(d.max_global());
                            e.local = Some(d.max_local());
                            // The realized step form can differ after a fallback.
                            e.step = d.step_form.name();
                        }
                        Err(err) => {
                            log::warn!("gamma = {gamma}, omega = {omega}: {err}");
                            failures.push(format!("gamma={gamma} omega={omega} form={}: {err}", e.form));
                            e.status = err.to_string();
                        }
                    }
                    entries.push(e);
                }
            }
        }
    }
    series.flush()?;
    out.sidecar("deviation_series.csv", &cfg, json!({}))?;

    // Deviation ratio between ω and ω/2 when both are on the list.
    let lookup: HashMap<(u64, u64, &str, &str), f64> = entries
        .iter()
        .filter_map(|e| Some(((e.gamma.to_bits(), e.omega.to_bits(), e.form, e.step), e.global?)))
        .collect();
    let mut w = out.csv(
        "deviation.csv",
        &["gamma", "omega", "form", "step", "omega_tilde_sq", "deviation", "local", "halving_ratio", "status"],
    )?;
    for e in &entries {
        let half = lookup.get(&(e.gamma.to_bits(), (e.omega / 2.0).to_bits(), e.form, e.step));
        let ratio = match (e.global, half) {
            (Some(g), Some(&h)) if h > 0.0 => Some(g / h),
            _ => None,
        };
        w.write_record([
            num(e.gamma),
            num(e.omega),
            e.form.into(),
            e.step.into(),
            opt_num(e.omega_tilde_sq),
            opt_num(e.global),
            opt_num(e.local),
            opt_num(ratio),
            e.status.clone(),
        ])?;
    }
    w.flush()?;
    out.sidecar("deviation.csv", &cfg, json!({}))?;

    if let Some(path) = &cfg.tau_star_csv {
        rescale_tau_star(&out, &cfg, path)?;
    }
    Ok(failures)
}

/// Reads `gamma,tau_star` columns and writes `tan²(γ/2) τ*`.
fn rescale_tau_star(out: &Output, cfg: &EffectiveConfig, path: &std::path::Path) -> Result<()> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no `{name}` column", path.display()))
    };
    let (gi, ti) = (col("gamma")?, col("tau_star")?);
    let mut w = out.csv("rescaled_tau_star.csv", &["gamma", "tau_star", "tan2_half_gamma", "rescaled_tau_star"])?;
    for row in r.records() {
        let row = row?;
        let gamma: f64 = row[gi].parse().with_context(|| format!("bad gamma {:?}", &row[gi]))?;
        let tau: Option<f64> = match row[ti].trim() {
            "" => None,
            v => Some(v.parse().with_context(|| format!("bad tau_star {v:?}"))?),
        };
        w.write_record([
            num(gamma),
            opt_num(tau),
            num(rescaled_time(1.0, gamma)),
            opt_num(tau.map(|t| rescaled_time(t, gamma))),
        ])?;
    }
    w.flush()?;
    out.sidecar("rescaled_tau_star.csv", cfg, json!({ "source": path }))?;
    Ok(())
}
