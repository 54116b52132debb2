use anyhow::Result;
use floquet_east::circuit::{sample_batch, InitialState};
use floquet_east::clusters::{
    cluster_free_energy_series, cluster_table_from_series, empirical_cluster_free_energy, ClusterFreeEnergyTable,
    WindowMargin,
};
use floquet_east::effective::rescaled_time;
use floquet_east::{CircuitParams, MeasurementRecord};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{load, ClustersArgs, ClustersConfig, Placement};
use crate::output::{key_f64, num, opt_num, CsvWriter, Output};
use crate::{Context, Failures};

pub fn run(ctx: &Context, args: &ClustersArgs) -> Result<Failures> {
    let mut cfg: ClustersConfig = load(ctx.config.as_deref())?;
    cfg.apply(args, ctx.seed)?;
    let (ells, reduced) = cfg.ell_grid();
    if reduced {
        log::warn!("fitting over the reduced ell grid {ells:?}");
    }
    let out = Output::new(&ctx.out, "clusters", ctx.resume)?;
    let mut failures = Failures::new();

    let mut clusters = out.csv(
        "clusters.csv",
        &["gamma", "omega", "L", "ell", "tau", "F", "source", "std_error", "censored"],
    )?;
    let mut fits = out.csv("fits.csv", &["gamma", "tau", "alpha", "beta", "ratio", "residual", "tau_star_flag"])?;
    let mut stars = out.csv(
        "tau_star.csv",
        &["gamma", "omega", "L", "tau_star", "rescaled_tau_star", "nonpositive_alpha", "reduced_grid", "status"],
    )?;

    for (gi, &gamma) in cfg.gamma.iter().enumerate() {
        match channel_table(&out, &cfg, &ells, gamma) {
            Ok(table) => write_table(&table, &mut clusters, &mut fits, &mut stars)?,
            Err(e) => {
                log::error!("gamma = {gamma}: {e:#}");
                failures.push(format!("gamma={gamma}: {e:#}"));
                stars.write_record([
                    num(gamma),
                    num(cfg.omega),
                    cfg.sites.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    reduced.to_string(),
                    format!("{e:#}"),
                ])?;
            }
        }
        if cfg.empirical {
            // Distinct base seed per γ so the batches are independent.
            let seed = cfg.seed.wrapping_add(gi as u64);
            if let Err(e) = empirical_rows(&cfg, &ells, gamma, seed, &mut clusters) {
                failures.push(format!("empirical gamma={gamma}: {e:#}"));
            }
        }
    }
    clusters.flush()?;
    fits.flush()?;
    stars.flush()?;
    let extra = json!({ "ell_grid": ells, "reduced_grid": reduced });
    for name in ["clusters.csv", "fits.csv", "tau_star.csv"] {
        out.sidecar(name, &cfg, &extra)?;
    }
    Ok(failures)
}

fn channel_table(out: &Output, cfg: &ClustersConfig, ells: &[usize], gamma: f64) -> Result<ClusterFreeEnergyTable> {
    let params = CircuitParams::new(cfg.sites, cfg.tau_max, cfg.omega, gamma)?;
    let series: Vec<Vec<f64>> = ells
        .par_iter()
        .map(|&ell| {
            let key = format!(
                "g{}_L{}_w{}_ell{ell}_tau{}",
                key_f64(gamma),
                cfg.sites,
                key_f64(cfg.omega),
                cfg.tau_max
            );
            out.checkpointed(&key, || Ok(cluster_free_energy_series(&params, ell, cfg.tau_max)?))
        })
        .collect::<Result<_>>()?;
    Ok(cluster_table_from_series(&params, ells, &series)?)
}

fn write_table(t: &ClusterFreeEnergyTable, clusters: &mut CsvWriter, fits: &mut CsvWriter, stars: &mut CsvWriter) -> Result<()> {
    for (&(ell, tau), &f) in &t.entries {
        clusters.write_record([
            num(t.gamma),
            num(t.omega),
            t.sites.to_string(),
            ell.to_string(),
            tau.to_string(),
            num(f),
            "channel".into(),
            String::new(),
            "false".into(),
        ])?;
    }
    let tau_star = t.tau_star();
    for (&tau, fit) in &t.fits {
        fits.write_record([
            num(t.gamma),
            tau.to_string(),
            num(fit.alpha),
            num(fit.beta),
            num(fit.ratio()),
            num(fit.residual),
            (Some(tau) == tau_star).to_string(),
        ])?;
    }
    let status = match (&t.crossover, tau_star) {
        (None, _) => "fewer than 3 ell values; no fit".to_string(),
        (Some(_), None) => "censored: ratio never exceeds L".to_string(),
        (Some(_), Some(_)) => "ok".to_string(),
    };
    stars.write_record([
        num(t.gamma),
        num(t.omega),
        t.sites.to_string(),
        tau_star.map(|x| x.to_string()).unwrap_or_default(),
        opt_num(tau_star.map(|x| rescaled_time(x as f64, t.gamma))),
        t.crossover.as_ref().is_some_and(|c| c.nonpositive_alpha).to_string(),
        t.reduced_grid.to_string(),
        status,
    ])?;
    Ok(())
}

fn empirical_rows(cfg: &ClustersConfig, ells: &[usize], gamma: f64, seed: u64, w: &mut CsvWriter) -> Result<()> {
    let params = CircuitParams::new(cfg.sites, cfg.empirical_steps, cfg.omega, gamma)?;
    let records: Vec<MeasurementRecord> = sample_batch(&params, &InitialState::RandomBasis, cfg.trajectories, seed)?
        .into_iter()
        .map(|t| t.record)
        .collect();
    for &ell in ells {
        let margin = WindowMargin {
            sites: match cfg.placement {
                Placement::Rightmost => cfg.sites - ell,
                Placement::Bulk => cfg.margin_sites,
            },
            steps: cfg.margin_steps,
        };
        for tau in 1..=cfg.empirical_tau_max {
            let est = empirical_cluster_free_energy(&records, ell, tau, margin)?;
            w.write_record([
                num(gamma),
                num(cfg.omega),
                cfg.sites.to_string(),
                ell.to_string(),
                tau.to_string(),
                num(est.free_energy),
                "empirical".into(),
                if est.std_error.is_finite() { num(est.std_error) } else { String::new() },
                est.censored.to_string(),
            ])?;
        }
    }
    Ok(())
}
