use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::BufWriter;

use anyhow::{anyhow, Result};
use floquet_east::circuit::{sample_batch, InitialState};
use floquet_east::classical::{random_configuration, sample_classical_trajectory_with, ClassicalParams};
use floquet_east::io::{write_batch_csv, write_occupation_csv, write_record_csv};
use floquet_east::rng::trajectory_rng;
use floquet_east::{CircuitParams, DenseLimits, MeasurementRecord, StateVector};
use serde_json::json;

use crate::config::{load, Initial, Mode, SampleArgs, SampleConfig};
use crate::output::Output;
use crate::{Context, Failures};

pub fn run(ctx: &Context, args: &SampleArgs) -> Result<Failures> {
    let mut cfg: SampleConfig = load(ctx.config.as_deref())?;
    cfg.apply(args, ctx.seed)?;
    if cfg.mode == Mode::Quantum {
        DenseLimits::current()
            .check_statevector(cfg.sites)
            .map_err(|e| anyhow!("invalid parameter `L`: {e}"))?;
    } else {
        // Projective measurements; the configured γ plays no role.
        cfg.gamma = FRAC_PI_2;
    }
    let out = Output::new(&ctx.out, "sample", ctx.resume)?;
    let mut failures = Failures::new();
    for &seed in &cfg.seeds {
        if let Err(e) = sample_seed(&out, &cfg, seed) {
            log::error!("seed {seed}: {e:#}");
            failures.push(format!("seed={seed}: {e:#}"));
        }
    }
    log::info!("wrote {} record(s) to {}", cfg.seeds.len() - failures.len(), ctx.out.display());
    Ok(failures)
}

fn sample_seed(out: &Output, cfg: &SampleConfig, seed: u64) -> Result<()> {
    let (records, occupations) = match cfg.mode {
        Mode::Quantum => {
            let params = CircuitParams::new(cfg.sites, cfg.steps, cfg.omega, cfg.gamma)?;
            let initial = match cfg.initial {
                Initial::Mixed => InitialState::RandomBasis,
                Initial::AllDown => InitialState::Pure(StateVector::all_down(cfg.sites)?),
            };
            let batch = sample_batch(&params, &initial, cfg.trajectories, seed)?;
            let n = batch.len() as f64;
            let mut mean = vec![vec![0.0; cfg.sites]; cfg.steps];
            for traj in &batch {
                for (acc, row) in mean.iter_mut().zip(&traj.occupations) {
                    acc.iter_mut().zip(row).for_each(|(a, &v)| *a += v / n);
                }
            }
            (batch.into_iter().map(|t| t.record).collect::<Vec<_>>(), Some(mean))
        }
        Mode::Classical => {
            let params = ClassicalParams::from_omega(cfg.sites, cfg.omega)?;
            let records = (0..cfg.trajectories as u64)
                .map(|j| {
                    let mut rng = trajectory_rng(seed, j);
                    let init = match cfg.initial {
                        Initial::Mixed => random_configuration(cfg.sites, &mut rng),
                        Initial::AllDown => vec![0; cfg.sites],
                    };
                    sample_classical_trajectory_with(&params, cfg.steps, &init, &mut rng, seed)
                })
                .collect::<floquet_east::Result<Vec<MeasurementRecord>>>()?;
            (records, None)
        }
    };

    let extra = json!({ "seed": seed, "activity": records[0].activity() });
    let name = format!("record_seed{seed}.csv");
    write_record_csv(BufWriter::new(File::create(out.path(&name))?), &records[0])?;
    out.sidecar(&name, cfg, extra)?;

    if let Some(occ) = occupations {
        let name = format!("occupations_seed{seed}.csv");
        write_occupation_csv(BufWriter::new(File::create(out.path(&name))?), &occ)?;
        out.sidecar(&name, cfg, json!({ "seed": seed, "averaged_over": records.len() }))?;
    }
    if records.len() > 1 {
        let name = format!("batch_seed{seed}.csv");
        let file = BufWriter::new(File::create(out.path(&name))?);
        write_batch_csv(file, records.iter().enumerate().map(|(j, r)| (j as u64, r)))?;
        out.sidecar(&name, cfg, json!({ "seed": seed }))?;
    }
    Ok(())
}
