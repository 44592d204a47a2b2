//! Set-averaged mitigation under slowly drifting noise amplitudes.

use rayon::prelude::*;

use super::config::{RunMode, ScenarioConfig, ScenarioKind, SplitKind};
use super::models::DriftModel;
use super::{timed, ScenarioResult};
use crate::dynamics::propagate;
use crate::engine::{set_averaged_mitigate, FoldSplit, SetAveragingOptions};
use crate::error::Result;
use crate::liouville::{expectation, vectorize, VecObservable};

/// Noise-free `<ρ|𝒰|ρ>` of the drift demo.
pub fn drift_ideal() -> Result<f64> {
    let op = DriftModel::state_operator();
    let u = propagate(&DriftModel::schedule()?.noiseless())?.value;
    expectation(&VecObservable::new(&op)?, &u, &vectorize(&op))
}

pub fn run_drift(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>> {
    let shots = cfg.scenario.shots.unwrap_or(1000);
    let sets = cfg.scenario.sets.clone().unwrap_or_else(|| vec![1, 2, 4, 5, 10, 20]);
    let sampled = cfg.scenario.mode.unwrap_or(RunMode::Exact) == RunMode::Sampled;
    let drift = cfg.noise.drift.unwrap_or(true);
    let time_scale = cfg
        .noise
        .drift_time_scale
        .unwrap_or(shots as f64 / std::f64::consts::PI);
    let split = match cfg.mitigation.split.unwrap_or(SplitKind::Equal) {
        SplitKind::Equal => FoldSplit::Equal,
        SplitKind::Proportional => FoldSplit::Proportional,
    };
    let gs = cfg.g_choices()?;
    let op = DriftModel::state_operator();
    let obs = VecObservable::new(&op)?;
    let rho = vectorize(&op);
    let sched = DriftModel::schedule()?;
    let ideal = drift_ideal()?;
    let profile = DriftModel::profile(drift, time_scale);
    let mut points = Vec::new();
    for &xi in &cfg.noise.xi {
        for &s in &sets {
            for &m in &cfg.mitigation.orders {
                for &g in &gs {
                    points.push((xi, s, m, g));
                }
            }
        }
    }
    let out: Vec<Vec<ScenarioResult>> = points
        .par_iter()
        .map(|&(xi, s, m, g)| {
            timed(|| {
                let opts = SetAveragingOptions {
                    sets: s,
                    shots,
                    seed: cfg.scenario.seed,
                    sampled,
                    split,
                };
                let r = set_averaged_mitigate(&sched, &obs, &rho, m, g, &DriftModel::noise(xi), &profile, &opts)?;
                let point = format!("xi={xi};drift={}", u8::from(drift));
                let rec = ScenarioResult::new(
                    ScenarioKind::Drift,
                    point,
                    "expectation",
                    xi,
                    m,
                    g.label(),
                    r.estimate,
                    ideal,
                )
                .with_param(s as f64)
                .with_g_value(r.g, r.mu);
                Ok(vec![rec])
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}
