//! Saturation of Taylor-mitigated accuracy with increasing order.

use rayon::prelude::*;

use super::config::{ScenarioConfig, ScenarioKind};
use super::models::{ground_state, SaturationModel};
use super::{timed, ScenarioResult};
use crate::coefficients::{sampling_overhead, taylor_coefficients};
use crate::engine::KikPair;
use crate::error::Result;
use crate::liouville::{HilbertOp, VecObservable};

pub fn run_saturation(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>> {
    let model = SaturationModel {
        n_qubits: cfg.scenario.n_qubits.unwrap_or(4),
        duration: cfg.scenario.duration.unwrap_or(1.0),
    };
    let orders = cfg.mitigation.orders.clone();
    let max_order = *orders.iter().max().expect("validated non-empty");
    let rho = ground_state(model.n_qubits);
    let obs = VecObservable::new(&HilbertOp::basis_projector(1 << model.n_qubits, 0))?;
    let out: Vec<Vec<ScenarioResult>> = cfg
        .noise
        .xi
        .par_iter()
        .map(|&xi| {
            timed(|| {
                let sched = model.schedule(xi)?;
                let ideal = obs.apply(&sched.noiseless().evolve(&rho)?)?.re;
                let pair = KikPair::from_schedule(&sched)?;
                let vals: Vec<f64> = pair
                    .folds(&rho, max_order)?
                    .iter()
                    .map(|s| obs.apply(s).map(|z| z.re))
                    .collect::<Result<_>>()?;
                let point = format!("xi={xi}");
                let mut recs = Vec::new();
                for &m in &orders {
                    let t = taylor_coefficients(m)?;
                    let est: f64 = t.values.iter().zip(&vals).map(|(a, v)| a * v).sum();
                    let mut rec = ScenarioResult::new(
                        ScenarioKind::Saturation,
                        point.clone(),
                        "expectation",
                        xi,
                        m,
                        "1",
                        est,
                        ideal,
                    );
                    rec.overhead = Some(sampling_overhead(&t));
                    recs.push(rec);
                    let rel = (est - ideal).abs() / ideal.abs();
                    recs.push(ScenarioResult::new(
                        ScenarioKind::Saturation,
                        point.clone(),
                        "relative_error",
                        xi,
                        m,
                        "1",
                        rel,
                        0.0,
                    ));
                }
                Ok(recs)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}
