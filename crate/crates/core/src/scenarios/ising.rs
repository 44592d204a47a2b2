//! Trotterized transverse-field Ising chain with collective decay.

use rayon::prelude::*;

use super::config::{CoefficientFamily, ScenarioConfig, ScenarioKind};
use super::models::{ground_state, IsingModel};
use super::{coefficients_for, combine_states, timed, ScenarioResult};
use crate::coefficients::{sampling_overhead, GChoice};
use crate::engine::KikPair;
use crate::error::{KikError, Result};
use crate::liouville::state_fidelity_unchecked;

pub fn model_from(cfg: &ScenarioConfig) -> IsingModel {
    let d = IsingModel::reference();
    let s = &cfg.scenario;
    IsingModel {
        n_qubits: s.n_qubits.unwrap_or(d.n_qubits),
        field: s.field.unwrap_or(d.field),
        coupling: s.coupling.unwrap_or(d.coupling),
        trotter_steps: s.trotter_steps.unwrap_or(d.trotter_steps),
        step_time: s.step_time.unwrap_or(d.step_time),
        jump_weights: cfg.noise.jump_weights.clone().unwrap_or(d.jump_weights),
    }
}

pub fn run_ising(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>> {
    let model = model_from(cfg);
    let family = cfg.mitigation.coefficients.unwrap_or(CoefficientFamily::Adaptive);
    let gs = cfg.g_choices()?;
    let orders = cfg.mitigation.orders.clone();
    let max_order = *orders.iter().max().expect("validated non-empty");
    let rho = ground_state(model.n_qubits);
    let out: Vec<Vec<ScenarioResult>> = cfg
        .noise
        .xi
        .par_iter()
        .map(|&xi| {
            timed(|| {
                let sched = model.schedule(xi)?;
                let ideal = sched.noiseless().evolve(&rho)?.to_matrix();
                let pair = KikPair::from_schedule(&sched)?;
                let folds = pair.folds(&rho, max_order)?;
                let mu = pair.survival(&rho)?;
                let f0 = state_fidelity_unchecked(&ideal, &folds[0].to_matrix());
                let point = format!("xi={xi}");
                let mut recs = Vec::new();
                for &m in &orders {
                    let gs_here: Vec<GChoice> = if m == 0 { vec![GChoice::One] } else { gs.clone() };
                    for g in gs_here {
                        let (coeffs, gv) = coefficients_for(m, g, mu, family)?;
                        let state = combine_states(&folds, &coeffs)?;
                        let f = state_fidelity_unchecked(&ideal, &state.to_matrix());
                        if !f.is_finite() {
                            return Err(KikError::ExponentialDidNotConverge("non-finite fidelity".into()));
                        }
                        let label = g.label();
                        let mut rec = ScenarioResult::new(
                            ScenarioKind::Ising,
                            point.clone(),
                            "fidelity",
                            xi,
                            m,
                            label.clone(),
                            f,
                            1.0,
                        )
                        .with_g_value(gv.unwrap_or(1.0), Some(mu));
                        rec.overhead = Some(sampling_overhead(&coeffs));
                        recs.push(rec);
                        if m > 0 {
                            let ratio = (1.0 - f0) / (1.0 - f);
                            recs.push(
                                ScenarioResult::new(
                                    ScenarioKind::Ising,
                                    point.clone(),
                                    "enhancement_ratio",
                                    xi,
                                    m,
                                    label,
                                    ratio,
                                    f64::NAN,
                                )
                                .with_g_value(gv.unwrap_or(1.0), Some(mu)),
                            );
                        }
                    }
                }
                Ok(recs)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}
