//! CNOT amplitude calibration with KIK mitigation, and the resulting gate
//! fidelities.

use rayon::prelude::*;

use super::config::{InverseKind, ScenarioConfig, ScenarioKind};
use super::models::{ols_root, CnotModel};
use super::{timed, ScenarioResult};
use crate::coefficients::{sampling_overhead, taylor_coefficients, CoefficientSet};
use crate::dynamics::{propagate, pulse_inverse, PulseSchedule};
use crate::engine::{mitigated_superop, rc_frames, twirl_average, KikPair};
use crate::error::{KikError, Result};
use crate::liouville::{avg_gate_fidelity_ptm_adjoint, ptm_of, SuperOperator, VecObservable};

pub const DEFAULT_GRID: [f64; 7] = [0.98, 0.99, 0.995, 1.0, 1.005, 1.01, 1.02];

/// Mitigated `<I⊗Y>` for orders `0..=max_order` at amplitude `a`.
pub fn probe_curve_point(
    model: &CnotModel,
    a: f64,
    xi: f64,
    chain: usize,
    max_order: usize,
    inverse: InverseKind,
) -> Result<Vec<f64>> {
    let sched = model.calibration_chain(a, xi, chain)?;
    let pair = match inverse {
        InverseKind::Pulse => KikPair::from_schedule(&sched)?,
        InverseKind::Circuit => KikPair::circuit_inverse_of_self_inverse(&sched)?,
    };
    let rho = CnotModel::probe_state();
    let obs = VecObservable::new(&CnotModel::probe_observable())?;
    let vals = pair
        .folds(&rho, max_order)?
        .iter()
        .map(|s| obs.apply(s).map(|z| z.re))
        .collect::<Result<Vec<f64>>>()?;
    (0..=max_order)
        .map(|m| {
            let t = taylor_coefficients(m)?;
            Ok(t.values.iter().zip(&vals).map(|(a, v)| a * v).sum())
        })
        .collect()
}

/// Calibrated amplitudes `A_θ` for orders `0..=max_order`.
pub fn calibrate(
    model: &CnotModel,
    xi: f64,
    chain: usize,
    grid: &[f64],
    max_order: usize,
    inverse: InverseKind,
) -> Result<Vec<f64>> {
    let curves = grid
        .par_iter()
        .map(|&a| probe_curve_point(model, a, xi, chain, max_order, inverse))
        .collect::<Result<Vec<_>>>()?;
    (0..=max_order)
        .map(|m| {
            let ys: Vec<f64> = curves.iter().map(|c| c[m]).collect();
            ols_root(grid, &ys)
        })
        .collect()
}

fn single_gate(model: &CnotModel, a: f64, xi: f64) -> Result<(SuperOperator, SuperOperator)> {
    let s = PulseSchedule::single(model.cr_segment(a, xi)?);
    Ok((propagate(&s)?.value, propagate(&pulse_inverse(&s))?.value))
}

/// Average gate fidelity of the order-`M` mitigated single gate at amplitude `a`.
pub fn mitigated_gate_fidelity(model: &CnotModel, a: f64, xi: f64, coeffs: &CoefficientSet, rc: bool) -> Result<f64> {
    let (mut k, mut ki) = single_gate(model, a, xi)?;
    let u = CnotModel::target_unitary();
    if rc {
        k = twirl_average(&k, &rc_frames(&u)?)?;
        ki = twirl_average(&ki, &rc_frames(&u.adjoint())?)?;
    }
    let lam = mitigated_superop(&k, &ki, coeffs);
    let ru = ptm_of(&SuperOperator::unitary(&u))?;
    avg_gate_fidelity_ptm_adjoint(&ptm_of(&lam)?, &ru)
}

pub fn run_cnot_calibration(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>> {
    let model = CnotModel {
        decay_weight: cfg.noise.decay_weight.unwrap_or(0.1),
    };
    let grid = cfg
        .scenario
        .amplitude_grid
        .clone()
        .unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let chain = cfg.scenario.chain_length.unwrap_or(11);
    let inverses = cfg
        .mitigation
        .inverse
        .clone()
        .unwrap_or_else(|| vec![InverseKind::Pulse]);
    let with_rc = cfg.mitigation.rc.as_ref().map(|v| v.contains(&true)).unwrap_or(true);
    let orders = cfg.mitigation.orders.clone();
    let max_order = *orders.iter().max().expect("validated non-empty");
    if grid.is_empty() {
        return Err(KikError::RegressionDegenerate("empty amplitude grid".into()));
    }
    let points: Vec<(f64, InverseKind)> = cfg
        .noise
        .xi
        .iter()
        .flat_map(|&x| inverses.iter().map(move |&i| (x, i)))
        .collect();
    let out: Vec<Vec<ScenarioResult>> = points
        .iter()
        .map(|&(xi, inverse)| {
            timed(|| {
                let thetas = calibrate(&model, xi, chain, &grid, max_order, inverse)?;
                let point = format!("xi={xi};inverse={}", inverse.name());
                let rows = orders
                    .par_iter()
                    .map(|&m| {
                        let t = taylor_coefficients(m)?;
                        let mut recs = Vec::new();
                        let mut a = ScenarioResult::new(
                            ScenarioKind::CnotCalib,
                            point.clone(),
                            "a_theta",
                            xi,
                            m,
                            "1",
                            thetas[m],
                            1.0,
                        )
                        .with_g_value(1.0, None);
                        a.overhead = Some(sampling_overhead(&t));
                        recs.push(a);
                        if inverse == InverseKind::Pulse {
                            let f_noisy = mitigated_gate_fidelity(&model, thetas[0], xi, &t, false)?;
                            let f_kik = mitigated_gate_fidelity(&model, thetas[m], xi, &t, false)?;
                            recs.push(ScenarioResult::new(
                                ScenarioKind::CnotCalib,
                                point.clone(),
                                "fidelity_noisy_cal",
                                xi,
                                m,
                                "1",
                                f_noisy,
                                1.0,
                            ));
                            recs.push(ScenarioResult::new(
                                ScenarioKind::CnotCalib,
                                point.clone(),
                                "fidelity_kik_cal",
                                xi,
                                m,
                                "1",
                                f_kik,
                                1.0,
                            ));
                            if with_rc {
                                let f_rc = mitigated_gate_fidelity(&model, thetas[0], xi, &t, true)?;
                                recs.push(ScenarioResult::new(
                                    ScenarioKind::CnotCalib,
                                    point.clone(),
                                    "fidelity_rc",
                                    xi,
                                    m,
                                    "1",
                                    f_rc,
                                    1.0,
                                ));
                            }
                        }
                        Ok(recs)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(rows.into_iter().flatten().collect())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}
