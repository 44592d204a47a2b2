//! Measured bias against the accuracy bounds over a noise grid.

use rayon::prelude::*;

use super::config::{default_bounds_rates, BoundsModel, CoefficientFamily, ScenarioConfig, ScenarioKind};
use super::models::{dephasing_bounds_model, pauli_bounds_model};
use super::{coefficients_for, timed, ScenarioResult};
use crate::bounds::{accuracy_bounds, min_eigenvalue_bound_check, observable_norm_factor, weak_noise_condition};
use crate::coefficients::{sampling_overhead, GChoice};
use crate::dynamics::{exact_kik_reference, propagate};
use crate::engine::KikPair;
use crate::error::Result;
use crate::liouville::VecObservable;

/// The Magnus-residual gate passes when the exact KIK reconstruction error,
/// scaled by the observable factor, is at most this fraction of the tightest bound.
pub const MAGNUS_GATE_FRACTION: f64 = 0.1;

pub fn run_bounds_sweep(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>> {
    let models = cfg
        .scenario
        .models
        .clone()
        .unwrap_or_else(|| vec![BoundsModel::Dephasing, BoundsModel::PauliTwoQubit]);
    let rates = cfg.noise.pauli_rates.clone().unwrap_or_else(default_bounds_rates);
    let family = cfg.mitigation.coefficients.unwrap_or(CoefficientFamily::Adaptive);
    let gs = cfg.g_choices()?;
    let orders: Vec<usize> = cfg
        .mitigation
        .orders
        .iter()
        .cloned()
        .filter(|m| (1..=3).contains(m))
        .collect();
    let max_order = orders.iter().cloned().max().unwrap_or(0);
    let points: Vec<(BoundsModel, f64)> = models
        .iter()
        .flat_map(|&m| cfg.noise.xi.iter().map(move |&x| (m, x)))
        .collect();
    let out: Vec<Vec<ScenarioResult>> = points
        .par_iter()
        .map(|&(model, xi)| {
            timed(|| {
                let (sched, rho, a) = match model {
                    BoundsModel::Dephasing => dephasing_bounds_model(xi)?,
                    BoundsModel::PauliTwoQubit => pauli_bounds_model(xi, &rates)?,
                };
                let obs = VecObservable::new(&a)?;
                let point = format!("model={};xi={xi}", model.name());
                let ideal = obs.apply(&sched.noiseless().evolve(&rho)?)?.re;
                let pair = KikPair::from_schedule(&sched)?;
                let mu = pair.survival(&rho)?.clamp(0.0, 1.0);
                let vals: Vec<f64> = pair
                    .folds(&rho, max_order)?
                    .iter()
                    .map(|s| obs.apply(s).map(|z| z.re))
                    .collect::<Result<_>>()?;
                let fa = observable_norm_factor(&a)?;
                let u = propagate(&sched.noiseless())?.value;
                let kik_residual = exact_kik_reference(&sched)?.sub(&u).spectral_norm();
                let weak = weak_noise_condition(&sched);
                let mut recs = Vec::new();

                let chk = min_eigenvalue_bound_check(&sched)?;
                recs.push(
                    ScenarioResult::new(
                        ScenarioKind::BoundsSweep,
                        point.clone(),
                        "min_eigenvalue",
                        xi,
                        0,
                        "1",
                        chk.min_eigenvalue,
                        chk.bound,
                    )
                    .with_flag("satisfied", chk.satisfied)
                    .with_flag("hermitian", chk.hermitian),
                );

                for &m in &orders {
                    let report = accuracy_bounds(&a, &sched, mu, m)?;
                    let magnus_ok = fa * kik_residual <= MAGNUS_GATE_FRACTION * report.eq18;
                    for &g in &gs {
                        let (coeffs, gv) = coefficients_for(m, g, mu, family)?;
                        let est: f64 = coeffs.values.iter().zip(&vals).map(|(c, v)| c * v).sum();
                        let bias = (est - ideal).abs();
                        let covered = matches!(g, GChoice::One) || g == GChoice::MuPow(1.0);
                        let mut rec = ScenarioResult::new(
                            ScenarioKind::BoundsSweep,
                            point.clone(),
                            "bias",
                            xi,
                            m,
                            g.label(),
                            est,
                            ideal,
                        )
                        .with_g_value(gv.unwrap_or(1.0), Some(mu))
                        .with_bounds(&report)
                        .with_flag("ordered", report.ordered(1e-12))
                        .with_flag("admissible", report.admissible())
                        .with_flag("weak_noise", weak)
                        .with_flag("magnus_ok", magnus_ok);
                        if covered {
                            rec = rec.with_flag("bias_le_eq18", bias <= report.eq18 + 1e-15);
                        }
                        rec.overhead = Some(sampling_overhead(&coeffs));
                        recs.push(rec);
                        let ratio = if report.eq18 > 0.0 { bias / report.eq18 } else { 0.0 };
                        recs.push(
                            ScenarioResult::new(
                                ScenarioKind::BoundsSweep,
                                point.clone(),
                                "bias_to_eq18",
                                xi,
                                m,
                                g.label(),
                                ratio,
                                f64::NAN,
                            )
                            .with_g_value(gv.unwrap_or(1.0), Some(mu)),
                        );
                    }
                }
                Ok(recs)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}
