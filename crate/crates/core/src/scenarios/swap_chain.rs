//! Survival probabilities through a chain of noisy SWAP gates.

use rayon::prelude::*;

use super::config::{default_swap_rates, CoefficientFamily, InverseKind, RunMode, ScenarioConfig, ScenarioKind};
use super::models::SwapChainModel;
use super::{coefficients_for, timed, ScenarioResult};
use crate::bounds::accuracy_bounds;
use crate::coefficients::{sampling_overhead, GChoice};
use crate::dynamics::{propagate, pulse_inverse, PulseSchedule};
use crate::engine::{
    mitigate_sampled_pair, rc_frames, twirl_average, DiagonalObservable, KikPair, MeasurementMatrix, MuMode, RcPolicy,
    SamplingOptions,
};
use crate::error::Result;
use crate::liouville::{vectorize, HilbertOp, VecObservable};

/// One point of the swap-chain sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapPoint {
    pub xi: f64,
    pub overrotation: f64,
    pub inverse: InverseKind,
    pub rc: bool,
}

impl SwapPoint {
    pub fn label(&self) -> String {
        format!(
            "xi={};eps={};inverse={};rc={}",
            self.xi,
            self.overrotation,
            self.inverse.name(),
            u8::from(self.rc)
        )
    }
}

/// Forward/inverse pair for a point; with RC both blocks are fully twirled.
pub fn swap_pair(model: &SwapChainModel, sched: &PulseSchedule, p: &SwapPoint) -> Result<KikPair> {
    if !p.rc {
        return match p.inverse {
            InverseKind::Pulse => KikPair::from_schedule(sched),
            InverseKind::Circuit => KikPair::circuit_inverse_of_self_inverse(sched),
        };
    }
    let u = model.logical_unitary();
    let k = propagate(sched)?.value;
    let ki = match p.inverse {
        InverseKind::Pulse => propagate(&pulse_inverse(sched))?.value,
        InverseKind::Circuit => k.clone(),
    };
    let ki_logical = match p.inverse {
        InverseKind::Pulse => u.adjoint(),
        InverseKind::Circuit => u.clone(),
    };
    KikPair::from_superops(
        twirl_average(&k, &rc_frames(&u)?)?,
        twirl_average(&ki, &rc_frames(&ki_logical)?)?,
    )
}

fn derive_seed(seed: u64, idx: u64) -> u64 {
    seed.wrapping_add(idx.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn run_swap_chain(cfg: &ScenarioConfig) -> Result<Vec<ScenarioResult>> {
    let rates = cfg.noise.pauli_rates.clone().unwrap_or_else(default_swap_rates);
    let reps = cfg.scenario.repetitions.unwrap_or(10);
    let mode = cfg.scenario.mode.unwrap_or(RunMode::Exact);
    let shots = cfg.scenario.shots.unwrap_or(100_000);
    let family = cfg.mitigation.coefficients.unwrap_or(CoefficientFamily::Adaptive);
    let gs = cfg.g_choices()?;
    let orders = cfg.mitigation.orders.clone();
    let max_order = *orders.iter().max().expect("validated non-empty");
    let rc_count = cfg.mitigation.rc_count.unwrap_or(16);
    let readout = match &cfg.noise.readout_flips {
        Some(f) if mode == RunMode::Sampled => Some(MeasurementMatrix::from_flip_probs(
            &f.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>(),
        )?),
        _ => None,
    };
    let mut points = Vec::new();
    for &xi in &cfg.noise.xi {
        for &overrotation in cfg.noise.overrotation.as_deref().unwrap_or(&[0.0]) {
            for &inverse in cfg.mitigation.inverse.as_deref().unwrap_or(&[InverseKind::Pulse]) {
                for &rc in cfg.mitigation.rc.as_deref().unwrap_or(&[false]) {
                    points.push(SwapPoint {
                        xi,
                        overrotation,
                        inverse,
                        rc,
                    });
                }
            }
        }
    }
    let out: Vec<Vec<ScenarioResult>> = points
        .par_iter()
        .enumerate()
        .map(|(idx, p)| {
            timed(|| {
                let model = SwapChainModel {
                    repetitions: reps,
                    pauli_rates: rates.clone(),
                    overrotation: p.overrotation,
                };
                let sched = model.schedule(p.xi)?;
                let pair = swap_pair(&model, &sched, p)?;
                let u = model.logical_unitary();
                let mut recs = Vec::new();
                for b in 0..4 {
                    let rho_op = HilbertOp::basis_projector(4, b);
                    let rho = vectorize(&rho_op);
                    let target = u.mul(&rho_op).mul(&u.adjoint());
                    let mu = pair.survival(&rho)?;
                    let vals: Vec<f64> = match mode {
                        RunMode::Exact => {
                            let obs = VecObservable::new(&target)?;
                            pair.folds(&rho, max_order)?
                                .iter()
                                .map(|s| obs.apply(s).map(|z| z.re))
                                .collect::<Result<_>>()?
                        }
                        RunMode::Sampled => Vec::new(),
                    };
                    for &m in &orders {
                        let gs_here: Vec<GChoice> = if m == 0 { vec![GChoice::One] } else { gs.clone() };
                        for g in gs_here {
                            let label = g.label();
                            let (estimate, variance, coeffs, gv, mu_used) = match mode {
                                RunMode::Exact => {
                                    let (coeffs, gv) = coefficients_for(m, g, mu, family)?;
                                    let est = coeffs.values.iter().zip(&vals).map(|(a, v)| a * v).sum::<f64>();
                                    (est, None, coeffs, gv, mu)
                                }
                                RunMode::Sampled => {
                                    let g_eff = if family == CoefficientFamily::Taylor {
                                        GChoice::One
                                    } else {
                                        g
                                    };
                                    let mut opts = SamplingOptions::new(
                                        shots,
                                        derive_seed(cfg.scenario.seed, (idx * 4 + b) as u64),
                                    );
                                    opts.readout = readout.clone();
                                    opts.rc_count = rc_count;
                                    if let Some(ms) = cfg.mitigation.mu_shots {
                                        opts.mu_mode = MuMode::Sampled { shots: ms };
                                    }
                                    let (sample_pair, policy) = if p.rc {
                                        let policy = match p.inverse {
                                            InverseKind::Pulse => RcPolicy::for_unitary(&u),
                                            InverseKind::Circuit => RcPolicy {
                                                k_logical: u.clone(),
                                                ki_logical: u.clone(),
                                            },
                                        };
                                        let plain = SwapPoint { rc: false, ..*p };
                                        (swap_pair(&model, &sched, &plain)?, Some(policy))
                                    } else {
                                        (pair.clone(), None)
                                    };
                                    opts.rc = policy;
                                    let diag = DiagonalObservable::from_operator(&target)?;
                                    let r = mitigate_sampled_pair(&sample_pair, &diag, &rho, m, g_eff, &opts)?;
                                    let gv = g_eff.needs_mu().then_some(r.g);
                                    (r.estimate, Some(r.variance), r.coefficients, gv, r.mu.unwrap_or(mu))
                                }
                            };
                            let mut rec = ScenarioResult::new(
                                ScenarioKind::SwapChain,
                                p.label(),
                                "survival",
                                p.xi,
                                m,
                                label,
                                estimate,
                                1.0,
                            )
                            .with_param(b as f64)
                            .with_g_value(gv.unwrap_or(1.0), Some(mu_used));
                            rec.variance = variance;
                            rec.overhead = Some(sampling_overhead(&coeffs));
                            if (1..=3).contains(&m) && !p.rc && p.inverse == InverseKind::Pulse {
                                rec = rec.with_bounds(&accuracy_bounds(&target, &sched, mu.clamp(0.0, 1.0), m)?);
                            }
                            recs.push(rec);
                        }
                    }
                }
                Ok(recs)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}
