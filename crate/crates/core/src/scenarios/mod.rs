//! Config-driven scenario drivers and their flat result records.

pub mod bounds_sweep;
pub mod cnot;
pub mod config;
pub mod drift;
pub mod ising;
pub mod models;
pub mod output;
pub mod saturation;
pub mod swap_chain;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::coefficients::{select_coefficients, taylor_coefficients, CoefficientSet, GChoice};
use crate::error::Result;
use crate::linalg::{c, CVec};
use crate::liouville::VecState;
use config::CoefficientFamily;

pub use config::{ScenarioConfig, ScenarioKind};

/// One output row: a (scenario, parameter point, quantity, M, g) value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub point: String,
    pub quantity: String,
    pub xi: f64,
    /// Secondary parameter of the point (set count, amplitude, ...).
    pub param: Option<f64>,
    pub order: usize,
    pub g: String,
    pub g_value: Option<f64>,
    pub mu: Option<f64>,
    pub estimate: f64,
    pub ideal: f64,
    pub bias: f64,
    pub variance: Option<f64>,
    pub overhead: Option<f64>,
    pub eq16: Option<f64>,
    pub eq17: Option<f64>,
    pub eq18: Option<f64>,
    pub flags: String,
    pub seed: u64,
    pub config_hash: String,
    pub wall_clock_s: f64,
}

impl ScenarioResult {
    pub fn new(
        scenario: ScenarioKind,
        point: impl Into<String>,
        quantity: &str,
        xi: f64,
        order: usize,
        g: impl Into<String>,
        estimate: f64,
        ideal: f64,
    ) -> Self {
        Self {
            scenario: scenario.name().to_string(),
            point: point.into(),
            quantity: quantity.to_string(),
            xi,
            param: None,
            order,
            g: g.into(),
            g_value: None,
            mu: None,
            estimate,
            ideal,
            bias: estimate - ideal,
            variance: None,
            overhead: None,
            eq16: None,
            eq17: None,
            eq18: None,
            flags: String::new(),
            seed: 0,
            config_hash: String::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn with_param(mut self, p: f64) -> Self {
        self.param = Some(p);
        self
    }

    pub fn with_g_value(mut self, g: f64, mu: Option<f64>) -> Self {
        self.g_value = Some(g);
        self.mu = mu;
        self
    }

    pub fn with_bounds(mut self, b: &BoundReport) -> Self {
        self.eq16 = Some(b.eq16);
        self.eq17 = Some(b.eq17);
        self.eq18 = Some(b.eq18);
        self
    }

    pub fn with_flag(mut self, name: &str, on: bool) -> Self {
        if !self.flags.is_empty() {
            self.flags.push(';');
        }
        self.flags.push_str(name);
        self.flags.push('=');
        self.flags.push_str(if on { "1" } else { "0" });
        self
    }

    /// Value of a `name=0|1` flag, if present.
    pub fn flag(&self, name: &str) -> Option<bool> {
        self.flags.split(';').find_map(|f| {
            let (k, v) = f.split_once('=')?;
            (k == name).then_some(v == "1")
        })
    }

    fn sort_key_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.scenario
            .cmp(&other.scenario)
            .then_with(|| self.point.cmp(&other.point))
            .then_with(|| self.quantity.cmp(&other.quantity))
            .then_with(|| {
                let a = self.param.unwrap_or(f64::NEG_INFINITY);
                let b = other.param.unwrap_or(f64::NEG_INFINITY);
                a.total_cmp(&b)
            })
            .then_with(|| self.order.cmp(&other.order))
            .then_with(|| self.g.cmp(&other.g))
    }
}

/// Records of a run plus its total wall-clock time.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ScenarioResult>,
    pub wall_clock_s: f64,
}

/// Sort into the canonical order used for output.
pub fn sort_records(records: &mut [ScenarioResult]) {
    records.sort_by(|a, b| a.sort_key_cmp(b));
}

/// Run the scenario described by `cfg` with its own seed.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut records = match cfg.scenario.kind {
        ScenarioKind::Ising => ising::run_ising(cfg)?,
        ScenarioKind::CnotCalib => cnot::run_cnot_calibration(cfg)?,
        ScenarioKind::SwapChain => swap_chain::run_swap_chain(cfg)?,
        ScenarioKind::Drift => drift::run_drift(cfg)?,
        ScenarioKind::Saturation => saturation::run_saturation(cfg)?,
        ScenarioKind::BoundsSweep => bounds_sweep::run_bounds_sweep(cfg)?,
    };
    let hash = cfg.hash();
    for r in &mut records {
        r.seed = cfg.scenario.seed;
        r.config_hash = hash.clone();
    }
    sort_records(&mut records);
    Ok(RunOutput {
        records,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

/// Time a closure and stamp the elapsed seconds on its records.
pub(crate) fn timed(f: impl FnOnce() -> Result<Vec<ScenarioResult>>) -> Result<Vec<ScenarioResult>> {
    let start = Instant::now();
    let mut out = f()?;
    let dt = start.elapsed().as_secs_f64();
    for r in &mut out {
        r.wall_clock_s = dt;
    }
    Ok(out)
}

/// Find the single record matching the given keys.
pub fn find<'a>(
    records: &'a [ScenarioResult],
    point: &str,
    quantity: &str,
    order: usize,
    g: &str,
) -> Option<&'a ScenarioResult> {
    records
        .iter()
        .find(|r| r.point == point && r.quantity == quantity && r.order == order && r.g == g)
}

/// `Σ a_m v_m` over precomputed fold states.
pub fn combine_states(folds: &[VecState], coeffs: &CoefficientSet) -> Result<VecState> {
    let dim = folds[0].dim();
    let mut v = CVec::zeros(dim * dim);
    for (s, a) in folds.iter().zip(&coeffs.values) {
        v += s.vector() * c(*a, 0.0);
    }
    VecState::from_vector(dim, v)
}

/// Coefficients for order `order` and choice `g`, Taylor when `g = 1`, the
/// order is 0 or the family is Taylor.
pub fn coefficients_for(
    order: usize,
    g: GChoice,
    mu: f64,
    family: CoefficientFamily,
) -> Result<(CoefficientSet, Option<f64>)> {
    if order == 0 || family == CoefficientFamily::Taylor || !g.needs_mu() {
        return Ok((taylor_coefficients(order)?, None));
    }
    let gv = g.evaluate(mu);
    Ok((select_coefficients(order, gv, false)?, Some(gv)))
}
