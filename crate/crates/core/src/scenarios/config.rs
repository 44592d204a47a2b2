//! TOML scenario configuration.
//!
//! A config has four sections. Keys that a scenario kind does not use are
//! rejected, as are keys that no scenario knows.
//!
//! ```toml
//! [scenario]
//! kind = "ising"
//! seed = 1
//! n_qubits = 5
//!
//! [noise]
//! xi = [0.00223, 0.00106]
//!
//! [mitigation]
//! orders = [0, 1, 2, 3]
//! g = ["1", "mu", "mu^2"]
//! coefficients = "adaptive"
//!
//! [output]
//! format = "csv"
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficients::GChoice;
use crate::error::{KikError, Result};

pub const SEED_ENV: &str = "KIK_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Ising,
    CnotCalib,
    SwapChain,
    Drift,
    Saturation,
    BoundsSweep,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Ising,
        ScenarioKind::CnotCalib,
        ScenarioKind::SwapChain,
        ScenarioKind::Drift,
        ScenarioKind::Saturation,
        ScenarioKind::BoundsSweep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Ising => "ising",
            ScenarioKind::CnotCalib => "cnot_calib",
            ScenarioKind::SwapChain => "swap_chain",
            ScenarioKind::Drift => "drift",
            ScenarioKind::Saturation => "saturation",
            ScenarioKind::BoundsSweep => "bounds_sweep",
        }
    }

    fn allowed_keys(
        &self,
    ) -> (
        &'static [&'static str],
        &'static [&'static str],
        &'static [&'static str],
    ) {
        match self {
            ScenarioKind::Ising => (
                &["n_qubits", "field", "coupling", "trotter_steps", "step_time"],
                &["jump_weights"],
                &["coefficients"],
            ),
            ScenarioKind::CnotCalib => (
                &["amplitude_grid", "chain_length"],
                &["decay_weight"],
                &["inverse", "rc"],
            ),
            ScenarioKind::SwapChain => (
                &["repetitions", "mode", "shots"],
                &["pauli_rates", "overrotation", "readout_flips"],
                &["coefficients", "inverse", "rc", "rc_count", "mu_shots"],
            ),
            ScenarioKind::Drift => (&["shots", "sets", "mode"], &["drift", "drift_time_scale"], &["split"]),
            ScenarioKind::Saturation => (&["n_qubits", "duration"], &[], &[]),
            ScenarioKind::BoundsSweep => (&["models"], &["pauli_rates"], &["coefficients"]),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = KikError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| KikError::InvalidSpec(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseKind {
    Pulse,
    Circuit,
}

impl InverseKind {
    pub fn name(&self) -> &'static str {
        match self {
            InverseKind::Pulse => "pulse",
            InverseKind::Circuit => "circuit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientFamily {
    /// `g = 1` for every requested `g`.
    Taylor,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Equal,
    Proportional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = KikError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(KikError::InvalidSpec(format!("unknown output format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsModel {
    /// One qubit, `H = ω Z`, Z-dephasing.
    Dephasing,
    /// Two qubits, non-commuting Hamiltonian, Pauli channel.
    PauliTwoQubit,
}

impl BoundsModel {
    pub fn name(&self) -> &'static str {
        match self {
            BoundsModel::Dephasing => "dephasing",
            BoundsModel::PauliTwoQubit => "pauli_two_qubit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trotter_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_time: Option<f64>,
    /// Multiples of the nominal amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<RunMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<BoundsModel>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub xi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_rates: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrotation: Option<Vec<f64>>,
    /// `[p(1|0), p(0|1)]` per qubit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout_flips: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_time_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationSection {
    pub orders: Vec<usize>,
    pub g: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<Vec<InverseKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rc: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rc_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub noise: NoiseSection,
    pub mitigation: MitigationSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parse `"1"`, `"mu"`, `"mu^p"`.
pub fn parse_g(s: &str) -> Result<GChoice> {
    let t = s.trim();
    match t {
        "1" => Ok(GChoice::One),
        "mu" => Ok(GChoice::MuPow(1.0)),
        _ => {
            let p = t
                .strip_prefix("mu^")
                .and_then(|p| p.parse::<f64>().ok())
                .filter(|p| p.is_finite() && *p >= 0.0)
                .ok_or_else(|| KikError::InvalidSpec(format!("bad g choice `{s}` (expected 1, mu or mu^p)")))?;
            Ok(GChoice::MuPow(p))
        }
    }
}

fn present<T>(o: &Option<T>, name: &'static str, out: &mut Vec<&'static str>) {
    if o.is_some() {
        out.push(name);
    }
}

fn bad(msg: impl Into<String>) -> KikError {
    KikError::InvalidSpec(msg.into())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML.
    /// Hash of the resolved physics and mitigation settings; the output
    /// section is excluded so the destination does not change the records.
    pub fn hash(&self) -> String {
        let key = ScenarioConfig {
            output: OutputSection::default(),
            ..self.clone()
        };
        let digest = Sha256::digest(key.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn g_choices(&self) -> Result<Vec<GChoice>> {
        self.mitigation.g.iter().map(|s| parse_g(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.scenario.kind;
        let (sk, nk, mk) = kind.allowed_keys();
        let s = &self.scenario;
        let mut used = Vec::new();
        present(&s.n_qubits, "n_qubits", &mut used);
        present(&s.field, "field", &mut used);
        present(&s.coupling, "coupling", &mut used);
        present(&s.trotter_steps, "trotter_steps", &mut used);
        present(&s.step_time, "step_time", &mut used);
        present(&s.amplitude_grid, "amplitude_grid", &mut used);
        present(&s.chain_length, "chain_length", &mut used);
        present(&s.repetitions, "repetitions", &mut used);
        present(&s.mode, "mode", &mut used);
        present(&s.shots, "shots", &mut used);
        present(&s.sets, "sets", &mut used);
        present(&s.duration, "duration", &mut used);
        present(&s.models, "models", &mut used);
        if let Some(k) = used.iter().find(|k| !sk.contains(k)) {
            return Err(bad(format!("key `scenario.{k}` is not used by scenario `{kind}`")));
        }
        let n = &self.noise;
        let mut used = Vec::new();
        present(&n.jump_weights, "jump_weights", &mut used);
        present(&n.decay_weight, "decay_weight", &mut used);
        present(&n.pauli_rates, "pauli_rates", &mut used);
        present(&n.overrotation, "overrotation", &mut used);
        present(&n.readout_flips, "readout_flips", &mut used);
        present(&n.drift, "drift", &mut used);
        present(&n.drift_time_scale, "drift_time_scale", &mut used);
        if let Some(k) = used.iter().find(|k| !nk.contains(k)) {
            return Err(bad(format!("key `noise.{k}` is not used by scenario `{kind}`")));
        }
        let m = &self.mitigation;
        let mut used = Vec::new();
        present(&m.coefficients, "coefficients", &mut used);
        present(&m.inverse, "inverse", &mut used);
        present(&m.rc, "rc", &mut used);
        present(&m.rc_count, "rc_count", &mut used);
        present(&m.mu_shots, "mu_shots", &mut used);
        present(&m.split, "split", &mut used);
        if let Some(k) = used.iter().find(|k| !mk.contains(k)) {
            return Err(bad(format!("key `mitigation.{k}` is not used by scenario `{kind}`")));
        }

        if n.xi.is_empty() {
            return Err(bad("noise.xi must list at least one value"));
        }
        if let Some(x) = n.xi.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(bad(format!("noise.xi entry {x} must be finite and >= 0")));
        }
        if m.orders.is_empty() {
            return Err(bad("mitigation.orders must not be empty"));
        }
        if m.g.is_empty() {
            return Err(bad("mitigation.g must not be empty"));
        }
        self.g_choices()?;
        if let Some(rates) = &n.pauli_rates {
            for (label, r) in rates {
                if !(r.is_finite() && *r >= 0.0) {
                    return Err(bad(format!("pauli rate for `{label}` must be >= 0")));
                }
            }
        }
        if let Some(w) = &n.jump_weights {
            if w.iter().any(|x| !x.is_finite()) {
                return Err(bad("noise.jump_weights must be finite"));
            }
        }
        if let Some(flips) = &n.readout_flips {
            if flips.iter().flatten().any(|p| !(0.0..0.5).contains(p)) {
                return Err(bad("readout flip probabilities must lie in [0, 0.5)"));
            }
        }
        if let Some(sets) = &s.sets {
            if sets.is_empty() || sets.contains(&0) {
                return Err(bad("scenario.sets entries must be >= 1"));
            }
        }
        if let Some(grid) = &s.amplitude_grid {
            if grid.iter().any(|x| !x.is_finite()) {
                return Err(bad("amplitude grid entries must be finite"));
            }
        }
        Ok(())
    }

    /// Runnable defaults reproducing the reference setup of each scenario.
    pub fn default_for(kind: ScenarioKind) -> Self {
        let blank_scenario = ScenarioSection {
            kind,
            seed: 20240501,
            n_qubits: None,
            field: None,
            coupling: None,
            trotter_steps: None,
            step_time: None,
            amplitude_grid: None,
            chain_length: None,
            repetitions: None,
            mode: None,
            shots: None,
            sets: None,
            duration: None,
            models: None,
        };
        let blank_noise = NoiseSection {
            xi: vec![],
            jump_weights: None,
            decay_weight: None,
            pauli_rates: None,
            overrotation: None,
            readout_flips: None,
            drift: None,
            drift_time_scale: None,
        };
        let blank_mit = MitigationSection {
            orders: vec![],
            g: vec![],
            coefficients: None,
            inverse: None,
            rc: None,
            rc_count: None,
            mu_shots: None,
            split: None,
        };
        let gs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let (scenario, noise, mitigation) = match kind {
            ScenarioKind::Ising => (
                ScenarioSection {
                    n_qubits: Some(5),
                    field: Some(0.2),
                    coupling: Some(0.1),
                    trotter_steps: Some(10),
                    step_time: Some(1.0),
                    ..blank_scenario
                },
                NoiseSection {
                    xi: vec![0.00223, 0.00106],
                    jump_weights: Some(vec![0.5, 1.7, 0.3, 2.0, 1.0]),
                    ..blank_noise
                },
                MitigationSection {
                    orders: vec![0, 1, 2, 3],
                    g: gs(&["1", "mu", "mu^2"]),
                    coefficients: Some(CoefficientFamily::Adaptive),
                    ..blank_mit
                },
            ),
            ScenarioKind::CnotCalib => (
                ScenarioSection {
                    amplitude_grid: Some(vec![0.98, 0.99, 0.995, 1.0, 1.005, 1.01, 1.02]),
                    chain_length: Some(11),
                    ..blank_scenario
                },
                NoiseSection {
                    xi: vec![0.02, 0.01],
                    decay_weight: Some(0.1),
                    ..blank_noise
                },
                MitigationSection {
                    orders: vec![0, 1, 2, 3, 4],
                    g: gs(&["1"]),
                    inverse: Some(vec![InverseKind::Pulse]),
                    rc: Some(vec![true]),
                    ..blank_mit
                },
            ),
            ScenarioKind::SwapChain => (
                ScenarioSection {
                    repetitions: Some(10),
                    mode: Some(RunMode::Exact),
                    shots: Some(100_000),
                    ..blank_scenario
                },
                NoiseSection {
                    xi: vec![0.002, 0.01],
                    pauli_rates: Some(default_swap_rates()),
                    overrotation: Some(vec![0.0, 0.02]),
                    readout_flips: Some(vec![[0.02, 0.03], [0.015, 0.025]]),
                    ..blank_noise
                },
                MitigationSection {
                    orders: vec![0, 1, 2, 3],
                    g: gs(&["1", "mu", "mu^2"]),
                    coefficients: Some(CoefficientFamily::Adaptive),
                    inverse: Some(vec![InverseKind::Pulse, InverseKind::Circuit]),
                    rc: Some(vec![false, true]),
                    rc_count: Some(16),
                    ..blank_mit
                },
            ),
            ScenarioKind::Drift => (
                ScenarioSection {
                    shots: Some(1000),
                    sets: Some(vec![1, 2, 4, 5, 10, 20]),
                    mode: Some(RunMode::Exact),
                    ..blank_scenario
                },
                NoiseSection {
                    xi: vec![0.05],
                    drift: Some(true),
                    drift_time_scale: Some(1000.0 / std::f64::consts::PI),
                    ..blank_noise
                },
                MitigationSection {
                    orders: vec![1, 2],
                    g: gs(&["1"]),
                    split: Some(SplitKind::Equal),
                    ..blank_mit
                },
            ),
            ScenarioKind::Saturation => (
                ScenarioSection {
                    n_qubits: Some(4),
                    duration: Some(1.0),
                    ..blank_scenario
                },
                NoiseSection {
                    xi: vec![0.02, 0.01],
                    ..blank_noise
                },
                MitigationSection {
                    orders: (0..=8).collect(),
                    g: gs(&["1"]),
                    ..blank_mit
                },
            ),
            ScenarioKind::BoundsSweep => (
                ScenarioSection {
                    models: Some(vec![BoundsModel::Dephasing, BoundsModel::PauliTwoQubit]),
                    ..blank_scenario
                },
                NoiseSection {
                    xi: vec![0.0, 0.0025, 0.005, 0.01, 0.02, 0.04, 0.08],
                    pauli_rates: Some(default_bounds_rates()),
                    ..blank_noise
                },
                MitigationSection {
                    orders: vec![1, 2, 3],
                    g: gs(&["1", "mu", "mu^2"]),
                    coefficients: Some(CoefficientFamily::Adaptive),
                    ..blank_mit
                },
            ),
        };
        ScenarioConfig {
            scenario,
            noise,
            mitigation,
            output: OutputSection::default(),
        }
    }

    /// Seed precedence: explicit flag, then `KIK_SEED`, then the config.
    pub fn resolve_seed(&mut self, flag: Option<u64>, env: Option<&str>) -> Result<u64> {
        let seed = match (flag, env) {
            (Some(s), _) => s,
            (None, Some(v)) => v
                .trim()
                .parse::<u64>()
                .map_err(|_| bad(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?,
            (None, None) => self.scenario.seed,
        };
        self.scenario.seed = seed;
        Ok(seed)
    }
}

/// Single-qubit Pauli rates applied on every CNOT of the swap chain.
pub fn default_swap_rates() -> BTreeMap<String, f64> {
    [
        ("XI", 1.0),
        ("YI", 0.5),
        ("ZI", 1.5),
        ("IX", 0.7),
        ("IY", 0.4),
        ("IZ", 1.2),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn default_bounds_rates() -> BTreeMap<String, f64> {
    [("XI", 0.6), ("ZI", 1.0), ("IY", 0.8), ("IZ", 0.5), ("XX", 0.3)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}
