use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::darkstate::TargetState;
use crate::error::{Error, Result};
use crate::fock::{coherent_state, fock_amplitudes, AtomLevel, ProductBasis, StateVector};
use crate::model::SystemSpec;
use crate::scalar::C;

/// One run (or sweep) as read from JSON. Either `preset` or `system` must be
/// given; `params` overrides preset parameters by name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetState<f64>>,
    /// Basis labels whose populations are recorded, e.g. `|0,0,1,-,->`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub watch: Vec<String>,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Self {
        ScenarioConfig { preset: Some(name.to_string()), ..Default::default() }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn display_name(&self) -> String {
        self.name.clone().or_else(|| self.preset.clone()).unwrap_or_else(|| "custom".to_string())
    }

    /// Copy with one numeric field replaced. `params.<name>` sets a preset
    /// parameter; any other dotted path addresses the JSON form of the
    /// config, e.g. `system.detunings.0`.
    pub fn with_value(&self, path: &str, value: f64) -> Result<Self> {
        if let Some(name) = path.strip_prefix("params.") {
            if name.is_empty() {
                return Err(Error::InvalidAxis(path.to_string()));
            }
            return Ok(self.clone().with_param(name, value));
        }
        let mut json = serde_json::to_value(self)?;
        let pointer = format!("/{}", path.replace('.', "/"));
        match json.pointer_mut(&pointer) {
            Some(slot) if slot.is_number() => *slot = Value::from(value),
            _ => return Err(Error::InvalidAxis(path.to_string())),
        }
        serde_json::from_value(json).map_err(|_| Error::InvalidAxis(path.to_string()))
    }
}

/// Window overrides; unset fields fall back to the padded pulse span, 401
/// samples and tolerance 1e-9.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// A swept parameter: explicit `values`, or `steps` points from `start` to
/// `end` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl SweepAxis {
    pub fn linspace(path: &str, start: f64, end: f64, steps: usize) -> Self {
        SweepAxis { path: path.to_string(), values: Vec::new(), start: Some(start), end: Some(end), steps: Some(steps) }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if !self.values.is_empty() {
            return Ok(self.values.clone());
        }
        let bad = || Error::Config(format!("sweep axis `{}` needs values or start/end/steps", self.path));
        let (start, end, steps) = (self.start.ok_or_else(bad)?, self.end.ok_or_else(bad)?, self.steps.ok_or_else(bad)?);
        match steps {
            0 => Err(bad()),
            1 => Ok(vec![start]),
            n => Ok((0..n).map(|k| start + (end - start) * k as f64 / (n - 1) as f64).collect()),
        }
    }
}

/// Initial state: a basis label, or a product of per-mode and per-atom
/// factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Label(String),
    Product { modes: Vec<ModeInit>, atoms: Vec<AtomInit> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeInit {
    Fock(usize),
    Coherent(C<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomInit {
    Level(AtomLevel),
    Superposition(Vec<(AtomLevel, C<f64>)>),
}

impl InitialState {
    /// Builds the normalized state on `basis`.
    pub fn build(&self, basis: Arc<ProductBasis>) -> Result<StateVector<f64>> {
        match self {
            InitialState::Label(label) => {
                let i = basis.parse_label(label)?;
                StateVector::basis_state(basis, i)
            }
            InitialState::Product { modes, atoms } => {
                if modes.len() != basis.n_modes() || atoms.len() != basis.n_atoms() {
                    return Err(Error::Config(format!(
                        "initial state lists {} modes and {} atoms for {basis}",
                        modes.len(),
                        atoms.len()
                    )));
                }
                let mode_factors = modes
                    .iter()
                    .zip(basis.modes())
                    .map(|(m, space)| match m {
                        ModeInit::Fock(n) => fock_amplitudes(*n, *space),
                        ModeInit::Coherent(alpha) => coherent_state(*alpha, *space).map(|t| t.amplitudes),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let atom_factors = atoms
                    .iter()
                    .zip(basis.atoms())
                    .map(|(a, kind)| {
                        let parts: Vec<(AtomLevel, C<f64>)> = match a {
                            AtomInit::Level(l) => vec![(*l, C::new(1.0, 0.0))],
                            AtomInit::Superposition(v) => v.clone(),
                        };
                        let mut amps = vec![C::new(0.0, 0.0); kind.dim()];
                        for (level, z) in parts {
                            let l = kind.level_index(level).ok_or_else(|| {
                                Error::Config(format!("level {level:?} does not exist on a {kind:?} atom"))
                            })?;
                            amps[l] += z;
                        }
                        Ok(amps)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let psi = StateVector::product(basis, &mode_factors, &atom_factors)?;
                psi.normalized()
            }
        }
    }
}
