use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::darkstate::TargetState;
use crate::error::{Error, Result};
use crate::fock::{AtomKind, AtomLevel, ModeSpace};
use crate::model::{CouplingSpec, PulseSpec, Sign, SystemSpec};
use crate::scalar::C;

use super::config::{AtomInit, InitialState, ModeInit};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
    pub about: &'static str,
}

/// Catalog entry: what the preset sets up and the values it should
/// reproduce.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub about: &'static str,
    pub reference: &'static str,
    pub params: Vec<ParamInfo>,
}

/// Variants of the staged cat-state protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CatVariant {
    /// Two spectator-level atoms, each measured in the chi basis.
    TwoMeasurements,
    /// Second atom in its ground state, then displacement and mixing.
    Displaced,
    /// One atom with two ground levels and sign-controlled couplings.
    SignCouplings,
}

#[derive(Clone, Debug)]
pub(crate) struct Evolution {
    pub system: SystemSpec<f64>,
    pub initial: InitialState,
    pub target: Option<TargetState<f64>>,
    pub watch: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct CatPlan {
    pub variant: CatVariant,
    pub alpha: f64,
    pub n_max: usize,
    pub amplitude: f64,
    pub width: f64,
    pub t_early: f64,
    pub t_late: f64,
    /// Sign protocol only: one excited level for both ground levels.
    pub shared_excited: bool,
}

#[derive(Clone, Debug)]
pub(crate) enum Plan {
    Evolution(Evolution),
    Cat(CatPlan),
}

struct Preset {
    name: &'static str,
    about: &'static str,
    reference: &'static str,
    params: &'static [(&'static str, f64, &'static str)],
    build: fn(&Params) -> Result<Plan>,
}

const H_PARAMS: &[(&str, f64, &str)] = &[
    ("G", 100.0, "peak coupling of every pulse"),
    ("sigma", 3.0, "pulse width"),
    ("t3b", -5.22, "center of atom b on cavity 3"),
    ("t1b", -1.72, "center of atom b on cavity 1"),
    ("t1a", 1.78, "center of atom a on cavity 1"),
    ("t2a", 5.28, "center of atom a on cavity 2"),
    ("gamma", 0.0, "loss rate of cavity 1"),
    ("delta", 0.0, "detuning of both atoms"),
];

const H_SWAPPED_PARAMS: &[(&str, f64, &str)] = &[
    ("G", 100.0, "peak coupling of every pulse"),
    ("sigma", 3.0, "pulse width"),
    ("t3b", -5.22, "center of atom b on cavity 3"),
    ("t1a", -1.72, "center of atom a on cavity 1"),
    ("t1b", 1.78, "center of atom b on cavity 1"),
    ("t2a", 5.28, "center of atom a on cavity 2"),
    ("gamma", 0.0, "loss rate of cavity 1"),
    ("delta", 0.0, "detuning of both atoms"),
];

const NESTED_PARAMS: &[(&str, f64, &str)] = &[
    ("G", 100.0, "peak coupling of every pulse"),
    ("sigma_wide", 6.0, "width of both cavity-1 pulses"),
    ("sigma_narrow", 2.0, "width of the cavity-2 and cavity-3 pulses"),
    ("t_early", -3.0, "center of g1a and g3b"),
    ("t_late", 3.0, "center of g1b and g2a"),
    ("gamma", 0.0, "loss rate of cavity 1"),
];

const DOUBLE_PARAMS: &[(&str, f64, &str)] = &[
    ("G", 100.0, "peak coupling of every pulse"),
    ("sigma", 2.0, "pulse width"),
    ("t1a", -3.0, "center of atom a on cavity 1"),
    ("t2a", -1.0, "center of atom a on cavity 2"),
    ("t3b", 1.0, "center of atom b on cavity 3"),
    ("t1b", 3.0, "center of atom b on cavity 1"),
    ("gamma", 0.1, "loss rate of cavity 1"),
];

const EPR_PARAMS: &[(&str, f64, &str)] = &[
    ("G", 5.0, "peak coupling of every pulse"),
    ("sigma", 3.0, "pulse width"),
    ("t_early", -2.0, "center of g2a and g3b"),
    ("t_late", 2.0, "center of g1a and g1b"),
];

const STAR_PARAMS: &[(&str, f64, &str)] = &[
    ("G", 5.0, "peak coupling of atom a to every cavity"),
    ("sigma", 2.0, "pulse width"),
    ("t_targets", -1.0, "center of the couplings to cavities 1-3"),
    ("t_source", 1.0, "center of the coupling to cavity 4"),
    ("delta", 0.0, "detuning of atom a"),
];

const STAR_PERTURBED_PARAMS: &[(&str, f64, &str)] = &[
    ("G", 50.0, "peak coupling of atom a to every cavity"),
    ("sigma", 2.0, "pulse width"),
    ("t_targets", -1.0, "center of the couplings to cavities 1-3"),
    ("t_source", 1.0, "center of the coupling to cavity 4"),
    ("delta", 0.0, "detuning of atom a"),
    ("g_perturb", 5.0, "constant coupling of each perturbing atom"),
];

const UNSCALED_PARAMS: &[(&str, f64, &str)] = &[
    ("coupling_mhz", 100.0, "G / 2pi in MHz"),
    ("time_unit", 1e-7, "seconds per time unit"),
    ("sigma", 3.0, "pulse width in time units"),
    ("t3b", -5.22, "center of atom b on cavity 3"),
    ("t1b", -1.72, "center of atom b on cavity 1"),
    ("t1a", 1.78, "center of atom a on cavity 1"),
    ("t2a", 5.28, "center of atom a on cavity 2"),
];

const CAT_PARAMS: &[(&str, f64, &str)] = &[
    ("alpha", 1.0, "real coherent amplitude of the initial field"),
    ("n_max", 12.0, "photon cutoff per mode"),
    ("G", 100.0, "peak coupling of every pulse"),
    ("sigma", 3.0, "pulse width"),
    ("t_early", -3.0, "center of the pulse on the receiving cavity"),
    ("t_late", 3.0, "center of the pulse on the emptied cavity"),
];

const SIGN_PARAMS: &[(&str, f64, &str)] = &[
    ("alpha", 1.0, "real coherent amplitude of the initial field"),
    ("n_max", 12.0, "photon cutoff per mode"),
    ("G", 100.0, "peak coupling of every pulse"),
    ("sigma", 3.0, "pulse width"),
    ("t_early", -3.0, "center of the pulses on cavity 2"),
    ("t_late", 3.0, "center of the pulses on cavity 1"),
    ("shared_excited", 0.0, "1 to let both ground levels share one excited level"),
];

const PRESETS: &[Preset] = &[
    Preset {
        name: "h_counterintuitive",
        about: "H configuration, photon moved from cavity 2 to cavity 3 with the pulses g3b, g1b, g1a, g2a in that order",
        reference: "final cavity-3 population 0.998, max cavity-1 population 0.002; with gamma = 0.1: 0.997; gamma = 1: 0.990",
        params: H_PARAMS,
        build: h_counterintuitive,
    },
    Preset {
        name: "h_counterintuitive_swapped",
        about: "H configuration with the two middle pulses exchanged (g3b, g1a, g1b, g2a)",
        reference: "transfer above 0.99",
        params: H_SWAPPED_PARAMS,
        build: h_counterintuitive,
    },
    Preset {
        name: "h_nested",
        about: "H configuration with wide cavity-1 pulses centered together with narrow cavity-3 and cavity-2 pulses",
        reference: "final cavity-3 population 0.998, max cavity-1 population 0.008",
        params: NESTED_PARAMS,
        build: h_nested,
    },
    Preset {
        name: "double_stirap_lossy",
        about: "two consecutive two-cavity transfers through a populated, lossy cavity 1",
        reference: "final cavity-3 population 1.00 at gamma = 0, 0.20 at gamma = 0.1, none at gamma = 1",
        params: DOUBLE_PARAMS,
        build: double_stirap,
    },
    Preset {
        name: "h_epr",
        about: "H configuration splitting one photon from cavity 1 into cavities 2 and 3",
        reference: "fidelity 0.9999 against (|0,1,0> + |0,0,1>)/sqrt2",
        params: EPR_PARAMS,
        build: h_epr,
    },
    Preset {
        name: "star_w",
        about: "one atom coupled to four cavities, photon spread from cavity 4 over cavities 1-3",
        reference: "fidelity 0.998 against the W state",
        params: STAR_PARAMS,
        build: star_w,
    },
    Preset {
        name: "star_perturbed_one",
        about: "star configuration with a second atom held on cavity 3",
        reference: "photon ends shared by cavities 1 and 2, none in cavity 3",
        params: STAR_PERTURBED_PARAMS,
        build: star_perturbed_one,
    },
    Preset {
        name: "star_perturbed_two",
        about: "star configuration with extra atoms held on cavities 3 and 2",
        reference: "photon ends in cavity 1",
        params: STAR_PERTURBED_PARAMS,
        build: star_perturbed_two,
    },
    Preset {
        name: "unscaled_check",
        about: "the h_counterintuitive schedule at laboratory coupling and time scales",
        reference: "final cavity-3 population 0.969, max cavity-1 population 0.022",
        params: UNSCALED_PARAMS,
        build: unscaled,
    },
    Preset {
        name: "cat_two_measurements",
        about: "coherent state moved by two spectator-level atoms, each measured in the chi basis",
        reference: "four branch states; first-atom probabilities (1 +- exp(-alpha^2)) / 2",
        params: CAT_PARAMS,
        build: cat_two,
    },
    Preset {
        name: "cat_displaced",
        about: "one chi measurement, second atom in its ground state, then D(-alpha/2) on cavities 2 and 3 and a 50/50 mixer",
        reference: "entangled cat N(|-b,b> +- |b,-b>) on cavities 2 and 3, b = alpha/2",
        params: CAT_PARAMS,
        build: cat_displaced,
    },
    Preset {
        name: "cat_sign_couplings",
        about: "two cavities and one atom with two ground levels whose couplings to cavity 2 differ in sign",
        reference: "cat states N(|0,alpha> +- |0,-alpha>) after measuring the atom",
        params: SIGN_PARAMS,
        build: cat_sign,
    },
];

pub fn preset_catalog() -> Vec<PresetInfo> {
    PRESETS
        .iter()
        .map(|p| PresetInfo {
            name: p.name,
            about: p.about,
            reference: p.reference,
            params: p.params.iter().map(|&(name, default, about)| ParamInfo { name, default, about }).collect(),
        })
        .collect()
}

/// Merges overrides into the preset defaults and builds the plan.
pub(crate) fn resolve(name: &str, overrides: &BTreeMap<String, f64>) -> Result<(BTreeMap<String, f64>, Plan)> {
    let preset = PRESETS.iter().find(|p| p.name == name).ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    let mut values: BTreeMap<String, f64> = preset.params.iter().map(|&(k, v, _)| (k.to_string(), v)).collect();
    for (k, v) in overrides {
        match values.get_mut(k) {
            Some(slot) if v.is_finite() => *slot = *v,
            Some(_) => return Err(Error::Config(format!("parameter `{k}` must be finite"))),
            None => return Err(Error::Config(format!("preset `{name}` has no parameter `{k}`"))),
        }
    }
    let plan = (preset.build)(&Params { values: &values })?;
    Ok((values, plan))
}

struct Params<'a> {
    values: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn get(&self, key: &str) -> f64 {
        self.values[key]
    }

    fn count(&self, key: &str) -> Result<usize> {
        let v = self.get(key);
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::Config(format!("parameter `{key}` must be a positive integer, got {v}")));
        }
        Ok(v as usize)
    }
}

fn gaussian(g: f64, center: f64, width: f64) -> PulseSpec<f64> {
    PulseSpec::gaussian(g, center, width)
}

/// Three single-photon cavities and two atoms; `pulses` in the order g1a,
/// g2a, g1b, g3b as (center, width).
fn h_system(g: f64, pulses: [(f64, f64); 4], gamma: f64, delta: f64) -> SystemSpec<f64> {
    let [p1a, p2a, p1b, p3b] = pulses.map(|(c, w)| gaussian(g, c, w));
    let mut spec = SystemSpec::new(vec![ModeSpace::new(1); 3], vec![AtomKind::TwoLevel; 2])
        .with_coupling(CouplingSpec::new(0, 0, p1a).labeled("g1a"))
        .with_coupling(CouplingSpec::new(0, 1, p2a).labeled("g2a"))
        .with_coupling(CouplingSpec::new(1, 0, p1b).labeled("g1b"))
        .with_coupling(CouplingSpec::new(1, 2, p3b).labeled("g3b"));
    if gamma != 0.0 {
        spec = spec.with_loss(0, gamma);
    }
    spec.detunings = vec![delta; 2];
    spec
}

const H_WATCH: [&str; 5] = ["|1,0,0,-,->", "|0,1,0,-,->", "|0,0,1,-,->", "|0,0,0,+,->", "|0,0,0,-,+>"];

fn h_transfer(system: SystemSpec<f64>) -> Plan {
    Plan::Evolution(Evolution {
        system,
        initial: InitialState::Label("|0,1,0,-,->".into()),
        target: Some(TargetState::Basis { label: "|0,0,1,-,->".into() }),
        watch: H_WATCH.iter().map(|s| s.to_string()).collect(),
    })
}

fn h_counterintuitive(p: &Params) -> Result<Plan> {
    let s = p.get("sigma");
    let pulses = [(p.get("t1a"), s), (p.get("t2a"), s), (p.get("t1b"), s), (p.get("t3b"), s)];
    Ok(h_transfer(h_system(p.get("G"), pulses, p.get("gamma"), p.get("delta"))))
}

fn h_nested(p: &Params) -> Result<Plan> {
    let (wide, narrow) = (p.get("sigma_wide"), p.get("sigma_narrow"));
    let (early, late) = (p.get("t_early"), p.get("t_late"));
    let pulses = [(early, wide), (late, narrow), (late, wide), (early, narrow)];
    Ok(h_transfer(h_system(p.get("G"), pulses, p.get("gamma"), 0.0)))
}

fn double_stirap(p: &Params) -> Result<Plan> {
    let s = p.get("sigma");
    let pulses = [(p.get("t1a"), s), (p.get("t2a"), s), (p.get("t1b"), s), (p.get("t3b"), s)];
    Ok(h_transfer(h_system(p.get("G"), pulses, p.get("gamma"), 0.0)))
}

fn unscaled(p: &Params) -> Result<Plan> {
    let g = 2.0 * PI * p.get("coupling_mhz") * 1e6 * p.get("time_unit");
    let s = p.get("sigma");
    let pulses = [(p.get("t1a"), s), (p.get("t2a"), s), (p.get("t1b"), s), (p.get("t3b"), s)];
    Ok(h_transfer(h_system(g, pulses, 0.0, 0.0)))
}

fn h_epr(p: &Params) -> Result<Plan> {
    let s = p.get("sigma");
    let (early, late) = (p.get("t_early"), p.get("t_late"));
    let system = h_system(p.get("G"), [(late, s), (early, s), (late, s), (early, s)], 0.0, 0.0);
    Ok(Plan::Evolution(Evolution {
        system,
        initial: InitialState::Label("|1,0,0,-,->".into()),
        target: Some(TargetState::Epr { first: 1, second: 2, sign: Sign::Plus }),
        watch: H_WATCH.iter().map(|s| s.to_string()).collect(),
    }))
}

/// Atom a on four cavities, plus perturbing atoms held on the given
/// cavities with constant couplings.
fn star(p: &Params, perturbed: &[usize]) -> Plan {
    let g = p.get("G");
    let s = p.get("sigma");
    let (targets, source) = (p.get("t_targets"), p.get("t_source"));
    let mut atoms = vec![AtomKind::TwoLevel];
    atoms.extend(perturbed.iter().map(|_| AtomKind::TwoLevel));
    let mut spec = SystemSpec::new(vec![ModeSpace::new(1); 4], atoms);
    for m in 0..3 {
        spec = spec.with_coupling(CouplingSpec::new(0, m, gaussian(g, targets, s)).labeled(format!("g{}a", m + 1)));
    }
    spec = spec.with_coupling(CouplingSpec::new(0, 3, gaussian(g, source, s)).labeled("g4a"));
    for (k, &m) in perturbed.iter().enumerate() {
        let name = format!("g{}{}", m + 1, ["b", "c", "d"].get(k).copied().unwrap_or("x"));
        spec = spec.with_coupling(CouplingSpec::new(k + 1, m, PulseSpec::constant(p.get("g_perturb"))).labeled(name));
    }
    spec.detunings[0] = p.get("delta");

    let atoms_ground = vec!["-"; 1 + perturbed.len()].join(",");
    let mut watch: Vec<String> = (0..4)
        .map(|m| {
            let photons: Vec<&str> = (0..4).map(|k| if k == m { "1" } else { "0" }).collect();
            format!("|{},{}>", photons.join(","), atoms_ground)
        })
        .collect();
    for a in 0..1 + perturbed.len() {
        let levels: Vec<&str> = (0..1 + perturbed.len()).map(|k| if k == a { "+" } else { "-" }).collect();
        watch.push(format!("|0,0,0,0,{}>", levels.join(",")));
    }
    let target = if perturbed.is_empty() { Some(TargetState::W { modes: vec![0, 1, 2] }) } else { None };
    Plan::Evolution(Evolution { system: spec, initial: InitialState::Label(watch[3].clone()), target, watch })
}

fn star_w(p: &Params) -> Result<Plan> {
    Ok(star(p, &[]))
}

fn star_perturbed_one(p: &Params) -> Result<Plan> {
    Ok(star(p, &[2]))
}

fn star_perturbed_two(p: &Params) -> Result<Plan> {
    Ok(star(p, &[2, 1]))
}

fn cat_plan(p: &Params, variant: CatVariant) -> Result<Plan> {
    Ok(Plan::Cat(CatPlan {
        variant,
        alpha: p.get("alpha"),
        n_max: p.count("n_max")?,
        amplitude: p.get("G"),
        width: p.get("sigma"),
        t_early: p.get("t_early"),
        t_late: p.get("t_late"),
        shared_excited: p.values.get("shared_excited").is_some_and(|v| *v != 0.0),
    }))
}

fn cat_two(p: &Params) -> Result<Plan> {
    cat_plan(p, CatVariant::TwoMeasurements)
}

fn cat_displaced(p: &Params) -> Result<Plan> {
    cat_plan(p, CatVariant::Displaced)
}

fn cat_sign(p: &Params) -> Result<Plan> {
    cat_plan(p, CatVariant::SignCouplings)
}

impl CatPlan {
    fn pulse(&self, center: f64) -> PulseSpec<f64> {
        gaussian(self.amplitude, center, self.width)
    }

    /// One atom moving the field from `from` to `to` (mode indices of a
    /// three-mode system).
    pub fn transfer_stage(&self, kind: AtomKind, from: usize, to: usize) -> SystemSpec<f64> {
        SystemSpec::new(vec![ModeSpace::new(self.n_max); 3], vec![kind])
            .with_coupling(CouplingSpec::new(0, to, self.pulse(self.t_early)).labeled(format!("g{}", to + 1)))
            .with_coupling(CouplingSpec::new(0, from, self.pulse(self.t_late)).labeled(format!("g{}", from + 1)))
    }

    /// Two modes, one atom whose second ground level couples to cavity 2
    /// with the opposite sign.
    pub fn sign_stage(&self) -> SystemSpec<f64> {
        let early = self.pulse(self.t_early);
        let late = self.pulse(self.t_late);
        let kind = if self.shared_excited { AtomKind::TwoGround } else { AtomKind::DoubleLambda };
        SystemSpec::new(vec![ModeSpace::new(self.n_max); 2], vec![kind])
            .with_coupling(CouplingSpec::new(0, 1, early).labeled("g2a,I"))
            .with_coupling(CouplingSpec::new(0, 1, early.with_sign(Sign::Minus)).labeled("g2a,II").on_transition(AtomLevel::GroundII))
            .with_coupling(CouplingSpec::new(0, 0, late).labeled("g1a,I"))
            .with_coupling(CouplingSpec::new(0, 0, late).labeled("g1a,II").on_transition(AtomLevel::GroundII))
    }

    /// Initial photon field: `alpha` in mode `mode` of `modes`.
    pub fn field(&self, modes: usize, mode: usize) -> Vec<ModeInit> {
        (0..modes).map(|m| if m == mode { ModeInit::Coherent(C::new(self.alpha, 0.0)) } else { ModeInit::Fock(0) }).collect()
    }

    pub fn balanced_atom(a: AtomLevel, b: AtomLevel) -> AtomInit {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        AtomInit::Superposition(vec![(a, C::new(h, 0.0)), (b, C::new(h, 0.0))])
    }
}
