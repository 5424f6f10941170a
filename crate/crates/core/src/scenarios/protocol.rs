//! Staged cat-state protocols: each stage is a separate evolution of the
//! branch state left by the previous measurement.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::darkstate::TargetState;
use crate::error::Result;
use crate::fock::{balanced_angle, beam_splitter, displace, AtomKind, AtomLevel, StateVector};
use crate::measure::{branch_all, project_atom, AtomBasisVector, Collapse};
use crate::model::{Sign, SystemSpec};
use crate::propagate::{fidelity, integrate, IntegrationWindow, Trajectory};
use crate::scalar::C;

use super::config::InitialState;
use super::presets::{CatPlan, CatVariant};

/// One measurement outcome in a result table. `probability` is the joint
/// probability of the whole outcome sequence `outcome`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub stage: usize,
    pub outcome: String,
    pub probability: f64,
    /// `|<target|branch>|`, absent for null branches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    /// Fidelity against the two-mode entangled cat, before the mixer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before_mixing: Option<f64>,
}

/// One integrated stage, kept for trajectory output.
pub(crate) struct StageRun {
    pub name: String,
    pub spec: SystemSpec<f64>,
    pub window: IntegrationWindow<f64>,
    pub trajectory: Trajectory<f64>,
}

pub(crate) struct CatRun {
    pub stages: Vec<StageRun>,
    pub branches: Vec<BranchRecord>,
}

/// Sample grid and tolerance shared by every stage.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StageGrid {
    pub samples: usize,
    pub tolerance: f64,
}

fn bit(label: &str) -> u8 {
    u8::from(label.ends_with('-'))
}

fn parity(bit: u8) -> Sign {
    if bit == 0 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

fn evolve(name: String, spec: SystemSpec<f64>, psi: &StateVector<f64>, grid: StageGrid) -> Result<(StageRun, StateVector<f64>)> {
    let window = IntegrationWindow::for_spec(&spec, grid.samples, grid.tolerance)?;
    let trajectory = integrate(&spec, &window, psi)?;
    let last = trajectory.final_state();
    Ok((StageRun { name, spec, window, trajectory }, last))
}

fn score(state: &StateVector<f64>, target: &TargetState<f64>) -> Result<f64> {
    let t = target.build(state.basis().clone())?;
    Ok(fidelity(state, &t)?.amplitude)
}

pub(crate) fn run_cat(plan: &CatPlan, grid: StageGrid) -> Result<CatRun> {
    match plan.variant {
        CatVariant::TwoMeasurements | CatVariant::Displaced => two_stage(plan, grid),
        CatVariant::SignCouplings => sign_couplings(plan, grid),
    }
}

/// Stage 1 moves the field from cavity 2 to cavity 1 with a chi+ atom and
/// measures it; stage 2 runs on each branch from cavity 1 to cavity 3.
fn two_stage(plan: &CatPlan, grid: StageGrid) -> Result<CatRun> {
    let alpha = C::new(plan.alpha, 0.0);
    let zero = C::new(0.0, 0.0);
    let first = plan.transfer_stage(AtomKind::WithSpectator, 1, 0);
    let initial = InitialState::Product {
        modes: plan.field(3, 1),
        atoms: vec![CatPlan::balanced_atom(AtomLevel::Ground, AtomLevel::Spectator)],
    };
    let psi0 = initial.build(Arc::new(first.basis()))?;
    let (stage, after) = evolve("stage1".into(), first, &psi0, grid)?;
    let mut stages = vec![stage];
    let mut branches = Vec::new();

    for b1 in branch_all(&after, 0, &AtomBasisVector::spectator_pair(0)?, Collapse::Remove)? {
        let i = bit(&b1.outcome);
        let expected = TargetState::Superposition {
            terms: vec![(C::new(1.0, 0.0), vec![-alpha, zero, zero]), (C::new(parity(i).value(), 0.0), vec![zero, alpha, zero])],
        };
        let Some(field) = b1.post_state else {
            branches.push(BranchRecord { stage: 1, outcome: b1.outcome, probability: b1.probability, fidelity: None, before_mixing: None });
            continue;
        };
        branches.push(BranchRecord {
            stage: 1,
            outcome: b1.outcome.clone(),
            probability: b1.probability,
            fidelity: Some(score(&field, &expected)?),
            before_mixing: None,
        });

        match plan.variant {
            CatVariant::TwoMeasurements => {
                let second = plan.transfer_stage(AtomKind::WithSpectator, 0, 2);
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let psi = field.attach_atom(AtomKind::WithSpectator, &[C::new(h, 0.0), C::new(0.0, 0.0), C::new(h, 0.0)])?;
                let (stage, out) = evolve(format!("stage2_{}", b1.outcome), second, &psi, grid)?;
                stages.push(stage);
                for b2 in branch_all(&out, 0, &AtomBasisVector::spectator_pair(0)?, Collapse::Remove)? {
                    let target = TargetState::Branch { alpha, i, j: bit(&b2.outcome) };
                    let fid = b2.post_state.as_ref().map(|s| score(s, &target)).transpose()?;
                    branches.push(BranchRecord {
                        stage: 2,
                        outcome: format!("{}/{}", b1.outcome, b2.outcome),
                        probability: b1.probability * b2.probability,
                        fidelity: fid,
                        before_mixing: None,
                    });
                }
            }
            CatVariant::Displaced => {
                let second = plan.transfer_stage(AtomKind::TwoLevel, 0, 2);
                let psi = field.attach_atom(AtomKind::TwoLevel, &[C::new(1.0, 0.0), C::new(0.0, 0.0)])?;
                let (stage, out) = evolve(format!("stage2_{}", b1.outcome), second, &psi, grid)?;
                stages.push(stage);
                let dark = project_atom(&out, &AtomBasisVector::level(0, AtomLevel::Ground)?, Collapse::Remove)?;
                let record = |fidelity, before_mixing| BranchRecord {
                    stage: 2,
                    outcome: format!("{}/ground", b1.outcome),
                    probability: b1.probability * dark.probability,
                    fidelity,
                    before_mixing,
                };
                let Some(moved) = dark.post_state.as_ref() else {
                    branches.push(record(None, None));
                    continue;
                };
                let beta = alpha * 0.5;
                let shifted = displace(&displace(moved, 1, -beta)?, 2, -beta)?;
                let entangled = TargetState::EntangledCat { first: 1, second: 2, beta, sign: parity(i) };
                let before = score(&shifted, &entangled)?;
                let mixed = beam_splitter(&shifted, 1, 2, -balanced_angle::<f64>())?;
                let cat = TargetState::Cat { mode: 1, alpha: beta * std::f64::consts::SQRT_2, sign: parity(i) };
                branches.push(record(Some(score(&mixed, &cat)?), Some(before)));
            }
            CatVariant::SignCouplings => unreachable!("handled by sign_couplings"),
        }
    }
    Ok(CatRun { stages, branches })
}

/// One atom with two ground levels moves the field from cavity 1 to cavity
/// 2; the coupling signs imprint opposite phases on the two components.
fn sign_couplings(plan: &CatPlan, grid: StageGrid) -> Result<CatRun> {
    let spec = plan.sign_stage();
    let initial = InitialState::Product {
        modes: plan.field(2, 0),
        atoms: vec![CatPlan::balanced_atom(AtomLevel::Ground, AtomLevel::GroundII)],
    };
    let psi0 = initial.build(Arc::new(spec.basis()))?;
    let (stage, out) = evolve("stage1".into(), spec, &psi0, grid)?;
    let alpha = C::new(plan.alpha, 0.0);
    let branches = branch_all(&out, 0, &AtomBasisVector::ground_pair(0)?, Collapse::Remove)?
        .into_iter()
        .map(|b| {
            let target = TargetState::Cat { mode: 1, alpha, sign: parity(bit(&b.outcome)) };
            let fid = b.post_state.as_ref().map(|s| score(s, &target)).transpose()?;
            Ok(BranchRecord { stage: 1, outcome: b.outcome, probability: b.probability, fidelity: fid, before_mixing: None })
        })
        .collect::<Result<_>>()?;
    Ok(CatRun { stages: vec![stage], branches })
}
