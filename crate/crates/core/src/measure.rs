//! Projective measurements of single atoms, with every outcome kept.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{AtomLevel, ProductBasis, StateVector};
use crate::scalar::{czero, Real, C};

/// Tolerance on the norm of an [`AtomBasisVector`] and on the Gram matrix of
/// a measurement basis.
pub const BASIS_TOLERANCE: f64 = 1e-10;

/// Branches whose probability falls at or below this are reported without a
/// post-measurement state.
pub const NULL_PROBABILITY: f64 = 1e-14;

/// A normalized state of one atom's ground manifold, used as a measurement
/// outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct AtomBasisVector<R: Real> {
    atom: usize,
    label: String,
    components: Vec<(AtomLevel, C<R>)>,
}

impl<R: Real> AtomBasisVector<R> {
    pub fn new(atom: usize, label: impl Into<String>, components: Vec<(AtomLevel, C<R>)>) -> Result<Self> {
        let v = AtomBasisVector { atom, label: label.into(), components };
        v.validate()?;
        Ok(v)
    }

    /// Rejects weight on the excited level, repeated levels and a norm off
    /// by more than [`BASIS_TOLERANCE`]. Also run after deserializing.
    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::new();
        for (level, _) in &self.components {
            if level.is_excited() || seen.contains(level) {
                return Err(Error::InvalidAtomVector);
            }
            seen.push(*level);
        }
        let n: R = self.components.iter().map(|(_, z)| z.norm_sqr()).sum();
        if (n - R::one()).abs() > R::lit(BASIS_TOLERANCE) {
            return Err(Error::InvalidAtomVector);
        }
        Ok(())
    }

    /// `(|a⟩ + sign |b⟩)/√2`
    pub fn balanced(atom: usize, label: impl Into<String>, a: AtomLevel, b: AtomLevel, sign: R) -> Result<Self> {
        let h = R::one() / R::lit(2.0).sqrt();
        Self::new(atom, label, vec![(a, C::new(h, R::zero())), (b, C::new(sign * h, R::zero()))])
    }

    /// The pair `(|-⟩ ± |q⟩)/√2`, labelled `chi+` and `chi-`.
    pub fn spectator_pair(atom: usize) -> Result<[Self; 2]> {
        use AtomLevel::{Ground, Spectator};
        Ok([
            Self::balanced(atom, "chi+", Ground, Spectator, R::one())?,
            Self::balanced(atom, "chi-", Ground, Spectator, -R::one())?,
        ])
    }

    /// The pair `(|-⟩_I ± |-⟩_II)/√2` of a two-ground-level atom.
    pub fn ground_pair(atom: usize) -> Result<[Self; 2]> {
        use AtomLevel::{Ground, GroundII};
        Ok([
            Self::balanced(atom, "ground+", Ground, GroundII, R::one())?,
            Self::balanced(atom, "ground-", Ground, GroundII, -R::one())?,
        ])
    }

    /// A single level as an outcome.
    pub fn level(atom: usize, level: AtomLevel) -> Result<Self> {
        Self::new(atom, format!("{level:?}").to_lowercase(), vec![(level, C::new(R::one(), R::zero()))])
    }

    pub fn atom(&self) -> usize {
        self.atom
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn components(&self) -> &[(AtomLevel, C<R>)] {
        &self.components
    }

    /// Amplitudes over the atom's level list in `basis`.
    fn dense(&self, basis: &ProductBasis) -> Result<Vec<C<R>>> {
        basis.check_atom(self.atom)?;
        let kind = basis.atoms()[self.atom];
        let mut out = vec![czero(); kind.dim()];
        for &(level, z) in &self.components {
            let l = kind.level_index(level).ok_or(Error::InvalidAtomVector)?;
            out[l] = z;
        }
        Ok(out)
    }

    fn overlap(&self, other: &Self) -> C<R> {
        self.components.iter().fold(czero(), |acc, (level, z)| {
            let w = other.components.iter().find(|(l, _)| l == level).map_or(czero(), |(_, w)| *w);
            acc + z.conj() * w
        })
    }
}

/// What happens to the measured atom in the post-measurement state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collapse {
    /// Drop the atom from the basis; use when it no longer interacts.
    #[default]
    Remove,
    /// Keep the atom, left in the measured state.
    Keep,
}

/// One measurement outcome.
#[derive(Clone, Debug)]
pub struct MeasurementBranch<R: Real> {
    pub outcome: String,
    pub probability: R,
    /// Renormalized state after the outcome; `None` for a null branch.
    pub post_state: Option<StateVector<R>>,
}

impl<R: Real> MeasurementBranch<R> {
    pub fn is_null(&self) -> bool {
        self.post_state.is_none()
    }
}

/// Projects `state` onto `outcome` for its atom. The probability is the
/// squared norm of the unnormalized branch.
pub fn project_atom<R: Real>(
    state: &StateVector<R>,
    outcome: &AtomBasisVector<R>,
    collapse: Collapse,
) -> Result<MeasurementBranch<R>> {
    outcome.validate()?;
    let basis = state.basis();
    let b = outcome.dense(basis)?;
    let atom = outcome.atom;
    let stride = basis.atom_stride(atom);
    let levels = b.len();
    let reduced = Arc::new(basis.without_atom(atom)?);
    let mut amps = vec![czero(); reduced.dim()];
    for (j, out) in amps.iter_mut().enumerate() {
        let (low, high) = (j % stride, j / stride);
        let base = low + high * stride * levels;
        *out = b.iter().enumerate().fold(czero(), |acc, (l, z)| acc + z.conj() * state.amplitudes()[base + l * stride]);
    }
    let probability: R = amps.iter().map(|z| z.norm_sqr()).sum();
    let post_state = if probability <= R::lit(NULL_PROBABILITY) {
        None
    } else {
        let scale = R::one() / probability.sqrt();
        let reduced_state = StateVector::from_amplitudes(reduced, amps.iter().map(|z| *z * scale).collect())?;
        Some(match collapse {
            Collapse::Remove => reduced_state,
            Collapse::Keep => reinsert(&reduced_state, basis, atom, &b)?,
        })
    };
    Ok(MeasurementBranch { outcome: outcome.label.clone(), probability, post_state })
}

/// Inverse of dropping atom `atom`: tensors its state back in place.
fn reinsert<R: Real>(
    reduced: &StateVector<R>,
    full: &Arc<ProductBasis>,
    atom: usize,
    atom_state: &[C<R>],
) -> Result<StateVector<R>> {
    let stride = full.atom_stride(atom);
    let levels = atom_state.len();
    let mut amps = vec![czero(); full.dim()];
    for (j, &z) in reduced.amplitudes().iter().enumerate() {
        let base = j % stride + (j / stride) * stride * levels;
        for (l, &c) in atom_state.iter().enumerate() {
            amps[base + l * stride] = z * c;
        }
    }
    StateVector::from_amplitudes(full.clone(), amps)
}

/// Every outcome of measuring `atom` in `outcomes`, which must be an
/// orthonormal basis of the levels it spans.
pub fn branch_all<R: Real>(
    state: &StateVector<R>,
    atom: usize,
    outcomes: &[AtomBasisVector<R>],
    collapse: Collapse,
) -> Result<Vec<MeasurementBranch<R>>> {
    check_orthonormal(atom, outcomes)?;
    outcomes.iter().map(|b| project_atom(state, b, collapse)).collect()
}

fn check_orthonormal<R: Real>(atom: usize, outcomes: &[AtomBasisVector<R>]) -> Result<()> {
    if outcomes.iter().any(|b| b.atom != atom) {
        return Err(Error::InvalidAtomVector);
    }
    let mut deviation = R::zero();
    for (i, a) in outcomes.iter().enumerate() {
        for (j, b) in outcomes.iter().enumerate() {
            let expected = if i == j { R::one() } else { R::zero() };
            deviation = deviation.max((a.overlap(b) - C::new(expected, R::zero())).norm());
        }
    }
    if deviation > R::lit(BASIS_TOLERANCE) {
        return Err(Error::NonOrthonormal(deviation.as_f64()));
    }
    let mut span: Vec<AtomLevel> = outcomes.iter().flat_map(|b| b.components.iter().map(|(l, _)| *l)).collect();
    span.sort();
    span.dedup();
    if span.len() != outcomes.len() {
        return Err(Error::IncompleteBasis { vectors: outcomes.len(), levels: span.len() });
    }
    Ok(())
}
