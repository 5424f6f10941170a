//! Declarative description of a cavity/atom system and assembly of its
//! interaction-picture Hamiltonian.
//!
//! All cavity modes are taken to be degenerate; the common mode frequency is
//! removed by the interaction picture and never appears. Units: ħ = 1, times
//! in units of `T`, couplings, detunings and loss rates in `1/T`.
//!
//! Couplings are real. Each coupling `g(t)` contributes `g(t)[â σ⁺ + â† σ⁻]`
//! where `σ⁺` raises its chosen ground level to `|+⟩`. The spectator level
//! `|q⟩` has no couplings and zero energy. An atom's detuning `Δ` is the
//! diagonal energy of its `|+⟩` level.

use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{AtomKind, AtomLevel, ModeSpace, ProductBasis};
use crate::linalg::SparseMatrix;
use crate::scalar::{czero, mul_neg_i, Real, C};

/// Overall sign of a coupling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value<R: Real>(self) -> R {
        match self {
            Sign::Plus => R::one(),
            Sign::Minus => -R::one(),
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("coupling sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PulseShape<R> {
    /// `exp(-(t - center)² / width²)`
    Gaussian { center: R, width: R },
    Constant,
}

/// Coupling envelope: amplitude `G`, shape, and sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec<R> {
    #[serde(flatten)]
    pub shape: PulseShape<R>,
    pub amplitude: R,
    #[serde(default)]
    pub sign: Sign,
}

impl<R: Real> PulseSpec<R> {
    pub fn gaussian(amplitude: R, center: R, width: R) -> Self {
        PulseSpec { shape: PulseShape::Gaussian { center, width }, amplitude, sign: Sign::Plus }
    }

    pub fn constant(amplitude: R) -> Self {
        PulseSpec { shape: PulseShape::Constant, amplitude, sign: Sign::Plus }
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    /// `sign * G * exp(-(t - t0)² / σ²)` or `sign * G`.
    pub fn value(&self, t: R) -> R {
        let g = self.sign.value::<R>() * self.amplitude;
        match self.shape {
            PulseShape::Gaussian { center, width } => {
                let x = (t - center) / width;
                g * (-x * x).exp()
            }
            PulseShape::Constant => g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidSystem("pulse amplitude must be finite".into()));
        }
        if let PulseShape::Gaussian { center, width } = self.shape {
            if !width.is_finite() || !center.is_finite() || width <= R::zero() {
                return Err(Error::InvalidSystem("gaussian pulse needs finite center and width > 0".into()));
            }
        }
        Ok(())
    }
}

/// Free function form of [`PulseSpec::value`].
pub fn pulse_value<R: Real>(p: &PulseSpec<R>, t: R) -> R {
    p.value(t)
}

fn default_transition() -> AtomLevel {
    AtomLevel::Ground
}

/// Coupling of one atomic transition to one cavity mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec<R> {
    pub atom: usize,
    pub mode: usize,
    /// Ground level raised to `|+⟩` by this coupling.
    #[serde(default = "default_transition")]
    pub transition: AtomLevel,
    pub pulse: PulseSpec<R>,
    /// Display name such as `g1a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl<R: Real> CouplingSpec<R> {
    pub fn new(atom: usize, mode: usize, pulse: PulseSpec<R>) -> Self {
        CouplingSpec { atom, mode, transition: AtomLevel::Ground, pulse, label: None }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn on_transition(mut self, level: AtomLevel) -> Self {
        self.transition = level;
        self
    }

    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("g(mode {}, atom {})", self.mode, self.atom))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec<R> {
    pub mode: usize,
    pub gamma: R,
}

/// Modes, atoms, couplings, detunings and losses of one setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec<R> {
    pub modes: Vec<ModeSpace>,
    pub atoms: Vec<AtomKind>,
    pub couplings: Vec<CouplingSpec<R>>,
    /// Detuning per atom.
    pub detunings: Vec<R>,
    #[serde(default)]
    pub losses: Vec<LossSpec<R>>,
}

impl<R: Real> SystemSpec<R> {
    /// Resonant system without couplings or losses.
    pub fn new(modes: Vec<ModeSpace>, atoms: Vec<AtomKind>) -> Self {
        let detunings = vec![R::zero(); atoms.len()];
        SystemSpec { modes, atoms, couplings: Vec::new(), detunings, losses: Vec::new() }
    }

    pub fn with_coupling(mut self, c: CouplingSpec<R>) -> Self {
        self.couplings.push(c);
        self
    }

    pub fn with_loss(mut self, mode: usize, gamma: R) -> Self {
        self.losses.push(LossSpec { mode, gamma });
        self
    }

    pub fn basis(&self) -> ProductBasis {
        ProductBasis::new(self.modes.clone(), self.atoms.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.detunings.len() != self.atoms.len() {
            return Err(Error::InvalidSystem(format!(
                "{} detunings for {} atoms",
                self.detunings.len(),
                self.atoms.len()
            )));
        }
        if self.detunings.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidSystem("detunings must be finite".into()));
        }
        for c in &self.couplings {
            if c.atom >= self.atoms.len() {
                return Err(Error::IndexOutOfRange { what: "coupling atom", index: c.atom, len: self.atoms.len() });
            }
            if c.mode >= self.modes.len() {
                return Err(Error::IndexOutOfRange { what: "coupling mode", index: c.mode, len: self.modes.len() });
            }
            let kind = self.atoms[c.atom];
            if kind.excited_partner(c.transition).is_none() {
                return Err(Error::InvalidSystem(format!(
                    "coupling {} uses level {:?} which cannot couple on a {:?} atom",
                    c.name(),
                    c.transition,
                    kind
                )));
            }
            c.pulse.validate()?;
        }
        for l in &self.losses {
            if l.mode >= self.modes.len() {
                return Err(Error::IndexOutOfRange { what: "loss mode", index: l.mode, len: self.modes.len() });
            }
            if !l.gamma.is_finite() {
                return Err(Error::InvalidSystem("loss rate must be finite".into()));
            }
            if l.gamma < R::zero() {
                return Err(Error::NegativeLoss { mode: l.mode, gamma: l.gamma.as_f64() });
            }
        }
        Ok(())
    }

    fn check_basis(&self, basis: &ProductBasis) -> Result<()> {
        if basis.modes() != self.modes.as_slice() || basis.atoms() != self.atoms.as_slice() {
            return Err(Error::BasisMismatch(format!("basis {basis} does not match the system")));
        }
        Ok(())
    }

    /// Coupling values at time `t`.
    pub fn coupling_values(&self, t: R) -> Vec<R> {
        self.couplings.iter().map(|c| c.pulse.value(t)).collect()
    }

    pub fn is_lossless(&self) -> bool {
        self.losses.iter().all(|l| l.gamma == R::zero())
    }
}

/// Indices of basis states with photons + excited atoms equal to `n`.
pub fn excitation_sector<R: Real>(spec: &SystemSpec<R>, n: usize, basis: &ProductBasis) -> Result<Vec<usize>> {
    spec.check_basis(basis)?;
    Ok((0..basis.dim()).filter(|&i| basis.excitation(i) == n).collect())
}

/// Diagonal of the damping term: `Σ_j (γ_j / 2) n_j(k)` for each basis state.
pub fn loss_generator<R: Real>(spec: &SystemSpec<R>, basis: &ProductBasis) -> Result<Vec<R>> {
    spec.check_basis(basis)?;
    for l in &spec.losses {
        if l.gamma < R::zero() {
            return Err(Error::NegativeLoss { mode: l.mode, gamma: l.gamma.as_f64() });
        }
        basis.check_mode(l.mode)?;
    }
    let half = R::lit(0.5);
    Ok((0..basis.dim())
        .map(|k| {
            spec.losses
                .iter()
                .map(|l| l.gamma * half * R::from_usize_exact(basis.photons(k, l.mode)))
                .sum()
        })
        .collect())
}

/// One `g √n` matrix element between a ground-level state (`col`) and the
/// state with one photon fewer and the atom excited (`row`), local indices.
#[derive(Clone, Copy, Debug, PartialEq)]
struct CouplingEntry<R> {
    row: usize,
    col: usize,
    coupling: usize,
    factor: R,
}

/// Time-dependent generator restricted to a set of basis states:
/// `dC/dt = -i H(t) C - D C`.
///
/// The restriction is exact when the index set is a union of excitation
/// sectors, since both the Hamiltonian and the damping preserve `N`.
#[derive(Clone, Debug)]
pub struct Generator<R: Real> {
    basis: Arc<ProductBasis>,
    indices: Vec<usize>,
    pulses: Vec<PulseSpec<R>>,
    entries: Vec<CouplingEntry<R>>,
    detuning: Vec<R>,
    damping: Vec<R>,
}

impl<R: Real> Generator<R> {
    /// Generator on the whole product basis.
    pub fn full(spec: &SystemSpec<R>, basis: Arc<ProductBasis>) -> Result<Self> {
        let all: Vec<usize> = (0..basis.dim()).collect();
        Self::restricted(spec, basis, all)
    }

    /// Generator on the given (sorted, unique) basis indices. Couplings that
    /// leave the set are dropped.
    pub fn restricted(spec: &SystemSpec<R>, basis: Arc<ProductBasis>, indices: Vec<usize>) -> Result<Self> {
        spec.validate()?;
        spec.check_basis(&basis)?;
        let mut lookup = vec![usize::MAX; basis.dim()];
        for (local, &i) in indices.iter().enumerate() {
            if i >= basis.dim() {
                return Err(Error::IndexOutOfRange { what: "basis index", index: i, len: basis.dim() });
            }
            lookup[i] = local;
        }
        let mut entries = Vec::new();
        for (ci, c) in spec.couplings.iter().enumerate() {
            let kind = basis.atoms()[c.atom];
            let ground = kind.level_index(c.transition).expect("validated transition");
            let partner = kind.excited_partner(c.transition).expect("validated transition");
            let excited = kind.level_index(partner).expect("partner is a level of the kind");
            let mstride = basis.mode_stride(c.mode);
            let astride = basis.atom_stride(c.atom);
            for (local, &i) in indices.iter().enumerate() {
                let n = basis.photons(i, c.mode);
                if n == 0 || basis.level_index(i, c.atom) != ground {
                    continue;
                }
                let j = i - mstride + (excited - ground) * astride;
                let row = lookup[j];
                if row == usize::MAX {
                    continue;
                }
                entries.push(CouplingEntry { row, col: local, coupling: ci, factor: R::from_usize_exact(n).sqrt() });
            }
        }
        let detuning = indices
            .iter()
            .map(|&i| {
                (0..basis.n_atoms())
                    .filter(|&a| basis.level(i, a).is_excited())
                    .map(|a| spec.detunings[a])
                    .sum()
            })
            .collect();
        let full_damping = loss_generator(spec, &basis)?;
        let damping = indices.iter().map(|&i| full_damping[i]).collect();
        Ok(Generator {
            basis,
            indices,
            pulses: spec.couplings.iter().map(|c| c.pulse).collect(),
            entries,
            detuning,
            damping,
        })
    }

    pub fn basis(&self) -> &Arc<ProductBasis> {
        &self.basis
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn damping(&self) -> &[R] {
        &self.damping
    }

    pub fn is_lossless(&self) -> bool {
        self.damping.iter().all(|d| *d == R::zero())
    }

    pub fn coupling_values(&self, t: R) -> Vec<R> {
        self.pulses.iter().map(|p| p.value(t)).collect()
    }

    /// `out = H(t) y` on the restricted set.
    pub fn apply_hamiltonian(&self, t: R, y: &[C<R>], out: &mut [C<R>]) {
        let g = self.coupling_values(t);
        for ((o, yi), d) in out.iter_mut().zip(y).zip(&self.detuning) {
            *o = *yi * *d;
        }
        for e in &self.entries {
            let v = g[e.coupling] * e.factor;
            out[e.row] += y[e.col] * v;
            out[e.col] += y[e.row] * v;
        }
    }

    /// `out = -i H(t) y - D y`
    pub fn derivative(&self, t: R, y: &[C<R>], out: &mut [C<R>]) {
        self.apply_hamiltonian(t, y, out);
        for ((o, yi), d) in out.iter_mut().zip(y).zip(&self.damping) {
            *o = mul_neg_i(*o) - *yi * *d;
        }
    }

    /// Dense real-symmetric `H(t)` on the restricted set.
    pub fn dense_real(&self, t: R) -> Array2<R> {
        let n = self.dim();
        let g = self.coupling_values(t);
        let mut h = Array2::from_elem((n, n), R::zero());
        for (k, d) in self.detuning.iter().enumerate() {
            h[[k, k]] = *d;
        }
        for e in &self.entries {
            let v = g[e.coupling] * e.factor;
            h[[e.row, e.col]] += v;
            h[[e.col, e.row]] += v;
        }
        h
    }

    /// Dense `H(t)` as a complex matrix on the restricted set.
    pub fn dense(&self, t: R) -> Array2<C<R>> {
        self.dense_real(t).mapv(|x| C::new(x, R::zero()))
    }

    /// Dense `-i H(t) - D` on the restricted set.
    pub fn dense_generator(&self, t: R) -> Array2<C<R>> {
        let h = self.dense_real(t);
        let mut g = h.mapv(|x| C::new(R::zero(), -x));
        for (k, d) in self.damping.iter().enumerate() {
            g[[k, k]] -= C::new(*d, R::zero());
        }
        g
    }
}

/// Closure of `seeds` under the coupling graph of `spec`: every basis state
/// the Hamiltonian can reach from them, whatever the pulse values. Sorted.
pub fn reachable_indices<R: Real>(spec: &SystemSpec<R>, basis: Arc<ProductBasis>, seeds: &[usize]) -> Result<Vec<usize>> {
    let dim = basis.dim();
    let full = Generator::full(spec, basis)?;
    let mut neighbours = vec![Vec::new(); dim];
    for e in &full.entries {
        neighbours[e.row].push(e.col);
        neighbours[e.col].push(e.row);
    }
    let mut seen = vec![false; dim];
    let mut stack = Vec::new();
    for &i in seeds {
        if i >= dim {
            return Err(Error::IndexOutOfRange { what: "basis index", index: i, len: dim });
        }
        if !seen[i] {
            seen[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        for &j in &neighbours[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    Ok((0..dim).filter(|&i| seen[i]).collect())
}

/// `H(t)` on the full product basis as a dense matrix.
///
/// Dense output is meant for small bases; use [`hamiltonian_sparse`] for
/// multi-photon spaces.
pub fn build_hamiltonian<R: Real>(spec: &SystemSpec<R>, t: R, basis: &ProductBasis) -> Result<Array2<C<R>>> {
    Ok(Generator::full(spec, Arc::new(basis.clone()))?.dense(t))
}

pub fn hamiltonian_sparse<R: Real>(spec: &SystemSpec<R>, t: R, basis: &ProductBasis) -> Result<SparseMatrix<C<R>>> {
    let generator = Generator::full(spec, Arc::new(basis.clone()))?;
    let g = generator.coupling_values(t);
    let mut triplets = Vec::new();
    for (k, d) in generator.detuning.iter().enumerate() {
        if *d != R::zero() {
            triplets.push((k, k, C::new(*d, R::zero())));
        }
    }
    for e in &generator.entries {
        let v = C::new(g[e.coupling] * e.factor, R::zero());
        triplets.push((e.row, e.col, v));
        triplets.push((e.col, e.row, v));
    }
    let n = basis.dim();
    Ok(SparseMatrix::from_triplets(n, n, triplets))
}

/// Dense `H(t)` restricted to the given basis indices.
pub fn sector_hamiltonian<R: Real>(
    spec: &SystemSpec<R>,
    t: R,
    basis: &ProductBasis,
    indices: &[usize],
) -> Result<Array2<C<R>>> {
    Ok(Generator::restricted(spec, Arc::new(basis.clone()), indices.to_vec())?.dense(t))
}

/// Full-basis total excitation operator as a diagonal.
pub fn excitation_diagonal<R: Real>(basis: &ProductBasis) -> Array2<C<R>> {
    let n = basis.dim();
    let mut m = Array2::from_elem((n, n), czero());
    for i in 0..n {
        m[[i, i]] = C::new(R::from_usize_exact(basis.excitation(i)), R::zero());
    }
    m
}
