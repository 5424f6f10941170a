//! Truncated bosonic modes, product bases with atomic factors, state vectors
//! and the single- and two-mode operators used to build and post-process
//! cavity states.
//!
//! Basis ordering is fixed: modes first (ascending index), then atoms
//! (ascending index), as a little-endian mixed-radix number. Mode 0 is the
//! fastest-varying digit.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm, SparseMatrix};
use crate::scalar::{czero, ln_factorial, Real, C};

/// Default bound on the discarded Poisson tail of a truncated coherent state.
pub const DEFAULT_TAIL_BOUND: f64 = 1e-10;

/// Photon-number cutoff of a single cavity mode (inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeSpace {
    pub n_max: usize,
}

impl ModeSpace {
    pub fn new(n_max: usize) -> Self {
        ModeSpace { n_max }
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Cutoff `ceil(|alpha|^2 + 6|alpha| + 10)` for coherent-state work.
    pub fn for_coherent(alpha_abs: f64) -> Self {
        let a = alpha_abs.abs();
        ModeSpace::new((a * a + 6.0 * a + 10.0).ceil() as usize)
    }
}

/// One atomic level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomLevel {
    /// `|-⟩`, or `|-⟩_I` on a two-ground-level atom.
    Ground,
    /// `|-⟩_II`
    GroundII,
    /// `|+⟩`, or `|+⟩_I` on a double-lambda atom.
    Excited,
    /// `|q⟩`, never coupled to a cavity.
    Spectator,
    /// `|+⟩_II`, the partner of `|-⟩_II` on a double-lambda atom.
    ExcitedII,
}

impl AtomLevel {
    pub fn is_excited(self) -> bool {
        matches!(self, AtomLevel::Excited | AtomLevel::ExcitedII)
    }
}

/// Level structure of an atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    /// `|-⟩, |+⟩`
    TwoLevel,
    /// `|-⟩, |+⟩, |q⟩`
    WithSpectator,
    /// `|-⟩_I, |-⟩_II, |+⟩`
    TwoGround,
    /// `|-⟩_I, |-⟩_II, |+⟩_I, |+⟩_II`: two lambda systems with separate
    /// excited levels.
    DoubleLambda,
}

impl AtomKind {
    pub fn levels(self) -> &'static [AtomLevel] {
        use AtomLevel::*;
        match self {
            AtomKind::TwoLevel => &[Ground, Excited],
            AtomKind::WithSpectator => &[Ground, Excited, Spectator],
            AtomKind::TwoGround => &[Ground, GroundII, Excited],
            AtomKind::DoubleLambda => &[Ground, GroundII, Excited, ExcitedII],
        }
    }

    /// Excited level reached from the ground level `ground` by a cavity photon.
    pub fn excited_partner(self, ground: AtomLevel) -> Option<AtomLevel> {
        match (self, ground) {
            (AtomKind::DoubleLambda, AtomLevel::GroundII) => Some(AtomLevel::ExcitedII),
            (_, AtomLevel::Ground | AtomLevel::GroundII) if self.level_index(ground).is_some() => Some(AtomLevel::Excited),
            _ => None,
        }
    }

    pub fn dim(self) -> usize {
        self.levels().len()
    }

    pub fn level_index(self, level: AtomLevel) -> Option<usize> {
        self.levels().iter().position(|&l| l == level)
    }

    fn symbol(self, level: AtomLevel) -> &'static str {
        match (self, level) {
            (AtomKind::TwoGround | AtomKind::DoubleLambda, AtomLevel::Ground) => "-I",
            (_, AtomLevel::Ground) => "-",
            (_, AtomLevel::GroundII) => "-II",
            (AtomKind::DoubleLambda, AtomLevel::Excited) => "+I",
            (_, AtomLevel::Excited) => "+",
            (_, AtomLevel::ExcitedII) => "+II",
            (_, AtomLevel::Spectator) => "q",
        }
    }

    fn parse_symbol(self, s: &str) -> Option<AtomLevel> {
        self.levels().iter().copied().find(|&l| self.symbol(l) == s)
    }
}

/// Labels of one product-basis state: photon numbers then atomic levels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub photons: Vec<usize>,
    pub levels: Vec<AtomLevel>,
}

impl BasisLabel {
    pub fn new(photons: Vec<usize>, levels: Vec<AtomLevel>) -> Self {
        BasisLabel { photons, levels }
    }
}

/// Tensor product of truncated modes and atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductBasis {
    modes: Vec<ModeSpace>,
    atoms: Vec<AtomKind>,
    strides: Vec<usize>,
    radices: Vec<usize>,
    dim: usize,
}

impl ProductBasis {
    pub fn new(modes: Vec<ModeSpace>, atoms: Vec<AtomKind>) -> Self {
        let radices: Vec<usize> =
            modes.iter().map(|m| m.dim()).chain(atoms.iter().map(|a| a.dim())).collect();
        let mut strides = Vec::with_capacity(radices.len());
        let mut acc = 1usize;
        for &r in &radices {
            strides.push(acc);
            acc *= r;
        }
        ProductBasis { modes, atoms, strides, radices, dim: acc }
    }

    /// `n_modes` identical modes with cutoff `n_max` and the given atoms.
    pub fn uniform(n_modes: usize, n_max: usize, atoms: Vec<AtomKind>) -> Self {
        ProductBasis::new(vec![ModeSpace::new(n_max); n_modes], atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[ModeSpace] {
        &self.modes
    }

    pub fn atoms(&self) -> &[AtomKind] {
        &self.atoms
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.modes.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { what: "mode", index: mode, len: self.modes.len() })
        }
    }

    pub(crate) fn check_atom(&self, atom: usize) -> Result<()> {
        if atom < self.atoms.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { what: "atom", index: atom, len: self.atoms.len() })
        }
    }

    #[inline]
    fn digit(&self, index: usize, factor: usize) -> usize {
        (index / self.strides[factor]) % self.radices[factor]
    }

    #[inline]
    pub fn photons(&self, index: usize, mode: usize) -> usize {
        self.digit(index, mode)
    }

    #[inline]
    pub fn level_index(&self, index: usize, atom: usize) -> usize {
        self.digit(index, self.modes.len() + atom)
    }

    #[inline]
    pub fn level(&self, index: usize, atom: usize) -> AtomLevel {
        self.atoms[atom].levels()[self.level_index(index, atom)]
    }

    pub(crate) fn mode_stride(&self, mode: usize) -> usize {
        self.strides[mode]
    }

    pub(crate) fn atom_stride(&self, atom: usize) -> usize {
        self.strides[self.modes.len() + atom]
    }

    /// Photons plus excited atoms.
    pub fn excitation(&self, index: usize) -> usize {
        let photons: usize = (0..self.modes.len()).map(|m| self.photons(index, m)).sum();
        let excited = (0..self.atoms.len()).filter(|&a| self.level(index, a).is_excited()).count();
        photons + excited
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        BasisLabel {
            photons: (0..self.modes.len()).map(|m| self.photons(index, m)).collect(),
            levels: (0..self.atoms.len()).map(|a| self.level(index, a)).collect(),
        }
    }

    pub fn index_of(&self, label: &BasisLabel) -> Result<usize> {
        let bad = || Error::UnknownLabel(self.display_label(label));
        if label.photons.len() != self.modes.len() || label.levels.len() != self.atoms.len() {
            return Err(bad());
        }
        let mut index = 0;
        for (m, &n) in label.photons.iter().enumerate() {
            if n > self.modes[m].n_max {
                return Err(bad());
            }
            index += n * self.strides[m];
        }
        for (a, &level) in label.levels.iter().enumerate() {
            let li = self.atoms[a].level_index(level).ok_or_else(bad)?;
            index += li * self.atom_stride(a);
        }
        Ok(index)
    }

    /// Index of the state with the given photon numbers and all atoms in `|-⟩`.
    pub fn index_of_photons(&self, photons: &[usize]) -> Result<usize> {
        let label = BasisLabel::new(photons.to_vec(), vec![AtomLevel::Ground; self.atoms.len()]);
        self.index_of(&label)
    }

    /// Renders a label as `|n1,n2,...,s_a,s_b,...>`.
    pub fn display_label(&self, label: &BasisLabel) -> String {
        let mut parts: Vec<String> = label.photons.iter().map(|n| n.to_string()).collect();
        for (a, &level) in label.levels.iter().enumerate() {
            let kind = self.atoms.get(a).copied().unwrap_or(AtomKind::WithSpectator);
            parts.push(kind.symbol(level).to_string());
        }
        format!("|{}>", parts.join(","))
    }

    pub fn label_string(&self, index: usize) -> String {
        self.display_label(&self.label(index))
    }

    pub fn parse_label(&self, s: &str) -> Result<usize> {
        let bad = || Error::UnknownLabel(s.to_string());
        let inner = s
            .trim()
            .strip_prefix('|')
            .and_then(|r| r.strip_suffix('>').or_else(|| r.strip_suffix('⟩')))
            .ok_or_else(bad)?;
        let tokens: Vec<&str> = inner.split(',').map(str::trim).collect();
        if tokens.len() != self.modes.len() + self.atoms.len() {
            return Err(bad());
        }
        let (ph, lv) = tokens.split_at(self.modes.len());
        let photons = ph.iter().map(|t| t.parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        let levels = lv
            .iter()
            .zip(&self.atoms)
            .map(|(t, kind)| kind.parse_symbol(t).ok_or_else(bad))
            .collect::<Result<Vec<_>>>()?;
        self.index_of(&BasisLabel { photons, levels })
    }

    /// Same modes, with atom `atom` removed.
    pub fn without_atom(&self, atom: usize) -> Result<ProductBasis> {
        self.check_atom(atom)?;
        let mut atoms = self.atoms.clone();
        atoms.remove(atom);
        Ok(ProductBasis::new(self.modes.clone(), atoms))
    }

    /// Same modes and atoms, with one more atom appended.
    pub fn with_atom(&self, kind: AtomKind) -> ProductBasis {
        let mut atoms = self.atoms.clone();
        atoms.push(kind);
        ProductBasis::new(self.modes.clone(), atoms)
    }
}

impl fmt::Display for ProductBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cut: Vec<String> = self.modes.iter().map(|m| m.n_max.to_string()).collect();
        write!(f, "modes[n_max={}] atoms{:?} (dim {})", cut.join(","), self.atoms, self.dim)
    }
}

/// Complex amplitudes over a product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<R: Real> {
    basis: Arc<ProductBasis>,
    amps: Vec<C<R>>,
}

impl<R: Real> StateVector<R> {
    pub fn zeros(basis: Arc<ProductBasis>) -> Self {
        let amps = vec![czero(); basis.dim()];
        StateVector { basis, amps }
    }

    pub fn from_amplitudes(basis: Arc<ProductBasis>, amps: Vec<C<R>>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: amps.len() });
        }
        Ok(StateVector { basis, amps })
    }

    pub fn basis_state(basis: Arc<ProductBasis>, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::IndexOutOfRange { what: "basis index", index, len: basis.dim() });
        }
        let mut s = StateVector::zeros(basis);
        s.amps[index] = C::new(R::one(), R::zero());
        Ok(s)
    }

    /// Tensor product of per-mode and per-atom amplitude vectors.
    pub fn product(basis: Arc<ProductBasis>, modes: &[Vec<C<R>>], atoms: &[Vec<C<R>>]) -> Result<Self> {
        if modes.len() != basis.n_modes() || atoms.len() != basis.n_atoms() {
            return Err(Error::BasisMismatch(format!(
                "product of {} mode and {} atom factors on {}",
                modes.len(),
                atoms.len(),
                basis
            )));
        }
        for (m, f) in modes.iter().enumerate() {
            if f.len() != basis.modes()[m].dim() {
                return Err(Error::DimensionMismatch { expected: basis.modes()[m].dim(), got: f.len() });
            }
        }
        for (a, f) in atoms.iter().enumerate() {
            if f.len() != basis.atoms()[a].dim() {
                return Err(Error::DimensionMismatch { expected: basis.atoms()[a].dim(), got: f.len() });
            }
        }
        let amps = (0..basis.dim())
            .map(|i| {
                let mut z = C::new(R::one(), R::zero());
                for (m, f) in modes.iter().enumerate() {
                    z *= f[basis.photons(i, m)];
                }
                for (a, f) in atoms.iter().enumerate() {
                    z *= f[basis.level_index(i, a)];
                }
                z
            })
            .collect();
        Ok(StateVector { basis, amps })
    }

    pub fn basis(&self) -> &Arc<ProductBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C<R>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C<R>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C<R>> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Result<C<R>> {
        Ok(self.amps[self.basis.index_of(label)?])
    }

    pub fn norm_sqr(&self) -> R {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> R {
        self.norm_sqr().sqrt()
    }

    /// Returns the state rescaled to unit norm; errors on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == R::zero() {
            return Err(Error::InvalidSystem("cannot normalize the zero vector".into()));
        }
        Ok(self.scaled(C::new(R::one() / n, R::zero())))
    }

    pub fn scaled(&self, factor: C<R>) -> Self {
        StateVector { basis: self.basis.clone(), amps: self.amps.iter().map(|z| *z * factor).collect() }
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, factor: C<R>, other: &Self) -> Result<Self> {
        check_same_basis(&self.basis, &other.basis)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| *a + factor * *b).collect();
        Ok(StateVector { basis: self.basis.clone(), amps })
    }

    pub fn populations(&self) -> Vec<R> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `⟨n_mode⟩` (unnormalized if the state is not normalized).
    pub fn photon_expectation(&self, mode: usize) -> Result<R> {
        self.basis.check_mode(mode)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * R::from_usize_exact(self.basis.photons(i, mode)))
            .sum())
    }

    pub fn total_photon_expectation(&self) -> R {
        (0..self.basis.n_modes()).map(|m| self.photon_expectation(m).unwrap_or_else(|_| R::zero())).sum()
    }

    /// `⟨N⟩` with `N` = photons + excited atoms.
    pub fn excitation_expectation(&self) -> R {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * R::from_usize_exact(self.basis.excitation(i)))
            .sum()
    }

    /// Applies a single-mode matrix `(n_max+1)²` to one mode.
    pub fn apply_single_mode(&self, mode: usize, op: &Array2<C<R>>) -> Result<Self> {
        self.basis.check_mode(mode)?;
        let d = self.basis.modes()[mode].dim();
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: op.nrows() });
        }
        let stride = self.basis.mode_stride(mode);
        let mut out = vec![czero(); self.dim()];
        for (i, &a) in self.amps.iter().enumerate() {
            if a == czero() {
                continue;
            }
            let n = self.basis.photons(i, mode);
            let base = i - n * stride;
            for m in 0..d {
                let e = op[[m, n]];
                if e != czero() {
                    out[base + m * stride] += e * a;
                }
            }
        }
        StateVector::from_amplitudes(self.basis.clone(), out)
    }

    /// Applies a two-mode matrix on the pair space indexed `n_i + d * n_j`.
    pub fn apply_two_mode(&self, mode_i: usize, mode_j: usize, op: &Array2<C<R>>) -> Result<Self> {
        self.basis.check_mode(mode_i)?;
        self.basis.check_mode(mode_j)?;
        let di = self.basis.modes()[mode_i].dim();
        let dj = self.basis.modes()[mode_j].dim();
        if di != dj {
            return Err(Error::CutoffMismatch(di - 1, dj - 1));
        }
        if mode_i == mode_j {
            return Err(Error::BasisMismatch("two-mode operator on a single mode".into()));
        }
        let d = di;
        if op.nrows() != d * d || op.ncols() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: op.nrows() });
        }
        let (si, sj) = (self.basis.mode_stride(mode_i), self.basis.mode_stride(mode_j));
        let mut out = vec![czero(); self.dim()];
        for (idx, &a) in self.amps.iter().enumerate() {
            if a == czero() {
                continue;
            }
            let (ni, nj) = (self.basis.photons(idx, mode_i), self.basis.photons(idx, mode_j));
            let base = idx - ni * si - nj * sj;
            let col = ni + d * nj;
            for mj in 0..d {
                for mi in 0..d {
                    let e = op[[mi + d * mj, col]];
                    if e != czero() {
                        out[base + mi * si + mj * sj] += e * a;
                    }
                }
            }
        }
        StateVector::from_amplitudes(self.basis.clone(), out)
    }

    /// Re-embeds the state into a basis with one more atom in the given state.
    pub fn attach_atom(&self, kind: AtomKind, atom_state: &[C<R>]) -> Result<Self> {
        if atom_state.len() != kind.dim() {
            return Err(Error::DimensionMismatch { expected: kind.dim(), got: atom_state.len() });
        }
        let basis = Arc::new(self.basis.with_atom(kind));
        let stride = basis.atom_stride(basis.n_atoms() - 1);
        let mut amps = vec![czero(); basis.dim()];
        for (l, &c) in atom_state.iter().enumerate() {
            for (i, &a) in self.amps.iter().enumerate() {
                amps[i + l * stride] = a * c;
            }
        }
        StateVector::from_amplitudes(basis, amps)
    }
}

pub(crate) fn check_same_basis(a: &ProductBasis, b: &ProductBasis) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::BasisMismatch(format!("{a} vs {b}")))
    }
}

/// `⟨a|b⟩`
pub fn inner_product<R: Real>(a: &StateVector<R>, b: &StateVector<R>) -> Result<C<R>> {
    check_same_basis(a.basis(), b.basis())?;
    Ok(a.amps.iter().zip(&b.amps).fold(czero(), |acc, (x, y)| acc + x.conj() * *y))
}

/// Annihilation operator of `mode` on the full product space.
pub fn mode_lowering<R: Real>(basis: &ProductBasis, mode: usize) -> Result<SparseMatrix<C<R>>> {
    basis.check_mode(mode)?;
    let stride = basis.mode_stride(mode);
    let triplets = (0..basis.dim())
        .filter_map(|i| {
            let n = basis.photons(i, mode);
            (n > 0).then(|| (i - stride, i, C::new(R::from_usize_exact(n).sqrt(), R::zero())))
        })
        .collect();
    Ok(SparseMatrix::from_triplets(basis.dim(), basis.dim(), triplets))
}

/// Truncated creation operator; the `n_max` level is sent to zero.
pub fn mode_raising<R: Real>(basis: &ProductBasis, mode: usize) -> Result<SparseMatrix<C<R>>> {
    Ok(mode_lowering::<R>(basis, mode)?.adjoint())
}

/// Single-mode annihilation matrix of size `(n_max+1)²`.
pub fn lowering_matrix<R: Real>(space: ModeSpace) -> Array2<C<R>> {
    let d = space.dim();
    Array2::from_shape_fn((d, d), |(r, c)| {
        if c == r + 1 {
            C::new(R::from_usize_exact(c).sqrt(), R::zero())
        } else {
            czero()
        }
    })
}

/// Coherent amplitudes `e^{-|α|²/2} α^n / √(n!)` for `n ≤ n_max`, not renormalized.
pub fn poisson_amplitudes<R: Real>(alpha: C<R>, space: ModeSpace) -> Vec<C<R>> {
    let pref = (-alpha.norm_sqr() / R::lit(2.0)).exp();
    let mut out = Vec::with_capacity(space.dim());
    let mut c = C::new(pref, R::zero());
    out.push(c);
    for n in 1..=space.n_max {
        c = c * alpha / R::from_usize_exact(n).sqrt();
        out.push(c);
    }
    out
}

/// Poisson weight discarded above the cutoff: `Σ_{n>n_max} e^{-|α|²}|α|^{2n}/n!`.
pub fn poisson_tail<R: Real>(alpha_abs: R, space: ModeSpace) -> R {
    let x = alpha_abs * alpha_abs;
    if x == R::zero() {
        return R::zero();
    }
    let n0 = space.n_max + 1;
    let mut term = (-x + R::from_usize_exact(n0) * x.ln() - ln_factorial::<R>(n0)).exp();
    let mut sum = R::zero();
    let mut n = n0;
    loop {
        sum += term;
        n += 1;
        term = term * x / R::from_usize_exact(n);
        if term <= sum * R::epsilon() || term == R::zero() {
            break;
        }
    }
    sum
}

/// Truncated single-mode state with the weight that was cut off.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedMode<R: Real> {
    pub amplitudes: Vec<C<R>>,
    pub tail: R,
}

/// Coherent state `|α⟩` on one truncated mode, renormalized after truncation.
pub fn coherent_state<R: Real>(alpha: C<R>, space: ModeSpace) -> Result<TruncatedMode<R>> {
    coherent_state_with_bound(alpha, space, R::lit(DEFAULT_TAIL_BOUND))
}

pub fn coherent_state_with_bound<R: Real>(alpha: C<R>, space: ModeSpace, bound: R) -> Result<TruncatedMode<R>> {
    let tail = poisson_tail(alpha.norm(), space);
    if tail >= bound {
        return Err(Error::Truncation { tail: tail.as_f64(), bound: bound.as_f64() });
    }
    let mut amplitudes = poisson_amplitudes(alpha, space);
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt();
    for z in amplitudes.iter_mut() {
        *z /= norm;
    }
    Ok(TruncatedMode { amplitudes, tail })
}

/// Fock state `|n⟩` on one mode.
pub fn fock_amplitudes<R: Real>(n: usize, space: ModeSpace) -> Result<Vec<C<R>>> {
    if n > space.n_max {
        return Err(Error::Truncation { tail: 1.0, bound: 0.0 });
    }
    let mut v = vec![czero(); space.dim()];
    v[n] = C::new(R::one(), R::zero());
    Ok(v)
}

/// Truncated displacement matrix `exp(β a† - β* a)`.
pub fn displacement_matrix<R: Real>(beta: C<R>, space: ModeSpace) -> Array2<C<R>> {
    let a = lowering_matrix::<R>(space);
    let ad = a.t().mapv(|z| z.conj());
    let gen = ad.mapv(|z| z * beta) - a.mapv(|z| z * beta.conj());
    expm(&gen)
}

fn top_level_weight<R: Real>(state: &StateVector<R>, mode: usize) -> R {
    let n_max = state.basis().modes()[mode].n_max;
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| state.basis().photons(*i, mode) == n_max)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Applies `D(β)` to one mode. Fails if the displaced state puts more than
/// [`DEFAULT_TAIL_BOUND`] of its weight on the cutoff level.
pub fn displace<R: Real>(state: &StateVector<R>, mode: usize, beta: C<R>) -> Result<StateVector<R>> {
    state.basis().check_mode(mode)?;
    let space = state.basis().modes()[mode];
    let out = state.apply_single_mode(mode, &displacement_matrix(beta, space))?;
    let tail = top_level_weight(&out, mode);
    let bound = R::lit(DEFAULT_TAIL_BOUND) * state.norm_sqr().max(R::min_positive_value());
    if tail > bound {
        return Err(Error::Truncation { tail: tail.as_f64(), bound: bound.as_f64() });
    }
    Ok(out)
}

/// Mixing angle of a 50/50 beam splitter.
pub fn balanced_angle<R: Real>() -> R {
    R::FRAC_PI_4()
}

/// Two-mode mixing matrix `exp[θ(a_i† a_j - a_i a_j†)]` on the pair space
/// indexed `n_i + d * n_j`.
pub fn beam_splitter_matrix<R: Real>(space: ModeSpace, theta: R) -> Array2<C<R>> {
    let d = space.dim();
    let mut gen = Array2::from_elem((d * d, d * d), czero::<R>());
    for nj in 0..d {
        for ni in 0..d {
            let col = ni + d * nj;
            // a_i† a_j
            if nj > 0 && ni < space.n_max {
                let v = R::from_usize_exact((ni + 1) * nj).sqrt() * theta;
                gen[[(ni + 1) + d * (nj - 1), col]] += C::new(v, R::zero());
            }
            // -a_i a_j†
            if ni > 0 && nj < space.n_max {
                let v = R::from_usize_exact(ni * (nj + 1)).sqrt() * theta;
                gen[[(ni - 1) + d * (nj + 1), col]] -= C::new(v, R::zero());
            }
        }
    }
    expm(&gen)
}

/// Beam splitter `exp[θ(a_i† a_j - a_i a_j†)]` between two modes with equal cutoff.
pub fn beam_splitter<R: Real>(state: &StateVector<R>, mode_i: usize, mode_j: usize, theta: R) -> Result<StateVector<R>> {
    let basis = state.basis();
    basis.check_mode(mode_i)?;
    basis.check_mode(mode_j)?;
    let (si, sj) = (basis.modes()[mode_i], basis.modes()[mode_j]);
    if si != sj {
        return Err(Error::CutoffMismatch(si.n_max, sj.n_max));
    }
    state.apply_two_mode(mode_i, mode_j, &beam_splitter_matrix(si, theta))
}
