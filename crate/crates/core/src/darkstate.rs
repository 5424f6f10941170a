//! Zero-eigenvalue states of the coupling Hamiltonian and the states they
//! map onto.
//!
//! Sector vectors are returned in the physical ordering used throughout the
//! docs below, not in product-basis index order; [`embed_single_excitation`]
//! places them into a [`ProductBasis`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_state, AtomLevel, ProductBasis, StateVector, DEFAULT_TAIL_BOUND};
use crate::linalg::{commutator, max_norm};
use crate::model::Sign;
use crate::scalar::{czero, ln_factorial, Real, C};

/// Mode weights `c_i` of the creation operator `A† = Σ c_i a_i†` whose
/// powers acting on the vacuum stay dark.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticCoefficients<R: Real> {
    coeffs: Vec<C<R>>,
    gauge: Sign,
}

impl<R: Real> AdiabaticCoefficients<R> {
    /// Normalizes `raw`; fails if every entry is zero.
    pub fn new(raw: Vec<C<R>>) -> Result<Self> {
        let norm = raw.iter().map(|c| c.norm_sqr()).sum::<R>().sqrt();
        if norm == R::zero() || !norm.is_finite() {
            return Err(Error::DegenerateCouplings("adiabatic operator has no nonzero weight"));
        }
        Ok(AdiabaticCoefficients { coeffs: raw.into_iter().map(|c| c / norm).collect(), gauge: Sign::Plus })
    }

    pub fn from_real(raw: &[R]) -> Result<Self> {
        Self::new(raw.iter().map(|&x| C::new(x, R::zero())).collect())
    }

    pub fn coeffs(&self) -> &[C<R>] {
        &self.coeffs
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Sign flips applied so far by [`Self::aligned_to`].
    pub fn gauge(&self) -> Sign {
        self.gauge
    }

    /// Returns `self` or `-self`, whichever has non-negative overlap with
    /// `previous`.
    pub fn aligned_to(mut self, previous: &Self) -> Self {
        let overlap: C<R> = previous.coeffs.iter().zip(&self.coeffs).map(|(p, c)| p.conj() * c).sum();
        if overlap.re < R::zero() {
            for c in &mut self.coeffs {
                *c = -*c;
            }
            self.gauge = self.gauge.flipped();
        }
        self
    }
}

/// Flips `v` in place when its overlap with `previous` is negative.
pub fn align_sign<R: Real>(previous: &[R], v: &mut [R]) {
    let overlap: R = previous.iter().zip(v.iter()).map(|(a, b)| *a * *b).sum();
    if overlap < R::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn normalize_real<R: Real>(mut v: Vec<R>, what: &'static str) -> Result<Vec<R>> {
    let norm = v.iter().map(|x| *x * *x).sum::<R>().sqrt();
    if norm == R::zero() || !norm.is_finite() {
        return Err(Error::DegenerateCouplings(what));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Two modes, one atom: `A† ∝ g2 a1† - g1 a2†`.
pub fn two_mode_dark<R: Real>(g1: R, g2: R) -> Result<AdiabaticCoefficients<R>> {
    if g1 == R::zero() && g2 == R::zero() {
        return Err(Error::DegenerateCouplings("both couplings vanish"));
    }
    AdiabaticCoefficients::from_real(&[g2, -g1])
}

/// H configuration null vector in the order
/// `(|0,1,0,-,->, |0,0,0,+,->, |1,0,0,-,->, |0,0,0,-,+>, |0,0,1,-,->)`.
///
/// Atom `a` couples cavities 1 and 2, atom `b` couples cavities 1 and 3.
pub fn h_config_dark<R: Real>(g1a: R, g2a: R, g1b: R, g3b: R) -> Result<[R; 5]> {
    let v = normalize_real(
        vec![g1a * g3b, R::zero(), -(g2a * g3b), R::zero(), g1b * g2a],
        "all coupling products vanish",
    )?;
    Ok([v[0], v[1], v[2], v[3], v[4]])
}

/// Mode weights `(c_1, c_2, c_3)` of the H configuration dark operator.
pub fn h_config_adiabatic<R: Real>(g1a: R, g2a: R, g1b: R, g3b: R) -> Result<AdiabaticCoefficients<R>> {
    let v = h_config_dark(g1a, g2a, g1b, g3b)?;
    AdiabaticCoefficients::from_real(&[v[2], v[0], v[4]])
}

/// Star configuration with `m_cavities` cavities and one atom: the first
/// `m_cavities - 1` share coupling `g_a`, the last couples with `g_m`.
///
/// Components are the single photon in cavity `1..=M` followed by the excited
/// atom. The dark state starts in cavity `M` and ends equally spread over the
/// others.
pub fn star_dark<R: Real>(g_m: R, g_a: R, m_cavities: usize) -> Result<Vec<R>> {
    perturbed_star_dark(g_m, g_a, m_cavities, &[])
}

/// Star null vector when extra ground-state atoms couple (resonantly, with
/// any nonzero strength) to the 0-based cavities in `perturbed`, each of
/// which must be one of the first `M - 1`.
///
/// Components: cavities `1..=M`, the excited central atom, then one zero per
/// perturbing atom. A perturbed cavity carries no amplitude.
pub fn perturbed_star_dark<R: Real>(g_m: R, g_a: R, m_cavities: usize, perturbed: &[usize]) -> Result<Vec<R>> {
    if m_cavities < 2 {
        return Err(Error::InvalidSystem(format!("star needs at least 2 cavities, got {m_cavities}")));
    }
    for &j in perturbed {
        if j + 1 >= m_cavities {
            return Err(Error::IndexOutOfRange { what: "perturbed cavity", index: j, len: m_cavities - 1 });
        }
    }
    let free = (0..m_cavities - 1).filter(|j| !perturbed.contains(j)).count();
    let mut v = vec![R::zero(); m_cavities + 1 + perturbed.len()];
    for (j, x) in v.iter_mut().enumerate().take(m_cavities - 1) {
        if !perturbed.contains(&j) {
            *x = -g_m;
        }
    }
    v[m_cavities - 1] = R::from_usize_exact(free) * g_a;
    normalize_real(v, "star couplings vanish")
}

/// Places single-excitation components into `basis`: entry `k` of `modes`
/// gets `amps[k]` on the state with one photon in that mode and every atom in
/// its ground level; the remaining entries put each atom of `excited` in `|+>`.
pub fn embed_single_excitation<R: Real>(
    basis: Arc<ProductBasis>,
    modes: &[usize],
    excited: &[usize],
    amps: &[R],
) -> Result<StateVector<R>> {
    if amps.len() != modes.len() + excited.len() {
        return Err(Error::DimensionMismatch { expected: modes.len() + excited.len(), got: amps.len() });
    }
    let mut out = StateVector::zeros(basis.clone());
    for (k, &mode) in modes.iter().enumerate() {
        basis.check_mode(mode)?;
        let idx = mode_excited_index(&basis, Some(mode), None);
        out.amplitudes_mut()[idx] = C::new(amps[k], R::zero());
    }
    for (k, &atom) in excited.iter().enumerate() {
        basis.check_atom(atom)?;
        let idx = mode_excited_index(&basis, None, Some(atom));
        out.amplitudes_mut()[idx] = C::new(amps[modes.len() + k], R::zero());
    }
    Ok(out)
}

fn mode_excited_index(basis: &ProductBasis, mode: Option<usize>, atom: Option<usize>) -> usize {
    let mut idx = 0;
    if let Some(m) = mode {
        idx += basis.mode_stride(m);
    }
    if let Some(a) = atom {
        let kind = basis.atoms()[a];
        let e = kind.level_index(AtomLevel::Excited).expect("every atom kind has |+>");
        idx += e * basis.atom_stride(a);
    }
    idx
}

/// `f(A†)|0, ground>` where `f` lists the Fock amplitudes of a single-mode
/// source state: `f[n]` multiplies `(A†)^n / √(n!) |0>`.
///
/// Atoms are placed in level index 0. Fails with a truncation error when
/// more than [`DEFAULT_TAIL_BOUND`] of the weight falls outside the basis.
pub fn apply_adiabatic_function<R: Real>(
    coeffs: &AdiabaticCoefficients<R>,
    f: &[C<R>],
    basis: Arc<ProductBasis>,
) -> Result<StateVector<R>> {
    if coeffs.n_modes() != basis.n_modes() {
        return Err(Error::DimensionMismatch { expected: basis.n_modes(), got: coeffs.n_modes() });
    }
    let mut out = StateVector::zeros(basis.clone());
    let all_ground = |i: usize| (0..basis.n_atoms()).all(|a| basis.level_index(i, a) == 0);
    for i in 0..basis.dim() {
        if !all_ground(i) {
            continue;
        }
        let ks: Vec<usize> = (0..basis.n_modes()).map(|m| basis.photons(i, m)).collect();
        let n: usize = ks.iter().sum();
        let Some(&fn_) = f.get(n) else { continue };
        if fn_ == czero() {
            continue;
        }
        let mut amp = fn_ * multinomial_sqrt::<R>(&ks);
        for (c, &k) in coeffs.coeffs().iter().zip(&ks) {
            amp *= c.powu(k as u32);
        }
        out.amplitudes_mut()[i] = amp;
    }
    let expected: R = f.iter().map(|c| c.norm_sqr()).sum();
    let tail = expected - out.norm_sqr();
    let bound = R::lit(DEFAULT_TAIL_BOUND) * expected.max(R::one());
    if tail > bound {
        return Err(Error::Truncation { tail: tail.as_f64(), bound: bound.as_f64() });
    }
    Ok(out)
}

/// `√(n! / (k_1! ... k_M!))` with `n = Σ k_i`.
fn multinomial_sqrt<R: Real>(ks: &[usize]) -> R {
    let n: usize = ks.iter().sum();
    let log = ln_factorial::<R>(n) - ks.iter().map(|&k| ln_factorial::<R>(k)).sum::<R>();
    (R::lit(0.5) * log).exp()
}

/// Max-norm of `[B, A†]` for two modes with couplings `(g1, g2)`, restricted
/// to basis states with every photon number below its cutoff.
///
/// Returns zero when both couplings vanish.
pub fn commutator_check<R: Real>(g1: R, g2: R, basis: &ProductBasis) -> Result<R> {
    if basis.n_modes() < 2 {
        return Err(Error::InvalidSystem("commutator check needs two modes".into()));
    }
    let k2 = g1 * g1 + g2 * g2;
    if k2 == R::zero() {
        return Ok(R::zero());
    }
    let k = k2.sqrt().recip();
    let a1 = crate::fock::mode_lowering::<R>(basis, 0)?.to_dense();
    let a2 = crate::fock::mode_lowering::<R>(basis, 1)?.to_dense();
    let c = |x: R| C::new(x * k, R::zero());
    let b = a1.mapv(|z| z * c(g1)) + a2.mapv(|z| z * c(g2));
    let a_dag = crate::linalg::adjoint(&a1).mapv(|z| z * c(g2)) - crate::linalg::adjoint(&a2).mapv(|z| z * c(g1));
    let mut comm = commutator(&b, &a_dag);
    let protected: Vec<bool> = (0..basis.dim())
        .map(|i| (0..basis.n_modes()).all(|m| basis.photons(i, m) < basis.modes()[m].n_max))
        .collect();
    for ((r, col), z) in comm.indexed_iter_mut() {
        if !protected[r] || !protected[col] {
            *z = czero();
        }
    }
    Ok(max_norm(&comm))
}

/// Sign picked up by `f(a_source†) -> f(s a_target†)` in a two-mode transfer
/// where the source mode's coupling arrives last: `s = -sign(g_source g_target)`.
pub fn transfer_sign(source: Sign, target: Sign) -> Sign {
    source.times(target).flipped()
}

/// Prepared or expected field states. Mode indices are 0-based; every atom
/// of the target basis is put in level index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetState<R: Real> {
    /// `(|1_first> + sign |1_second>) / √2`.
    Epr { first: usize, second: usize, sign: Sign },
    /// One photon spread with equal amplitude over `modes`.
    W { modes: Vec<usize> },
    /// `(Σ_k a_k† / √m)^n / √(n!) |0>` over `modes`.
    Multinomial { modes: Vec<usize>, photons: usize },
    /// `N(|α> + sign |-α>)` in one mode.
    Cat { mode: usize, alpha: C<R>, sign: Sign },
    /// `N(|-β, β> + sign |β, -β>)` on two modes.
    EntangledCat { first: usize, second: usize, beta: C<R>, sign: Sign },
    /// Branch state after measuring two atoms with outcomes `i`, `j`:
    /// `|0,0,α> + (-1)^j |-α,0,0> + (-1)^i (1 + (-1)^j) |0,α,0>`, normalized.
    Branch { alpha: C<R>, i: u8, j: u8 },
    /// Normalized sum of weighted coherent product states: each term lists
    /// one amplitude per mode.
    Superposition { terms: Vec<(C<R>, Vec<C<R>>)> },
    /// A single basis state, e.g. `|0,0,1,-,->`.
    Basis { label: String },
}

impl<R: Real> TargetState<R> {
    pub fn build(&self, basis: Arc<ProductBasis>) -> Result<StateVector<R>> {
        match self {
            TargetState::Epr { first, second, sign } => {
                let h = R::FRAC_1_SQRT_2();
                embed_single_excitation(basis, &[*first, *second], &[], &[h, h * sign.value::<R>()])
            }
            TargetState::W { modes } => {
                if modes.is_empty() {
                    return Err(Error::InvalidSystem("W state needs at least one mode".into()));
                }
                let w = R::from_usize_exact(modes.len()).sqrt().recip();
                embed_single_excitation(basis, modes, &[], &vec![w; modes.len()])
            }
            TargetState::Multinomial { modes, photons } => {
                let n_modes = basis.n_modes();
                let mut raw = vec![czero(); n_modes];
                for &m in modes {
                    basis.check_mode(m)?;
                    raw[m] = C::new(R::one(), R::zero());
                }
                let coeffs = AdiabaticCoefficients::new(raw)?;
                let mut f = vec![czero(); photons + 1];
                f[*photons] = C::new(R::one(), R::zero());
                apply_adiabatic_function(&coeffs, &f, basis)
            }
            TargetState::Cat { mode, alpha, sign } => {
                let n = basis.n_modes();
                let term = |a: C<R>| {
                    let mut v = vec![czero(); n];
                    v[*mode] = a;
                    v
                };
                basis.check_mode(*mode)?;
                coherent_superposition(
                    basis,
                    &[(C::new(R::one(), R::zero()), term(*alpha)), (C::new(sign.value(), R::zero()), term(-*alpha))],
                )
            }
            TargetState::EntangledCat { first, second, beta, sign } => {
                basis.check_mode(*first)?;
                basis.check_mode(*second)?;
                let n = basis.n_modes();
                let term = |x: C<R>, y: C<R>| {
                    let mut v = vec![czero(); n];
                    v[*first] = x;
                    v[*second] = y;
                    v
                };
                coherent_superposition(
                    basis,
                    &[
                        (C::new(R::one(), R::zero()), term(-*beta, *beta)),
                        (C::new(sign.value(), R::zero()), term(*beta, -*beta)),
                    ],
                )
            }
            TargetState::Branch { alpha, i, j } => {
                if basis.n_modes() != 3 {
                    return Err(Error::InvalidSystem("branch states live on three modes".into()));
                }
                let si = parity::<R>(*i);
                let sj = parity::<R>(*j);
                let z = czero();
                let re = |x: R| C::new(x, R::zero());
                let mut terms = vec![(re(R::one()), vec![z, z, *alpha]), (re(sj), vec![-*alpha, z, z])];
                let middle = si * (R::one() + sj);
                if middle != R::zero() {
                    terms.push((re(middle), vec![z, *alpha, z]));
                }
                coherent_superposition(basis, &terms)
            }
            TargetState::Superposition { terms } => coherent_superposition(basis, terms),
            TargetState::Basis { label } => {
                let i = basis.parse_label(label)?;
                StateVector::basis_state(basis, i)
            }
        }
    }
}

fn parity<R: Real>(bit: u8) -> R {
    if bit.is_multiple_of(2) {
        R::one()
    } else {
        -R::one()
    }
}

/// Normalized `Σ w_t |α_t1, α_t2, ...>` with atoms in level index 0.
pub fn coherent_superposition<R: Real>(
    basis: Arc<ProductBasis>,
    terms: &[(C<R>, Vec<C<R>>)],
) -> Result<StateVector<R>> {
    let mut out = StateVector::zeros(basis.clone());
    for (w, alphas) in terms {
        if alphas.len() != basis.n_modes() {
            return Err(Error::DimensionMismatch { expected: basis.n_modes(), got: alphas.len() });
        }
        let modes = alphas
            .iter()
            .zip(basis.modes())
            .map(|(a, space)| coherent_state(*a, *space).map(|t| t.amplitudes))
            .collect::<Result<Vec<_>>>()?;
        let atoms: Vec<Vec<C<R>>> = basis
            .atoms()
            .iter()
            .map(|k| {
                let mut v = vec![czero(); k.dim()];
                v[0] = C::new(R::one(), R::zero());
                v
            })
            .collect();
        let term = StateVector::product(basis.clone(), &modes, &atoms)?;
        out = out.add_scaled(*w, &term)?;
    }
    out.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{mode_raising, AtomKind, ModeSpace};
    use crate::model::{build_hamiltonian, excitation_sector, CouplingSpec, Generator, PulseSpec, SystemSpec};
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn coupling(atom: usize, mode: usize, g: f64) -> CouplingSpec<f64> {
        CouplingSpec::new(atom, mode, PulseSpec::constant(g.abs()).with_sign(if g < 0.0 { Sign::Minus } else { Sign::Plus }))
    }

    fn two_mode(g1: f64, g2: f64, n_max: usize) -> SystemSpec<f64> {
        SystemSpec::new(vec![ModeSpace::new(n_max); 2], vec![AtomKind::TwoLevel])
            .with_coupling(coupling(0, 0, g1))
            .with_coupling(coupling(0, 1, g2))
    }

    fn h_config(g1a: f64, g2a: f64, g1b: f64, g3b: f64) -> SystemSpec<f64> {
        SystemSpec::new(vec![ModeSpace::new(1); 3], vec![AtomKind::TwoLevel; 2])
            .with_coupling(coupling(0, 0, g1a))
            .with_coupling(coupling(0, 1, g2a))
            .with_coupling(coupling(1, 0, g1b))
            .with_coupling(coupling(1, 2, g3b))
    }

    /// Star with `m` cavities; perturbing atoms couple `g_p` to the listed cavities.
    fn star(g_m: f64, g_a: f64, m: usize, perturbed: &[usize], g_p: f64) -> SystemSpec<f64> {
        let mut s = SystemSpec::new(vec![ModeSpace::new(1); m], vec![AtomKind::TwoLevel; 1 + perturbed.len()]);
        for k in 0..m - 1 {
            s = s.with_coupling(coupling(0, k, g_a));
        }
        s = s.with_coupling(coupling(0, m - 1, g_m));
        for (p, &j) in perturbed.iter().enumerate() {
            s = s.with_coupling(coupling(1 + p, j, g_p));
        }
        s
    }

    fn residual(spec: &SystemSpec<f64>, state: &StateVector<f64>) -> f64 {
        let h = build_hamiltonian(spec, 0.0, &spec.basis()).unwrap();
        let v = ndarray::Array1::from(state.amplitudes().to_vec());
        h.dot(&v).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Norm of the projection of `v` (restricted to the N = 1 sector) onto
    /// the numerical null space of the sector Hamiltonian.
    fn null_space_weight(spec: &SystemSpec<f64>, state: &StateVector<f64>) -> (f64, usize) {
        let basis = Arc::new(spec.basis());
        let idx = excitation_sector(spec, 1, &basis).unwrap();
        let h = Generator::restricted(spec, basis, idx.clone()).unwrap().dense_real(0.0);
        let n = idx.len();
        let m = DMatrix::from_fn(n, n, |r, c| h[[r, c]]);
        let eig = SymmetricEigen::new(m);
        let v: Vec<f64> = idx.iter().map(|&i| state.amplitudes()[i].re).collect();
        let mut weight = 0.0;
        let mut dim = 0;
        for (k, lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() < 1e-9 {
                dim += 1;
                let col = eig.eigenvectors.column(k);
                let p: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
                weight += p * p;
            }
        }
        (weight, dim)
    }

    #[test]
    fn two_mode_limits() {
        let c = two_mode_dark::<f64>(0.0, 1.0).unwrap();
        assert_eq!(c.coeffs()[0], C::new(1.0, 0.0));
        assert_eq!(c.coeffs()[1].norm(), 0.0);
        let c = two_mode_dark::<f64>(1.0, 1.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.coeffs()[0].re - h).abs() < 1e-15 && (c.coeffs()[1].re + h).abs() < 1e-15);
        assert!(matches!(two_mode_dark::<f64>(0.0, 0.0), Err(Error::DegenerateCouplings(_))));
    }

    #[test]
    fn h_config_limits() {
        let start = h_config_dark::<f64>(1.0, 1e-4, 1e-4, 1.0).unwrap();
        assert!((start[0] - 1.0).abs() < 1e-7);
        let end = h_config_dark::<f64>(1e-4, 1.0, 1.0, 1e-4).unwrap();
        assert!((end[4].abs() - 1.0).abs() < 1e-7);
        assert!(h_config_dark::<f64>(0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn star_limits_and_w_state() {
        let early = star_dark::<f64>(0.0, 1.0, 4).unwrap();
        assert_eq!(early, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        let late = star_dark::<f64>(1.0, 0.0, 4).unwrap();
        let w = 1.0 / 3f64.sqrt();
        for x in &late[..3] {
            assert!((x.abs() - w).abs() < 1e-15);
        }
        assert_eq!(late[3], 0.0);
        assert!(star_dark::<f64>(0.0, 0.0, 4).is_err());
        assert!(star_dark::<f64>(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn literal_star_vector_is_not_null_for_four_cavities() {
        // Weight g_a on cavity M only cancels the atom row when M = 2.
        let (g_m, g_a) = (0.7, 1.3);
        let spec = star(g_m, g_a, 4, &[], 0.0);
        let literal = [-g_m, -g_m, -g_m, g_a, 0.0];
        let basis = Arc::new(spec.basis());
        let s = embed_single_excitation(basis, &[0, 1, 2, 3], &[0], &literal).unwrap();
        assert!(residual(&spec, &s) > 0.1);
    }

    #[test]
    fn perturbed_star_zeroes_the_perturbed_cavity() {
        let (g_m, g_a) = (0.8, 1.1);
        for perturbed in [vec![2], vec![2, 1]] {
            let spec = star(g_m, g_a, 4, &perturbed, 0.2);
            let v = perturbed_star_dark::<f64>(g_m, g_a, 4, &perturbed).unwrap();
            for &j in &perturbed {
                assert_eq!(v[j], 0.0);
            }
            let excited: Vec<usize> = (0..=perturbed.len()).collect();
            let s = embed_single_excitation(Arc::new(spec.basis()), &[0, 1, 2, 3], &excited, &v).unwrap();
            assert!(residual(&spec, &s) < 1e-12);
            let (w, _) = null_space_weight(&spec, &s);
            assert!((w - 1.0).abs() < 1e-10);
        }
        assert!(perturbed_star_dark::<f64>(1.0, 1.0, 4, &[3]).is_err());
    }

    #[test]
    fn adiabatic_function_single_photon() {
        let basis = Arc::new(ProductBasis::uniform(2, 2, vec![AtomKind::TwoLevel]));
        let c = AdiabaticCoefficients::<f64>::from_real(&[1.0, 0.0]).unwrap();
        let f = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
        let s = apply_adiabatic_function(&c, &f, basis.clone()).unwrap();
        let i = basis.parse_label("|1,0,->").unwrap();
        assert_eq!(s.amplitudes()[i], C::new(1.0, 0.0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    /// `(Σ c_i a_i†)^n / √(n!) |0>` by repeated sparse application.
    fn brute_force_power(coeffs: &[f64], n: usize, basis: Arc<ProductBasis>) -> StateVector<f64> {
        let raising: Vec<_> = (0..coeffs.len()).map(|m| mode_raising::<f64>(&basis, m).unwrap()).collect();
        let mut v = StateVector::basis_state(basis.clone(), 0).unwrap().into_amplitudes();
        let mut fact = 1.0;
        for k in 1..=n {
            let mut next = vec![C::new(0.0, 0.0); v.len()];
            for (c, r) in coeffs.iter().zip(&raising) {
                for (o, x) in next.iter_mut().zip(r.apply(&v)) {
                    *o += x * *c;
                }
            }
            v = next;
            fact *= k as f64;
        }
        let s = 1.0 / fact.sqrt();
        StateVector::from_amplitudes(basis, v.into_iter().map(|z| z * s).collect()).unwrap()
    }

    fn max_diff(a: &StateVector<f64>, b: &StateVector<f64>) -> f64 {
        a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn two_mode_fock_image_matches_operator_powers() {
        let (g1, g2) = (0.6, -1.7);
        let c = two_mode_dark::<f64>(g1, g2).unwrap();
        for n0 in 0..=4 {
            let basis = Arc::new(ProductBasis::uniform(2, 4, vec![AtomKind::TwoLevel]));
            let mut f = vec![C::new(0.0, 0.0); n0 + 1];
            f[n0] = C::new(1.0, 0.0);
            let s = apply_adiabatic_function(&c, &f, basis.clone()).unwrap();
            let re: Vec<f64> = c.coeffs().iter().map(|z| z.re).collect();
            let brute = brute_force_power(&re, n0, basis);
            assert!(max_diff(&s, &brute) < 1e-12, "n0 = {n0}");
        }
        // Late limit: all weight on mode 2 with sign (-1)^n0.
        let c = two_mode_dark::<f64>(1.0, 0.0).unwrap();
        let basis = Arc::new(ProductBasis::uniform(2, 3, vec![AtomKind::TwoLevel]));
        let f = [C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
        let s = apply_adiabatic_function(&c, &f, basis.clone()).unwrap();
        let i = basis.parse_label("|0,3,->").unwrap();
        assert!((s.amplitudes()[i].re + 1.0).abs() < 1e-14);
    }

    #[test]
    fn multinomial_state_matches_operator_powers() {
        for m in 2..=4 {
            for n in 0..=4 {
                let basis = Arc::new(ProductBasis::uniform(m, n, vec![AtomKind::TwoLevel]));
                let target = TargetState::<f64>::Multinomial { modes: (0..m).collect(), photons: n };
                let s = target.build(basis.clone()).unwrap();
                let w = 1.0 / (m as f64).sqrt();
                let brute = brute_force_power(&vec![w; m], n, basis);
                assert!(max_diff(&s, &brute) < 1e-10, "m = {m}, n = {n}");
            }
        }
    }

    #[test]
    fn adiabatic_function_reports_truncation() {
        let basis = Arc::new(ProductBasis::uniform(2, 2, vec![AtomKind::TwoLevel]));
        let c = AdiabaticCoefficients::<f64>::from_real(&[1.0, 1.0]).unwrap();
        let mut f = vec![C::new(0.0, 0.0); 4];
        f[3] = C::new(1.0, 0.0);
        // |3,0> and |0,3> fall outside the cutoff.
        assert!(matches!(apply_adiabatic_function(&c, &f, basis), Err(Error::Truncation { .. })));
    }

    #[test]
    fn single_photon_image_is_the_sector_dark_state() {
        let (g1a, g2a, g1b, g3b) = (0.4, 1.3, -0.8, 0.6);
        let spec = h_config(g1a, g2a, g1b, g3b);
        let basis = Arc::new(spec.basis());
        let c = h_config_adiabatic::<f64>(g1a, g2a, g1b, g3b).unwrap();
        let s = apply_adiabatic_function(&c, &[C::new(0.0, 0.0), C::new(1.0, 0.0)], basis.clone()).unwrap();
        let d = h_config_dark::<f64>(g1a, g2a, g1b, g3b).unwrap();
        // Sector order: cavity 2, atom a, cavity 1, atom b, cavity 3.
        let e = embed_single_excitation(basis, &[1, 0, 2], &[0, 1], &[d[0], d[2], d[4], d[1], d[3]]).unwrap();
        assert!(max_diff(&s, &e) < 1e-15);
    }

    #[test]
    fn commutator_vanishes_for_disjoint_modes() {
        let basis = ProductBasis::uniform(2, 5, vec![AtomKind::TwoLevel]);
        assert_eq!(commutator_check(0.0, 1.3, &basis).unwrap(), 0.0);
        assert_eq!(commutator_check(0.0, 0.0, &basis).unwrap(), 0.0);
    }

    #[test]
    fn transfer_sign_rule() {
        assert_eq!(transfer_sign(Sign::Plus, Sign::Plus), Sign::Minus);
        assert_eq!(transfer_sign(Sign::Plus, Sign::Minus), Sign::Plus);
        assert_eq!(transfer_sign(Sign::Minus, Sign::Minus), Sign::Minus);
    }

    #[test]
    fn gauge_alignment_keeps_overlaps_positive() {
        let mut prev = two_mode_dark::<f64>(0.0, 1.0).unwrap();
        for k in 1..=50 {
            let theta = std::f64::consts::FRAC_PI_2 * k as f64 / 50.0;
            // Raw coefficients computed with a flipped sign on odd steps.
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            let next = two_mode_dark::<f64>(s * theta.sin(), s * theta.cos()).unwrap().aligned_to(&prev);
            let overlap: f64 = prev.coeffs().iter().zip(next.coeffs()).map(|(a, b)| (a.conj() * b).re).sum();
            assert!(overlap >= 0.0);
            prev = next;
        }
        let mut v = vec![-1.0, 0.0];
        align_sign(&[1.0, 0.1], &mut v);
        assert_eq!(v, vec![1.0, -0.0]);
    }

    #[test]
    fn epr_and_w_targets() {
        let basis = Arc::new(ProductBasis::uniform(3, 1, vec![AtomKind::TwoLevel; 2]));
        let epr = TargetState::<f64>::Epr { first: 1, second: 2, sign: Sign::Plus }.build(basis.clone()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((epr.amplitudes()[basis.parse_label("|0,1,0,-,->").unwrap()].re - h).abs() < 1e-15);
        assert!((epr.amplitudes()[basis.parse_label("|0,0,1,-,->").unwrap()].re - h).abs() < 1e-15);
        let b4 = Arc::new(ProductBasis::uniform(4, 1, vec![AtomKind::TwoLevel]));
        let w = TargetState::<f64>::W { modes: vec![0, 1, 2] }.build(b4.clone()).unwrap();
        for l in ["|1,0,0,0,->", "|0,1,0,0,->", "|0,0,1,0,->"] {
            assert!((w.amplitudes()[b4.parse_label(l).unwrap()].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn branch_state_normalization() {
        let alpha = C::new(1.0, 0.0);
        let basis = Arc::new(ProductBasis::uniform(3, 12, vec![]));
        let psi = TargetState::<f64>::Branch { alpha, i: 0, j: 1 }.build(basis.clone()).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        // ∝ -|-α,0,0> + |0,0,α>: overlap with each term sets the normalization.
        let z = C::new(0.0, 0.0);
        let a = coherent_superposition(basis.clone(), &[(C::new(1.0, 0.0), vec![-alpha, z, z])]).unwrap();
        let b = coherent_superposition(basis.clone(), &[(C::new(1.0, 0.0), vec![z, z, alpha])]).unwrap();
        let overlap = crate::fock::inner_product(&a, &b).unwrap();
        assert!((overlap.re - (-1.0f64).exp()).abs() < 1e-9);
        let norm = 1.0 / (2.0 * (1.0 - overlap.re)).sqrt();
        let expect = b.add_scaled(C::new(-1.0, 0.0), &a).unwrap().scaled(C::new(norm, 0.0));
        assert!(max_diff(&psi, &expect) < 1e-12);
        let same = TargetState::<f64>::Branch { alpha, i: 1, j: 1 }.build(basis).unwrap();
        assert!(max_diff(&psi, &same) < 1e-15);
    }

    #[test]
    fn target_descriptor_round_trips_through_json() {
        let t = TargetState::<f64>::Cat { mode: 1, alpha: C::new(1.0, 0.5), sign: Sign::Minus };
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<TargetState<f64>>(&s).unwrap(), t);
    }

    fn coupling_strategy() -> impl Strategy<Value = f64> {
        prop_oneof![-3.0..-0.05f64, 0.05..3.0f64]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn two_mode_dark_state_is_null(g1 in coupling_strategy(), g2 in coupling_strategy()) {
            let spec = two_mode(g1, g2, 1);
            let c = two_mode_dark::<f64>(g1, g2).unwrap();
            let s = embed_single_excitation(Arc::new(spec.basis()), &[0, 1], &[], &[c.coeffs()[0].re, c.coeffs()[1].re]).unwrap();
            prop_assert!(residual(&spec, &s) < 1e-12);
        }

        #[test]
        fn h_config_dark_state_is_the_null_vector(
            g1a in coupling_strategy(), g2a in coupling_strategy(),
            g1b in coupling_strategy(), g3b in coupling_strategy(),
        ) {
            let spec = h_config(g1a, g2a, g1b, g3b);
            let d = h_config_dark::<f64>(g1a, g2a, g1b, g3b).unwrap();
            prop_assert_eq!(d[1], 0.0);
            prop_assert_eq!(d[3], 0.0);
            let s = embed_single_excitation(Arc::new(spec.basis()), &[1, 0, 2], &[0, 1], &[d[0], d[2], d[4], d[1], d[3]]).unwrap();
            prop_assert!(residual(&spec, &s) < 1e-12);
            let (w, dim) = null_space_weight(&spec, &s);
            prop_assert_eq!(dim, 1);
            prop_assert!((w - 1.0).abs() < 1e-10);
            // Middle-cavity weight, bounded by the ratio of coupling products.
            let p = |x: f64| x * x;
            let mid = p(g2a * g3b) / (p(g1a * g3b) + p(g2a * g3b) + p(g1b * g2a));
            prop_assert!((d[2] * d[2] - mid).abs() < 1e-12);
            prop_assert!(d[2] * d[2] <= p(g2a * g3b) / (p(g1a * g3b) + p(g1b * g2a)) + 1e-12);
        }

        #[test]
        fn star_dark_state_is_null(g_m in coupling_strategy(), g_a in coupling_strategy(), m in 2usize..6) {
            let spec = star(g_m, g_a, m, &[], 0.0);
            let v = star_dark::<f64>(g_m, g_a, m).unwrap();
            prop_assert_eq!(v[m], 0.0);
            prop_assert!(v[..m - 1].iter().all(|x| *x == v[0]));
            let s = embed_single_excitation(Arc::new(spec.basis()), &(0..m).collect::<Vec<_>>(), &[0], &v).unwrap();
            prop_assert!(residual(&spec, &s) < 1e-12);
            let (w, _) = null_space_weight(&spec, &s);
            prop_assert!((w - 1.0).abs() < 1e-10);
        }

        #[test]
        fn commutator_residual_on_protected_subspace(g1 in coupling_strategy(), g2 in coupling_strategy()) {
            let basis = ProductBasis::uniform(2, 6, vec![AtomKind::TwoLevel]);
            prop_assert!(commutator_check(g1, g2, &basis).unwrap() < 1e-12);
        }
    }
}
