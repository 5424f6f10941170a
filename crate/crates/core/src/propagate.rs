//! Time integration of `dC/dt = -i H(t) C - D C` and trajectory diagnostics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{inner_product, ProductBasis, StateVector};
use crate::linalg::{expm, symmetric_eigenvalues};
use crate::model::{excitation_sector, reachable_indices, Generator, PulseShape, SystemSpec};
use crate::scalar::{czero, Real, C};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 401;
/// Largest `| |ψ| - |ψ0| |` tolerated in a lossless run.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Gaussian pulses must sit this many widths inside the window.
pub const EDGE_WIDTHS: f64 = 4.0;

/// Time span, output grid and local error tolerance of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationWindow<R> {
    pub t_start: R,
    pub t_end: R,
    pub samples: usize,
    pub tolerance: R,
}

impl<R: Real> IntegrationWindow<R> {
    pub fn new(t_start: R, t_end: R, samples: usize, tolerance: R) -> Result<Self> {
        let w = IntegrationWindow { t_start, t_end, samples, tolerance };
        w.validate()?;
        Ok(w)
    }

    /// `[min t0 - 4σ_max, max t0 + 4σ_max]` over the Gaussian pulses of `spec`.
    pub fn for_spec(spec: &SystemSpec<R>, samples: usize, tolerance: R) -> Result<Self> {
        let mut lo = R::infinity();
        let mut hi = R::neg_infinity();
        let mut width = R::zero();
        for c in &spec.couplings {
            if let PulseShape::Gaussian { center, width: w } = c.pulse.shape {
                lo = lo.min(center);
                hi = hi.max(center);
                width = width.max(w);
            }
        }
        if !lo.is_finite() {
            return Err(Error::InvalidWindow("no gaussian pulse to derive a window from".into()));
        }
        let pad = R::lit(EDGE_WIDTHS) * width;
        Self::new(lo - pad, hi + pad, samples, tolerance)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_start >= self.t_end {
            return Err(Error::InvalidWindow(format!("need t_start < t_end, got [{}, {}]", self.t_start, self.t_end)));
        }
        if self.samples < 2 {
            return Err(Error::InvalidWindow(format!("need at least 2 samples, got {}", self.samples)));
        }
        if !(self.tolerance > R::zero() && self.tolerance.is_finite()) {
            return Err(Error::InvalidWindow(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<R> {
        let span = self.t_end - self.t_start;
        let last = R::from_usize_exact(self.samples - 1);
        (0..self.samples)
            .map(|k| if k + 1 == self.samples { self.t_end } else { self.t_start + span * R::from_usize_exact(k) / last })
            .collect()
    }

    /// Names of Gaussian couplings whose center is closer than 4σ to an edge.
    pub fn edge_violations(&self, spec: &SystemSpec<R>) -> Vec<String> {
        let k = R::lit(EDGE_WIDTHS);
        spec.couplings
            .iter()
            .filter_map(|c| match c.pulse.shape {
                PulseShape::Gaussian { center, width }
                    if center - self.t_start < k * width || self.t_end - center < k * width =>
                {
                    Some(c.name())
                }
                _ => None,
            })
            .collect()
    }
}

/// Which part of the product basis is propagated. Every choice is exact:
/// the Hamiltonian and the damping never leave the given set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// States connected to the support of the initial state by couplings.
    #[default]
    Reachable,
    /// Union of the excitation sectors present in the initial state.
    Sectors,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub space: Space,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { space: Space::Reachable, max_steps: 50_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Sampled evolution. Amplitudes are stored only on the propagated indices;
/// every other amplitude is identically zero.
#[derive(Clone, Debug)]
pub struct Trajectory<R: Real> {
    basis: Arc<ProductBasis>,
    indices: Vec<usize>,
    times: Vec<R>,
    amplitudes: Vec<Vec<C<R>>>,
    norms: Vec<R>,
    stats: StepStats,
    tolerance: R,
}

impl<R: Real> Trajectory<R> {
    pub fn basis(&self) -> &Arc<ProductBasis> {
        &self.basis
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn times(&self) -> &[R] {
        &self.times
    }

    pub fn norms(&self) -> &[R] {
        &self.norms
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn tolerance(&self) -> R {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Full-basis state at sample `k`.
    pub fn state(&self, k: usize) -> StateVector<R> {
        let mut amps = vec![czero(); self.basis.dim()];
        for (&i, z) in self.indices.iter().zip(&self.amplitudes[k]) {
            amps[i] = *z;
        }
        StateVector::from_amplitudes(self.basis.clone(), amps).expect("dimension matches basis")
    }

    pub fn final_state(&self) -> StateVector<R> {
        self.state(self.len() - 1)
    }

    /// `|C_i(t_k)|²` for every sample, by full-basis index.
    pub fn population_of(&self, index: usize) -> Vec<R> {
        match self.indices.binary_search(&index) {
            Ok(local) => self.amplitudes.iter().map(|a| a[local].norm_sqr()).collect(),
            Err(_) => vec![R::zero(); self.len()],
        }
    }

    /// `<n_mode>(t_k)` for every sample.
    pub fn photon_mean(&self, mode: usize) -> Result<Vec<R>> {
        self.basis.check_mode(mode)?;
        let n: Vec<R> = self.indices.iter().map(|&i| R::from_usize_exact(self.basis.photons(i, mode))).collect();
        Ok(self.amplitudes.iter().map(|a| a.iter().zip(&n).map(|(z, n)| z.norm_sqr() * *n).sum()).collect())
    }

    /// `<N>(t_k)`: photons plus excited atoms.
    pub fn excitation_mean(&self) -> Vec<R> {
        let n: Vec<R> = self.indices.iter().map(|&i| R::from_usize_exact(self.basis.excitation(i))).collect();
        self.amplitudes.iter().map(|a| a.iter().zip(&n).map(|(z, n)| z.norm_sqr() * *n).sum()).collect()
    }

    /// Largest weight outside the propagated indices over the run. Always
    /// zero for sector propagation; meaningful with [`Space::Full`], where
    /// it measures leakage out of the initial sectors `initial`.
    pub fn weight_outside(&self, initial: &[usize]) -> R {
        let sectors: Vec<usize> = initial.iter().map(|&i| self.basis.excitation(i)).collect();
        self.amplitudes
            .iter()
            .map(|a| {
                self.indices
                    .iter()
                    .zip(a)
                    .filter(|(&i, _)| !sectors.contains(&self.basis.excitation(i)))
                    .map(|(_, z)| z.norm_sqr())
                    .sum::<R>()
            })
            .fold(R::zero(), R::max)
    }
}

/// Propagated indices for `psi0` under `spec`.
pub fn active_indices<R: Real>(spec: &SystemSpec<R>, psi0: &StateVector<R>, space: Space) -> Result<Vec<usize>> {
    let basis = psi0.basis();
    Ok(match space {
        Space::Full => (0..basis.dim()).collect(),
        Space::Reachable => {
            let support: Vec<usize> =
                psi0.amplitudes().iter().enumerate().filter(|(_, z)| **z != czero()).map(|(i, _)| i).collect();
            reachable_indices(spec, basis.clone(), &support)?
        }
        Space::Sectors => {
            let mut occupied = vec![false; basis.dim() + 1];
            for (i, z) in psi0.amplitudes().iter().enumerate() {
                if *z != czero() {
                    occupied[basis.excitation(i)] = true;
                }
            }
            (0..basis.dim()).filter(|&i| occupied[basis.excitation(i)]).collect()
        }
    })
}

/// [`NORM_DRIFT_LIMIT`], widened to the square root of machine epsilon for
/// scalars too coarse to resolve it.
fn drift_limit<R: Real>() -> R {
    R::lit(NORM_DRIFT_LIMIT).max(R::epsilon().sqrt())
}

fn check_initial<R: Real>(spec: &SystemSpec<R>, psi0: &StateVector<R>) -> Result<()> {
    spec.validate()?;
    if psi0.basis().modes() != spec.modes.as_slice() || psi0.basis().atoms() != spec.atoms.as_slice() {
        return Err(Error::BasisMismatch("initial state basis differs from the system".into()));
    }
    let norm = psi0.norm();
    if (norm - R::one()).abs() > drift_limit::<R>() {
        return Err(Error::NotNormalized { norm: norm.as_f64() });
    }
    Ok(())
}

/// Adaptive propagation with default options (sector restriction).
pub fn integrate<R: Real>(
    spec: &SystemSpec<R>,
    window: &IntegrationWindow<R>,
    psi0: &StateVector<R>,
) -> Result<Trajectory<R>> {
    integrate_with(spec, window, psi0, &IntegrateOptions::default())
}

/// Dormand–Prince 8(5,3) with step alignment to the sample grid; the window
/// tolerance is used as both absolute and relative local error bound.
pub fn integrate_with<R: Real>(
    spec: &SystemSpec<R>,
    window: &IntegrationWindow<R>,
    psi0: &StateVector<R>,
    options: &IntegrateOptions,
) -> Result<Trajectory<R>> {
    window.validate()?;
    check_initial(spec, psi0)?;
    let indices = active_indices(spec, psi0, options.space)?;
    let generator = Generator::restricted(spec, psi0.basis().clone(), indices.clone())?;
    let y0: Vec<C<R>> = indices.iter().map(|&i| psi0.amplitudes()[i]).collect();
    let lossless = generator.is_lossless();

    let times = window.sample_times();
    let mut stepper = Dopri::new(&generator, window.tolerance, y0.len());
    let mut y = y0;
    let mut t = window.t_start;
    let norm0 = norm(&y);
    let mut amplitudes = vec![y.clone()];
    let mut norms = vec![norm0];
    let mut h = stepper.initial_step(t, &y, window.t_end - window.t_start);

    for &target in &times[1..] {
        while t < target {
            if stepper.stats.accepted + stepper.stats.rejected >= options.max_steps {
                return Err(Error::StepSizeUnderflow { t: t.as_f64(), h: h.as_f64() });
            }
            let remaining = target - t;
            let last = h >= remaining * R::lit(1.0 - 1e-12);
            let step = if last { remaining } else { h };
            let min_step = R::lit(1e-13) * t.abs().max(R::one());
            if step < min_step && !last {
                return Err(Error::StepSizeUnderflow { t: t.as_f64(), h: step.as_f64() });
            }
            let (err, proposed) = stepper.attempt(t, &y, step);
            if err <= R::one() {
                std::mem::swap(&mut y, &mut stepper.y_new);
                stepper.accept();
                t = if last { target } else { t + step };
                // A step shortened to land on the grid should not shrink the next one.
                h = if last { h.max(proposed) } else { proposed };
            } else {
                stepper.stats.rejected += 1;
                h = proposed;
            }
        }
        let n = norm(&y);
        if lossless && (n - norm0).abs() > drift_limit::<R>() {
            return Err(Error::NormDrift { t: t.as_f64(), drift: (n - norm0).as_f64() });
        }
        amplitudes.push(y.clone());
        norms.push(n);
    }

    Ok(Trajectory {
        basis: psi0.basis().clone(),
        indices,
        times,
        amplitudes,
        norms,
        stats: stepper.stats,
        tolerance: window.tolerance,
    })
}

fn norm<R: Real>(y: &[C<R>]) -> R {
    y.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt()
}

/// Nodes of the eighth-order pair; the last stage sits at the step end.
#[allow(clippy::excessive_precision)]
const C8: [f64; 12] = [
    0.0,
    0.052600151958767731878558754448,
    0.078900227938151597817838131673,
    0.118350341907227396726757197510,
    0.281649658092772603273242802490,
    1.0 / 3.0,
    0.25,
    0.307692307692307692307692307692,
    0.651282051282051282051282051282,
    0.6,
    0.857142857142857142857142857142,
    1.0,
];
const A8: [[f64; 11]; 11] = [
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0],
    [0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0],
    [0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0],
    [-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0],
    [2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636],
];
const B8: [f64; 12] = [0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259];
const BHH: [f64; 3] = [0.2440944881889764, 0.7338466882816118, 0.022058823529411766];
const E8: [f64; 12] = [0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294];

struct Dopri<'a, R: Real> {
    generator: &'a Generator<R>,
    tol: R,
    k: Vec<Vec<C<R>>>,
    tmp: Vec<C<R>>,
    y_new: Vec<C<R>>,
    /// `k[0]` holds the derivative at the current point.
    fresh: bool,
    stats: StepStats,
    a: [[R; 11]; 11],
    b: [R; 12],
    bhh: [R; 3],
    e: [R; 12],
    c: [R; 12],
}

impl<'a, R: Real> Dopri<'a, R> {
    fn new(generator: &'a Generator<R>, tol: R, n: usize) -> Self {
        Dopri {
            generator,
            tol,
            k: vec![vec![czero(); n]; 12],
            tmp: vec![czero(); n],
            y_new: vec![czero(); n],
            fresh: false,
            stats: StepStats::default(),
            a: A8.map(|row| row.map(R::lit)),
            b: B8.map(R::lit),
            bhh: BHH.map(R::lit),
            e: E8.map(R::lit),
            c: C8.map(R::lit),
        }
    }

    fn eval(&mut self, t: R, slot: usize, from_tmp: bool, y: &[C<R>]) {
        let src: &[C<R>] = if from_tmp { &self.tmp } else { y };
        self.generator.derivative(t, src, &mut self.k[slot]);
        self.stats.evaluations += 1;
    }

    /// Starting step from the size of the first derivative.
    fn initial_step(&mut self, t: R, y: &[C<R>], span: R) -> R {
        self.eval(t, 0, false, y);
        self.fresh = true;
        let d0 = norm(y);
        let d1 = norm(&self.k[0]);
        let guess = if d1 > R::zero() { R::lit(0.01) * d0.max(R::lit(1e-5)) / d1 } else { span };
        guess.min(span).max(R::lit(1e-12) * span)
    }

    /// Trial step; leaves the candidate in `y_new`. Returns the scaled error
    /// and the proposed next step size.
    fn attempt(&mut self, t: R, y: &[C<R>], h: R) -> (R, R) {
        if !self.fresh {
            self.eval(t, 0, false, y);
            self.fresh = true;
        }
        for s in 1..12 {
            let row = self.a[s - 1];
            for (i, out) in self.tmp.iter_mut().enumerate() {
                let mut acc: C<R> = czero();
                for (j, a) in row.iter().enumerate().take(s) {
                    if *a != R::zero() {
                        acc += self.k[j][i] * *a;
                    }
                }
                *out = y[i] + acc * h;
            }
            self.eval(t + self.c[s] * h, s, true, y);
        }
        let mut err = R::zero();
        let mut err2 = R::zero();
        for (i, &yi) in y.iter().enumerate() {
            let mut incr: C<R> = czero();
            let mut est: C<R> = czero();
            for j in 0..12 {
                let kj = self.k[j][i];
                if self.b[j] != R::zero() {
                    incr += kj * self.b[j];
                }
                if self.e[j] != R::zero() {
                    est += kj * self.e[j];
                }
            }
            self.y_new[i] = yi + incr * h;
            let low = incr
                - self.k[0][i] * self.bhh[0]
                - self.k[8][i] * self.bhh[1]
                - self.k[11][i] * self.bhh[2];
            let scale = self.tol + self.tol * yi.norm().max(self.y_new[i].norm());
            err += est.norm_sqr() / (scale * scale);
            err2 += low.norm_sqr() / (scale * scale);
        }
        // Blend of the fifth- and third-order estimates, as in Hairer's DOP853.
        let mut deno = err + R::lit(0.01) * err2;
        if deno <= R::zero() {
            deno = R::one();
        }
        let err = h.abs() * err / (deno * R::from_usize_exact(y.len().max(1))).sqrt();
        let fac = err.powf(R::lit(0.125)) / R::lit(0.9);
        let factor = if err <= R::one() {
            R::one() / fac.max(R::lit(1.0 / 6.0)).min(R::lit(3.0))
        } else {
            R::one() / fac.min(R::lit(3.0))
        };
        let factor = if err > R::one() { factor.min(R::one()) } else { factor };
        (err, h * factor)
    }

    fn accept(&mut self) {
        // The next derivative is evaluated at the accepted point on demand.
        self.fresh = false;
        self.stats.accepted += 1;
    }
}

/// Product of exact exponentials of the generator frozen at slice
/// midpoints. Independent of the adaptive integrator and meant for small
/// sectors (dense matrices).
pub fn piecewise_exponential<R: Real>(
    spec: &SystemSpec<R>,
    t_start: R,
    t_end: R,
    slices: usize,
    psi0: &StateVector<R>,
) -> Result<StateVector<R>> {
    check_initial(spec, psi0)?;
    if slices == 0 || t_start >= t_end {
        return Err(Error::InvalidWindow("need t_start < t_end and at least one slice".into()));
    }
    let indices = active_indices(spec, psi0, Space::Sectors)?;
    let generator = Generator::restricted(spec, psi0.basis().clone(), indices.clone())?;
    let dt = (t_end - t_start) / R::from_usize_exact(slices);
    let mut y = ndarray::Array1::from(indices.iter().map(|&i| psi0.amplitudes()[i]).collect::<Vec<_>>());
    for s in 0..slices {
        let mid = t_start + dt * (R::from_usize_exact(s) + R::lit(0.5));
        let g = generator.dense_generator(mid).mapv(|z| z * dt);
        y = expm(&g).dot(&y);
    }
    let mut amps = vec![czero(); psi0.dim()];
    for (&i, z) in indices.iter().zip(y.iter()) {
        amps[i] = *z;
    }
    StateVector::from_amplitudes(psi0.basis().clone(), amps)
}

/// Population time series for chosen basis states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationTable<R> {
    pub times: Vec<R>,
    pub labels: Vec<String>,
    /// One column per label, one entry per sample.
    pub columns: Vec<Vec<R>>,
    /// `<n>` per mode, one entry per sample.
    pub photon_means: Vec<Vec<R>>,
    pub norms: Vec<R>,
}

impl<R: Real> PopulationTable<R> {
    pub fn column(&self, label: &str) -> Option<&[R]> {
        self.labels.iter().position(|l| l == label).map(|k| self.columns[k].as_slice())
    }
}

pub fn populations<R: Real, S: AsRef<str>>(traj: &Trajectory<R>, labels: &[S]) -> Result<PopulationTable<R>> {
    let basis = traj.basis();
    let mut columns = Vec::with_capacity(labels.len());
    let mut names = Vec::with_capacity(labels.len());
    for l in labels {
        let idx = basis.parse_label(l.as_ref())?;
        columns.push(traj.population_of(idx));
        names.push(basis.label_string(idx));
    }
    let photon_means = (0..basis.n_modes()).map(|m| traj.photon_mean(m)).collect::<Result<_>>()?;
    Ok(PopulationTable { times: traj.times().to_vec(), labels: names, columns, photon_means, norms: traj.norms().to_vec() })
}

/// `|<target|final>|` and its square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fidelity<R> {
    pub amplitude: R,
    pub squared: R,
}

pub fn fidelity<R: Real>(final_state: &StateVector<R>, target: &StateVector<R>) -> Result<Fidelity<R>> {
    let amplitude = inner_product(target, final_state)?.norm();
    Ok(Fidelity { amplitude, squared: amplitude * amplitude })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseAdiabaticity<R> {
    pub coupling: String,
    pub g_sigma: R,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSample<R> {
    pub t: R,
    pub gap: R,
}

/// Roles of the four couplings of an H configuration: atom `a` couples the
/// shared cavity (`g1a`) and its own (`g2a`), atom `b` the shared cavity
/// (`g1b`) and its own (`g3b`). Values are coupling indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HRoles {
    pub g1a: usize,
    pub g2a: usize,
    pub g1b: usize,
    pub g3b: usize,
}

impl HRoles {
    /// Finds the roles in a two-atom, three-mode system with one shared mode.
    pub fn detect<R: Real>(spec: &SystemSpec<R>) -> Option<Self> {
        if spec.modes.len() != 3 || spec.atoms.len() != 2 || spec.couplings.len() != 4 {
            return None;
        }
        let modes_of = |atom: usize| -> Vec<(usize, usize)> {
            spec.couplings.iter().enumerate().filter(|(_, c)| c.atom == atom).map(|(i, c)| (i, c.mode)).collect()
        };
        let (a, b) = (modes_of(0), modes_of(1));
        if a.len() != 2 || b.len() != 2 {
            return None;
        }
        let shared: Vec<usize> = a.iter().map(|x| x.1).filter(|m| b.iter().any(|y| y.1 == *m)).collect();
        let [s] = shared[..] else { return None };
        let pick = |v: &[(usize, usize)], on: bool| v.iter().find(|x| (x.1 == s) == on).map(|x| x.0);
        Some(HRoles { g1a: pick(&a, true)?, g2a: pick(&a, false)?, g1b: pick(&b, true)?, g3b: pick(&b, false)? })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdiabaticityReport<R> {
    pub pulses: Vec<PulseAdiabaticity<R>>,
    /// Smallest nonzero eigenvalue magnitude of the single-excitation block
    /// over samples where some coupling exceeds 1% of the overall peak.
    pub min_gap: Option<GapSample<R>>,
    /// `|g2a g3b|² / (|g1a g3b|² + |g1b g2a|²)` per sample, for H setups.
    pub h_ratio: Option<Vec<(R, R)>>,
}

impl<R: Real> AdiabaticityReport<R> {
    pub fn max_h_ratio(&self) -> Option<R> {
        self.h_ratio.as_ref().map(|v| v.iter().map(|x| x.1).fold(R::zero(), R::max))
    }
}

pub fn adiabaticity_report<R: Real>(spec: &SystemSpec<R>, window: &IntegrationWindow<R>) -> Result<AdiabaticityReport<R>> {
    window.validate()?;
    let pulses = spec
        .couplings
        .iter()
        .filter_map(|c| match c.pulse.shape {
            PulseShape::Gaussian { width, .. } => {
                Some(PulseAdiabaticity { coupling: c.name(), g_sigma: c.pulse.amplitude.abs() * width })
            }
            PulseShape::Constant => None,
        })
        .collect();

    let basis = Arc::new(spec.basis());
    let sector = excitation_sector(spec, 1, &basis)?;
    let generator = Generator::restricted(spec, basis, sector)?;
    let times = window.sample_times();
    let values: Vec<Vec<R>> = times.iter().map(|&t| spec.coupling_values(t)).collect();
    let peak = values.iter().flatten().map(|g| g.abs()).fold(R::zero(), R::max);
    let mut min_gap: Option<GapSample<R>> = None;
    if peak > R::zero() {
        for (&t, g) in times.iter().zip(&values) {
            if g.iter().all(|x| x.abs() <= R::lit(0.01) * peak) {
                continue;
            }
            let eig = symmetric_eigenvalues(&generator.dense_real(t));
            let scale = eig.iter().map(|x| x.abs()).fold(R::zero(), R::max);
            let gap = eig.iter().map(|x| x.abs()).filter(|x| *x > R::lit(1e-9) * scale).fold(R::infinity(), R::min);
            if gap.is_finite() && min_gap.is_none_or(|m| gap < m.gap) {
                min_gap = Some(GapSample { t, gap });
            }
        }
    }

    let h_ratio = HRoles::detect(spec).map(|r| {
        times
            .iter()
            .zip(&values)
            .map(|(&t, g)| {
                let sq = |x: R| x * x;
                let den = sq(g[r.g1a] * g[r.g3b]) + sq(g[r.g1b] * g[r.g2a]);
                let num = sq(g[r.g2a] * g[r.g3b]);
                (t, if den > R::zero() { num / den } else { R::zero() })
            })
            .collect()
    });
    Ok(AdiabaticityReport { pulses, min_gap, h_ratio })
}
