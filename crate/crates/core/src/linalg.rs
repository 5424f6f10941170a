//! Small dense and sparse kernels: matrix exponential, real symmetric
//! eigenvalues, and a compressed-row operator used for fast matrix-vector
//! products during propagation.

use ndarray::Array2;
use num_traits::Zero;

use crate::scalar::{cone, czero, Real, C};

/// Max-norm (largest absolute entry) of a complex matrix.
pub fn max_norm<R: Real>(a: &Array2<C<R>>) -> R {
    a.iter().map(|z| z.norm()).fold(R::zero(), R::max)
}

/// Conjugate transpose.
pub fn adjoint<R: Real>(a: &Array2<C<R>>) -> Array2<C<R>> {
    a.t().mapv(|z| z.conj())
}

/// `A B - B A`
pub fn commutator<R: Real>(a: &Array2<C<R>>, b: &Array2<C<R>>) -> Array2<C<R>> {
    a.dot(b) - b.dot(a)
}

pub fn identity<R: Real>(n: usize) -> Array2<C<R>> {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { cone() } else { czero() })
}

fn one_norm<R: Real>(a: &Array2<C<R>>) -> R {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<R>())
        .fold(R::zero(), R::max)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The matrix is scaled so that its 1-norm is at most 1/2; eighteen Taylor
/// terms then put the truncation error below 1e-20 relative, well under the
/// squaring round-off.
pub fn expm<R: Real>(a: &Array2<C<R>>) -> Array2<C<R>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm of a non-square matrix");
    let norm = one_norm(a);
    let half = R::lit(0.5);
    let mut squarings = 0u32;
    let mut scale = R::one();
    while norm * scale > half {
        scale *= half;
        squarings += 1;
    }
    let scaled = a.mapv(|z| z * scale);

    let mut result = identity::<R>(n);
    let mut term = identity::<R>(n);
    for k in 1..=18usize {
        let inv_k = R::one() / R::from_usize_exact(k);
        term = term.dot(&scaled).mapv(|z| z * inv_k);
        result += &term;
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order.
pub fn symmetric_eigenvalues<R: Real>(a: &Array2<R>) -> Vec<R> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigenvalues of a non-square matrix");
    let mut m = a.to_owned();
    let eps = R::epsilon();
    for _sweep in 0..100 {
        let off: R = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        let scale: R = m.iter().map(|x| *x * *x).sum::<R>() + R::min_positive_value();
        if off <= eps * eps * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == R::zero() {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (R::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<R> = (0..n).map(|i| m[[i, i]]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalue"));
    eig
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T> SparseMatrix<T>
where
    T: Copy + Zero + std::ops::AddAssign,
{
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            if last == Some((r, c)) {
                *vals.last_mut().expect("previous entry") += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix { nrows, ncols, row_ptr, cols, vals }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterates over stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }
}

impl<R: Real> SparseMatrix<C<R>> {
    pub fn to_dense(&self) -> Array2<C<R>> {
        let mut d = Array2::from_elem((self.nrows, self.ncols), czero());
        for (r, c, v) in self.entries() {
            d[[r, c]] += v;
        }
        d
    }

    pub fn apply(&self, x: &[C<R>]) -> Vec<C<R>> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).fold(czero(), |acc, (c, v)| acc + v * x[c]))
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let t = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        SparseMatrix::from_triplets(self.ncols, self.nrows, t)
    }
}
