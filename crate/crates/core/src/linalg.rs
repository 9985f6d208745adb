//! Dense linear algebra for the small matrices (n ≤ 4) this crate works with.
//!
//! Storage is inline (no allocation): a symmetric matrix keeps its upper
//! triangle, so symmetry of stored tensors is exact by construction.

use crate::error::{CoreError, Result};
use crate::num::Real;

/// Hard cap on the ambient dimension. Curvature work in this crate lives in
/// n ∈ {2, 3, 4}; inline storage is sized accordingly.
pub const MAX_DIM: usize = 4;
/// Length of a packed upper triangle at `MAX_DIM`.
pub const MAX_SYM: usize = MAX_DIM * (MAX_DIM + 1) / 2;
/// Length of a full square matrix at `MAX_DIM`.
pub const MAX_SQ: usize = MAX_DIM * MAX_DIM;

/// Packed index of `(i, j)` with `i <= j` in an upper triangle of side `n`.
#[inline]
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - (i * i - i) / 2 + (j - i)
}

/// Number of packed entries for side `n`.
#[inline]
pub fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Validate an ambient dimension against the inline storage cap.
pub fn check_dim(n: usize) -> Result<()> {
    if !(1..=MAX_DIM).contains(&n) {
        return Err(CoreError::UnsupportedDimension { n, max: MAX_DIM });
    }
    Ok(())
}

/// Symmetric matrix stored as a packed upper triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat<T> {
    n: usize,
    a: [T; MAX_SYM],
}

impl<T: Real> SymMat<T> {
    pub fn zeros(n: usize) -> Self {
        debug_assert!(n <= MAX_DIM);
        Self { n, a: [T::zero(); MAX_SYM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[sym_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[sym_index(self.n, i, j)] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        self.a[sym_index(self.n, i, j)] += v;
    }

    pub fn to_mat(&self) -> Mat<T> {
        Mat::from_fn(self.n, |i, j| self.get(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for k in 0..sym_len(self.n) {
            out.a[k] = out.a[k] - other.a[k];
        }
        out
    }

    pub fn scale(&self, c: T) -> Self {
        let mut out = *self;
        for k in 0..sym_len(self.n) {
            out.a[k] = out.a[k] * c;
        }
        out
    }

    /// Eigenvalues by cyclic Jacobi rotations. Exact symmetry of the input is
    /// guaranteed by storage; convergence for n ≤ 4 takes a handful of sweeps.
    pub fn eigenvalues(&self) -> [T; MAX_DIM] {
        let n = self.n;
        let mut m = self.to_mat();
        for _sweep in 0..30 {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off + m.get(i, j) * m.get(i, j);
                }
            }
            if off <= T::lit(1e-32) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m.get(p, q);
                    if apq == T::zero() {
                        continue;
                    }
                    let app = m.get(p, p);
                    let aqq = m.get(q, q);
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let t = {
                        let s = if theta >= T::zero() { T::one() } else { -T::one() };
                        s / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = m.get(k, p);
                        let akq = m.get(k, q);
                        m.set(k, p, c * akp - s * akq);
                        m.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = m.get(p, k);
                        let aqk = m.get(q, k);
                        m.set(p, k, c * apk - s * aqk);
                        m.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut ev = [T::zero(); MAX_DIM];
        for i in 0..n {
            ev[i] = m.get(i, i);
        }
        ev[..n].sort_by(|a, b| a.partial_cmp(b).expect("eigenvalue NaN"));
        ev
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_range(&self) -> (T, T) {
        let ev = self.eigenvalues();
        (ev[0], ev[self.n - 1])
    }

    /// Inverse through the dense path; fails on tiny pivots.
    pub fn inverse(&self) -> Result<SymMat<T>> {
        let inv = self.to_mat().inverse()?;
        // Re-symmetrize by averaging: the inverse of an exactly symmetric
        // matrix is symmetric up to rounding.
        let half = T::lit(0.5);
        Ok(SymMat::from_fn(self.n, |i, j| {
            (inv.get(i, j) + inv.get(j, i)) * half
        }))
    }

    /// Cholesky factor L with `L Lᵀ = self`; errors if not positive definite.
    pub fn cholesky(&self) -> Result<Mat<T>> {
        let n = self.n;
        let mut l = Mat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if s <= T::zero() {
                        return Err(CoreError::SingularMetric(format!(
                            "non-positive pivot {s} in Cholesky at row {i}"
                        )));
                    }
                    l.set(i, j, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Ok(l)
    }
}

/// Dense square matrix with inline storage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat<T> {
    n: usize,
    a: [T; MAX_SQ],
}

impl<T: Real> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        debug_assert!(n <= MAX_DIM);
        Self { n, a: [T::zero(); MAX_SQ] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Mat::from_fn(self.n, |i, j| {
            let mut s = T::zero();
            for k in 0..self.n {
                s = s + self.get(i, k) * other.get(k, j);
            }
            s
        })
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Mat<T>> {
        let n = self.n;
        let mut a = *self;
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if a.get(r, col).abs() > a.get(piv, col).abs() {
                    piv = r;
                }
            }
            let pval = a.get(piv, col);
            if pval.abs() < T::lit(1e-300) {
                return Err(CoreError::SingularMetric(format!(
                    "zero pivot in column {col}"
                )));
            }
            if piv != col {
                for c in 0..n {
                    let t = a.get(col, c);
                    a.set(col, c, a.get(piv, c));
                    a.set(piv, c, t);
                    let t = inv.get(col, c);
                    inv.set(col, c, inv.get(piv, c));
                    inv.set(piv, c, t);
                }
            }
            let d = a.get(col, col);
            for c in 0..n {
                a.set(col, c, a.get(col, c) / d);
                inv.set(col, c, inv.get(col, c) / d);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col);
                if factor == T::zero() {
                    continue;
                }
                for c in 0..n {
                    a.set(r, c, a.get(r, c) - factor * a.get(col, c));
                    inv.set(r, c, inv.get(r, c) - factor * inv.get(col, c));
                }
            }
        }
        Ok(inv)
    }

    /// Solve `L x = b` for lower-triangular `L` (from [`SymMat::cholesky`]).
    pub fn solve_lower(&self, b: &[T]) -> [T; MAX_DIM] {
        let n = self.n;
        let mut x = [T::zero(); MAX_DIM];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s = s - self.get(i, k) * x[k];
            }
            x[i] = s / self.get(i, i);
        }
        x
    }
}

/// Eigenvalues of `gref⁻¹ Δ` for symmetric `Δ` and SPD `gref`, computed via
/// the Cholesky transform `L⁻¹ Δ L⁻ᵀ` which is symmetric and similar to it.
pub fn generalized_eigenvalues<T: Real>(delta: &SymMat<T>, gref: &SymMat<T>) -> Result<[T; MAX_DIM]> {
    let n = delta.dim();
    let l = gref.cholesky()?;
    // Columns of W = L⁻¹ Δ: solve L w_j = Δ e_j.
    let mut w = Mat::zeros(n);
    for j in 0..n {
        let mut col = [T::zero(); MAX_DIM];
        for i in 0..n {
            col[i] = delta.get(i, j);
        }
        let x = l.solve_lower(&col[..n]);
        for i in 0..n {
            w.set(i, j, x[i]);
        }
    }
    // M = W L⁻ᵀ: solve L mᵀ rows, i.e. M L ᵀ = W ⇒ for each row i of M: L m_i = w_iᵀ.
    let mut m = SymMat::zeros(n);
    let mut full = Mat::zeros(n);
    for i in 0..n {
        let mut row = [T::zero(); MAX_DIM];
        for j in 0..n {
            row[j] = w.get(i, j);
        }
        let x = l.solve_lower(&row[..n]);
        for j in 0..n {
            full.set(i, j, x[j]);
        }
    }
    let half = T::lit(0.5);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, (full.get(i, j) + full.get(j, i)) * half);
        }
    }
    Ok(m.eigenvalues())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_storage_is_exactly_symmetric() {
        let m = SymMat::<f64>::from_fn(3, |i, j| (i * 10 + j) as f64);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat::<f64>::from_fn(3, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 });
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn jacobi_eigenvalues_diag() {
        let m = SymMat::<f64>::from_fn(3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 });
        let ev = m.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-14);
        assert!((ev[1] - 2.0).abs() < 1e-14);
        assert!((ev[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_eigen_scaled_identity() {
        // Δ = t·gref has all generalized eigenvalues t.
        let gref = SymMat::<f64>::from_fn(3, |i, j| if i == j { 2.0 } else { 0.5 });
        let t = -0.37;
        let delta = gref.scale(t);
        let ev = generalized_eigenvalues(&delta, &gref).unwrap();
        for k in 0..3 {
            assert!((ev[k] - t).abs() < 1e-12, "ev {} = {}", k, ev[k]);
        }
    }
}
