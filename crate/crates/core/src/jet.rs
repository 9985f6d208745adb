//! Order-2 forward differentiation: arithmetic on (value, gradient, Hessian)
//! triples. Every field built from closed-form expressions through these
//! operations yields machine-precision 2-jets — the crate never differentiates
//! numerically except in its independent finite-difference oracles.
//!
//! The Hessian is stored as a packed upper triangle, so its symmetry is exact
//! after every operation by construction.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{CoreError, Result};
use crate::linalg::{sym_index, sym_len, MAX_DIM, MAX_SYM};
use crate::num::Real;

/// Values whose magnitude falls below this guard reject division.
pub const DIV_GUARD: f64 = 1e-14;

/// Value, gradient and symmetric Hessian of a scalar quantity at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<T> {
    n: usize,
    value: T,
    grad: [T; MAX_DIM],
    hess: [T; MAX_SYM],
}

impl<T: Real> Jet2<T> {
    /// Constant jet: value with vanishing derivatives.
    pub fn constant(n: usize, value: T) -> Self {
        debug_assert!(n <= MAX_DIM);
        Self { n, value, grad: [T::zero(); MAX_DIM], hess: [T::zero(); MAX_SYM] }
    }

    /// Jet of the coordinate map `x ↦ x[axis]` at `x`.
    pub fn coordinate(x: &[T], axis: usize) -> Self {
        let mut j = Self::constant(x.len(), x[axis]);
        j.grad[axis] = T::one();
        j
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(n, T::zero())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn value(&self) -> T {
        self.value
    }

    #[inline]
    pub fn grad(&self, i: usize) -> T {
        debug_assert!(i < self.n);
        self.grad[i]
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.n && j < self.n);
        self.hess[sym_index(self.n, i, j)]
    }

    pub fn set_value(&mut self, v: T) {
        self.value = v;
    }

    pub fn set_grad(&mut self, i: usize, v: T) {
        self.grad[i] = v;
    }

    pub fn set_hess(&mut self, i: usize, j: usize, v: T) {
        self.hess[sym_index(self.n, i, j)] = v;
    }

    /// True when value, gradient and Hessian are all exactly zero.
    pub fn is_exactly_zero(&self) -> bool {
        if self.value != T::zero() {
            return false;
        }
        if self.grad[..self.n].iter().any(|g| *g != T::zero()) {
            return false;
        }
        !self.hess[..sym_len(self.n)].iter().any(|h| *h != T::zero())
    }

    pub fn scale(&self, c: T) -> Self {
        let mut out = *self;
        out.value = out.value * c;
        for i in 0..self.n {
            out.grad[i] = out.grad[i] * c;
        }
        for k in 0..sym_len(self.n) {
            out.hess[k] = out.hess[k] * c;
        }
        out
    }

    fn binary_check(&self, rhs: &Self) {
        assert_eq!(self.n, rhs.n, "jet dimension mismatch: {} vs {}", self.n, rhs.n);
    }

    pub fn add_jet(&self, rhs: &Self) -> Self {
        self.binary_check(rhs);
        let mut out = *self;
        out.value = out.value + rhs.value;
        for i in 0..self.n {
            out.grad[i] = out.grad[i] + rhs.grad[i];
        }
        for k in 0..sym_len(self.n) {
            out.hess[k] = out.hess[k] + rhs.hess[k];
        }
        out
    }

    pub fn sub_jet(&self, rhs: &Self) -> Self {
        self.binary_check(rhs);
        let mut out = *self;
        out.value = out.value - rhs.value;
        for i in 0..self.n {
            out.grad[i] = out.grad[i] - rhs.grad[i];
        }
        for k in 0..sym_len(self.n) {
            out.hess[k] = out.hess[k] - rhs.hess[k];
        }
        out
    }

    pub fn neg_jet(&self) -> Self {
        self.scale(-T::one())
    }

    /// Product rule, exact to second order:
    /// `(fg)'' = f''g + f'⊗g' + g'⊗f' + fg''`.
    pub fn mul_jet(&self, rhs: &Self) -> Self {
        self.binary_check(rhs);
        let n = self.n;
        let mut out = Self::constant(n, self.value * rhs.value);
        for i in 0..n {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let k = sym_index(n, i, j);
                out.hess[k] = self.hess[k] * rhs.value
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i]
                    + self.value * rhs.hess[k];
            }
        }
        out
    }

    /// Reciprocal jet; rejects values under the singularity guard.
    pub fn try_recip(&self) -> Result<Self> {
        if self.value.abs() < T::lit(DIV_GUARD) {
            return Err(CoreError::SingularField {
                value: self.value.to_f64().unwrap_or(f64::NAN),
                guard: DIV_GUARD,
            });
        }
        let n = self.n;
        let inv = T::one() / self.value;
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        let two = T::lit(2.0);
        let mut out = Self::constant(n, inv);
        for i in 0..n {
            out.grad[i] = -self.grad[i] * inv2;
        }
        for i in 0..n {
            for j in i..n {
                let k = sym_index(n, i, j);
                out.hess[k] = -self.hess[k] * inv2 + two * self.grad[i] * self.grad[j] * inv3;
            }
        }
        Ok(out)
    }

    /// Quotient rule via `a · (1/b)`; rejects denominators under the guard.
    pub fn try_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.mul_jet(&rhs.try_recip()?))
    }

    /// Chain rule for a scalar function with derivatives `f'`, `f''` at the
    /// value: gradient `f'·∇a`, Hessian `f'·H_a + f''·∇a∇aᵀ`.
    pub fn chain(&self, f0: T, f1: T, f2: T) -> Self {
        let n = self.n;
        let mut out = Self::constant(n, f0);
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                let k = sym_index(n, i, j);
                out.hess[k] = f1 * self.hess[k] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    /// Square root jet; the argument must be strictly positive.
    pub fn try_sqrt(&self) -> Result<Self> {
        if self.value <= T::zero() {
            return Err(CoreError::DomainError {
                op: "sqrt",
                value: self.value.to_f64().unwrap_or(f64::NAN),
            });
        }
        let s = self.value.sqrt();
        let d1 = T::lit(0.5) / s;
        let d2 = -T::lit(0.25) / (s * self.value);
        Ok(self.chain(s, d1, d2))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (self.value.sin(), self.value.cos());
        self.chain(c, -s, -c)
    }
}

impl<T: Real> Add for Jet2<T> {
    type Output = Jet2<T>;
    fn add(self, rhs: Jet2<T>) -> Jet2<T> {
        self.add_jet(&rhs)
    }
}

impl<T: Real> Sub for Jet2<T> {
    type Output = Jet2<T>;
    fn sub(self, rhs: Jet2<T>) -> Jet2<T> {
        self.sub_jet(&rhs)
    }
}

impl<T: Real> Mul for Jet2<T> {
    type Output = Jet2<T>;
    fn mul(self, rhs: Jet2<T>) -> Jet2<T> {
        self.mul_jet(&rhs)
    }
}

impl<T: Real> Neg for Jet2<T> {
    type Output = Jet2<T>;
    fn neg(self) -> Jet2<T> {
        self.neg_jet()
    }
}

/// Panicking division for internal compositions whose denominators are
/// checked upstream (pivots, norms, strictly positive exponentials).
impl<T: Real> Div for Jet2<T> {
    type Output = Jet2<T>;
    fn div(self, rhs: Jet2<T>) -> Jet2<T> {
        self.try_div(&rhs).expect("jet division by near-zero value")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::{fd_gradient, fd_hessian};

    fn coord1(x: f64) -> Jet2<f64> {
        Jet2::coordinate(&[x], 0)
    }

    #[test]
    fn square_of_coordinate() {
        // x ↦ x² at x = 3 has value 9, gradient 6, hessian 2.
        let j = coord1(3.0);
        let sq = j * j;
        assert_eq!(sq.value(), 9.0);
        assert_eq!(sq.grad(0), 6.0);
        assert_eq!(sq.hess(0, 0), 2.0);
    }

    #[test]
    fn mul_by_one_is_identity() {
        let j = coord1(1.7).sin() * coord1(1.7);
        let one = Jet2::constant(1, 1.0);
        let p = j * one;
        assert_eq!(p, j);
    }

    #[test]
    fn exp_of_zero_jet() {
        let e = Jet2::<f64>::zero(2).exp();
        assert_eq!(e.value(), 1.0);
        assert_eq!(e.grad(0), 0.0);
        assert_eq!(e.grad(1), 0.0);
        assert_eq!(e.hess(0, 1), 0.0);
    }

    #[test]
    fn sqrt_of_constant_four() {
        let s = Jet2::constant(3, 4.0).try_sqrt().unwrap();
        assert_eq!(s.value(), 2.0);
        for i in 0..3 {
            assert_eq!(s.grad(i), 0.0);
            for j in i..3 {
                assert_eq!(s.hess(i, j), 0.0);
            }
        }
    }

    #[test]
    fn sqrt_rejects_nonpositive() {
        assert!(Jet2::constant(1, 0.0).try_sqrt().is_err());
        assert!(Jet2::constant(1, -1.0).try_sqrt().is_err());
    }

    #[test]
    fn div_guard_rejects_tiny_values() {
        let a = Jet2::constant(1, 1.0);
        let b = Jet2::constant(1, 1e-15);
        assert!(a.try_div(&b).is_err());
    }

    /// Quotient of two cubics against the central finite-difference oracle.
    #[test]
    fn cubic_quotient_matches_finite_differences() {
        let p = |x: f64| 0.3 + 1.1 * x - 0.7 * x * x + 0.25 * x * x * x;
        let q = |x: f64| 2.0 - 0.4 * x + 0.9 * x * x + 0.1 * x * x * x;
        let ratio = |x: &[f64]| {
            let t = Jet2::coordinate(x, 0);
            let c = |v: f64| Jet2::constant(1, v);
            let pj = c(0.3) + c(1.1) * t - c(0.7) * t * t + c(0.25) * t * t * t;
            let qj = c(2.0) - c(0.4) * t + c(0.9) * t * t + c(0.1) * t * t * t;
            pj / qj
        };
        let x = [0.7];
        let jet = ratio(&x);
        assert!((jet.value() - p(0.7) / q(0.7)).abs() < 1e-15);
        let value_map = |x: &[f64]| ratio(x).value();
        let g = fd_gradient(&value_map, &x, 1e-4);
        let h = fd_hessian(&value_map, &x, 1e-4);
        assert!((jet.grad(0) - g[0]).abs() < 1e-6);
        assert!((jet.hess(0, 0) - h.get(0, 0)).abs() < 1e-6);
    }

    #[test]
    fn exp_sin_composite_matches_finite_differences() {
        let f = |x: &[f64]| {
            let t = Jet2::coordinate(x, 0);
            let u = Jet2::coordinate(x, 1);
            (t.sin() * u.cos()).exp() * (t * u).sin()
        };
        let x = [0.37, -0.81];
        let jet = f(&x);
        let vm = |x: &[f64]| f(x).value();
        let g = fd_gradient(&vm, &x, 1e-4);
        let h = fd_hessian(&vm, &x, 1e-4);
        for i in 0..2 {
            assert!((jet.grad(i) - g[i]).abs() < 1e-6, "grad {i}");
            for j in i..2 {
                assert!((jet.hess(i, j) - h.get(i, j)).abs() < 1e-5, "hess {i}{j}");
            }
        }
    }

    #[test]
    fn hessian_symmetry_is_bitwise() {
        let f = |x: &[f64]| {
            let a = Jet2::coordinate(x, 0).sin();
            let b = Jet2::coordinate(x, 1).exp();
            let c = Jet2::coordinate(x, 2);
            a * b * c + (b * c).cos()
        };
        let j = f(&[0.3, 0.4, 0.5]);
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(j.hess(i, k).to_bits(), j.hess(k, i).to_bits());
            }
        }
    }

    #[test]
    fn works_in_f32_too() {
        let t = Jet2::<f32>::coordinate(&[2.0f32], 0);
        let sq = t * t;
        assert_eq!(sq.value(), 4.0f32);
        assert_eq!(sq.grad(0), 4.0f32);
        assert_eq!(sq.hess(0, 0), 2.0f32);
    }
}
