//! Central finite-difference oracles for scalar maps.
//!
//! These are deliberately independent of the jet arithmetic: they only ever
//! see plain value maps, so they can adjudicate it.

use crate::linalg::{SymMat, MAX_DIM};
use crate::num::Real;

/// Central-difference gradient with step `h`, O(h²).
pub fn fd_gradient<T: Real>(f: &impl Fn(&[T]) -> T, x: &[T], h: T) -> [T; MAX_DIM] {
    let n = x.len();
    let mut g = [T::zero(); MAX_DIM];
    let mut xp = [T::zero(); MAX_DIM];
    let mut xm = [T::zero(); MAX_DIM];
    for k in 0..n {
        xp[..n].copy_from_slice(x);
        xm[..n].copy_from_slice(x);
        xp[k] = xp[k] + h;
        xm[k] = xm[k] - h;
        g[k] = (f(&xp[..n]) - f(&xm[..n])) / (T::lit(2.0) * h);
    }
    g
}

/// Central-difference Hessian with step `h`, O(h²).
pub fn fd_hessian<T: Real>(f: &impl Fn(&[T]) -> T, x: &[T], h: T) -> SymMat<T> {
    let n = x.len();
    let f0 = f(x);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    SymMat::from_fn(n, |i, j| {
        let mut xs = [T::zero(); MAX_DIM];
        if i == j {
            xs[..n].copy_from_slice(x);
            xs[i] = xs[i] + h;
            let fp = f(&xs[..n]);
            xs[..n].copy_from_slice(x);
            xs[i] = xs[i] - h;
            let fm = f(&xs[..n]);
            (fp - two * f0 + fm) / (h * h)
        } else {
            let mut sample = |si: T, sj: T| {
                xs[..n].copy_from_slice(x);
                xs[i] = xs[i] + si * h;
                xs[j] = xs[j] + sj * h;
                f(&xs[..n])
            };
            let fpp = sample(T::one(), T::one());
            let fpm = sample(T::one(), -T::one());
            let fmp = sample(-T::one(), T::one());
            let fmm = sample(-T::one(), -T::one());
            (fpp - fpm - fmp + fmm) / (four * h * h)
        }
    })
}

/// One Richardson refinement of a central difference computed at `h` and
/// `h/2`: cancels the O(h²) term, leaving O(h⁴).
pub fn richardson<T: Real>(coarse: T, fine: T) -> T {
    (T::lit(4.0) * fine - coarse) / T::lit(3.0)
}

/// Richardson-refined gradient, O(h⁴) on smooth maps.
pub fn fd_gradient_refined<T: Real>(f: &impl Fn(&[T]) -> T, x: &[T], h: T) -> [T; MAX_DIM] {
    let g1 = fd_gradient(f, x, h);
    let g2 = fd_gradient(f, x, h * T::lit(0.5));
    let mut g = [T::zero(); MAX_DIM];
    for k in 0..x.len() {
        g[k] = richardson(g1[k], g2[k]);
    }
    g
}

/// Richardson-refined Hessian, O(h⁴) on smooth maps.
pub fn fd_hessian_refined<T: Real>(f: &impl Fn(&[T]) -> T, x: &[T], h: T) -> SymMat<T> {
    let h1 = fd_hessian(f, x, h);
    let h2 = fd_hessian(f, x, h * T::lit(0.5));
    SymMat::from_fn(x.len(), |i, j| richardson(h1.get(i, j), h2.get(i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_quadratic_is_near_exact() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[0] * x[1];
        let g = fd_gradient(&f, &[1.0, 2.0], 1e-5);
        assert!((g[0] - 8.0).abs() < 1e-9);
        assert!((g[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn refinement_improves_transcendental_hessian() {
        let f = |x: &[f64]| (x[0].sin() * x[1]).exp();
        let x = [0.4, 0.7];
        let coarse = fd_hessian(&f, &x, 1e-2);
        let refined = fd_hessian_refined(&f, &x, 1e-2);
        let truth = fd_hessian(&f, &x, 1e-5);
        let err_c = (coarse.get(0, 0) - truth.get(0, 0)).abs();
        let err_r = (refined.get(0, 0) - truth.get(0, 0)).abs();
        assert!(err_r < err_c / 10.0, "refined {err_r} vs coarse {err_c}");
    }
}
