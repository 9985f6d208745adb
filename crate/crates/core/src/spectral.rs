//! Spectral lifts: turn pointwise samples on a lattice into smooth
//! [`ScalarField`]s whose 2-jets are the exact derivatives of the
//! interpolant.
//!
//! Periodic axes use full-bandwidth trigonometric interpolation. Box axes
//! (mixed domains) use Chebyshev interpolation at Gauss–Lobatto nodes. Both
//! are spectrally accurate on analytic data.

use std::sync::Arc;

use crate::domain::DomainSpec;
use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::jet::Jet2;
use crate::linalg::{sym_index, MAX_DIM};
use crate::num::Real;

/// Samples on a tensor lattice, row-major with axis 0 slowest.
#[derive(Clone, Debug)]
pub struct LatticeSamples<T> {
    pub dims: Vec<usize>,
    pub data: Vec<T>,
}

/// Dropping trailing modes may move lattice values by at most this fraction
/// of the largest coefficient magnitude.
const SPARSIFY_BUDGET: f64 = 3e-13;

#[derive(Clone, Copy, Debug)]
struct Mode {
    idx: [u16; MAX_DIM],
    re: f64,
    im: f64,
}

#[derive(Clone, Debug)]
enum AxisBasis<T> {
    /// Fourier modes on a 1-periodic axis; `wavenumbers[j]` is the signed
    /// wavenumber of lattice index `j`.
    Fourier { wavenumbers: Vec<i32> },
    /// Chebyshev polynomials `T_k` on `[lo, hi]`.
    Chebyshev { count: usize, lo: T, hi: T },
}

/// Lattice abscissae along every axis of `domain`: uniform `j/M` on periodic
/// axes, Chebyshev–Gauss–Lobatto points on box axes.
pub fn lattice_points<T: Real>(domain: &DomainSpec<T>, dims: &[usize]) -> Result<Vec<Vec<T>>> {
    check_dims(domain, dims)?;
    let coords = axis_nodes(domain, dims);
    let total: usize = dims.iter().product();
    let n = domain.dim();
    let mut pts = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        pts.push((0..n).map(|a| coords[a][idx[a]]).collect());
        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(pts)
}

/// Evaluate `f` on the lift lattice.
pub fn sample_lattice<T: Real>(
    domain: &DomainSpec<T>,
    dims: &[usize],
    f: impl Fn(&[T]) -> T,
) -> Result<LatticeSamples<T>> {
    let pts = lattice_points(domain, dims)?;
    Ok(LatticeSamples { dims: dims.to_vec(), data: pts.iter().map(|p| f(p)).collect() })
}

/// Trigonometric interpolation of samples on a fully periodic lattice.
///
/// The returned field reproduces the samples at lattice points to 1e-12 and
/// its jets are the exact derivatives of the interpolant. Domains with box
/// axes are rejected; see [`mixed_lift`] for those.
pub fn spectral_lift<T: Real>(
    domain: &DomainSpec<T>,
    samples: &LatticeSamples<T>,
) -> Result<ScalarField<T>> {
    if domain.periodic_count() != domain.dim() {
        return Err(CoreError::UnsupportedDomain(
            "spectral_lift requires a fully periodic lattice; use mixed_lift on box axes".into(),
        ));
    }
    mixed_lift(domain, samples)
}

/// Tensor interpolation on a mixed box×torus domain: Fourier along periodic
/// axes, Chebyshev along box axes.
pub fn mixed_lift<T: Real>(
    domain: &DomainSpec<T>,
    samples: &LatticeSamples<T>,
) -> Result<ScalarField<T>> {
    check_dims(domain, &samples.dims)?;
    let total: usize = samples.dims.iter().product();
    if samples.data.len() != total {
        return Err(CoreError::InvalidInput(format!(
            "expected {total} samples, got {}",
            samples.data.len()
        )));
    }
    let n = domain.dim();
    let dims = samples.dims.clone();

    let mut buf: Vec<(f64, f64)> = samples
        .data
        .iter()
        .map(|v| (v.to_f64().expect("sample not representable as f64"), 0.0))
        .collect();
    for axis in 0..n {
        if domain.is_periodic_axis(axis) {
            axis_transform(&mut buf, &dims, axis, dft_forward);
        } else {
            axis_transform(&mut buf, &dims, axis, dct_forward);
        }
    }

    let modes = sparsify(&buf, &dims);
    let bases: Vec<AxisBasis<T>> = (0..n)
        .map(|a| {
            if domain.is_periodic_axis(a) {
                AxisBasis::Fourier { wavenumbers: wavenumbers(dims[a]) }
            } else {
                let (lo, hi) = domain.axis_bounds(a);
                AxisBasis::Chebyshev { count: dims[a], lo, hi }
            }
        })
        .collect();

    let bases = Arc::new(bases);
    let modes = Arc::new(modes);
    let mask = domain.periodic_mask();
    Ok(ScalarField::from_fn(n, &mask, move |x: &[T]| {
        eval_modes(&bases, &modes, x)
    }))
}

fn check_dims<T: Real>(domain: &DomainSpec<T>, dims: &[usize]) -> Result<()> {
    if dims.len() != domain.dim() {
        return Err(CoreError::InvalidInput(format!(
            "expected {} lattice sizes, got {}",
            domain.dim(),
            dims.len()
        )));
    }
    for (a, &m) in dims.iter().enumerate() {
        let need = if domain.is_periodic_axis(a) { 4 } else { 2 };
        if m < need {
            return Err(CoreError::InvalidInput(format!(
                "lattice axis {a} needs at least {need} points, got {m}"
            )));
        }
    }
    Ok(())
}

fn axis_nodes<T: Real>(domain: &DomainSpec<T>, dims: &[usize]) -> Vec<Vec<T>> {
    (0..domain.dim())
        .map(|a| {
            let m = dims[a];
            if domain.is_periodic_axis(a) {
                (0..m).map(|j| T::of_usize(j) / T::of_usize(m)).collect()
            } else {
                let (lo, hi) = domain.axis_bounds(a);
                let half = T::lit(0.5);
                (0..m)
                    .map(|j| {
                        let u = (T::PI() * T::of_usize(j) / T::of_usize(m - 1)).cos();
                        lo + (hi - lo) * (u + T::one()) * half
                    })
                    .collect()
            }
        })
        .collect()
}

/// Apply a length-`dims[axis]` kernel along `axis` of a row-major tensor.
fn axis_transform(
    buf: &mut [(f64, f64)],
    dims: &[usize],
    axis: usize,
    kernel: fn(&[(f64, f64)], &mut [(f64, f64)]),
) {
    let m = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut line = vec![(0.0, 0.0); m];
    let mut out = vec![(0.0, 0.0); m];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * m * inner + i;
            for j in 0..m {
                line[j] = buf[base + j * inner];
            }
            kernel(&line, &mut out);
            for j in 0..m {
                buf[base + j * inner] = out[j];
            }
        }
    }
}

/// Normalized forward DFT: `out[k] = (1/M) Σ_j in[j] e^{−2πi jk/M}`.
fn dft_forward(input: &[(f64, f64)], out: &mut [(f64, f64)]) {
    let m = input.len();
    let w = -2.0 * std::f64::consts::PI / m as f64;
    for (k, slot) in out.iter_mut().enumerate() {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &(ar, ai)) in input.iter().enumerate() {
            let (s, c) = (w * (j * k % m) as f64).sin_cos();
            re += ar * c - ai * s;
            im += ar * s + ai * c;
        }
        *slot = (re / m as f64, im / m as f64);
    }
}

/// DCT-I at Gauss–Lobatto nodes, with endpoint folding so that the stored
/// coefficients satisfy `f(u_j) = Σ_k out[k]·T_k(u_j)` directly.
fn dct_forward(input: &[(f64, f64)], out: &mut [(f64, f64)]) {
    let m = input.len();
    let denom = (m - 1) as f64;
    for (k, slot) in out.iter_mut().enumerate() {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &(ar, ai)) in input.iter().enumerate() {
            let weight = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
            let c = (std::f64::consts::PI * (j * k) as f64 / denom).cos();
            re += weight * ar * c;
            im += weight * ai * c;
        }
        let scale = 2.0 / denom * if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
        *slot = (re * scale, im * scale);
    }
}

fn wavenumbers(m: usize) -> Vec<i32> {
    (0..m)
        .map(|j| if j <= m / 2 { j as i32 } else { j as i32 - m as i32 })
        .collect()
}

/// Keep the dominant modes: drop the smallest coefficients while the sum of
/// dropped magnitudes stays under the budget. Exact-zero and rounding-noise
/// modes go away; lattice reproduction stays within 1e-12.
fn sparsify(buf: &[(f64, f64)], dims: &[usize]) -> Vec<Mode> {
    let mut mags: Vec<f64> = buf.iter().map(|&(r, i)| (r * r + i * i).sqrt()).collect();
    let max = mags.iter().cloned().fold(0.0_f64, f64::max);
    let budget = SPARSIFY_BUDGET * max;
    let mut order: Vec<usize> = (0..buf.len()).collect();
    order.sort_by(|&a, &b| mags[a].partial_cmp(&mags[b]).unwrap());
    let mut dropped = 0.0;
    let mut keep = vec![true; buf.len()];
    for &i in &order {
        if dropped + mags[i] <= budget {
            dropped += mags[i];
            keep[i] = false;
        } else {
            break;
        }
    }
    mags.clear();

    let n = dims.len();
    let mut modes = Vec::new();
    let mut idx = [0u16; MAX_DIM];
    for (flat, &(re, im)) in buf.iter().enumerate() {
        if keep[flat] {
            let mut rem = flat;
            for a in (0..n).rev() {
                idx[a] = (rem % dims[a]) as u16;
                rem /= dims[a];
            }
            modes.push(Mode { idx, re, im });
        }
    }
    modes
}

/// Per-axis basis triples (value, d/dx, d²/dx²) as complex pairs.
fn basis_table<T: Real>(basis: &AxisBasis<T>, x: T) -> Vec<[(T, T); 3]> {
    match basis {
        AxisBasis::Fourier { wavenumbers } => wavenumbers
            .iter()
            .map(|&k| {
                let w = T::two_pi() * T::lit(k as f64);
                let th = w * x;
                let (s, c) = (th.sin(), th.cos());
                // e^{iθ}, iw·e^{iθ}, −w²·e^{iθ}
                [(c, s), (-w * s, w * c), (-w * w * c, -w * w * s)]
            })
            .collect(),
        AxisBasis::Chebyshev { count, lo, hi } => {
            let m = *count;
            let scale = T::lit(2.0) / (*hi - *lo);
            let u = (x - *lo) * scale - T::one();
            // T, T', T'' by recurrence in u, then chain through u(x).
            let mut t = vec![T::zero(); m];
            let mut d = vec![T::zero(); m];
            let mut dd = vec![T::zero(); m];
            t[0] = T::one();
            if m > 1 {
                t[1] = u;
                d[1] = T::one();
            }
            let two = T::lit(2.0);
            for k in 2..m {
                t[k] = two * u * t[k - 1] - t[k - 2];
                d[k] = two * t[k - 1] + two * u * d[k - 1] - d[k - 2];
                dd[k] = two * two * d[k - 1] + two * u * dd[k - 1] - dd[k - 2];
            }
            (0..m)
                .map(|k| {
                    [
                        (t[k], T::zero()),
                        (d[k] * scale, T::zero()),
                        (dd[k] * scale * scale, T::zero()),
                    ]
                })
                .collect()
        }
    }
}

fn eval_modes<T: Real>(bases: &[AxisBasis<T>], modes: &[Mode], x: &[T]) -> Jet2<T> {
    let n = x.len();
    let tables: Vec<Vec<[(T, T); 3]>> =
        (0..n).map(|a| basis_table(&bases[a], x[a])).collect();

    let mut value = T::zero();
    let mut grad = [T::zero(); MAX_DIM];
    let mut hess = [T::zero(); MAX_DIM * (MAX_DIM + 1) / 2];

    let cmul = |a: (T, T), b: (T, T)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);

    for mode in modes {
        let coeff = (T::lit(mode.re), T::lit(mode.im));
        let mut vals = [(T::zero(), T::zero()); MAX_DIM];
        for a in 0..n {
            vals[a] = tables[a][mode.idx[a] as usize][0];
        }
        // Product of all axis values.
        let mut prod = coeff;
        for v in vals.iter().take(n) {
            prod = cmul(prod, *v);
        }
        value = value + prod.0;

        for b in 0..n {
            // Replace axis b by its first derivative.
            let mut p = coeff;
            for a in 0..n {
                let f = if a == b { tables[a][mode.idx[a] as usize][1] } else { vals[a] };
                p = cmul(p, f);
            }
            grad[b] = grad[b] + p.0;
            for c in b..n {
                let mut q = coeff;
                for a in 0..n {
                    let f = if a == b && a == c {
                        tables[a][mode.idx[a] as usize][2]
                    } else if a == b || a == c {
                        tables[a][mode.idx[a] as usize][1]
                    } else {
                        vals[a]
                    };
                    q = cmul(q, f);
                }
                hess[sym_index(n, b, c)] = hess[sym_index(n, b, c)] + q.0;
            }
        }
    }

    let mut jet = Jet2::constant(n, value);
    for b in 0..n {
        jet.set_grad(b, grad[b]);
        for c in b..n {
            jet.set_hess(b, c, hess[sym_index(n, b, c)]);
        }
    }
    jet
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::{fd_gradient_refined, fd_hessian_refined};

    fn torus(n: usize) -> DomainSpec<f64> {
        DomainSpec::torus(n, &vec![8; n]).unwrap()
    }

    #[test]
    fn constant_samples_lift_to_constant_field() {
        let dom = torus(3);
        let dims = [4, 4, 4];
        let s = sample_lattice(&dom, &dims, |_| 2.75).unwrap();
        let f = spectral_lift(&dom, &s).unwrap();
        let j = f.eval(&[0.123, 0.456, 0.789]);
        assert_eq!(j.value(), 2.75);
        for i in 0..3 {
            assert_eq!(j.grad(i), 0.0);
            for k in i..3 {
                assert_eq!(j.hess(i, k), 0.0);
            }
        }
    }

    #[test]
    fn bandlimited_sample_reconstructs_exactly() {
        // sin(2πx₁) sampled on 16 points: gradient at 0 is 2π.
        let dom = DomainSpec::torus(3, &[16, 4, 4]).unwrap();
        let dims = [16, 4, 4];
        let s = sample_lattice(&dom, &dims, |x: &[f64]| (2.0 * std::f64::consts::PI * x[0]).sin()).unwrap();
        let f = spectral_lift(&dom, &s).unwrap();
        let j = f.eval(&[0.0, 0.3, 0.6]);
        assert!((j.grad(0) - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        assert!(j.value().abs() < 1e-12);
    }

    #[test]
    fn lattice_points_are_reproduced() {
        let dom = DomainSpec::torus(3, &[8, 8, 8]).unwrap();
        let dims = [8, 8, 8];
        let g = |x: &[f64]| {
            (2.0 * std::f64::consts::PI * x[0]).sin().exp()
                + 0.3 * (2.0 * std::f64::consts::PI * (x[1] + 2.0 * x[2])).cos()
        };
        let s = sample_lattice(&dom, &dims, g).unwrap();
        let f = spectral_lift(&dom, &s).unwrap();
        for (p, v) in lattice_points(&dom, &dims).unwrap().iter().zip(&s.data) {
            assert!((f.value(p) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_function_is_spectrally_accurate() {
        // exp(sin(2πx₁)) on 64 points: pointwise error below 1e-9.
        let dom = DomainSpec::torus(3, &[64, 4, 4]).unwrap();
        let dims = [64, 4, 4];
        let g = |x: &[f64]| (2.0 * std::f64::consts::PI * x[0]).sin().exp();
        let s = sample_lattice(&dom, &dims, g).unwrap();
        let f = spectral_lift(&dom, &s).unwrap();
        for k in 0..37 {
            let x = [k as f64 / 37.0, 0.2, 0.9];
            assert!((f.value(&x) - g(&x)).abs() < 1e-9, "x = {:?}", x);
        }
    }

    #[test]
    fn jets_are_exact_derivatives_of_the_interpolant() {
        let dom = DomainSpec::torus(3, &[16, 8, 4]).unwrap();
        let dims = [16, 8, 4];
        let g = |x: &[f64]| {
            (2.0 * std::f64::consts::PI * x[0]).sin() * (0.5 + (2.0 * std::f64::consts::PI * x[1]).cos())
        };
        let s = sample_lattice(&dom, &dims, g).unwrap();
        let f = spectral_lift(&dom, &s).unwrap();
        let x = [0.37, 0.12, 0.9];
        let jet = f.eval(&x);
        let vm = |y: &[f64]| f.value(y);
        let fg = fd_gradient_refined(&vm, &x, 1e-3);
        let fh = fd_hessian_refined(&vm, &x, 1e-3);
        for i in 0..3 {
            assert!((jet.grad(i) - fg[i]).abs() < 1e-8, "grad {i}");
            for j in i..3 {
                assert!((jet.hess(i, j) - fh.get(i, j)).abs() < 1e-6, "hess {i}{j}");
            }
        }
    }

    #[test]
    fn rejects_box_axes() {
        let dom = DomainSpec::mixed(3, 2, &[(0.0, 1.0)], &[4, 4, 4]).unwrap();
        let s = LatticeSamples { dims: vec![4, 4, 4], data: vec![0.0; 64] };
        assert!(matches!(
            spectral_lift(&dom, &s),
            Err(CoreError::UnsupportedDomain(_))
        ));
    }

    #[test]
    fn mixed_lift_handles_box_axis() {
        let dom = DomainSpec::mixed(3, 2, &[(-0.25, 1.25)], &[8, 8, 8]).unwrap();
        let dims = [12, 8, 8];
        let g = |x: &[f64]| (x[0] * 1.3).sin() + 0.25 * (2.0 * std::f64::consts::PI * x[1]).cos();
        let s = sample_lattice(&dom, &dims, g).unwrap();
        let f = mixed_lift(&dom, &s).unwrap();
        for k in 0..23 {
            let x = [-0.2 + 1.4 * k as f64 / 22.0, 0.31, 0.77];
            assert!((f.value(&x) - g(&x)).abs() < 1e-9, "x = {:?}", x);
        }
        // Jets of the interpolant agree with finite differences of itself.
        let x = [0.4, 0.1, 0.2];
        let jet = f.eval(&x);
        let vm = |y: &[f64]| f.value(y);
        let fg = fd_gradient_refined(&vm, &x, 1e-3);
        assert!((jet.grad(0) - fg[0]).abs() < 1e-8);
        assert!((jet.grad(1) - fg[1]).abs() < 1e-8);
    }
}
