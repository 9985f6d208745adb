//! Well-adapted loop families: finite trigonometric polynomials in the
//! periodic parameter `t` whose coefficients are scalar fields over the
//! domain. On this representation the integral-loop operator and loop means
//! are exact — no quadrature enters anywhere.

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::jet::Jet2;

use crate::num::Real;

/// One target component of a loop family:
/// `γ_c(x, t) = a0(x) + Σ_m ac[m−1](x)·cos(2πmt) + as[m−1](x)·sin(2πmt)`.
#[derive(Clone)]
pub struct LoopComponent<T> {
    pub a0: ScalarField<T>,
    pub ac: Vec<ScalarField<T>>,
    pub as_: Vec<ScalarField<T>>,
}

impl<T: Real> LoopComponent<T> {
    pub fn zero(n: usize, modes: usize) -> Self {
        Self {
            a0: ScalarField::zero(n),
            ac: (0..modes).map(|_| ScalarField::zero(n)).collect(),
            as_: (0..modes).map(|_| ScalarField::zero(n)).collect(),
        }
    }
}

/// Evaluation of a loop family at `(x, t)`: per-component spatial 2-jets of
/// `x ↦ γ_x(t)` (t held fixed) and the derivative in the periodic parameter.
#[derive(Clone, Debug)]
pub struct LoopEval<T> {
    /// Spatial 2-jet of each component at fixed `t`.
    pub x_jets: Vec<Jet2<T>>,
    /// `γ̇_x(t)`, derivative with respect to the periodic parameter.
    pub t_deriv: Vec<T>,
}

impl<T: Real> LoopEval<T> {
    pub fn values(&self) -> Vec<T> {
        self.x_jets.iter().map(|j| j.value()).collect()
    }
}

/// A well-adapted family of loops `{γ_x}` valued in ℝ^m: exactly 1-periodic
/// in `t`, with mean over `t` equal to the constant coefficient.
#[derive(Clone)]
pub struct TrigLoopFamily<T> {
    n: usize,
    modes: usize,
    comps: Vec<LoopComponent<T>>,
}

impl<T: Real> TrigLoopFamily<T> {
    pub fn new(n: usize, comps: Vec<LoopComponent<T>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(CoreError::InvalidInput("loop family needs at least one component".into()));
        }
        let modes = comps[0].ac.len();
        for c in &comps {
            if c.ac.len() != modes || c.as_.len() != modes {
                return Err(CoreError::InvalidInput("ragged mode counts across components".into()));
            }
            if c.a0.dim() != n
                || c.ac.iter().any(|f| f.dim() != n)
                || c.as_.iter().any(|f| f.dim() != n)
            {
                return Err(CoreError::InvalidInput("coefficient field dimension mismatch".into()));
            }
        }
        Ok(Self { n, modes, comps })
    }

    /// The zero family (m components, no oscillation).
    pub fn zero(n: usize, m_out: usize, modes: usize) -> Self {
        Self {
            n,
            modes,
            comps: (0..m_out).map(|_| LoopComponent::zero(n, modes)).collect(),
        }
    }

    #[inline]
    pub fn spatial_dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.comps.len()
    }

    #[inline]
    pub fn modes(&self) -> usize {
        self.modes
    }

    #[inline]
    pub fn components(&self) -> &[LoopComponent<T>] {
        &self.comps
    }

    /// Loop mean `γ̄_x = ∫₀¹ γ_x(s) ds`, exactly the constant coefficient.
    pub fn mean(&self, x: &[T]) -> Vec<T> {
        self.comps.iter().map(|c| c.a0.value(x)).collect()
    }

    /// Spatial 2-jets of the mean (for differentiated means in predictions).
    pub fn mean_jets(&self, x: &[T]) -> Vec<Jet2<T>> {
        self.comps.iter().map(|c| c.a0.eval(x)).collect()
    }

    /// Evaluate the family at `(x, t)`.
    pub fn eval(&self, x: &[T], t: T) -> LoopEval<T> {
        let two_pi = T::two_pi();
        let mut x_jets = Vec::with_capacity(self.comps.len());
        let mut t_deriv = Vec::with_capacity(self.comps.len());
        for c in &self.comps {
            let mut jet = c.a0.eval(x);
            let mut dt = T::zero();
            for m in 1..=self.modes {
                let w = two_pi * T::of_usize(m);
                let (s, co) = ((w * t).sin(), (w * t).cos());
                let ac = c.ac[m - 1].eval(x);
                let as_ = c.as_[m - 1].eval(x);
                jet = jet + ac.scale(co) + as_.scale(s);
                dt = dt + w * (as_.value() * co - ac.value() * s);
            }
            x_jets.push(jet);
            t_deriv.push(dt);
        }
        LoopEval { x_jets, t_deriv }
    }

    /// The integral-loop operator: `Int(γ)(x, t) = ∫₀ᵗ (γ_x(s) − γ̄_x) ds`.
    ///
    /// Mode m coefficients divide by 2πm and swap cos ↔ sin with a sign; a
    /// constant term `Σ_m b_m/(2πm)` appears so that `Int(γ)(x, 0) = 0`.
    /// The output is again a trigonometric polynomial, exactly 1-periodic.
    pub fn int_loop(&self) -> Self {
        let two_pi = T::two_pi();
        let comps = self
            .comps
            .iter()
            .map(|c| {
                let mut a0 = ScalarField::zero(self.n);
                let mut ac = Vec::with_capacity(self.modes);
                let mut as_ = Vec::with_capacity(self.modes);
                for m in 1..=self.modes {
                    let inv_w = T::one() / (two_pi * T::of_usize(m));
                    a0 = a0.add(&c.as_[m - 1].scale(inv_w));
                    ac.push(c.as_[m - 1].scale(-inv_w));
                    as_.push(c.ac[m - 1].scale(inv_w));
                }
                LoopComponent { a0, ac, as_ }
            })
            .collect();
        Self { n: self.n, modes: self.modes, comps }
    }
}

/// Loop mean as a free function, mirroring the loop-operator vocabulary.
pub fn loop_mean<T: Real>(family: &TrigLoopFamily<T>, x: &[T]) -> Vec<T> {
    family.mean(x)
}

/// `Int(γ)` as a free function.
pub fn int_loop<T: Real>(family: &TrigLoopFamily<T>) -> TrigLoopFamily<T> {
    family.int_loop()
}

/// Evaluate a loop family at `(x, t)`, returning values, spatial jets, and
/// the t-derivative.
pub fn eval_loop_jet<T: Real>(family: &TrigLoopFamily<T>, x: &[T], t: T) -> LoopEval<T> {
    family.eval(x, t)
}

/// Convenience builder: single-mode cosine loop `amp(x)·cos(2πt)` in each
/// listed component with per-component sign.
pub fn cosine_loop<T: Real>(
    n: usize,
    signs: &[T],
    amp: &ScalarField<T>,
) -> Result<TrigLoopFamily<T>> {
    let comps = signs
        .iter()
        .map(|&s| LoopComponent {
            a0: ScalarField::zero(n),
            ac: vec![amp.scale(s)],
            as_: vec![ScalarField::zero(n)],
        })
        .collect();
    TrigLoopFamily::new(n, comps)
}

/// Composite Simpson quadrature of a scalar map over `[0, upper]`; the
/// independent oracle loop integrals are checked against.
pub fn simpson<T: Real>(f: impl Fn(T) -> T, upper: T, panels: usize) -> T {
    let m = panels.max(1) * 2;
    let h = upper / T::of_usize(m);
    let mut acc = f(T::zero()) + f(upper);
    for k in 1..m {
        let w = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        acc = acc + w * f(T::of_usize(k) * h);
    }
    acc * h / T::lit(3.0)
}

#[allow(clippy::needless_range_loop)]
#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_len;

    fn unit_cosine(n: usize) -> TrigLoopFamily<f64> {
        cosine_loop(n, &[1.0], &ScalarField::constant(n, 1.0)).unwrap()
    }

    #[test]
    fn int_of_constant_vanishes() {
        let mut comp = LoopComponent::zero(3, 1);
        comp.a0 = ScalarField::constant(3, 2.5);
        let fam = TrigLoopFamily::new(3, vec![comp]).unwrap();
        let int = fam.int_loop();
        for &t in &[0.0, 0.3, 0.77] {
            let e = int.eval(&[0.1, 0.2, 0.3], t);
            assert_eq!(e.x_jets[0].value(), 0.0);
        }
    }

    #[test]
    fn int_of_cosine_is_scaled_sine() {
        let fam = unit_cosine(3);
        let int = fam.int_loop();
        let x = [0.0, 0.0, 0.0];
        for &t in &[0.0, 0.125, 0.4, 0.9] {
            let got = int.eval(&x, t).x_jets[0].value();
            let want = (2.0 * std::f64::consts::PI * t).sin() / (2.0 * std::f64::consts::PI);
            assert!((got - want).abs() < 1e-15, "t={t}");
        }
    }

    /// Int²(cos 2πt) = (1 − cos 2πt)/(4π²): checked symbolically by applying
    /// the operator twice and against Simpson quadrature of the defining
    /// integral at a few abscissae.
    #[test]
    fn double_integral_of_cosine() {
        let fam = unit_cosine(3);
        let int2 = fam.int_loop().int_loop();
        let x = [0.3, 0.1, 0.9];
        let pi = std::f64::consts::PI;
        for &t in &[0.0, 0.25, 0.5] {
            let got = int2.eval(&x, t).x_jets[0].value();
            let want = (1.0 - (2.0 * pi * t).cos()) / (4.0 * pi * pi);
            assert!((got - want).abs() < 1e-15, "symbolic, t={t}");

            // Quadrature oracle: Int²(γ)(t) = ∫₀ᵗ (Int(γ)(s) − mean Int(γ)) ds,
            // with Int(γ)(s) = sin(2πs)/2π whose mean is 0.
            let quad = simpson(|s: f64| (2.0 * pi * s).sin() / (2.0 * pi), t, 400);
            assert!((got - quad).abs() < 1e-10, "quadrature, t={t}");
        }
    }

    #[test]
    fn mean_of_pure_cosine_is_zero_and_constant_is_itself() {
        let x = [0.2, 0.4, 0.6];
        assert_eq!(unit_cosine(3).mean(&x), vec![0.0]);
        let mut comp = LoopComponent::zero(3, 1);
        comp.a0 = ScalarField::constant(3, -3.25);
        let fam = TrigLoopFamily::new(3, vec![comp]).unwrap();
        assert_eq!(fam.mean(&x), vec![-3.25]);
    }

    #[test]
    fn mean_field_evaluates_pointwise() {
        // a₀(x) = 2 + sin(2πx₁) equals 3 at x₁ = 0.25.
        let mut comp = LoopComponent::zero(3, 2);
        comp.a0 = ScalarField::wave(3, 0, 1, 1.0, 0.0, true).add_const(2.0);
        let fam = TrigLoopFamily::new(3, vec![comp]).unwrap();
        let m: Vec<f64> = fam.mean(&[0.25, 0.0, 0.0]);
        assert!((m[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn constant_coefficients_have_zero_spatial_jets() {
        let fam = unit_cosine(3);
        let e = fam.eval(&[0.4, 0.5, 0.6], 0.3);
        let j = e.x_jets[0];
        for i in 0..3 {
            assert_eq!(j.grad(i), 0.0);
        }
        for k in 0..sym_len(3) {
            let (i, jj) = (0..3)
                .flat_map(|a| (a..3).map(move |b| (a, b)))
                .nth(k)
                .unwrap();
            assert_eq!(j.hess(i, jj), 0.0);
        }
    }

    #[test]
    fn spatially_varying_amplitude_differentiates_through() {
        // γ_x(t) = x₁²·cos(2πt): ∂₁γ = 2x₁·cos(2πt).
        let amp = {
            let c = ScalarField::<f64>::coordinate(3, 0);
            c.mul(&c)
        };
        let fam = cosine_loop(3, &[1.0], &amp).unwrap();
        let (x1, t) = (0.7, 0.19);
        let e = fam.eval(&[x1, 0.2, 0.3], t);
        let c = (2.0 * std::f64::consts::PI * t).cos();
        assert!((e.x_jets[0].grad(0) - 2.0 * x1 * c).abs() < 1e-14);
        assert!((e.x_jets[0].hess(0, 0) - 2.0 * c).abs() < 1e-14);
    }

    #[test]
    fn t_derivative_of_unit_cosine() {
        let fam = unit_cosine(3);
        let e = fam.eval(&[0.0, 0.0, 0.0], 0.25);
        // d/dt cos(2πt) at t = 1/4 is −2π.
        assert!((e.t_deriv[0] + 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn int_properties_hold() {
        // Mixed family with both cos and sin content and varying coefficients.
        let n = 3;
        let comp = LoopComponent {
            a0: ScalarField::wave(n, 1, 1, 0.3, 0.2, true),
            ac: vec![
                ScalarField::wave(n, 0, 1, 1.0, 0.0, false).add_const(0.5),
                ScalarField::constant(n, 0.25),
            ],
            as_: vec![
                ScalarField::wave(n, 2, 1, 0.7, 0.1, true),
                ScalarField::constant(n, -0.4),
            ],
        };
        let fam = TrigLoopFamily::new(n, vec![comp]).unwrap();
        let int = fam.int_loop();
        let xs: [[f64; 3]; 2] = [[0.11, 0.52, 0.83], [0.9, 0.01, 0.33]];
        for x in &xs {
            // Int(γ)(x, 0) = 0 exactly up to rounding in the coefficient sums.
            let at0 = int.eval(x, 0.0).x_jets[0].value();
            assert!(at0.abs() < 1e-15, "Int at t=0: {at0}");

            // d/dt Int(γ) = γ − γ̄: compare the t-derivative of Int against
            // the family minus its mean at assorted t.
            for &t in &[0.17, 0.5, 0.81] {
                let lhs = int.eval(x, t).t_deriv[0];
                let rhs = fam.eval(x, t).x_jets[0].value() - fam.mean(x)[0];
                assert!((lhs - rhs).abs() < 1e-13);
            }

            // 1-periodicity in t.
            for &t in &[0.0, 0.3, 0.71] {
                let a = int.eval(x, t).x_jets[0].value();
                let b = int.eval(x, t + 1.0).x_jets[0].value();
                assert!((a - b).abs() < 1e-14);
            }

            // Mean of Int(γ) equals its constant term: mode-wise cancellation.
            let const_term = int.comps[0].a0.value(x);
            let mean = int.mean(x)[0];
            assert_eq!(const_term, mean);
            let quad = simpson(
                |t: f64| int.eval(x, t).x_jets[0].value(),
                1.0,
                200,
            );
            assert!((quad - const_term).abs() < 1e-12);
        }
    }
}
