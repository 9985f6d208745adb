//! Jet coordinates, relations semilinear in the first variable, their
//! ε-thickenings, and verification of the loop conditions that make the
//! mixed corrugation solve them.
//!
//! A relation is the zero set of `L(σ₀)·σ²₁₁ + R(σ₀, σ̌, σ¹₁, σ²₁*)` over
//! 2-jets σ of maps into ℝ^m; σ̌ is σ with the base point, the first
//! derivative along axis 0, and all second derivatives touching axis 0
//! removed. Axis indices are 0-based throughout: axis 0 is the distinguished
//! coordinate the relation is semilinear in (and the corrugation axis).

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::jet::Jet2;
use crate::linalg::{sym_index, sym_len};
use crate::loops::TrigLoopFamily;
use crate::num::Real;

/// Full 2-jet of an m-component map at a base point: σ = (σ₀, σ⁰, σ¹, σ²).
#[derive(Clone, Debug)]
pub struct SigmaJet<T> {
    base: Vec<T>,
    value: Vec<T>,
    /// `first[i]` is the m-vector σ¹_i.
    first: Vec<Vec<T>>,
    /// `second[sym_index(n, i, j)]` is the m-vector σ²_{ij}, stored once per
    /// unordered pair.
    second: Vec<Vec<T>>,
}

impl<T: Real> SigmaJet<T> {
    pub fn zero(x: &[T], m: usize) -> Self {
        let n = x.len();
        Self {
            base: x.to_vec(),
            value: vec![T::zero(); m],
            first: vec![vec![T::zero(); m]; n],
            second: vec![vec![T::zero(); m]; sym_len(n)],
        }
    }

    /// Collect the 2-jets of the components of a map at `x`.
    pub fn from_jets(x: &[T], jets: &[Jet2<T>]) -> Self {
        let n = x.len();
        let m = jets.len();
        let mut s = Self::zero(x, m);
        for (c, jet) in jets.iter().enumerate() {
            s.value[c] = jet.value();
            for i in 0..n {
                s.first[i][c] = jet.grad(i);
                for j in i..n {
                    s.second[sym_index(n, i, j)][c] = jet.hess(i, j);
                }
            }
        }
        s
    }

    pub fn from_fields(fields: &[ScalarField<T>], x: &[T]) -> Self {
        let jets: Vec<Jet2<T>> = fields.iter().map(|f| f.eval(x)).collect();
        Self::from_jets(x, &jets)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.base.len()
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.value.len()
    }

    #[inline]
    pub fn base(&self) -> &[T] {
        &self.base
    }

    #[inline]
    pub fn value(&self) -> &[T] {
        &self.value
    }

    #[inline]
    pub fn first(&self, i: usize) -> &[T] {
        &self.first[i]
    }

    #[inline]
    pub fn second(&self, i: usize, j: usize) -> &[T] {
        &self.second[sym_index(self.dim(), i, j)]
    }

    pub fn set_base(&mut self, x: &[T]) {
        self.base = x.to_vec();
    }

    pub fn set_value(&mut self, c: usize, v: T) {
        self.value[c] = v;
    }

    pub fn set_first(&mut self, i: usize, c: usize, v: T) {
        self.first[i][c] = v;
    }

    pub fn set_second(&mut self, i: usize, j: usize, c: usize, v: T) {
        let idx = sym_index(self.dim(), i, j);
        self.second[idx][c] = v;
    }

    /// σ̌: drop σ₀, σ¹₀ and every σ²_{0j}.
    pub fn checked(&self) -> CheckedSigma<T> {
        let n = self.dim();
        CheckedSigma {
            n,
            value: self.value.clone(),
            first_rest: (1..n).map(|i| self.first[i].clone()).collect(),
            second_rest: (1..n)
                .flat_map(|i| (i..n).map(move |j| (i, j)))
                .map(|(i, j)| self.second[sym_index(n, i, j)].clone())
                .collect(),
        }
    }

    /// The tuple σ²₀* = (σ²₀₁, …, σ²₀,ₙ₋₁).
    pub fn second_row0(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        (1..n).map(|j| self.second[sym_index(n, 0, j)].clone()).collect()
    }
}

/// σ̌: the reduced jet handed to `R`. Contains σ⁰, σ¹_i for i ≥ 1, and
/// σ²_{ij} for 1 ≤ i ≤ j.
#[derive(Clone, Debug)]
pub struct CheckedSigma<T> {
    n: usize,
    value: Vec<T>,
    first_rest: Vec<Vec<T>>,
    second_rest: Vec<Vec<T>>,
}

impl<T: Real> CheckedSigma<T> {
    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            n,
            value: vec![T::zero(); m],
            first_rest: vec![vec![T::zero(); m]; n - 1],
            second_rest: vec![vec![T::zero(); m]; sym_len(n - 1)],
        }
    }

    #[inline]
    pub fn value(&self) -> &[T] {
        &self.value
    }

    /// σ¹_i for i ≥ 1.
    #[inline]
    pub fn first(&self, i: usize) -> &[T] {
        debug_assert!(i >= 1);
        &self.first_rest[i - 1]
    }

    /// σ²_{ij} for i, j ≥ 1.
    #[inline]
    pub fn second(&self, i: usize, j: usize) -> &[T] {
        debug_assert!(i >= 1 && j >= 1);
        &self.second_rest[sym_index(self.n - 1, i - 1, j - 1)]
    }
}

/// The scalar map `R(σ₀, σ̌, σ¹₁, σ²₁*)`.
pub type RFn<T> = dyn Fn(&[T], &CheckedSigma<T>, &[T], &[Vec<T>]) -> T + Send + Sync;

/// What the feasibility criterion knows about a relation's shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationKind {
    /// The two-component scalar-curvature relations: residual affine in
    /// σ²₁₁ with negative-definite slope and convex level structure, so the
    /// convex-hull criterion reduces to a sign test on the residual.
    Curvature,
    /// Anything else: no feasibility criterion is implemented.
    Custom,
}

/// A partial differential relation semilinear in axis 0, together with the
/// width of its thickening.
#[derive(Clone)]
pub struct SemilinearRelation<T> {
    /// Covector fields: `l[c]` is the coefficient of σ²₁₁ component c.
    pub l: Vec<ScalarField<T>>,
    r: Arc<RFn<T>>,
    pub epsilon: T,
    kind: RelationKind,
}

impl<T: Real> SemilinearRelation<T> {
    pub fn new(
        l: Vec<ScalarField<T>>,
        r: Arc<RFn<T>>,
        epsilon: T,
        kind: RelationKind,
    ) -> Result<Self> {
        if l.is_empty() {
            return Err(CoreError::InvalidInput("relation needs at least one L component".into()));
        }
        if epsilon <= T::zero() {
            return Err(CoreError::InvalidInput("thickening width must be positive".into()));
        }
        Ok(Self { l, r, epsilon, kind })
    }

    pub fn arity(&self) -> usize {
        self.l.len()
    }

    pub fn kind(&self) -> RelationKind {
        self.kind
    }

    /// `L(x)` as values.
    pub fn l_values(&self, x: &[T]) -> Vec<T> {
        self.l.iter().map(|f| f.value(x)).collect()
    }

    /// `∂₁L(x)` (axis-0 derivative of each component).
    pub fn l_d1_values(&self, x: &[T]) -> Vec<T> {
        self.l.iter().map(|f| f.eval(x).grad(0)).collect()
    }

    pub fn r_eval(&self, x: &[T], checked: &CheckedSigma<T>, s11: &[T], s1star: &[Vec<T>]) -> T {
        (self.r)(x, checked, s11, s1star)
    }
}

/// `L(σ₀)·σ²₁₁ + R(σ₀, σ̌, σ¹₁, σ²₁*)`.
pub fn residual<T: Real>(rel: &SemilinearRelation<T>, sigma: &SigmaJet<T>) -> T {
    let x = sigma.base();
    let lv = rel.l_values(x);
    let s2_11 = sigma.second(0, 0);
    let mut out = T::zero();
    for c in 0..rel.arity() {
        out = out + lv[c] * s2_11[c];
    }
    out + rel.r_eval(x, &sigma.checked(), sigma.first(0), &sigma.second_row0())
}

/// Strict membership in the open thickening: `|residual| < ε`.
pub fn in_thickening<T: Real>(rel: &SemilinearRelation<T>, sigma: &SigmaJet<T>) -> bool {
    residual(rel, sigma).abs() < rel.epsilon
}

/// Convex-hull feasibility for the curvature relations: the hull of the
/// admissible loop values contains the origin exactly when the residual at
/// the base jet is nonnegative (the level-set criterion; `k̃(x)+ε̄ ≥ 0` on
/// zero jets). Other relation shapes are not covered.
pub fn hull_feasibility<T: Real>(rel: &SemilinearRelation<T>, sigma: &SigmaJet<T>) -> Result<bool> {
    match rel.kind {
        RelationKind::Curvature => Ok(residual(rel, sigma) >= T::zero()),
        RelationKind::Custom => Err(CoreError::NotImplemented(
            "hull feasibility is only implemented for the curvature relations".into(),
        )),
    }
}

/// Maxima of the loop-condition residuals over samples and the t-grid.
#[derive(Clone, Copy, Debug)]
pub struct ConditionReport<T> {
    /// max |γ̄_x| (exact trigonometric means).
    pub l1_gamma: T,
    /// max |δ̄_x|.
    pub l1_delta: T,
    /// max |L(x)·γ_x(t)|.
    pub l2_max: T,
    /// max |∂₁L(x)·γ_x(t)|.
    pub l2_dl_max: T,
    /// max over (x, t) of the shifted-relation residual.
    pub l3_max: T,
}

impl<T: Real> ConditionReport<T> {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.l1_gamma, self.l1_delta, self.l2_max, self.l2_dl_max, self.l3_max
        )
    }

    pub fn max_residual(&self) -> T {
        self.l1_gamma
            .max(self.l1_delta)
            .max(self.l2_max)
            .max(self.l2_dl_max)
            .max(self.l3_max)
    }
}

/// Check the three loop conditions for `(γ, δ)` against a relation and a base
/// map `f`:
/// - L1: the loop means vanish (computed exactly from the coefficients);
/// - L2: `L(x)·γ_x(t) = ∂₁L(x)·γ_x(t) = 0`;
/// - L3: the relation holds along the loop shifts of the jet of `f`.
pub fn verify_loop_conditions<T: Real>(
    rel: &SemilinearRelation<T>,
    f: &[ScalarField<T>],
    gamma: &TrigLoopFamily<T>,
    delta: &TrigLoopFamily<T>,
    sample_points: &[Vec<T>],
    t_grid: &[T],
) -> ConditionReport<T> {
    let m = rel.arity();
    let mut rep = ConditionReport {
        l1_gamma: T::zero(),
        l1_delta: T::zero(),
        l2_max: T::zero(),
        l2_dl_max: T::zero(),
        l3_max: T::zero(),
    };
    for x in sample_points {
        for c in 0..m {
            rep.l1_gamma = rep.l1_gamma.max(gamma.mean(x)[c].abs());
            rep.l1_delta = rep.l1_delta.max(delta.mean(x)[c].abs());
        }
        let lv = rel.l_values(x);
        let dlv = rel.l_d1_values(x);
        let sigma = SigmaJet::from_fields(f, x);
        let checked = sigma.checked();
        let n = sigma.dim();
        for &t in t_grid {
            let ge = gamma.eval(x, t);
            let de = delta.eval(x, t);
            let mut l_dot = T::zero();
            let mut dl_dot = T::zero();
            for c in 0..m {
                l_dot = l_dot + lv[c] * ge.x_jets[c].value();
                dl_dot = dl_dot + dlv[c] * ge.x_jets[c].value();
            }
            rep.l2_max = rep.l2_max.max(l_dot.abs());
            rep.l2_dl_max = rep.l2_dl_max.max(dl_dot.abs());

            // L3 with shifted arguments: σ¹₁ + γ_x(t), σ²₁* + ∂_*γ_x(t),
            // σ²₁₁ + δ_x(t) under L.
            let mut lhs = T::zero();
            for c in 0..m {
                lhs = lhs + lv[c] * (sigma.second(0, 0)[c] + de.x_jets[c].value());
            }
            let s11: Vec<T> = (0..m)
                .map(|c| sigma.first(0)[c] + ge.x_jets[c].value())
                .collect();
            let s1star: Vec<Vec<T>> = (1..n)
                .map(|j| {
                    (0..m)
                        .map(|c| sigma.second(0, j)[c] + ge.x_jets[c].grad(j))
                        .collect()
                })
                .collect();
            let r = rel.r_eval(x, &checked, &s11, &s1star);
            rep.l3_max = rep.l3_max.max((lhs + r).abs());
        }
    }
    rep
}

/// Uniform t-grid of the given size on [0, 1).
pub fn unit_t_grid<T: Real>(count: usize) -> Vec<T> {
    (0..count).map(|k| T::of_usize(k) / T::of_usize(count)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trivial_relation(m: usize, n: usize, eps: f64) -> SemilinearRelation<f64> {
        SemilinearRelation::new(
            (0..m).map(|_| ScalarField::zero(n)).collect(),
            Arc::new(|_x: &[f64], _c: &CheckedSigma<f64>, _v: &[f64], _w: &[Vec<f64>]| 0.0),
            eps,
            RelationKind::Custom,
        )
        .unwrap()
    }

    #[test]
    fn zero_relation_has_zero_residual() {
        let rel = trivial_relation(2, 3, 0.5);
        let mut sigma = SigmaJet::zero(&[0.1, 0.2, 0.3], 2);
        sigma.set_second(0, 0, 0, 3.7);
        sigma.set_first(1, 1, -2.0);
        assert_eq!(residual(&rel, &sigma), 0.0);
        assert!(in_thickening(&rel, &sigma));
    }

    #[test]
    fn thickening_is_strict() {
        let n = 3;
        let rel = SemilinearRelation::new(
            vec![ScalarField::zero(n)],
            Arc::new(|_x: &[f64], _c: &CheckedSigma<f64>, _v: &[f64], _w: &[Vec<f64>]| 0.25),
            0.25,
            RelationKind::Custom,
        )
        .unwrap();
        let sigma = SigmaJet::zero(&[0.0, 0.0, 0.0], 1);
        assert_eq!(residual(&rel, &sigma), 0.25);
        // Residual equals ε exactly: outside the open interval.
        assert!(!in_thickening(&rel, &sigma));
    }

    #[test]
    fn residual_is_affine_in_s11_with_slope_l() {
        let n = 3;
        let rel = SemilinearRelation::new(
            vec![
                ScalarField::constant(n, -2.0),
                ScalarField::constant(n, -2.0),
            ],
            Arc::new(|_x: &[f64], c: &CheckedSigma<f64>, v: &[f64], _w: &[Vec<f64>]| {
                // Some nonlinear junk that must not see σ²₁₁.
                v[0] * v[0] - v[1] + c.value()[0].exp()
            }),
            0.1,
            RelationKind::Custom,
        )
        .unwrap();
        let x = [0.3, 0.1, 0.9];
        let mut sigma = SigmaJet::zero(&x, 2);
        sigma.set_first(0, 0, 0.7);
        let base = residual(&rel, &sigma);
        let w = [1.3, -0.4];
        sigma.set_second(0, 0, 0, w[0]);
        sigma.set_second(0, 0, 1, w[1]);
        let shifted = residual(&rel, &sigma);
        // Difference is exactly L·w.
        assert_eq!(shifted - base, -2.0 * w[0] + -2.0 * w[1]);
    }

    #[test]
    fn custom_relations_refuse_feasibility() {
        let rel = trivial_relation(1, 3, 0.5);
        let sigma = SigmaJet::zero(&[0.0, 0.0, 0.0], 1);
        assert!(matches!(
            hull_feasibility(&rel, &sigma),
            Err(CoreError::NotImplemented(_))
        ));
    }

    #[test]
    fn zero_loops_and_compensating_r_satisfy_all_conditions() {
        // With γ = δ = 0 and R ≡ −L·σ²₁₁(f), every condition residual is 0.
        let n = 3;
        let f: Vec<ScalarField<f64>> = vec![
            ScalarField::wave(n, 0, 1, 0.4, 0.0, true),
            ScalarField::wave(n, 1, 1, 0.7, 0.2, false),
        ];
        let f_cl = f.clone();
        let rel = SemilinearRelation::new(
            vec![
                ScalarField::constant(n, -2.0),
                ScalarField::constant(n, -2.0),
            ],
            Arc::new(move |x: &[f64], _c: &CheckedSigma<f64>, _v: &[f64], _w: &[Vec<f64>]| {
                let j0 = f_cl[0].eval(x);
                let j1 = f_cl[1].eval(x);
                2.0 * j0.hess(0, 0) + 2.0 * j1.hess(0, 0)
            }),
            0.5,
            RelationKind::Custom,
        )
        .unwrap();
        let gamma = TrigLoopFamily::zero(n, 2, 1);
        let delta = TrigLoopFamily::zero(n, 2, 1);
        let samples: Vec<Vec<f64>> = vec![vec![0.2, 0.3, 0.4], vec![0.9, 0.05, 0.6]];
        let rep = verify_loop_conditions(&rel, &f, &gamma, &delta, &samples, &unit_t_grid(16));
        assert_eq!(rep.max_residual(), 0.0);
    }

    #[test]
    fn l1_violation_is_reported_exactly() {
        // Perturbing δ's constant term by 0.1 shifts its mean by 0.1.
        let n = 3;
        let mut comp = crate::loops::LoopComponent::zero(n, 1);
        comp.a0 = ScalarField::constant(n, 0.1);
        let delta = TrigLoopFamily::new(n, vec![comp]).unwrap();
        let gamma = TrigLoopFamily::zero(n, 1, 1);
        let rel = trivial_relation(1, n, 0.5);
        let f = vec![ScalarField::zero(n)];
        let rep = verify_loop_conditions(
            &rel,
            &f,
            &gamma,
            &delta,
            &[vec![0.5, 0.5, 0.5]],
            &unit_t_grid(8),
        );
        assert_eq!(rep.l1_delta, 0.1);
        assert_eq!(rep.l1_gamma, 0.0);
    }
}
