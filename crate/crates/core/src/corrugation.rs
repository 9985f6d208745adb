//! The mixed corrugation process
//!
//!   F(x) = f(x) + (1/N)·Int(γ_x)(N·x_i) + (1/N²)·Int²(δ_x)(N·x_i)
//!
//! and the measurement of its asymptotic laws: C⁰ distance, slow-derivative
//! distances, and the deviations of the fast derivatives from their
//! leading-order predictions.

use crate::domain::DomainSpec;
use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::jet::Jet2;
use crate::linalg::MAX_DIM;
use crate::loops::TrigLoopFamily;
use crate::num::Real;

/// Inputs of one corrugation: base map `f`, the two loop families, the fast
/// axis and the frequency.
#[derive(Clone)]
pub struct CorrugationSpec<T> {
    pub f: Vec<ScalarField<T>>,
    pub gamma: TrigLoopFamily<T>,
    pub delta: TrigLoopFamily<T>,
    /// Corrugation axis (0-based).
    pub axis: usize,
    /// Oscillation frequency N ≥ 1; integrality keeps the fast phase
    /// 1-periodic on periodic axes.
    pub freq: u32,
}

impl<T: Real> CorrugationSpec<T> {
    pub fn new(
        f: Vec<ScalarField<T>>,
        gamma: TrigLoopFamily<T>,
        delta: TrigLoopFamily<T>,
        axis: usize,
        freq: u32,
    ) -> Result<Self> {
        let n = gamma.spatial_dim();
        if f.len() != gamma.arity() || gamma.arity() != delta.arity() {
            return Err(CoreError::InvalidInput(format!(
                "arity mismatch: f {} gamma {} delta {}",
                f.len(),
                gamma.arity(),
                delta.arity()
            )));
        }
        if delta.spatial_dim() != n || f.iter().any(|c| c.dim() != n) {
            return Err(CoreError::InvalidInput("spatial dimension mismatch".into()));
        }
        if axis >= n {
            return Err(CoreError::InvalidInput(format!("axis {axis} out of range for n = {n}")));
        }
        if freq == 0 {
            return Err(CoreError::InvalidInput("frequency must be at least 1".into()));
        }
        Ok(Self { f, gamma, delta, axis, freq })
    }

    pub fn with_freq(&self, freq: u32) -> Self {
        let mut s = self.clone();
        s.freq = freq;
        s
    }

    fn n(&self) -> usize {
        self.gamma.spatial_dim()
    }
}

/// 2-jet of `x ↦ loop(x, N·x_axis)` for one component of an (integrated)
/// family: spatial derivatives act on the coefficient fields and, through the
/// fast argument, pick up a factor N per order along `axis`.
fn fast_eval_jet<T: Real>(
    comp: &crate::loops::LoopComponent<T>,
    modes: usize,
    x: &[T],
    freq: u32,
    axis: usize,
) -> Jet2<T> {
    let n = x.len();
    let nf = T::of_usize(freq as usize);
    let two_pi = T::two_pi();
    let mut jet = comp.a0.eval(x);
    for m in 1..=modes {
        let w = two_pi * T::of_usize(m) * nf;
        let theta = w * x[axis];
        let (s, c) = (theta.sin(), theta.cos());
        // Jets of cos(w·x_axis) and sin(w·x_axis) with respect to x.
        let mut cos_jet = Jet2::constant(n, c);
        cos_jet.set_grad(axis, -w * s);
        cos_jet.set_hess(axis, axis, -w * w * c);
        let mut sin_jet = Jet2::constant(n, s);
        sin_jet.set_grad(axis, w * c);
        sin_jet.set_hess(axis, axis, -w * w * s);
        jet = jet + comp.ac[m - 1].eval(x) * cos_jet + comp.as_[m - 1].eval(x) * sin_jet;
    }
    jet
}

/// Corrugate: returns `F` as fields whose 2-jet evaluation is exact.
pub fn corrugate<T: Real>(spec: &CorrugationSpec<T>) -> Vec<ScalarField<T>> {
    let n = spec.n();
    let int1 = spec.gamma.int_loop();
    let int2 = spec.delta.int_loop().int_loop();
    let inv_n = T::one() / T::of_usize(spec.freq as usize);
    let inv_n2 = inv_n * inv_n;
    (0..spec.f.len())
        .map(|c| {
            let base = spec.f[c].clone();
            let c1 = int1.components()[c].clone();
            let c2 = int2.components()[c].clone();
            let modes1 = int1.modes();
            let modes2 = int2.modes();
            let (axis, freq) = (spec.axis, spec.freq);
            let mut mask = [false; MAX_DIM];
            for a in 0..n {
                // The fast factor is 1-periodic along `axis` because N is an
                // integer, so the corrugation never breaks periodicity.
                mask[a] = base.periodic_mask()[a]
                    && c1.a0.periodic_mask()[a]
                    && c2.a0.periodic_mask()[a];
            }
            ScalarField::from_fn(n, &mask[..n], move |x: &[T]| {
                let j1 = fast_eval_jet(&c1, modes1, x, freq, axis);
                let j2 = fast_eval_jet(&c2, modes2, x, freq, axis);
                base.eval(x) + j1.scale(inv_n) + j2.scale(inv_n2)
            })
        })
        .collect()
}

/// Leading-order predictions for the fast derivatives of `F` at `x`:
/// the content of the corrugation's first- and second-derivative laws.
#[derive(Clone, Debug)]
pub struct PredictedJets<T> {
    /// ∂_i F ≈ ∂_i f + γ_x(Nx_i) − γ̄_x, per component.
    pub d_i: Vec<T>,
    /// ∂²_i F ≈ ∂²_i f + 2(∂_iγ_x(Nx_i) − mean ∂_iγ) + N·γ̇_x(Nx_i) + δ_x(Nx_i) − δ̄_x.
    pub d_ii: Vec<T>,
    /// ∂²_{ij} F ≈ ∂²_{ij} f + ∂_jγ_x(Nx_i) − mean ∂_jγ, for j ≠ i; the
    /// `axis` slot holds the pure-second prediction.
    pub d_ij: Vec<[T; MAX_DIM]>,
}

/// Evaluate the leading-order predictions at `x`.
pub fn predicted_first_jet<T: Real>(spec: &CorrugationSpec<T>, x: &[T]) -> PredictedJets<T> {
    let n = spec.n();
    let a = spec.axis;
    let t = T::of_usize(spec.freq as usize) * x[a];
    let ge = spec.gamma.eval(x, t);
    let de = spec.delta.eval(x, t);
    let gmean = spec.gamma.mean_jets(x);
    let dmean = spec.delta.mean_jets(x);
    let m = spec.f.len();
    let mut d_i = Vec::with_capacity(m);
    let mut d_ii = Vec::with_capacity(m);
    let mut d_ij = Vec::with_capacity(m);
    for c in 0..m {
        let fj = spec.f[c].eval(x);
        let gj = &ge.x_jets[c];
        let dj = &de.x_jets[c];
        d_i.push(fj.grad(a) + gj.value() - gmean[c].value());
        let two = T::lit(2.0);
        let dii = fj.hess(a, a)
            + two * (gj.grad(a) - gmean[c].grad(a))
            + T::of_usize(spec.freq as usize) * ge.t_deriv[c]
            + dj.value()
            - dmean[c].value();
        d_ii.push(dii);
        let mut row = [T::zero(); MAX_DIM];
        for j in 0..n {
            row[j] = if j == a {
                dii
            } else {
                fj.hess(a, j) + gj.grad(j) - gmean[c].grad(j)
            };
        }
        d_ij.push(row);
    }
    PredictedJets { d_i, d_ii, d_ij }
}

/// Sup-norm deviations of one corrugation from its base map and predictions.
#[derive(Clone, Copy, Debug)]
pub struct DeviationReport<T> {
    pub freq: u32,
    /// sup |F − f|
    pub dev_c0: T,
    /// sup over j ≠ i of |∂_j F − ∂_j f|
    pub dev_dj: T,
    /// sup over j,k ≠ i of |∂²_{jk} F − ∂²_{jk} f|
    pub dev_djk: T,
    /// sup |∂_i F − prediction|
    pub dev_di: T,
    /// sup |∂²_i F − prediction|
    pub dev_dii: T,
    /// sup over j ≠ i of |∂²_{ij} F − prediction|
    pub dev_dij: T,
}

impl<T: Real> DeviationReport<T> {
    /// CSV row in the fixed column order `N, dev_c0, dev_dj, dev_djk, dev_di,
    /// dev_dii, dev_dij`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.freq, self.dev_c0, self.dev_dj, self.dev_djk, self.dev_di, self.dev_dii, self.dev_dij
        )
    }

    pub fn values(&self) -> [T; 6] {
        [self.dev_c0, self.dev_dj, self.dev_djk, self.dev_di, self.dev_dii, self.dev_dij]
    }
}

/// Measure all six deviation norms on the domain grid. The grid must carry at
/// least 4N samples along the corrugation axis.
pub fn deviation_report<T: Real>(
    spec: &CorrugationSpec<T>,
    domain: &DomainSpec<T>,
) -> Result<DeviationReport<T>> {
    let need = 4 * spec.freq as usize;
    let res = domain.res()[spec.axis];
    if res < need {
        return Err(CoreError::UnderResolved { axis: spec.axis, res, need });
    }
    if domain.dim() != spec.n() {
        return Err(CoreError::InvalidInput("domain dimension mismatch".into()));
    }
    let fields = corrugate(spec);
    let n = spec.n();
    let a = spec.axis;
    let mut rep = DeviationReport {
        freq: spec.freq,
        dev_c0: T::zero(),
        dev_dj: T::zero(),
        dev_djk: T::zero(),
        dev_di: T::zero(),
        dev_dii: T::zero(),
        dev_dij: T::zero(),
    };
    for x in domain.grid_points() {
        let pred = predicted_first_jet(spec, &x);
        for c in 0..fields.len() {
            let fj = fields[c].eval(&x);
            let bj = spec.f[c].eval(&x);
            rep.dev_c0 = rep.dev_c0.max((fj.value() - bj.value()).abs());
            for j in 0..n {
                if j == a {
                    continue;
                }
                rep.dev_dj = rep.dev_dj.max((fj.grad(j) - bj.grad(j)).abs());
                for k in j..n {
                    if k == a {
                        continue;
                    }
                    rep.dev_djk = rep.dev_djk.max((fj.hess(j, k) - bj.hess(j, k)).abs());
                }
                rep.dev_dij = rep.dev_dij.max((fj.hess(a, j) - pred.d_ij[c][j]).abs());
            }
            rep.dev_di = rep.dev_di.max((fj.grad(a) - pred.d_i[c]).abs());
            rep.dev_dii = rep.dev_dii.max((fj.hess(a, a) - pred.d_ii[c]).abs());
        }
    }
    Ok(rep)
}
