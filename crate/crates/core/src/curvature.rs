//! Riemannian tensor engine on pointwise metric 2-jets: Christoffel symbols,
//! Ricci and scalar curvature, their order-split decompositions, the
//! diagonal-metric specializations, and the perturbed-frame decomposition
//! `Scal^ĝ = Scal^ḡ + B + Q + E` — together with an independent
//! finite-difference oracle.
//!
//! All quantities are pointwise polynomial expressions in `(g⁻¹, ∂g, ∂²g)`,
//! so the identity checks here are valid on arbitrary symmetric jet data,
//! not only on jets realized by an actual metric field.

use std::sync::Arc;

use crate::domain::DomainSpec;
use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::jet::Jet2;
use crate::linalg::{sym_index, sym_len, Mat, SymMat, MAX_DIM, MAX_SYM};
use crate::num::Real;

/// Smallest admissible metric eigenvalue.
pub const SPD_FLOOR: f64 = 1e-10;
/// Largest admissible condition number.
pub const COND_CEILING: f64 = 1e12;

/// Pointwise metric data: `g`, `∂_k g`, `∂²_{kl} g`. Symmetry in `(i,j)` and
/// in `(k,l)` is exact by packed storage.
#[derive(Clone, Copy, Debug)]
pub struct MetricJet2<T> {
    n: usize,
    pub g: SymMat<T>,
    dg: [SymMat<T>; MAX_DIM],
    d2g: [SymMat<T>; MAX_SYM],
}

impl<T: Real> MetricJet2<T> {
    pub fn flat(n: usize) -> Self {
        Self {
            n,
            g: SymMat::identity(n),
            dg: [SymMat::zeros(n); MAX_DIM],
            d2g: [SymMat::zeros(n); MAX_SYM],
        }
    }

    /// Assemble from per-entry jets of the metric coefficients.
    pub fn from_entry_jets(n: usize, entry: impl Fn(usize, usize) -> Jet2<T>) -> Self {
        let mut mj = Self::flat(n);
        for i in 0..n {
            for j in i..n {
                let jet = entry(i, j);
                mj.g.set(i, j, jet.value());
                for k in 0..n {
                    mj.dg[k].set(i, j, jet.grad(k));
                    for l in k..n {
                        mj.d2g[sym_index(n, k, l)].set(i, j, jet.hess(k, l));
                    }
                }
            }
        }
        mj
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dg(&self, k: usize) -> &SymMat<T> {
        &self.dg[k]
    }

    #[inline]
    pub fn d2g(&self, k: usize, l: usize) -> &SymMat<T> {
        &self.d2g[sym_index(self.n, k, l)]
    }

    pub fn set_dg(&mut self, k: usize, i: usize, j: usize, v: T) {
        self.dg[k].set(i, j, v);
    }

    pub fn set_d2g(&mut self, k: usize, l: usize, i: usize, j: usize, v: T) {
        self.d2g[sym_index(self.n, k, l)].set(i, j, v);
    }

    /// Inverse metric; rejects singular or severely ill-conditioned input.
    pub fn inverse_metric(&self) -> Result<SymMat<T>> {
        let (lo, hi) = self.g.eigen_range();
        if lo <= T::lit(SPD_FLOOR) {
            return Err(CoreError::SingularMetric(format!(
                "smallest eigenvalue {lo} under SPD floor"
            )));
        }
        if hi / lo > T::lit(COND_CEILING) {
            return Err(CoreError::SingularMetric(format!(
                "condition number {} over ceiling",
                hi / lo
            )));
        }
        self.g.inverse()
    }

    /// Reconstruct the 2-jet of one metric entry.
    pub fn entry_jet(&self, i: usize, j: usize) -> Jet2<T> {
        let n = self.n;
        let mut jet = Jet2::constant(n, self.g.get(i, j));
        for k in 0..n {
            jet.set_grad(k, self.dg[k].get(i, j));
            for l in k..n {
                jet.set_hess(k, l, self.d2g(k, l).get(i, j));
            }
        }
        jet
    }

    /// Relabel coordinates by a permutation, permuting all jet indices
    /// consistently.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut out = Self::flat(n);
        for i in 0..n {
            for j in i..n {
                out.g.set(i, j, self.g.get(perm[i], perm[j]));
                for k in 0..n {
                    out.dg[k].set(i, j, self.dg[perm[k]].get(perm[i], perm[j]));
                    for l in k..n {
                        out.d2g[sym_index(n, k, l)].set(
                            i,
                            j,
                            self.d2g(perm[k], perm[l]).get(perm[i], perm[j]),
                        );
                    }
                }
            }
        }
        out
    }
}

/// Metric-valued field over the domain: an upper triangle of scalar fields,
/// optionally backed by a joint evaluator that produces all entries at once.
#[derive(Clone)]
pub struct MetricField<T> {
    n: usize,
    entries: Vec<ScalarField<T>>,
    joint: Option<Arc<dyn Fn(&[T]) -> MetricJet2<T> + Send + Sync>>,
}

impl<T: Real> MetricField<T> {
    pub fn from_entries(n: usize, entries: Vec<ScalarField<T>>) -> Result<Self> {
        if entries.len() != sym_len(n) {
            return Err(CoreError::InvalidInput(format!(
                "expected {} metric entries, got {}",
                sym_len(n),
                entries.len()
            )));
        }
        if entries.iter().any(|f| f.dim() != n) {
            return Err(CoreError::InvalidInput("metric entry dimension mismatch".into()));
        }
        Ok(Self { n, entries, joint: None })
    }

    /// Euclidean metric on 𝕋ⁿ.
    pub fn euclidean(n: usize) -> Self {
        let entries = (0..n)
            .flat_map(|i| {
                (i..n).map(move |j| {
                    if i == j {
                        ScalarField::constant(n, T::one())
                    } else {
                        ScalarField::zero(n)
                    }
                })
            })
            .collect();
        Self { n, entries, joint: None }
    }

    /// Diagonal metric `g_ii = e^{2 f_i}`.
    pub fn diagonal_exp(exponents: &[ScalarField<T>]) -> Self {
        let n = exponents.len();
        let entries = (0..n)
            .flat_map(|i| {
                let fi = exponents[i].clone();
                (i..n).map(move |j| {
                    if i == j {
                        fi.scale(T::lit(2.0)).exp()
                    } else {
                        ScalarField::zero(n)
                    }
                })
            })
            .collect();
        Self { n, entries, joint: None }
    }

    /// Attach a joint evaluator. It must agree with the per-entry fields; it
    /// exists so grid sweeps do not recompute shared structure per entry.
    pub fn with_joint(mut self, joint: Arc<dyn Fn(&[T]) -> MetricJet2<T> + Send + Sync>) -> Self {
        self.joint = Some(joint);
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField<T> {
        &self.entries[sym_index(self.n, i, j)]
    }

    /// Evaluate the full metric 2-jet without validity checks.
    pub fn eval_raw(&self, x: &[T]) -> MetricJet2<T> {
        if let Some(joint) = &self.joint {
            return joint(x);
        }
        MetricJet2::from_entry_jets(self.n, |i, j| self.entry(i, j).eval(x))
    }

    /// Evaluate and validate (SPD floor and condition ceiling).
    pub fn eval(&self, x: &[T]) -> Result<MetricJet2<T>> {
        let mj = self.eval_raw(x);
        mj.inverse_metric()?;
        Ok(mj)
    }

    /// Plain metric values (no derivatives) — what the finite-difference
    /// oracle is allowed to see.
    pub fn values(&self, x: &[T]) -> SymMat<T> {
        self.eval_raw(x).g
    }
}

/// Christoffel symbols `Γ^l_{ij}`, symmetric in the lower pair by storage.
#[derive(Clone, Debug)]
pub struct Christoffel<T> {
    pub gamma: Vec<SymMat<T>>,
}

impl<T: Real> Christoffel<T> {
    #[inline]
    pub fn get(&self, l: usize, i: usize, j: usize) -> T {
        self.gamma[l].get(i, j)
    }
}

/// Γ^l_{ij} = ½ Σ_p g^{lp} (∂_i g_{jp} + ∂_j g_{ip} − ∂_p g_{ij}).
pub fn christoffel<T: Real>(mj: &MetricJet2<T>) -> Result<Christoffel<T>> {
    let ginv = mj.inverse_metric()?;
    Ok(christoffel_with_inverse(mj, &ginv))
}

fn christoffel_with_inverse<T: Real>(mj: &MetricJet2<T>, ginv: &SymMat<T>) -> Christoffel<T> {
    let n = mj.dim();
    let half = T::lit(0.5);
    let gamma = (0..n)
        .map(|l| {
            SymMat::from_fn(n, |i, j| {
                let mut s = T::zero();
                for p in 0..n {
                    s = s + ginv.get(l, p)
                        * (mj.dg(i).get(j, p) + mj.dg(j).get(i, p) - mj.dg(p).get(i, j));
                }
                s * half
            })
        })
        .collect();
    Christoffel { gamma }
}

/// First derivatives of the Christoffel symbols, obtained by differentiating
/// the closed form through `∂g⁻¹ = −g⁻¹ (∂g) g⁻¹`. `dgamma[m][l]` holds
/// `∂_m Γ^l_{ij}` in its `(i, j)` slot.
fn christoffel_derivatives<T: Real>(
    mj: &MetricJet2<T>,
    ginv: &SymMat<T>,
) -> Vec<Vec<SymMat<T>>> {
    let n = mj.dim();
    let half = T::lit(0.5);
    // dginv[m] = −g⁻¹ (∂_m g) g⁻¹.
    let dginv: Vec<Mat<T>> = (0..n)
        .map(|m| {
            Mat::from_fn(n, |a, b| {
                let mut s = T::zero();
                for u in 0..n {
                    for v in 0..n {
                        s = s + ginv.get(a, u) * mj.dg(m).get(u, v) * ginv.get(v, b);
                    }
                }
                -s
            })
        })
        .collect();
    (0..n)
        .map(|m| {
            (0..n)
                .map(|l| {
                    SymMat::from_fn(n, |i, j| {
                        let mut s = T::zero();
                        for p in 0..n {
                            let first = mj.dg(i).get(j, p) + mj.dg(j).get(i, p) - mj.dg(p).get(i, j);
                            let second = mj.d2g(m, i).get(j, p) + mj.d2g(m, j).get(i, p)
                                - mj.d2g(m, p).get(i, j);
                            s = s + dginv[m].get(l, p) * first + ginv.get(l, p) * second;
                        }
                        s * half
                    })
                })
                .collect()
        })
        .collect()
}

/// Ricci tensor assembled from Christoffel symbols and their derivatives:
/// `Ric_{ik} = Σ_j (∂_j Γ^j_{ik} − ∂_i Γ^j_{jk} + Σ_r (Γ^j_{jr} Γ^r_{ik} − Γ^j_{ir} Γ^r_{jk}))`.
///
/// Returned as a full matrix; its symmetry is a theorem, not a storage
/// artifact, and is checked numerically in tests.
pub fn ricci<T: Real>(mj: &MetricJet2<T>) -> Result<Mat<T>> {
    let ginv = mj.inverse_metric()?;
    let gamma = christoffel_with_inverse(mj, &ginv);
    let dgamma = christoffel_derivatives(mj, &ginv);
    let n = mj.dim();
    Ok(Mat::from_fn(n, |i, k| {
        let mut s = T::zero();
        for j in 0..n {
            s = s + dgamma[j][j].get(i, k) - dgamma[i][j].get(j, k);
            for r in 0..n {
                s = s + gamma.get(j, j, r) * gamma.get(r, i, k)
                    - gamma.get(j, i, r) * gamma.get(r, j, k);
            }
        }
        s
    }))
}

/// Scalar curvature `Scal = Σ g^{ij} Ric_{ij}`.
pub fn scalar<T: Real>(mj: &MetricJet2<T>) -> Result<T> {
    let ginv = mj.inverse_metric()?;
    let ric = ricci(mj)?;
    let n = mj.dim();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            s = s + ginv.get(i, j) * ric.get(i, j);
        }
    }
    Ok(s)
}

/// Second assembly route: materialize the (0,4) Riemann tensor
/// `R_{ijkl} = Σ_p g_{pl} R^p_{ijk}` and contract twice with `g⁻¹`.
/// Algebraically identical to [`scalar`], numerically independent in its
/// evaluation order.
pub fn scalar_via_riemann<T: Real>(mj: &MetricJet2<T>) -> Result<T> {
    let ginv = mj.inverse_metric()?;
    let gamma = christoffel_with_inverse(mj, &ginv);
    let dgamma = christoffel_derivatives(mj, &ginv);
    let n = mj.dim();
    let riem_up = |p: usize, i: usize, j: usize, k: usize| {
        let mut s = dgamma[j][p].get(i, k) - dgamma[i][p].get(j, k);
        for r in 0..n {
            s = s + gamma.get(p, j, r) * gamma.get(r, i, k)
                - gamma.get(p, i, r) * gamma.get(r, j, k);
        }
        s
    };
    let mut total = T::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut r_low = T::zero();
                    for p in 0..n {
                        r_low = r_low + mj.g.get(p, l) * riem_up(p, i, j, k);
                    }
                    total = total + ginv.get(i, k) * ginv.get(j, l) * r_low;
                }
            }
        }
    }
    Ok(total)
}

/// Ricci split into the part carrying second derivatives of `g` and the part
/// quadratic in first derivatives; their sum reproduces [`ricci`].
pub fn ricci_split<T: Real>(mj: &MetricJet2<T>) -> Result<(Mat<T>, Mat<T>)> {
    let ginv = mj.inverse_metric()?;
    let n = mj.dim();
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let r2 = Mat::from_fn(n, |i, k| {
        let mut s = T::zero();
        for j in 0..n {
            for p in 0..n {
                s = s + ginv.get(j, p)
                    * (mj.d2g(j, k).get(i, p) - mj.d2g(i, k).get(j, p) - mj.d2g(j, p).get(i, k)
                        + mj.d2g(i, p).get(j, k));
            }
        }
        s * half
    });
    let r1 = Mat::from_fn(n, |i, k| {
        let mut s = T::zero();
        for j in 0..n {
            for l in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        let w = ginv.get(j, l) * ginv.get(p, q);
                        let ik_sym = mj.dg(i).get(k, p) + mj.dg(k).get(i, p) - mj.dg(p).get(i, k);
                        let jk_sym = mj.dg(j).get(k, p) + mj.dg(k).get(j, p) - mj.dg(p).get(j, k);
                        s = s + w
                            * (-mj.dg(j).get(l, q) * ik_sym + mj.dg(i).get(l, q) * jk_sym
                                + (mj.dg(q).get(j, l) - mj.dg(l).get(j, q)) * ik_sym
                                - (mj.dg(q).get(i, l) - mj.dg(l).get(i, q)) * jk_sym);
                    }
                }
            }
        }
        s * quarter
    });
    Ok((r2, r1))
}

/// Scalar-curvature split `(𝒮², 𝒮¹)`; the sum is compared against [`scalar`]
/// by callers and any disagreement is reported as a discrepancy.
pub fn scalar_split<T: Real>(mj: &MetricJet2<T>) -> Result<(T, T)> {
    let ginv = mj.inverse_metric()?;
    let n = mj.dim();
    let mut s2 = T::zero();
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for p in 0..n {
                    s2 = s2
                        + (ginv.get(i, k) * ginv.get(j, p) - ginv.get(i, p) * ginv.get(j, k))
                            * mj.d2g(j, k).get(i, p);
                }
            }
        }
    }
    let mut s1 = T::zero();
    let four = T::lit(4.0);
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    for p in 0..n {
                        for q in 0..n {
                            let w = ginv.get(i, k) * ginv.get(j, l) * ginv.get(p, q);
                            s1 = s1 + w
                                * (-four * mj.dg(j).get(l, q) * mj.dg(i).get(k, p)
                                    + four * mj.dg(j).get(l, q) * mj.dg(p).get(i, k)
                                    + three * mj.dg(i).get(l, q) * mj.dg(k).get(j, p)
                                    - mj.dg(q).get(j, l) * mj.dg(p).get(i, k)
                                    - two * mj.dg(q).get(i, l) * mj.dg(j).get(k, p));
                        }
                    }
                }
            }
        }
    }
    Ok((s2, s1 * T::lit(0.25)))
}

/// Diagonal metric `g_{ii} = e^{2 f_i}` described by its exponent fields.
#[derive(Clone)]
pub struct DiagonalMetricSpec<T> {
    pub exponents: Vec<ScalarField<T>>,
}

impl<T: Real> DiagonalMetricSpec<T> {
    pub fn new(exponents: Vec<ScalarField<T>>) -> Result<Self> {
        let n = exponents.len();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(CoreError::UnsupportedDimension { n, max: MAX_DIM });
        }
        if exponents.iter().any(|f| f.dim() != n) {
            return Err(CoreError::InvalidInput("exponent field dimension mismatch".into()));
        }
        Ok(Self { exponents })
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    fn exponent_jets(&self, x: &[T]) -> Vec<Jet2<T>> {
        self.exponents.iter().map(|f| f.eval(x)).collect()
    }

    /// Assemble the full metric jet (oracle for the specialized formulas).
    pub fn assemble(&self, x: &[T]) -> MetricJet2<T> {
        let n = self.dim();
        let jets = self.exponent_jets(x);
        MetricJet2::from_entry_jets(n, |i, j| {
            if i == j {
                jets[i].scale(T::lit(2.0)).exp()
            } else {
                Jet2::zero(n)
            }
        })
    }
}

/// Diagonal specialization of the scalar split, evaluated from the exponent
/// jets alone.
pub fn diagonal_scalar<T: Real>(spec: &DiagonalMetricSpec<T>, x: &[T]) -> (T, T) {
    let n = spec.dim();
    let f = spec.exponent_jets(x);
    let two = T::lit(2.0);
    let mut s2 = T::zero();
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            s2 = s2 - two * (-two * f[i].value()).exp() * f[j].hess(i, i);
        }
    }
    let mut s1 = T::zero();
    for i in 0..n {
        let e_i = (-two * f[i].value()).exp();
        for j in 0..n {
            if j == i {
                continue;
            }
            s1 = s1 + two * e_i * f[i].grad(i) * f[j].grad(i);
            s1 = s1 - two * e_i * f[j].grad(i) * f[j].grad(i);
            for p in 0..n {
                if p == i || p == j {
                    continue;
                }
                s1 = s1 - (-two * f[p].value()).exp() * f[j].grad(p) * f[i].grad(p);
            }
        }
    }
    (s2, s1)
}

/// Diagonal specialization of the Ricci split.
pub fn diagonal_ricci<T: Real>(spec: &DiagonalMetricSpec<T>, x: &[T]) -> (Mat<T>, Mat<T>) {
    let n = spec.dim();
    let f = spec.exponent_jets(x);
    let two = T::lit(2.0);
    let r2 = Mat::from_fn(n, |i, k| {
        let mut s = T::zero();
        if i == k {
            for j in 0..n {
                if j == i {
                    continue;
                }
                s = s - f[j].hess(i, i)
                    - (two * (f[i].value() - f[j].value())).exp() * f[i].hess(j, j);
            }
        } else {
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                s = s - f[j].hess(i, k);
            }
        }
        s
    });
    let r1 = Mat::from_fn(n, |i, k| {
        let mut s = T::zero();
        if i == k {
            for j in 0..n {
                if j == i {
                    continue;
                }
                let e_ij = (two * (f[i].value() - f[j].value())).exp();
                s = s + e_ij * f[j].grad(j) * f[i].grad(j);
                s = s - f[j].grad(i) * f[j].grad(i);
                s = s + f[j].grad(i) * f[i].grad(i);
                s = s - e_ij * f[i].grad(j) * f[i].grad(j);
                for p in 0..n {
                    if p == i || p == j {
                        continue;
                    }
                    s = s - (two * (f[i].value() - f[p].value())).exp()
                        * f[j].grad(p)
                        * f[i].grad(p);
                }
            }
        } else {
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                s = s - f[j].grad(i) * f[j].grad(k);
                s = s + f[j].grad(k) * f[k].grad(i);
                s = s + f[j].grad(i) * f[i].grad(k);
            }
        }
        s
    });
    (r2, r1)
}

/// Frame perturbation data: a frame field `Ā` equal to the identity at the
/// base point, and diagonal exponents `f_1..f_n` for `ĝ = Āᵀ D Ā`,
/// `D = diag(e^{2f_i})`, against the unperturbed `ḡ = Āᵀ Ā`.
#[derive(Clone)]
pub struct FramePerturbationSpec<T> {
    pub frame: Vec<Vec<ScalarField<T>>>,
    pub exponents: Vec<ScalarField<T>>,
}

impl<T: Real> FramePerturbationSpec<T> {
    pub fn new(frame: Vec<Vec<ScalarField<T>>>, exponents: Vec<ScalarField<T>>) -> Result<Self> {
        let n = exponents.len();
        if frame.len() != n || frame.iter().any(|row| row.len() != n) {
            return Err(CoreError::InvalidInput("frame must be n×n".into()));
        }
        Ok(Self { frame, exponents })
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    fn check_identity_at(&self, x: &[T]) -> Result<()> {
        let n = self.dim();
        let mut dev = T::zero();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { T::one() } else { T::zero() };
                dev = dev.max((self.frame[i][j].value(x) - want).abs());
            }
        }
        if dev > T::lit(1e-12) {
            return Err(CoreError::FrameNotIdentity { dev: dev.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(())
    }

    fn frame_jets(&self, x: &[T]) -> Vec<Vec<Jet2<T>>> {
        self.frame
            .iter()
            .map(|row| row.iter().map(|f| f.eval(x)).collect())
            .collect()
    }

    fn exponent_jets(&self, x: &[T]) -> Vec<Jet2<T>> {
        self.exponents.iter().map(|f| f.eval(x)).collect()
    }

    /// Jet of `ḡ = Āᵀ Ā`.
    pub fn base_metric_jet(&self, x: &[T]) -> MetricJet2<T> {
        let n = self.dim();
        let a = self.frame_jets(x);
        MetricJet2::from_entry_jets(n, |i, j| {
            let mut s = Jet2::zero(n);
            for r in 0..n {
                s = s + a[r][i] * a[r][j];
            }
            s
        })
    }

    /// Jet of `ĝ = Āᵀ D Ā`.
    pub fn perturbed_metric_jet(&self, x: &[T]) -> MetricJet2<T> {
        let n = self.dim();
        let a = self.frame_jets(x);
        let f = self.exponent_jets(x);
        let d: Vec<Jet2<T>> = f.iter().map(|fj| fj.scale(T::lit(2.0)).exp()).collect();
        MetricJet2::from_entry_jets(n, |i, j| {
            let mut s = Jet2::zero(n);
            for r in 0..n {
                s = s + a[r][i] * d[r] * a[r][j];
            }
            s
        })
    }
}

/// The `(B, Q)` terms of the perturbed-frame decomposition at the base point:
/// `B` linear in second derivatives of the exponents, `Q` quadratic in first
/// derivatives. Requires `Ā(x̄) = Id` (pull back by the affine map first).
pub fn perturbed_bq<T: Real>(spec: &FramePerturbationSpec<T>, x_bar: &[T]) -> Result<(T, T)> {
    spec.check_identity_at(x_bar)?;
    let n = spec.dim();
    let f = spec.exponent_jets(x_bar);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mut b = T::zero();
    let mut q = T::zero();
    for i in 0..n {
        let e_i = (-two * f[i].value()).exp();
        for j in 0..n {
            if j == i {
                continue;
            }
            b = b - two * e_i * f[j].hess(i, i);
            q = q - two * e_i * f[j].grad(i) * f[j].grad(i);
            q = q + four * e_i * f[i].grad(i) * f[j].grad(i);
            for k in 0..n {
                q = q - (-two * f[k].value()).exp() * f[i].grad(k) * f[j].grad(k);
            }
        }
    }
    Ok((b, q))
}

/// The remainder `E = Scal^ĝ − Scal^ḡ − B − Q` at the base point, computed
/// through the full engine on the assembled jets. By the decomposition it
/// vanishes when all exponents vanish to first order, is independent of
/// second derivatives of the exponents, and is affine in their gradients.
pub fn perturbed_e_remainder<T: Real>(spec: &FramePerturbationSpec<T>, x_bar: &[T]) -> Result<T> {
    let (b, q) = perturbed_bq(spec, x_bar)?;
    let hat = scalar(&spec.perturbed_metric_jet(x_bar))?;
    let bar = scalar(&spec.base_metric_jet(x_bar))?;
    Ok(hat - bar - b - q)
}

/// Metric jet from central finite differences of a plain value map, with one
/// Richardson refinement per entry: O(h⁴) on analytic metrics. Independent of
/// the jet arithmetic by construction.
pub fn fd_metric_jet<T: Real>(
    map: &dyn Fn(&[T]) -> SymMat<T>,
    x: &[T],
    h: T,
) -> MetricJet2<T> {
    let n = x.len();
    let raw = |step: T| {
        let at = |dx: &[T]| {
            let mut y = [T::zero(); MAX_DIM];
            for a in 0..n {
                y[a] = x[a] + dx[a];
            }
            map(&y[..n])
        };
        let g0 = map(x);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let mut dg = [SymMat::zeros(n); MAX_DIM];
        let mut d2g = [SymMat::zeros(n); MAX_SYM];
        let mut dx = [T::zero(); MAX_DIM];
        for k in 0..n {
            dx = [T::zero(); MAX_DIM];
            dx[k] = step;
            let gp = at(&dx);
            dx[k] = -step;
            let gm = at(&dx);
            dg[k] = SymMat::from_fn(n, |i, j| (gp.get(i, j) - gm.get(i, j)) / (two * step));
            d2g[sym_index(n, k, k)] = SymMat::from_fn(n, |i, j| {
                (gp.get(i, j) - two * g0.get(i, j) + gm.get(i, j)) / (step * step)
            });
        }
        for k in 0..n {
            for l in (k + 1)..n {
                let mut probe = |sk: T, sl: T| {
                    dx = [T::zero(); MAX_DIM];
                    dx[k] = sk * step;
                    dx[l] = sl * step;
                    at(&dx)
                };
                let pp = probe(T::one(), T::one());
                let pm = probe(T::one(), -T::one());
                let mp = probe(-T::one(), T::one());
                let mm = probe(-T::one(), -T::one());
                d2g[sym_index(n, k, l)] = SymMat::from_fn(n, |i, j| {
                    (pp.get(i, j) - pm.get(i, j) - mp.get(i, j) + mm.get(i, j))
                        / (four * step * step)
                });
            }
        }
        (g0, dg, d2g)
    };
    let (g0, dg_h, d2g_h) = raw(h);
    let (_, dg_h2, d2g_h2) = raw(h * T::lit(0.5));
    let refine = |coarse: T, fine: T| (T::lit(4.0) * fine - coarse) / T::lit(3.0);
    let mut out = MetricJet2::flat(n);
    out.g = g0;
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                out.dg[k].set(i, j, refine(dg_h[k].get(i, j), dg_h2[k].get(i, j)));
            }
        }
        for l in k..n {
            let s = sym_index(n, k, l);
            for i in 0..n {
                for j in i..n {
                    out.d2g[s].set(i, j, refine(d2g_h[s].get(i, j), d2g_h2[s].get(i, j)));
                }
            }
        }
    }
    out
}

/// Boundary-checked variant: the full stencil (width 2h per axis) must stay
/// inside the domain's non-periodic box.
pub fn fd_metric_jet_checked<T: Real>(
    map: &dyn Fn(&[T]) -> SymMat<T>,
    domain: &DomainSpec<T>,
    x: &[T],
    h: T,
) -> Result<MetricJet2<T>> {
    let dist = domain.boundary_distance(x);
    let need = T::lit(2.0) * h;
    if dist <= need {
        return Err(CoreError::BoundaryProximity {
            dist: dist.to_f64().unwrap_or(f64::NAN),
            need: need.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(fd_metric_jet(map, x, h))
}

/// One structured disagreement between two routes to the same quantity.
#[derive(Clone, Debug)]
pub struct Discrepancy {
    pub formula_id: String,
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl Discrepancy {
    /// CSV row: `formula_id, point, lhs, rhs, abs_err, rel_err` (point is
    /// `;`-separated to keep the row flat).
    pub fn csv_row(&self) -> String {
        let pt = self
            .point
            .iter()
            .map(|c| format!("{c}"))
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{},{},{},{},{}",
            self.formula_id, pt, self.lhs, self.rhs, self.abs_err, self.rel_err
        )
    }
}

/// Compare two routes; a violation beyond `tol_rel` (relative with floor 1)
/// becomes a reportable discrepancy instead of a panic.
pub fn check_identity<T: Real>(
    formula_id: &str,
    point: &[T],
    lhs: T,
    rhs: T,
    tol_rel: f64,
) -> Option<Discrepancy> {
    let lhs = lhs.to_f64().unwrap_or(f64::NAN);
    let rhs = rhs.to_f64().unwrap_or(f64::NAN);
    let abs_err = (lhs - rhs).abs();
    let rel_err = abs_err / lhs.abs().max(rhs.abs()).max(1.0);
    if rel_err <= tol_rel && abs_err.is_finite() {
        None
    } else {
        Some(Discrepancy {
            formula_id: formula_id.to_string(),
            point: point.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect(),
            lhs,
            rhs,
            abs_err,
            rel_err,
        })
    }
}
