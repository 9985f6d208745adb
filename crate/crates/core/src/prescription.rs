//! The scalar-curvature constructions: flat torus, general torus through
//! orthonormal frames, thick torus with a vanishing region — plus frame
//! fields, numeric extraction of the first-order curvature coefficients,
//! smooth bumps, and the reference-metric C⁰ distance.
//!
//! The corrugation always runs along axis 0 with two target components
//! `(h₂, h₃)` entering the diagonal gauge `D = diag(1, e^{2h₂}, e^{2h₃}, 1…)`.

use std::sync::Arc;

use crate::corrugation::{corrugate, CorrugationSpec};
use crate::curvature::{scalar, MetricField, MetricJet2};
use crate::domain::{BoxRegion, DomainSpec};
use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::jet::Jet2;
use crate::linalg::{generalized_eigenvalues, Mat};
use crate::loops::{cosine_loop, LoopComponent, TrigLoopFamily};
use crate::num::Real;
use crate::semilinear::{CheckedSigma, RelationKind, SemilinearRelation};
use crate::spectral::{lattice_points, mixed_lift, LatticeSamples};

/// Step used by the odd-difference extraction of the Ψ coefficients; the
/// extracted quantity is exactly affine+quadratic, so any O(1) step works.
const PSI_STEP: f64 = 0.25;

/// Inputs of a band prescription.
#[derive(Clone)]
pub struct PrescriptionInput<T> {
    pub g0: MetricField<T>,
    /// Target drop: the curvature must land in `(Scal⁰ − k − ε, Scal⁰ − k)`.
    pub k: ScalarField<T>,
    pub epsilon: T,
    pub freq: u32,
    pub domain: DomainSpec<T>,
    /// Lattice resolution per periodic axis for coefficient lifting.
    pub lift_res: usize,
}

impl<T: Real> PrescriptionInput<T> {
    pub fn eps_bar(&self) -> T {
        self.epsilon * T::lit(0.5)
    }

    fn validate(&self) -> Result<()> {
        if self.epsilon <= T::zero() {
            return Err(CoreError::InvalidInput("epsilon must be positive".into()));
        }
        if self.freq == 0 {
            return Err(CoreError::InvalidInput("frequency must be at least 1".into()));
        }
        if self.lift_res < 4 {
            return Err(CoreError::InvalidInput("lift resolution below 4".into()));
        }
        Ok(())
    }

    /// Convex-hull feasibility gate: refuse when `min k̃ + ε̄ < 0`; the
    /// boundary case is accepted.
    fn feasibility_gate(&self) -> Result<()> {
        let eps_bar = self.eps_bar();
        let mut level = T::infinity();
        for p in self.domain.grid_points() {
            level = level.min(self.k.value(&p) + eps_bar);
        }
        if level < T::zero() {
            return Err(CoreError::Infeasible { level: level.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(())
    }
}

/// Everything a band construction produces: the metric, both loop families,
/// the semilinear relation it solves, and the corrugated exponents.
#[derive(Clone)]
pub struct Construction<T> {
    pub metric: MetricField<T>,
    pub gamma: TrigLoopFamily<T>,
    pub delta: TrigLoopFamily<T>,
    pub relation: SemilinearRelation<T>,
    /// The corrugated pair `(h₂, h₃) = (F₁, F₂)`.
    pub h_fields: Vec<ScalarField<T>>,
}

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

/// Pointwise frame data: the matrix `P` with g₀-orthonormal columns, first
/// row `(α, 0, …, 0)`, as 2-jets.
#[derive(Clone, Debug)]
pub struct FrameJets<T> {
    /// `p[i][col]`: row i of column `col`.
    pub p: Vec<Vec<Jet2<T>>>,
    pub alpha: Jet2<T>,
}

/// Frame field: entries of `P` and `α = P₀₀` as scalar fields over the
/// domain (each evaluation reruns the orthonormalization at that point).
#[derive(Clone)]
pub struct FrameField<T> {
    pub p: Vec<Vec<ScalarField<T>>>,
    pub alpha: ScalarField<T>,
}

fn entry_jets<T: Real>(mj: &MetricJet2<T>) -> Vec<Vec<Jet2<T>>> {
    let n = mj.dim();
    (0..n)
        .map(|i| (0..n).map(|j| mj.entry_jet(i, j)).collect())
        .collect()
}

fn jet_dot<T: Real>(g: &[Vec<Jet2<T>>], u: &[Jet2<T>], w: &[Jet2<T>]) -> Jet2<T> {
    let n = u.len();
    let mut s = Jet2::zero(u[0].dim());
    for a in 0..n {
        for b in 0..n {
            s = s + u[a] * g[a][b] * w[b];
        }
    }
    s
}

/// Orthonormalize with respect to the metric jets, in the order that keeps
/// the Euclidean first components of columns 2..n exactly zero: process
/// `e₂, …, e_n` first, then complete with the g₀-unit vector of the
/// orthogonal complement, whose first component is positive by construction.
pub fn gram_schmidt_jets<T: Real>(g: &[Vec<Jet2<T>>]) -> Result<FrameJets<T>> {
    let n = g.len();
    let dim = g[0][0].dim();
    let basis = |axis: usize| -> Vec<Jet2<T>> {
        (0..n)
            .map(|i| Jet2::constant(dim, if i == axis { T::one() } else { T::zero() }))
            .collect()
    };
    let mut cols: Vec<Vec<Jet2<T>>> = Vec::with_capacity(n);
    for axis in 1..n {
        let mut v = basis(axis);
        for prev in &cols {
            let c = jet_dot(g, &v, prev);
            for i in 0..n {
                v[i] = v[i] - c * prev[i];
            }
        }
        let norm = jet_dot(g, &v, &v).try_sqrt()?;
        for item in v.iter_mut() {
            *item = *item / norm;
        }
        cols.push(v);
    }
    let mut v = basis(0);
    for prev in &cols {
        let c = jet_dot(g, &v, prev);
        for i in 0..n {
            v[i] = v[i] - c * prev[i];
        }
    }
    let norm = jet_dot(g, &v, &v).try_sqrt()?;
    for item in v.iter_mut() {
        *item = *item / norm;
    }
    let alpha = v[0];
    let mut p = vec![vec![Jet2::zero(dim); n]; n];
    for i in 0..n {
        p[i][0] = v[i];
        for (c, col) in cols.iter().enumerate() {
            p[i][c + 1] = col[i];
        }
    }
    Ok(FrameJets { p, alpha })
}

/// Frame at one point of a metric field.
pub fn gram_schmidt_frame<T: Real>(g0: &MetricField<T>, x: &[T]) -> Result<FrameJets<T>> {
    let mj = g0.eval(x)?;
    gram_schmidt_jets(&entry_jets(&mj))
}

/// The frame as scalar fields.
pub fn frame_field<T: Real>(g0: &MetricField<T>, periodic: &[bool]) -> FrameField<T> {
    let n = g0.dim();
    let p = (0..n)
        .map(|i| {
            (0..n)
                .map(|col| {
                    let g0 = g0.clone();
                    ScalarField::from_fn(n, periodic, move |x: &[T]| {
                        gram_schmidt_jets(&entry_jets(&g0.eval_raw(x)))
                            .expect("frame orthonormalization failed")
                            .p[i][col]
                    })
                })
                .collect()
        })
        .collect::<Vec<Vec<_>>>();
    let alpha = p[0][0].clone();
    FrameField { p, alpha }
}

// ---------------------------------------------------------------------------
// Diagonal-gauge metric assembly
// ---------------------------------------------------------------------------

fn invert_jet_matrix<T: Real>(a: &[Vec<Jet2<T>>]) -> Result<Vec<Vec<Jet2<T>>>> {
    let n = a.len();
    let dim = a[0][0].dim();
    let mut m: Vec<Vec<Jet2<T>>> = a.to_vec();
    let mut inv: Vec<Vec<Jet2<T>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Jet2::constant(dim, if i == j { T::one() } else { T::zero() }))
                .collect()
        })
        .collect();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r][col].value().abs() > m[piv][col].value().abs() {
                piv = r;
            }
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col];
        if d.value().abs() < T::lit(1e-13) {
            return Err(CoreError::SingularMetric("frame matrix not invertible".into()));
        }
        for j in 0..n {
            m[col][j] = m[col][j].try_div(&d)?;
            inv[col][j] = inv[col][j].try_div(&d)?;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col];
            if f.is_exactly_zero() {
                continue;
            }
            for j in 0..n {
                m[r][j] = m[r][j] - f * m[col][j];
                inv[r][j] = inv[r][j] - f * inv[col][j];
            }
        }
    }
    Ok(inv)
}

/// Assemble the jet of `g̃ = Qᵀ D Q` with `Q = P⁻¹` and
/// `D = diag(1, e^{2h₂}, e^{2h₃}, 1, …)` from the jets of `g₀` and of the
/// exponent pair.
pub fn diagonal_gauge_jet<T: Real>(
    g0_entries: &[Vec<Jet2<T>>],
    h2: Jet2<T>,
    h3: Jet2<T>,
) -> Result<MetricJet2<T>> {
    let n = g0_entries.len();
    let dim = h2.dim();
    let frame = gram_schmidt_jets(g0_entries)?;
    let q = invert_jet_matrix(&frame.p)?;
    let two = T::lit(2.0);
    let mut d = vec![Jet2::constant(dim, T::one()); n];
    d[1] = h2.scale(two).exp();
    d[2] = h3.scale(two).exp();
    Ok(MetricJet2::from_entry_jets(n, |a, b| {
        let mut s = Jet2::zero(dim);
        for r in 0..n {
            s = s + q[r][a] * d[r] * q[r][b];
        }
        s
    }))
}

// ---------------------------------------------------------------------------
// Ψ extraction
// ---------------------------------------------------------------------------

/// The scalar-curvature increment `S(u, v) = Scal^g̃ − Scal^g₀` at `x` for a
/// synthetic exponent jet with only `∂₁h₂ = u`, `∂₁h₃ = v` nonzero.
fn curvature_increment<T: Real>(g0mj: &MetricJet2<T>, u: T, v: T) -> Result<T> {
    let n = g0mj.dim();
    let entries = entry_jets(g0mj);
    let mut h2 = Jet2::zero(n);
    h2.set_grad(0, u);
    let mut h3 = Jet2::zero(n);
    h3.set_grad(0, v);
    let gt = diagonal_gauge_jet(&entries, h2, h3)?;
    Ok(scalar(&gt)? - scalar(g0mj)?)
}

/// Extract `(Ψ₂(x, 0), Ψ₃(x, 0))` — the coefficients multiplying `∂₁h₂`,
/// `∂₁h₃` in the curvature increment — as odd finite differences, which are
/// exact here because the increment is affine+quadratic in `(u, v)`.
pub fn extract_psi<T: Real>(g0: &MetricField<T>, x: &[T]) -> Result<(T, T)> {
    let mj = g0.eval(x)?;
    let u = T::lit(PSI_STEP);
    let two_u = T::lit(2.0) * u;
    let psi2 = (curvature_increment(&mj, u, T::zero())? - curvature_increment(&mj, -u, T::zero())?)
        / two_u;
    let psi3 = (curvature_increment(&mj, T::zero(), u)? - curvature_increment(&mj, T::zero(), -u)?)
        / two_u;
    Ok((psi2, psi3))
}

/// Even part of the increment: recovers the quadratic coefficient, which the
/// frame structure pins at `−2α²`.
pub fn psi_quadratic_coeff<T: Real>(g0: &MetricField<T>, x: &[T]) -> Result<T> {
    let mj = g0.eval(x)?;
    let u = T::lit(PSI_STEP);
    let s_p = curvature_increment(&mj, u, T::zero())?;
    let s_m = curvature_increment(&mj, -u, T::zero())?;
    Ok((s_p + s_m) / (T::lit(2.0) * u * u))
}

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

/// Closed-form flat-torus relation: `L = −2(1,1)` and `R` gathering the
/// remaining derivatives of the diagonal-metric scalar curvature plus
/// `k̃(σ₀) + ε̄`. Residuals equal `Scal^g̃ + k̃ + ε̄` on exponent jets.
pub fn flat_relation<T: Real>(
    k: &ScalarField<T>,
    eps_bar: T,
    epsilon_width: T,
) -> Result<SemilinearRelation<T>> {
    let n = k.dim();
    let kf = k.clone();
    let two = T::lit(2.0);
    let r = move |x: &[T], c: &CheckedSigma<T>, v: &[T], _w: &[Vec<T>]| {
        let mut r = -two * (v[0] * v[0] + v[1] * v[1] + v[0] * v[1]) + kf.value(x) + eps_bar;
        let w0 = c.value();
        r = r - two
            * (-two * w0[0]).exp()
            * (c.second(1, 1)[1] - c.first(1)[0] * c.first(1)[1]
                + c.first(1)[1] * c.first(1)[1]);
        r = r - two
            * (-two * w0[1]).exp()
            * (c.second(2, 2)[0] - c.first(2)[1] * c.first(2)[0]
                + c.first(2)[0] * c.first(2)[0]);
        for i in 3..n {
            r = r - two
                * (c.second(i, i)[0]
                    + c.second(i, i)[1]
                    + c.first(i)[0] * c.first(i)[0]
                    + c.first(i)[1] * c.first(i)[1]
                    + c.first(i)[0] * c.first(i)[1]);
        }
        r
    };
    SemilinearRelation::new(
        vec![ScalarField::constant(n, -two), ScalarField::constant(n, -two)],
        Arc::new(r),
        epsilon_width,
        RelationKind::Curvature,
    )
}

fn checked_to_exponent_jets<T: Real>(
    n: usize,
    c: &CheckedSigma<T>,
    s11: &[T],
    s1star: &[Vec<T>],
) -> (Jet2<T>, Jet2<T>) {
    let build = |comp: usize| {
        let mut jet = Jet2::zero(n);
        jet.set_value(c.value()[comp]);
        jet.set_grad(0, s11[comp]);
        for j in 1..n {
            jet.set_grad(j, c.first(j)[comp]);
            jet.set_hess(0, j, s1star[j - 1][comp]);
            for l in j..n {
                jet.set_hess(j, l, c.second(j, l)[comp]);
            }
        }
        jet
    };
    (build(0), build(1))
}

/// Engine-backed relation for the diagonal-gauge constructions: `R` rebuilds
/// the metric jet with `σ²₁₁ = 0` and runs the curvature engine, so the
/// first-order coefficient functions live inside it implicitly;
/// `L(x) = −2α_x²(1,1)` is the exact affine slope in `σ²₁₁`.
/// `target` is `k̃ + ε̄` for the band constructions and `s̃²` for the thick
/// torus.
pub fn gauge_relation<T: Real>(
    g0: &MetricField<T>,
    target: &ScalarField<T>,
    epsilon_width: T,
    periodic: &[bool],
) -> Result<SemilinearRelation<T>> {
    let n = g0.dim();
    let l_fields: Vec<ScalarField<T>> = (0..2)
        .map(|_| {
            let g0 = g0.clone();
            ScalarField::from_fn(n, periodic, move |x: &[T]| {
                let frame = gram_schmidt_jets(&entry_jets(&g0.eval_raw(x)))
                    .expect("frame orthonormalization failed");
                let a = frame.alpha;
                (a * a).scale(-T::lit(2.0))
            })
        })
        .collect();
    let g0c = g0.clone();
    let target = target.clone();
    let r = move |x: &[T], c: &CheckedSigma<T>, s11: &[T], s1star: &[Vec<T>]| {
        let mj = g0c.eval_raw(x);
        let (h2, h3) = checked_to_exponent_jets(n, c, s11, s1star);
        let gt = diagonal_gauge_jet(&entry_jets(&mj), h2, h3)
            .expect("diagonal gauge assembly failed");
        let scal_t = scalar(&gt).expect("curvature of gauged metric failed");
        let scal_0 = scalar(&mj).expect("curvature of base metric failed");
        scal_t - scal_0 + target.value(x)
    };
    SemilinearRelation::new(l_fields, Arc::new(r), epsilon_width, RelationKind::Curvature)
}

// ---------------------------------------------------------------------------
// Constructions
// ---------------------------------------------------------------------------

/// Flat-torus band construction: loops `γ = (√(k̃+ε̄) cos 2πt)·(1, −1)`,
/// `δ₁ = −((k̃+ε̄)/2)·cos 4πt`, metric `diag(1, e^{2F₁}, e^{2F₂}, 1, …)`.
pub fn flat_torus_construction<T: Real>(inp: &PrescriptionInput<T>) -> Result<Construction<T>> {
    inp.validate()?;
    inp.feasibility_gate()?;
    let n = inp.domain.dim();
    let eps_bar = inp.eps_bar();
    let level = inp.k.add_const(eps_bar);
    let amp = level.sqrt();
    let gamma = cosine_loop(n, &[T::one(), -T::one()], &amp)?;
    let delta = TrigLoopFamily::new(
        n,
        vec![
            LoopComponent {
                a0: ScalarField::zero(n),
                ac: vec![ScalarField::zero(n), level.scale(-T::lit(0.5))],
                as_: vec![ScalarField::zero(n), ScalarField::zero(n)],
            },
            LoopComponent::zero(n, 2),
        ],
    )?;
    let spec = CorrugationSpec::new(
        vec![ScalarField::zero(n), ScalarField::zero(n)],
        gamma.clone(),
        delta.clone(),
        0,
        inp.freq,
    )?;
    let h = corrugate(&spec);
    let mut exponents = vec![ScalarField::zero(n); n];
    exponents[1] = h[0].clone();
    exponents[2] = h[1].clone();
    let metric = MetricField::diagonal_exp(&exponents);
    let relation = flat_relation(&inp.k, eps_bar, eps_bar)?;
    Ok(Construction { metric, gamma, delta, relation, h_fields: h })
}

/// The flat-torus metric alone.
pub fn flat_torus_metric<T: Real>(inp: &PrescriptionInput<T>) -> Result<MetricField<T>> {
    Ok(flat_torus_construction(inp)?.metric)
}

/// Shared tail of the frame-based pipelines: lift the coefficient samples,
/// build the loops, corrugate, and assemble `Qᵀ D Q`.
#[allow(clippy::too_many_arguments)]
fn gauge_construction<T: Real>(
    g0: &MetricField<T>,
    domain: &DomainSpec<T>,
    lift_dims: &[usize],
    amp_numerator: &ScalarField<T>,
    target: &ScalarField<T>,
    epsilon_width: T,
    freq: u32,
    vanish_short_circuit: bool,
) -> Result<Construction<T>> {
    let n = domain.dim();
    // One pass over the lift lattice: frame data and Ψ coefficients.
    let pts = lattice_points(domain, lift_dims)?;
    let mut alpha_data = Vec::with_capacity(pts.len());
    let mut psi2_data = Vec::with_capacity(pts.len());
    let mut psi3_data = Vec::with_capacity(pts.len());
    for p in &pts {
        let frame = gram_schmidt_frame(g0, p)?;
        alpha_data.push(frame.alpha.value());
        let (p2, p3) = extract_psi(g0, p)?;
        psi2_data.push(p2);
        psi3_data.push(p3);
    }
    let alpha_hat = mixed_lift(domain, &LatticeSamples { dims: lift_dims.to_vec(), data: alpha_data })?;
    let psi2_hat = mixed_lift(domain, &LatticeSamples { dims: lift_dims.to_vec(), data: psi2_data })?;
    let psi3_hat = mixed_lift(domain, &LatticeSamples { dims: lift_dims.to_vec(), data: psi3_data })?;

    // γ₁ = (amp_numerator/α̂)·cos 2πt, γ₂ = −γ₁.
    let amp = amp_numerator.div(&alpha_hat);
    let gamma = cosine_loop(n, &[T::one(), -T::one()], &amp)?;

    // 2α̂²·δ₁ = −amp_num²·cos 4πt + (Ψ̂₂ − Ψ̂₃)·(amp_num/α̂)·cos 2πt:
    // mean-free by construction, modes {1, 2}.
    let two = T::lit(2.0);
    let alpha_sq2 = alpha_hat.mul(&alpha_hat).scale(two);
    let mode1 = psi2_hat.sub(&psi3_hat).mul(&amp).div(&alpha_sq2);
    let mode2 = amp_numerator.mul(amp_numerator).neg().div(&alpha_sq2);
    let delta = TrigLoopFamily::new(
        n,
        vec![
            LoopComponent {
                a0: ScalarField::zero(n),
                ac: vec![mode1, mode2],
                as_: vec![ScalarField::zero(n), ScalarField::zero(n)],
            },
            LoopComponent::zero(n, 2),
        ],
    )?;

    let spec = CorrugationSpec::new(
        vec![ScalarField::zero(n), ScalarField::zero(n)],
        gamma.clone(),
        delta.clone(),
        0,
        freq,
    )?;
    let h = corrugate(&spec);

    let joint = {
        let g0 = g0.clone();
        let h2 = h[0].clone();
        let h3 = h[1].clone();
        let vanish = amp_numerator.clone();
        Arc::new(move |x: &[T]| -> MetricJet2<T> {
            if vanish_short_circuit && vanish.eval(x).is_exactly_zero() {
                // Zero loop amplitudes leave the metric untouched; return the
                // base entries directly so equality is exact to the bit.
                return g0.eval_raw(x);
            }
            let mj = g0.eval_raw(x);
            diagonal_gauge_jet(&entry_jets(&mj), h2.eval(x), h3.eval(x))
                .expect("diagonal gauge assembly failed")
        })
    };
    let entries = (0..n)
        .flat_map(|i| {
            (i..n).map({
                let joint = joint.clone();
                let periodic = domain.periodic_mask();
                move |j| {
                    let joint = joint.clone();
                    ScalarField::from_fn(n, &periodic, move |x: &[T]| joint(x).entry_jet(i, j))
                }
            })
        })
        .collect();
    let metric = MetricField::from_entries(n, entries)?.with_joint(joint);
    let relation = gauge_relation(g0, target, epsilon_width, &domain.periodic_mask())?;
    Ok(Construction { metric, gamma, delta, relation, h_fields: h })
}

/// General-torus band construction: frame, Ψ extraction, spectral lift, and
/// the mixed corrugation in the diagonal gauge.
pub fn general_torus_construction<T: Real>(inp: &PrescriptionInput<T>) -> Result<Construction<T>> {
    inp.validate()?;
    if inp.domain.periodic_count() != inp.domain.dim() {
        return Err(CoreError::UnsupportedDomain(
            "general torus construction lives on 𝕋ⁿ".into(),
        ));
    }
    inp.feasibility_gate()?;
    let n = inp.domain.dim();
    let eps_bar = inp.eps_bar();
    let level = inp.k.add_const(eps_bar);
    // √(k̃+ε̄) enters through the same lift lattice as the frame data.
    let dims = vec![inp.lift_res; n];
    let sqrt_level = {
        let lvl = level.clone();
        let samples = crate::spectral::sample_lattice(&inp.domain, &dims, |x| {
            lvl.value(x).max(T::zero()).sqrt()
        })?;
        mixed_lift(&inp.domain, &samples)?
    };
    gauge_construction(
        &inp.g0,
        &inp.domain,
        &dims,
        &sqrt_level,
        &level,
        eps_bar,
        inp.freq,
        false,
    )
}

/// The general-torus metric alone.
pub fn general_torus_metric<T: Real>(inp: &PrescriptionInput<T>) -> Result<MetricField<T>> {
    Ok(general_torus_construction(inp)?.metric)
}

/// Thick-torus construction on `(−δ, 1+δ) × B^{n−d−1} × 𝕋^d`: amplitude
/// `s̃/α`, target `s̃²`; where `s̃` vanishes identically the loops vanish and
/// the output metric equals `h₀` exactly.
#[allow(clippy::too_many_arguments)]
pub fn thick_torus_construction<T: Real>(
    h_ref: &MetricField<T>,
    h0: &MetricField<T>,
    s: &ScalarField<T>,
    nu: T,
    verification_set: &BoxRegion<T>,
    domain: &DomainSpec<T>,
    freq: u32,
    lift_res: usize,
) -> Result<Construction<T>> {
    let _ = h_ref; // the reference metric only enters the C⁰ verification
    if nu <= T::zero() {
        return Err(CoreError::InvalidInput("nu must be positive".into()));
    }
    let boundary_margin = T::lit(0.05);
    for p in domain.grid_points() {
        let sv = s.value(&p);
        if sv < T::zero() {
            return Err(CoreError::DomainError {
                op: "thick_torus_metric",
                value: sv.to_f64().unwrap_or(f64::NAN),
            });
        }
        let outside = !verification_set.contains(domain, &p);
        let near_boundary = domain.boundary_distance(&p) < boundary_margin;
        if (outside || near_boundary) && sv != T::zero() {
            return Err(CoreError::InvalidGeometry(
                "s must vanish outside the verification set and near non-periodic boundaries"
                    .into(),
            ));
        }
    }
    let target = s.mul(s);
    let mut dims = vec![lift_res; domain.dim()];
    for a in 0..domain.dim() - domain.periodic_count() {
        dims[a] = lift_res.max(9);
    }
    gauge_construction(h0, domain, &dims, s, &target, nu, freq, true)
}

/// The thick-torus metric alone.
#[allow(clippy::too_many_arguments)]
pub fn thick_torus_metric<T: Real>(
    h_ref: &MetricField<T>,
    h0: &MetricField<T>,
    s: &ScalarField<T>,
    nu: T,
    verification_set: &BoxRegion<T>,
    domain: &DomainSpec<T>,
    freq: u32,
    lift_res: usize,
) -> Result<MetricField<T>> {
    Ok(thick_torus_construction(h_ref, h0, s, nu, verification_set, domain, freq, lift_res)?
        .metric)
}

// ---------------------------------------------------------------------------
// Bumps and distances
// ---------------------------------------------------------------------------

/// Smoothstep on jets built from the standard `exp(−1/t)` cutoff:
/// exactly 0 for `t ≤ 0`, exactly 1 for `t ≥ 1`, C^∞ in between.
fn smoothstep_jet<T: Real>(t: Jet2<T>) -> Jet2<T> {
    let n = t.dim();
    // exp(−1/t) underflows to exact zero long before 1e-9, so these cutoffs
    // introduce no representable discontinuity while avoiding subnormal
    // division hazards.
    if t.value() <= T::lit(1e-9) {
        return Jet2::zero(n);
    }
    if t.value() >= T::one() - T::lit(1e-9) {
        return Jet2::constant(n, T::one());
    }
    let phi = |a: Jet2<T>| (-(Jet2::constant(n, T::one()) / a)).exp();
    let pt = phi(t);
    let ps = phi(Jet2::constant(n, T::one()) - t);
    pt / (pt + ps)
}

/// Smooth plateau bump: exactly 1 on the plateau, exactly 0 outside the
/// inflated plateau, with the transition profile of the standard cutoff.
/// The gradient magnitude never exceeds 4/margin.
pub fn bump_field<T: Real>(
    plateau: &BoxRegion<T>,
    margin: T,
    domain: &DomainSpec<T>,
) -> Result<ScalarField<T>> {
    let n = domain.dim();
    if margin <= T::zero() {
        return Err(CoreError::InvalidGeometry("bump margin must be positive".into()));
    }
    if plateau.lo.len() != n {
        return Err(CoreError::InvalidGeometry("plateau dimension mismatch".into()));
    }
    // An interval covering an axis' whole range means no cutoff along it
    // (the bump is constant there); such axes need no margin room.
    let full_axis: Vec<bool> = (0..n)
        .map(|a| {
            let (blo, bhi) = domain.axis_bounds(a);
            plateau.lo[a] <= blo && plateau.hi[a] >= bhi
        })
        .collect();
    for a in 0..n {
        if full_axis[a] {
            continue;
        }
        let lo = plateau.lo[a] - margin;
        let hi = plateau.hi[a] + margin;
        if domain.is_periodic_axis(a) {
            if lo < T::zero() || hi > T::one() {
                return Err(CoreError::InvalidGeometry(format!(
                    "plateau+margin leaves the fundamental cell on axis {a}"
                )));
            }
        } else {
            let (blo, bhi) = domain.axis_bounds(a);
            if lo <= blo || hi >= bhi {
                return Err(CoreError::InvalidGeometry(format!(
                    "plateau+margin touches the domain boundary on axis {a}"
                )));
            }
        }
    }
    let lo = plateau.lo.clone();
    let hi = plateau.hi.clone();
    let dom = domain.clone();
    let mask = domain.periodic_mask();
    Ok(ScalarField::from_fn(n, &mask, move |x: &[T]| {
        let xr = dom.reduce(x);
        let inv_m = T::one() / margin;
        let mut out = Jet2::constant(n, T::one());
        for a in 0..n {
            if full_axis[a] {
                continue;
            }
            // Rising edge over [lo−margin, lo], falling over [hi, hi+margin].
            let mut t_up = Jet2::constant(n, (xr[a] - (lo[a] - margin)) * inv_m);
            t_up.set_grad(a, inv_m);
            let mut t_dn = Jet2::constant(n, ((hi[a] + margin) - xr[a]) * inv_m);
            t_dn.set_grad(a, -inv_m);
            out = out * smoothstep_jet(t_up) * smoothstep_jet(t_dn);
            if out.is_exactly_zero() {
                return out;
            }
        }
        out
    }))
}

/// `C⁰` distance of two metrics measured against a reference metric: the sup
/// over the grid of the largest-magnitude eigenvalue of `gref⁻¹ (gA − gB)`.
pub fn c0_distance_g<T: Real>(
    ga: &MetricField<T>,
    gb: &MetricField<T>,
    gref: &MetricField<T>,
    points: &[Vec<T>],
) -> Result<T> {
    let mut sup = T::zero();
    for x in points {
        let delta = ga.values(x).sub(&gb.values(x));
        let gr = gref.values(x);
        let ev = generalized_eigenvalues(&delta, &gr)?;
        for k in 0..gr.dim() {
            sup = sup.max(ev[k].abs());
        }
    }
    Ok(sup)
}

/// Frame invariant residuals at one point: `max |Pᵀ g₀ P − Id|` and the
/// first-row deviation `max_j |P₀ⱼ − δ₀ⱼ α|`.
pub fn frame_invariant_residuals<T: Real>(g0_values: &Mat<T>, frame: &FrameJets<T>) -> (T, T) {
    let n = g0_values.dim();
    let p = Mat::from_fn(n, |i, j| frame.p[i][j].value());
    let ptgp = p.transpose().matmul(&g0_values.matmul(&p));
    let mut dev_orth = T::zero();
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { T::one() } else { T::zero() };
            dev_orth = dev_orth.max((ptgp.get(i, j) - want).abs());
        }
    }
    let mut dev_row = T::zero();
    for j in 1..n {
        dev_row = dev_row.max(p.get(0, j).abs());
    }
    dev_row = dev_row.max((p.get(0, 0) - frame.alpha.value()).abs());
    (dev_orth, dev_row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::fd_gradient;
    use crate::random::random_spd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn torus3(res: usize) -> DomainSpec<f64> {
        DomainSpec::torus(3, &[res, res, res]).unwrap()
    }

    fn flat_input(k_value: f64, freq: u32) -> PrescriptionInput<f64> {
        PrescriptionInput {
            g0: MetricField::euclidean(3),
            k: ScalarField::constant(3, k_value),
            epsilon: 0.1,
            freq,
            domain: torus3(8),
            lift_res: 8,
        }
    }

    #[test]
    fn gram_schmidt_on_identity_is_identity() {
        let frame = gram_schmidt_frame(&MetricField::<f64>::euclidean(3), &[0.1, 0.2, 0.3]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(frame.p[i][j].value(), want);
            }
        }
        assert_eq!(frame.alpha.value(), 1.0);
    }

    #[test]
    fn gram_schmidt_on_diagonal_metric() {
        let diag: [f64; 3] = [2.0, 0.5, 4.0];
        let entries = (0..3)
            .flat_map(|i| {
                (i..3).map(move |j| {
                    if i == j {
                        ScalarField::constant(3, diag[i])
                    } else {
                        ScalarField::zero(3)
                    }
                })
            })
            .collect();
        let g0 = MetricField::from_entries(3, entries).unwrap();
        let frame = gram_schmidt_frame(&g0, &[0.0, 0.0, 0.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { diag[i].powf(-0.5) } else { 0.0 };
                assert!((frame.p[i][j].value() - want).abs() < 1e-14);
            }
        }
        assert!((frame.alpha.value() - 2.0_f64.powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn frame_invariants_on_random_spd_metrics() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..100 {
            let g = random_spd::<f64, _>(&mut rng, 3);
            let entries = (0..3)
                .flat_map(|i| (i..3).map(move |j| ScalarField::constant(3, g.get(i, j))))
                .collect();
            let g0 = MetricField::from_entries(3, entries).unwrap();
            let frame = gram_schmidt_frame(&g0, &[0.5, 0.5, 0.5]).unwrap();
            let (orth, row) = frame_invariant_residuals(&g.to_mat(), &frame);
            assert!(orth < 1e-10, "orthonormality {orth}");
            assert!(row < 1e-10, "first row {row}");
            assert!(frame.alpha.value() > 0.0);
        }
    }

    #[test]
    fn flat_frame_extraction_gives_zero_psi() {
        let g0 = MetricField::<f64>::euclidean(3);
        let (p2, p3) = extract_psi(&g0, &[0.3, 0.6, 0.9]).unwrap();
        assert!(p2.abs() < 1e-9, "psi2 = {p2}");
        assert!(p3.abs() < 1e-9, "psi3 = {p3}");
        let q = psi_quadratic_coeff(&g0, &[0.3, 0.6, 0.9]).unwrap();
        assert!((q + 2.0).abs() < 1e-8, "quadratic coefficient {q}");
    }

    #[test]
    fn flat_construction_amplitude_and_delta_mean() {
        let c = flat_torus_construction(&flat_input(1.0, 4)).unwrap();
        // Amplitude √(1 + 0.05) of the first γ component.
        let x = [0.2, 0.4, 0.8];
        let e = c.gamma.eval(&x, 0.0);
        assert!((e.x_jets[0].value() - 1.05_f64.sqrt()).abs() < 1e-12);
        assert!((e.x_jets[1].value() + 1.05_f64.sqrt()).abs() < 1e-12);
        // δ means vanish exactly.
        assert_eq!(c.delta.mean(&x), vec![0.0, 0.0]);
    }

    #[test]
    fn feasibility_gate_refuses_negative_level_and_accepts_boundary() {
        // min(k) + ε̄ = −0.05: refused.
        assert!(matches!(
            flat_torus_construction(&flat_input(-0.1, 4)),
            Err(CoreError::Infeasible { .. })
        ));
        // Boundary min(k) + ε̄ = 0: accepted.
        assert!(flat_torus_construction(&flat_input(-0.05, 4)).is_ok());
    }

    #[test]
    fn bump_is_one_on_plateau_zero_outside() {
        let dom = torus3(8);
        let plateau = BoxRegion::new(vec![0.4, 0.4, 0.4], vec![0.6, 0.6, 0.6]).unwrap();
        let bump = bump_field(&plateau, 0.15, &dom).unwrap();
        let inside = bump.eval(&[0.5, 0.5, 0.5]);
        assert_eq!(inside.value(), 1.0);
        assert!(!inside.is_exactly_zero());
        for i in 0..3 {
            assert_eq!(inside.grad(i), 0.0);
        }
        let outside = bump.eval(&[0.1, 0.5, 0.5]);
        assert!(outside.is_exactly_zero());
        let mid = bump.eval(&[0.4 - 0.075, 0.5, 0.5]);
        assert!(mid.value() > 0.0 && mid.value() < 1.0);
        // Gradient bound 4/margin over the whole transition, and agreement
        // with finite differences at the midpoint.
        let mut worst_grad = 0.0f64;
        for k in 0..200 {
            let x1 = 0.25 + 0.15 * k as f64 / 199.0;
            worst_grad = worst_grad.max(bump.eval(&[x1, 0.5, 0.5]).grad(0).abs());
        }
        assert!(worst_grad <= 4.0 / 0.15, "max |∂bump| = {worst_grad}");
        let vm = |y: &[f64]| bump.value(y);
        let g = fd_gradient(&vm, &[0.4 - 0.075, 0.5, 0.5], 1e-6);
        assert!((mid.grad(0) - g[0]).abs() < 1e-6);
    }

    #[test]
    fn bump_rejects_bad_geometry() {
        let dom = torus3(8);
        let plateau = BoxRegion::new(vec![0.05, 0.4, 0.4], vec![0.6, 0.6, 0.6]).unwrap();
        assert!(matches!(
            bump_field(&plateau, 0.15, &dom),
            Err(CoreError::InvalidGeometry(_))
        ));
    }

    #[test]
    fn c0_distance_basic_cases() {
        let g = MetricField::<f64>::euclidean(3);
        let pts = torus3(4).grid_points();
        assert_eq!(c0_distance_g(&g, &g, &g, &pts).unwrap(), 0.0);
        // gA = gB + t·gref has distance |t|.
        let t = -0.23;
        let entries = (0..3)
            .flat_map(|i| {
                (i..3).map(move |j| {
                    ScalarField::constant(3, if i == j { 1.0 + t } else { 0.0 })
                })
            })
            .collect();
        let ga = MetricField::from_entries(3, entries).unwrap();
        let d = c0_distance_g(&ga, &g, &g, &pts).unwrap();
        assert!((d - t.abs()) < 1e-13);
    }

    #[test]
    fn general_on_flat_specializes_to_flat_pipeline() {
        let inp = PrescriptionInput {
            g0: MetricField::euclidean(3),
            k: ScalarField::constant(3, 1.0),
            epsilon: 0.1,
            freq: 8,
            domain: torus3(8),
            lift_res: 8,
        };
        let flat = flat_torus_construction(&inp).unwrap();
        let gen = general_torus_construction(&inp).unwrap();
        for x in [[0.12, 0.5, 0.81], [0.9, 0.33, 0.04]] {
            let a = flat.metric.eval_raw(&x);
            let b = gen.metric.eval_raw(&x);
            for i in 0..3 {
                for j in i..3 {
                    assert!(
                        (a.g.get(i, j) - b.g.get(i, j)).abs() < 1e-9,
                        "entry {i}{j} at {x:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn sphere_chart_metric_scalar_matches_engine() {
        // Check diagonal_gauge_jet against a hand-assembled diagonal metric:
        // with h₂ = h₃ = 0 it must return g₀ itself.
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let g = random_spd::<f64, _>(&mut rng, 3);
        let entries: Vec<Vec<Jet2<f64>>> = (0..3)
            .map(|i| (0..3).map(|j| Jet2::constant(3, g.get(i, j))).collect())
            .collect();
        let gt = diagonal_gauge_jet(&entries, Jet2::zero(3), Jet2::zero(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((gt.g.get(i, j) - g.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_field_entries_agree_with_pointwise_frame() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let g = random_spd::<f64, _>(&mut rng, 3);
        let entries = (0..3)
            .flat_map(|i| (i..3).map(move |j| ScalarField::constant(3, g.get(i, j))))
            .collect();
        let g0 = MetricField::from_entries(3, entries).unwrap();
        let ff = frame_field(&g0, &[true, true, true]);
        let x = [0.3, 0.3, 0.3];
        let fj = gram_schmidt_frame(&g0, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(ff.p[i][j].value(&x), fj.p[i][j].value());
            }
        }
        assert_eq!(ff.alpha.value(&x), fj.alpha.value());
    }

    #[test]
    fn thick_vanishing_region_is_bit_exact() {
        let dom = DomainSpec::mixed(3, 2, &[(-0.25, 1.25)], &[9, 6, 6]).unwrap();
        let plateau = BoxRegion::new(vec![0.4, 0.4, 0.4], vec![0.6, 0.6, 0.6]).unwrap();
        let s = bump_field(&plateau, 0.15, &dom).unwrap();
        let c_set = BoxRegion::new(vec![0.2, 0.0, 0.0], vec![0.8, 1.0, 1.0]).unwrap();
        let h0 = MetricField::<f64>::euclidean(3);
        let cons = thick_torus_construction(&h0, &h0, &s, 0.05, &c_set, &dom, 4, 6).unwrap();
        // Outside the bump support the output equals h₀ to the bit.
        for x in [[-0.1, 0.3, 0.3], [1.1, 0.8, 0.2], [0.5, 0.05, 0.9]] {
            let out = cons.metric.eval_raw(&x);
            let base = h0.eval_raw(&x);
            for i in 0..3 {
                for j in i..3 {
                    assert_eq!(out.g.get(i, j).to_bits(), base.g.get(i, j).to_bits());
                    assert_eq!(
                        out.dg(0).get(i, j).to_bits(),
                        base.dg(0).get(i, j).to_bits()
                    );
                }
            }
        }
        // Inside the plateau the metric does move (probe off the integer
        // phases of the fast oscillation, where F crosses zero).
        let moved = cons.metric.eval_raw(&[0.55, 0.5, 0.5]);
        let mut any = false;
        for i in 0..3 {
            if (moved.g.get(i, i) - 1.0).abs() > 1e-6 {
                any = true;
            }
        }
        assert!(any, "metric unchanged on the plateau");
    }

    #[test]
    fn flat_relation_residual_on_zero_jet_is_level() {
        use crate::semilinear::{residual, SigmaJet};
        // Only k̃(σ₀) + ε̄ survives when every jet component vanishes.
        let k = ScalarField::constant(3, 1.0);
        let rel = flat_relation(&k, 0.05, 0.05).unwrap();
        let sigma = SigmaJet::zero(&[0.2, 0.5, 0.9], 2);
        assert_eq!(residual(&rel, &sigma), 1.05);
    }

    #[test]
    fn thick_with_identically_zero_s_returns_h0_everywhere() {
        let dom = DomainSpec::mixed(3, 2, &[(-0.25, 1.25)], &[9, 6, 6]).unwrap();
        let s = ScalarField::zero(3);
        let c_set = BoxRegion::new(vec![0.2, 0.0, 0.0], vec![0.8, 1.0, 1.0]).unwrap();
        let h0 = MetricField::<f64>::euclidean(3);
        let cons = thick_torus_construction(&h0, &h0, &s, 0.05, &c_set, &dom, 4, 6).unwrap();
        for x in dom.grid_points() {
            let out = cons.metric.eval_raw(&x);
            let base = h0.eval_raw(&x);
            for i in 0..3 {
                for j in i..3 {
                    assert_eq!(out.g.get(i, j).to_bits(), base.g.get(i, j).to_bits());
                }
            }
        }
    }

    #[test]
    fn thick_rejects_negative_s() {
        let dom = DomainSpec::mixed(3, 2, &[(-0.25, 1.25)], &[9, 6, 6]).unwrap();
        let s = ScalarField::constant(3, -0.2);
        let c_set = BoxRegion::new(vec![0.2, 0.0, 0.0], vec![0.8, 1.0, 1.0]).unwrap();
        let h0 = MetricField::<f64>::euclidean(3);
        assert!(matches!(
            thick_torus_construction(&h0, &h0, &s, 0.05, &c_set, &dom, 4, 6),
            Err(CoreError::DomainError { .. })
        ));
    }

    #[test]
    fn c0_distance_of_flat_construction_shrinks_like_one_over_n() {
        let flat = MetricField::<f64>::euclidean(3);
        let mut prev = f64::INFINITY;
        for freq in [8u32, 16, 32] {
            let mut inp = flat_input(1.0, freq);
            inp.domain = DomainSpec::torus(3, &[4 * freq as usize, 4, 4]).unwrap();
            let c = flat_torus_construction(&inp).unwrap();
            let pts = inp.domain.grid_points();
            let d = c0_distance_g(&c.metric, &flat, &flat, &pts).unwrap();
            assert!(d < prev * 0.6, "freq {freq}: {d} !< 0.6·{prev}");
            prev = d;
        }
        // Scale check: amplitude ~ e^{2‖F‖} − 1 with ‖F‖ ≈ √1.05/(2πN).
        let expected = (2.0 * (1.05_f64.sqrt() / (2.0 * std::f64::consts::PI * 32.0))).exp_m1();
        assert!((prev - expected).abs() / expected < 0.2, "d = {prev}, expected ≈ {expected}");
    }

    #[test]
    fn fd_oracle_agrees_with_scalar_on_flat_construction() {
        use crate::curvature::fd_metric_jet;
        let freq = 16u32;
        let mut inp = flat_input(1.0, freq);
        inp.domain = DomainSpec::torus(3, &[64, 4, 4]).unwrap();
        let c = flat_torus_construction(&inp).unwrap();
        let metric = c.metric;
        let map = {
            let m = metric.clone();
            move |y: &[f64]| m.values(y)
        };
        // Step tied to the oscillation scale 1/N. With one Richardson
        // refinement the optimum sits near 1e-3/N: much smaller and the
        // second-difference rounding floor ε/h² swamps the 1e-6 target.
        let h = 1e-3 / freq as f64;
        for x in [[0.11, 0.3, 0.7], [0.52, 0.9, 0.1]] {
            let fd = fd_metric_jet(&map, &x, h);
            let an = metric.eval_raw(&x);
            let s_fd = scalar(&fd).unwrap();
            let s_an = scalar(&an).unwrap();
            assert!((s_fd - s_an).abs() < 1e-6, "at {x:?}: fd {s_fd} vs {s_an}");
        }
    }
}
