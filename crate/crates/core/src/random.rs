//! Seeded generators for the identity batteries: random SPD metric jets,
//! diagonal metric specs, and frame perturbations. Everything is driven by
//! a caller-provided RNG so reports are reproducible from a recorded seed.

use rand::Rng;

use crate::curvature::MetricJet2;
use crate::field::ScalarField;
use crate::jet::Jet2;
use crate::linalg::{Mat, SymMat};
use crate::num::Real;

/// Random SPD metric jet: `g = AᵀA + 0.4·Id` with entries of `A`, `∂g`, `∂²g`
/// uniform in moderate ranges. The stated symmetries hold by storage; no
/// integrability is implied (none is needed for pointwise identities).
pub fn random_metric_jet<T: Real, R: Rng>(rng: &mut R, n: usize) -> MetricJet2<T> {
    let a = Mat::from_fn(n, |_, _| T::lit(rng.random_range(-0.5..0.5)));
    let mut mj = MetricJet2::flat(n);
    mj.g = SymMat::from_fn(n, |i, j| {
        let mut s = if i == j { T::lit(0.4) } else { T::zero() };
        for k in 0..n {
            s = s + a.get(k, i) * a.get(k, j);
        }
        s
    });
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                mj.set_dg(k, i, j, T::lit(rng.random_range(-0.4..0.4)));
            }
        }
        for l in k..n {
            for i in 0..n {
                for j in i..n {
                    mj.set_d2g(k, l, i, j, T::lit(rng.random_range(-0.4..0.4)));
                }
            }
        }
    }
    mj
}

/// Random SPD matrix (no derivatives), for frame tests.
pub fn random_spd<T: Real, R: Rng>(rng: &mut R, n: usize) -> SymMat<T> {
    random_metric_jet::<T, R>(rng, n).g
}

/// Random low-mode trigonometric field on 𝕋ⁿ with amplitude budget `amp`.
pub fn random_trig_field<T: Real, R: Rng>(rng: &mut R, n: usize, amp: f64) -> ScalarField<T> {
    let mut f = ScalarField::constant(n, T::lit(rng.random_range(-amp..amp)));
    for axis in 0..n {
        for freq in 1..=2u32 {
            let a = rng.random_range(-amp..amp) / freq as f64;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            f = f.add(&ScalarField::wave(n, axis, freq, T::lit(a), T::lit(phase), true));
        }
    }
    f
}

/// Random synthetic 2-jet with entries bounded by `amp`.
pub fn random_jet<T: Real, R: Rng>(rng: &mut R, n: usize, amp: f64) -> Jet2<T> {
    let mut j = Jet2::constant(n, T::lit(rng.random_range(-amp..amp)));
    for i in 0..n {
        j.set_grad(i, T::lit(rng.random_range(-amp..amp)));
        for k in i..n {
            j.set_hess(i, k, T::lit(rng.random_range(-amp..amp)));
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn generated_metrics_are_spd_and_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mj = random_metric_jet::<f64, _>(&mut rng, 3);
        let (lo, _) = mj.g.eigen_range();
        assert!(lo > 0.3);
        let mut rng2 = ChaCha12Rng::seed_from_u64(7);
        let mj2 = random_metric_jet::<f64, _>(&mut rng2, 3);
        assert_eq!(mj.g.get(0, 1), mj2.g.get(0, 1));
        assert_eq!(mj.dg(2).get(1, 1), mj2.dg(2).get(1, 1));
    }
}
