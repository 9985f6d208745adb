//! Property tests for the crate's standing invariants: jet arithmetic against
//! finite differences, loop-operator identities, periodicity, and relation
//! translation invariance.

use corrugate_core::corrugation::{corrugate, CorrugationSpec};
use corrugate_core::fd::{fd_gradient, fd_hessian, fd_gradient_refined};
use corrugate_core::field::ScalarField;
use corrugate_core::jet::Jet2;
use corrugate_core::loops::{cosine_loop, LoopComponent, TrigLoopFamily};
use corrugate_core::prescription::{flat_relation, PrescriptionInput};
use corrugate_core::semilinear::{residual, SigmaJet};
use proptest::prelude::*;

/// A composite field with enough structure to exercise every jet rule.
fn composite_jet(x: &[f64], a: f64, b: f64) -> Jet2<f64> {
    let t = Jet2::coordinate(x, 0);
    let u = Jet2::coordinate(x, 1);
    let v = Jet2::coordinate(x, 2);
    let c = |w: f64| Jet2::constant(3, w);
    let numer = (t.scale(a).sin() * u.cos() + c(1.5)).exp() + v * v * t;
    let denom = c(2.0) + (u.scale(b)).cos() * (v.sin());
    numer / denom
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    /// Gradients and Hessians of composite fields match central finite
    /// differences with O(h²) consistency between two steps.
    #[test]
    fn jets_match_finite_differences(
        x0 in 0.05f64..0.95,
        x1 in 0.05f64..0.95,
        x2 in 0.05f64..0.95,
        a in 0.5f64..2.0,
        b in 0.5f64..2.0,
    ) {
        let x = [x0, x1, x2];
        let jet = composite_jet(&x, a, b);
        let vm = |y: &[f64]| composite_jet(y, a, b).value();
        let scale = jet.value().abs().max(1.0);

        // Coarse and fine steps, Richardson-consistent: the fine-step error
        // must be about two orders below the coarse one (O(h²) with h ↓ 10).
        let g3 = fd_gradient(&vm, &x, 1e-3);
        let g4 = fd_gradient(&vm, &x, 1e-4);
        for i in 0..3 {
            let e3 = (jet.grad(i) - g3[i]).abs() / scale;
            let e4 = (jet.grad(i) - g4[i]).abs() / scale;
            prop_assert!(e3 < 1e-4, "coarse gradient error {e3}");
            prop_assert!(e4 < 1e-5, "fine gradient error {e4}");
        }
        let refined = fd_gradient_refined(&vm, &x, 1e-3);
        for (i, r) in refined.iter().enumerate().take(3) {
            prop_assert!((jet.grad(i) - r).abs() / scale < 1e-8);
        }
        let h3 = fd_hessian(&vm, &x, 1e-3);
        for i in 0..3 {
            for j in i..3 {
                let e = (jet.hess(i, j) - h3.get(i, j)).abs() / scale;
                prop_assert!(e < 1e-3, "hessian error {e} at ({i},{j})");
            }
        }
        // Hessian symmetry is bitwise.
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(jet.hess(i, j).to_bits(), jet.hess(j, i).to_bits());
            }
        }
    }

    /// d/dt Int(γ) = γ − γ̄, Int(γ)(x, 0) = 0, and 1-periodicity, for loop
    /// families with arbitrary coefficient values.
    #[test]
    fn integral_loop_operator_identities(
        a0 in -2.0f64..2.0,
        ac1 in -2.0f64..2.0,
        as1 in -2.0f64..2.0,
        ac2 in -2.0f64..2.0,
        as2 in -2.0f64..2.0,
        x0 in 0.0f64..1.0,
        t in 0.0f64..1.0,
    ) {
        let n = 3;
        let comp = LoopComponent {
            a0: ScalarField::constant(n, a0),
            ac: vec![ScalarField::constant(n, ac1), ScalarField::constant(n, ac2)],
            as_: vec![ScalarField::constant(n, as1), ScalarField::constant(n, as2)],
        };
        let fam = TrigLoopFamily::new(n, vec![comp]).unwrap();
        let int = fam.int_loop();
        let x = [x0, 0.3, 0.7];

        let at0 = int.eval(&x, 0.0).x_jets[0].value();
        prop_assert!(at0.abs() < 1e-14, "Int(γ)(x,0) = {at0}");

        let lhs = int.eval(&x, t).t_deriv[0];
        let rhs = fam.eval(&x, t).x_jets[0].value() - fam.mean(&x)[0];
        prop_assert!((lhs - rhs).abs() < 1e-12);

        let p0 = int.eval(&x, t).x_jets[0].value();
        let p1 = int.eval(&x, t + 1.0).x_jets[0].value();
        prop_assert!((p0 - p1).abs() < 1e-14);
    }

    /// Corrugated fields stay 1-periodic along every periodic axis.
    #[test]
    fn corrugation_preserves_periodicity(
        freq in 1u32..20,
        amp in 0.1f64..1.5,
        x0 in 0.0f64..1.0,
        x1 in 0.0f64..1.0,
        x2 in 0.0f64..1.0,
        axis in 0usize..3,
    ) {
        let n = 3;
        let field = ScalarField::wave(n, 1, 1, amp, 0.3, true).add_const(1.2);
        let gamma = cosine_loop(n, &[1.0], &field).unwrap();
        let spec = CorrugationSpec::new(
            vec![ScalarField::zero(n)],
            gamma,
            TrigLoopFamily::zero(n, 1, 1),
            0,
            freq,
        )
        .unwrap();
        let out = corrugate(&spec);
        let x = [x0, x1, x2];
        let mut shifted = x;
        shifted[axis] += 1.0;
        let a = out[0].eval(&x);
        let b = out[0].eval(&shifted);
        prop_assert!((a.value() - b.value()).abs() < 1e-12);
        prop_assert!((a.grad(axis) - b.grad(axis)).abs() < 1e-9 * (1.0 + a.grad(axis).abs()));
    }

    /// The flat relation's residual is invariant under unit translations of
    /// the base point along periodic axes.
    #[test]
    fn relation_residual_translation_invariance(
        x0 in 0.0f64..1.0,
        x1 in 0.0f64..1.0,
        x2 in 0.0f64..1.0,
        v0 in -1.0f64..1.0,
        v1 in -1.0f64..1.0,
        w in -1.0f64..1.0,
        axis in 0usize..3,
    ) {
        let n = 3;
        let k = ScalarField::wave(n, 1, 1, 0.3, 0.0, true).add_const(1.0);
        let rel = flat_relation(&k, 0.05, 0.05).unwrap();
        let x = [x0, x1, x2];
        let mut sigma = SigmaJet::zero(&x, 2);
        sigma.set_first(0, 0, v0);
        sigma.set_first(1, 1, v1);
        sigma.set_second(0, 0, 0, w);
        sigma.set_second(1, 2, 1, -w);
        sigma.set_value(0, 0.1);
        let r0 = residual(&rel, &sigma);
        let mut shifted = x;
        shifted[axis] += 1.0;
        sigma.set_base(&shifted);
        let r1 = residual(&rel, &sigma);
        prop_assert!((r0 - r1).abs() < 1e-12, "{r0} vs {r1}");
    }

    /// Feasibility gate: strictly negative levels refuse, nonnegative pass.
    #[test]
    fn feasibility_gate_sign(level in -1.0f64..1.0) {
        use corrugate_core::curvature::MetricField;
        use corrugate_core::domain::DomainSpec;
        let eps = 0.1;
        let inp = PrescriptionInput {
            g0: MetricField::euclidean(3),
            k: ScalarField::constant(3, level - 0.05),
            epsilon: eps,
            freq: 2,
            domain: DomainSpec::torus(3, &[8, 8, 8]).unwrap(),
            lift_res: 8,
        };
        let result = corrugate_core::prescription::flat_torus_construction(&inp);
        if level < 0.0 {
            prop_assert!(result.is_err());
        } else {
            prop_assert!(result.is_ok());
        }
    }
}
