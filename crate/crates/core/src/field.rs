//! Scalar fields: pure evaluators from domain points to 2-jets, with a
//! periodicity mask recording which axes are ℤ-periodic.

use std::sync::Arc;

use crate::jet::Jet2;
use crate::linalg::MAX_DIM;
use crate::num::Real;

type Evaluator<T> = Arc<dyn Fn(&[T]) -> Jet2<T> + Send + Sync>;

/// A smooth scalar quantity over the domain, evaluable to a full 2-jet at any
/// point. Evaluation is pure: repeated evaluation at the same point returns
/// identical jets, and fields may be evaluated concurrently.
#[derive(Clone)]
pub struct ScalarField<T> {
    n: usize,
    periodic: [bool; MAX_DIM],
    eval: Evaluator<T>,
}

impl<T: Real> ScalarField<T> {
    /// Wrap an evaluator. `periodic[a]` declares 1-periodicity along axis `a`.
    pub fn from_fn(
        n: usize,
        periodic: &[bool],
        f: impl Fn(&[T]) -> Jet2<T> + Send + Sync + 'static,
    ) -> Self {
        let mut mask = [false; MAX_DIM];
        mask[..n].copy_from_slice(&periodic[..n]);
        Self { n, periodic: mask, eval: Arc::new(f) }
    }

    /// Constant field; periodic along every axis.
    pub fn constant(n: usize, v: T) -> Self {
        Self {
            n,
            periodic: [true; MAX_DIM],
            eval: Arc::new(move |_x: &[T]| Jet2::constant(n, v)),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(n, T::zero())
    }

    /// The coordinate map `x ↦ x[axis]`: not periodic along its own axis.
    pub fn coordinate(n: usize, axis: usize) -> Self {
        let mut periodic = [true; MAX_DIM];
        periodic[axis] = false;
        Self { n, periodic, eval: Arc::new(move |x: &[T]| Jet2::coordinate(x, axis)) }
    }

    /// `amp · trig(2π · freq · x[axis] + phase)` with exact jets; 1-periodic
    /// along `axis` since `freq` is an integer.
    pub fn wave(n: usize, axis: usize, freq: u32, amp: T, phase: T, use_sin: bool) -> Self {
        let omega = T::two_pi() * T::of_usize(freq as usize);
        Self::from_fn(n, &[true; MAX_DIM][..n], move |x: &[T]| {
            let arg = Jet2::coordinate(x, axis).scale(omega) + Jet2::constant(x.len(), phase);
            let t = if use_sin { arg.sin() } else { arg.cos() };
            t.scale(amp)
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn periodic_mask(&self) -> &[bool] {
        &self.periodic[..self.n]
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> Jet2<T> {
        debug_assert_eq!(x.len(), self.n, "point dimension mismatch");
        (self.eval)(x)
    }

    #[inline]
    pub fn value(&self, x: &[T]) -> T {
        self.eval(x).value()
    }

    fn combine_mask(&self, other: &Self) -> [bool; MAX_DIM] {
        let mut mask = [false; MAX_DIM];
        for a in 0..self.n {
            mask[a] = self.periodic[a] && other.periodic[a];
        }
        mask
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self { n: self.n, periodic: self.combine_mask(other), eval: Arc::new(move |x: &[T]| f(x) + g(x)) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self { n: self.n, periodic: self.combine_mask(other), eval: Arc::new(move |x: &[T]| f(x) - g(x)) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self { n: self.n, periodic: self.combine_mask(other), eval: Arc::new(move |x: &[T]| f(x) * g(x)) }
    }

    /// Pointwise quotient; panics on evaluation where the denominator falls
    /// under the division guard (callers keep denominators bounded away from
    /// zero on their domains).
    pub fn div(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self { n: self.n, periodic: self.combine_mask(other), eval: Arc::new(move |x: &[T]| f(x) / g(x)) }
    }

    pub fn scale(&self, c: T) -> Self {
        let f = self.eval.clone();
        Self { n: self.n, periodic: self.periodic, eval: Arc::new(move |x: &[T]| f(x).scale(c)) }
    }

    pub fn neg(&self) -> Self {
        self.scale(-T::one())
    }

    pub fn add_const(&self, c: T) -> Self {
        let f = self.eval.clone();
        let n = self.n;
        Self {
            n,
            periodic: self.periodic,
            eval: Arc::new(move |x: &[T]| f(x) + Jet2::constant(n, c)),
        }
    }

    pub fn exp(&self) -> Self {
        let f = self.eval.clone();
        Self { n: self.n, periodic: self.periodic, eval: Arc::new(move |x: &[T]| f(x).exp()) }
    }

    /// Pointwise square root; panics on non-positive evaluation (inputs are
    /// gated for positivity before fields are built).
    pub fn sqrt(&self) -> Self {
        let f = self.eval.clone();
        Self {
            n: self.n,
            periodic: self.periodic,
            eval: Arc::new(move |x: &[T]| f(x).try_sqrt().expect("sqrt of non-positive field value")),
        }
    }

    pub fn sin(&self) -> Self {
        let f = self.eval.clone();
        Self { n: self.n, periodic: self.periodic, eval: Arc::new(move |x: &[T]| f(x).sin()) }
    }

    pub fn cos(&self) -> Self {
        let f = self.eval.clone();
        Self { n: self.n, periodic: self.periodic, eval: Arc::new(move |x: &[T]| f(x).cos()) }
    }
}
