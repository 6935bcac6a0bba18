//! Adaptive quadrature used for mean values and profile integrals.
//!
//! Integrands in this crate are frequently discontinuous (compositions with
//! generalized inverses, level-set indicators), so the 1-D kernel is an
//! adaptive Gauss–Kronrod 7/15 rule that bisects down to a depth limit and
//! books whatever it could not resolve. Panels are accumulated with pairwise
//! summation in a fixed order.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Maximum dimension handled by [`integrate_box`].
pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions<T> {
    /// Absolute tolerance on the whole integral.
    pub abs_tol: T,
    /// Maximum bisection depth below an initial panel.
    pub max_depth: u32,
    /// Number of initial panels over the full range (per axis).
    pub min_panels: usize,
}

impl<T: Scalar> Default for QuadratureOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::of(1e-12),
            max_depth: 48,
            min_panels: 64,
        }
    }
}

impl<T: Scalar> QuadratureOptions<T> {
    pub fn with_min_panels(mut self, n: usize) -> Self {
        self.min_panels = n.max(1);
        self
    }
}

fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::of(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut k = fc * T::of(WGK[7]);
    let mut g = fc * T::of(WG[3]);
    for j in 0..7 {
        let dx = h * T::of(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        k = k + s * T::of(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::of(WG[j / 2]);
        }
    }
    let k = k * h;
    let g = g * h;
    // a feature narrower than the gap between an endpoint and its nearest
    // node is invisible to both rules; an endpoint value far off the
    // extrapolation of the two outer nodes flags it
    let gap = h * T::of(1.0 - XGK[0]);
    let ratio = T::of((1.0 - XGK[0]) / (XGK[0] - XGK[1]));
    let near = h * T::of(XGK[0]);
    let next = h * T::of(XGK[1]);
    let edge = |end: T, x1: T, x2: T| {
        let (fe, f1, f2) = (f(end), f(x1), f(x2));
        let mismatch = (fe - f1).abs();
        let predicted = (f1 - f2).abs() * ratio;
        let floor = T::epsilon() * T::of(1e3) * (T::one() + f1.abs());
        if mismatch > T::of(100.0) * predicted + floor {
            mismatch * gap
        } else {
            T::zero()
        }
    };
    let e = edge(a, c - near, c - next) + edge(b, c + near, c + next);
    (k, (k - g).abs() + e)
}

/// Book-keeping for a (possibly nested) adaptive integration.
#[derive(Debug, Default)]
struct Unresolved<T: Scalar> {
    err: Cell<f64>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> Unresolved<T> {
    fn add(&self, e: T) {
        self.err.set(self.err.get() + e.to_f64_lossy());
    }
}

fn initial_panels<T: Scalar>(a: T, b: T, breaks: &[T], min_panels: usize) -> Vec<(T, T)> {
    let mut cuts: Vec<T> = breaks
        .iter()
        .copied()
        .filter(|&t| t > a && t < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let len = b - a;
    let mut panels = Vec::new();
    let mut left = a;
    for right in cuts.into_iter().chain(std::iter::once(b)) {
        let frac = ((right - left) / len).to_f64_lossy();
        let n = ((frac * min_panels as f64).ceil() as usize).max(1);
        let w = (right - left) / T::of_usize(n);
        for k in 0..n {
            let lo = left + w * T::of_usize(k);
            let hi = if k + 1 == n { right } else { lo + w };
            panels.push((lo, hi));
        }
        left = right;
    }
    panels
}

fn adaptive_1d<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    breaks: &[T],
    opts: &QuadratureOptions<T>,
    unresolved: &Unresolved<T>,
) -> T {
    if b <= a {
        return T::zero();
    }
    let len = b - a;
    let mut accepted: Vec<T> = Vec::new();
    for (lo, hi) in initial_panels(a, b, breaks, opts.min_panels) {
        // depth-first with an explicit stack; right child pushed first so
        // panels are accepted in left-to-right order
        let mut stack = vec![(lo, hi, 0u32)];
        while let Some((l, r, depth)) = stack.pop() {
            let (val, err) = gk15(f, l, r);
            let local_tol = opts.abs_tol * (r - l) / len;
            let floor = T::epsilon() * T::of(64.0) * val.abs();
            if err <= local_tol || err <= floor {
                accepted.push(val);
            } else if depth >= opts.max_depth {
                unresolved.add(err);
                accepted.push(val);
            } else {
                let m = (l + r) * T::of(0.5);
                stack.push((m, r, depth + 1));
                stack.push((l, m, depth + 1));
            }
        }
    }
    pairwise_sum(&accepted)
}

/// Adaptive integral of `f` over `[a, b]`. `breaks` are known kinks or jumps
/// that are placed on panel boundaries.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    breaks: &[T],
    opts: &QuadratureOptions<T>,
) -> Result<T> {
    let unresolved = Unresolved::<T>::default();
    let v = adaptive_1d(&f, a, b, breaks, opts, &unresolved);
    finish(v, &unresolved, opts)
}

fn finish<T: Scalar>(v: T, unresolved: &Unresolved<T>, opts: &QuadratureOptions<T>) -> Result<T> {
    let tol = opts.abs_tol.to_f64_lossy();
    let u = unresolved.err.get();
    if !v.is_finite() || u > tol {
        return Err(Error::NonConvergedQuadrature {
            unresolved: if v.is_finite() { u } else { f64::INFINITY },
            tol,
        });
    }
    Ok(v)
}

/// Nested adaptive integral over the box `[lo, hi]` (dimension `lo.len()`,
/// at most [`MAX_DIM`]). `breaks[k]` lists known discontinuity coordinates
/// along axis `k`.
pub fn integrate_box<T: Scalar>(
    f: &dyn Fn(&[T]) -> T,
    lo: &[T],
    hi: &[T],
    breaks: &[Vec<T>],
    opts: &QuadratureOptions<T>,
) -> Result<T> {
    let dim = lo.len();
    assert!(dim >= 1 && dim <= MAX_DIM && hi.len() == dim);
    let unresolved = Unresolved::<T>::default();
    let point = [T::zero(); MAX_DIM];
    let v = nested(f, lo, hi, breaks, opts, point, 0, &unresolved);
    finish(v, &unresolved, opts)
}

#[allow(clippy::too_many_arguments)]
fn nested<T: Scalar>(
    f: &dyn Fn(&[T]) -> T,
    lo: &[T],
    hi: &[T],
    breaks: &[Vec<T>],
    opts: &QuadratureOptions<T>,
    point: [T; MAX_DIM],
    axis: usize,
    unresolved: &Unresolved<T>,
) -> T {
    let dim = lo.len();
    let no_breaks: Vec<T> = Vec::new();
    let axis_breaks = breaks.get(axis).unwrap_or(&no_breaks);
    if axis + 1 == dim {
        let g = |t: T| {
            let mut p = point;
            p[axis] = t;
            f(&p[..dim])
        };
        return adaptive_1d(&g, lo[axis], hi[axis], axis_breaks, opts, unresolved);
    }
    // the outer tolerance is shared among the inner integrals by the
    // length of the outer interval
    let mut inner = *opts;
    inner.abs_tol = opts.abs_tol / (hi[axis] - lo[axis]);
    let g = |t: T| {
        let mut p = point;
        p[axis] = t;
        nested(f, lo, hi, breaks, &inner, p, axis + 1, unresolved)
    };
    adaptive_1d(&g, lo[axis], hi[axis], axis_breaks, opts, unresolved)
}

/// Adaptive Simpson rule with Richardson correction.
pub fn adaptive_simpson<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    tol: T,
    max_depth: u32,
) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let (a, b, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let six = T::of(6.0);
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * T::of(0.5);
    let fm = f(m);
    let whole = (b - a) / six * (fa + T::of(4.0) * fm + fb);
    let unresolved = Unresolved::<T>::default();
    let v = simpson_rec(&f, a, b, fa, fm, fb, whole, tol, max_depth, &unresolved);
    let opts = QuadratureOptions {
        abs_tol: tol,
        max_depth,
        min_panels: 1,
    };
    finish(v, &unresolved, &opts).map(|v| v * sign)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
    unresolved: &Unresolved<T>,
) -> T {
    let half = T::of(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let six = T::of(6.0);
    let four = T::of(4.0);
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    let fifteen = T::of(15.0);
    if delta.abs() <= fifteen * tol {
        return left + right + delta / fifteen;
    }
    if depth == 0 {
        unresolved.add(delta.abs() / fifteen);
        return left + right + delta / fifteen;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol * half, depth - 1, unresolved)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol * half, depth - 1, unresolved)
}
