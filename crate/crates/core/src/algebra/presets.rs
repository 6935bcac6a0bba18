//! Closed-form members of the algebra addressable by name.

use std::sync::Arc;

use super::{AlgebraFn, AlgebraRecord};
use crate::error::{Error, Result};
use crate::scalar::{wrap, Scalar};

pub const PRESET_NAMES: &[&str] = &[
    "stefan_psi0",
    "tent4",
    "clamp_psi0",
    "cos1",
    "sin1",
    "qp_cos_sqrt2",
    "pap_cos_decay",
    "cos2d",
    "one",
    "zero",
];

/// Period-4 tent: `-y-2` on `[-2,-1]`, `y` on `[-1,1]`, `-y+2` on `[1,2]`.
pub fn psi0_value<T: Scalar>(y: T) -> T {
    let two = T::of(2.0);
    let r = wrap(y + two, T::of(4.0)) - two;
    if r < -T::one() {
        -r - two
    } else if r <= T::one() {
        r
    } else {
        two - r
    }
}

fn psi0_slope<T: Scalar>(y: T) -> T {
    let two = T::of(2.0);
    let r = wrap(y + two, T::of(4.0)) - two;
    if r < -T::one() || r >= T::one() {
        -T::one()
    } else {
        T::one()
    }
}

fn record(name: &str, dim: usize, kind: &str) -> AlgebraRecord {
    AlgebraRecord::preset(name, dim, kind)
}

pub fn stefan_psi0<T: Scalar>() -> AlgebraFn<T> {
    AlgebraFn::periodic(
        vec![T::of(4.0)],
        Arc::new(|y: &[T]| psi0_value(y[0])),
        vec![vec![T::one(), T::of(3.0)]],
    )
    .expect("valid cell")
    .with_gradient(Arc::new(|y: &[T], g: &mut [T]| g[0] = psi0_slope(y[0])))
    .with_record(record("stefan_psi0", 1, "periodic"))
}

/// Nonnegative tent `1 + ψ₀(y − 1)` with range `[0, 2]`.
pub fn tent4<T: Scalar>() -> AlgebraFn<T> {
    AlgebraFn::periodic(
        vec![T::of(4.0)],
        Arc::new(|y: &[T]| T::one() + psi0_value(y[0] - T::one())),
        vec![vec![T::zero(), T::of(2.0)]],
    )
    .expect("valid cell")
    .with_gradient(Arc::new(|y: &[T], g: &mut [T]| g[0] = psi0_slope(y[0] - T::one())))
    .with_record(record("tent4", 1, "periodic"))
}

/// `ψ₀` clamped to `[-level, level]`, which has plateaus of measure
/// `(1 - level)/2` at each end of its range.
pub fn clamp_psi0<T: Scalar>(level: T) -> AlgebraFn<T> {
    let two = T::of(2.0);
    let four = T::of(4.0);
    let breaks = vec![level, two - level, two + level, four - level];
    AlgebraFn::periodic(
        vec![four],
        Arc::new(move |y: &[T]| psi0_value(y[0]).max(-level).min(level)),
        vec![breaks],
    )
    .expect("valid cell")
    .with_gradient(Arc::new(move |y: &[T], g: &mut [T]| {
        let v = psi0_value(y[0]);
        g[0] = if v.abs() < level { psi0_slope(y[0]) } else { T::zero() };
    }))
    .with_record(record("clamp_psi0", 1, "periodic"))
}

pub fn cos1<T: Scalar>() -> AlgebraFn<T> {
    let tau = T::PI() + T::PI();
    AlgebraFn::periodic(
        vec![T::one()],
        Arc::new(move |y: &[T]| (tau * y[0]).cos()),
        vec![vec![T::of(0.5)]],
    )
        .expect("valid cell")
        .with_gradient(Arc::new(move |y: &[T], g: &mut [T]| g[0] = -tau * (tau * y[0]).sin()))
        .with_record(record("cos1", 1, "periodic"))
}

pub fn sin1<T: Scalar>() -> AlgebraFn<T> {
    let tau = T::PI() + T::PI();
    AlgebraFn::periodic(
        vec![T::one()],
        Arc::new(move |y: &[T]| (tau * y[0]).sin()),
        vec![vec![T::of(0.25), T::of(0.75)]],
    )
        .expect("valid cell")
        .with_gradient(Arc::new(move |y: &[T], g: &mut [T]| g[0] = tau * (tau * y[0]).cos()))
        .with_record(record("sin1", 1, "periodic"))
}

/// `cos(y) + cos(√2 y)` lifted from the 2-torus.
pub fn qp_cos_sqrt2<T: Scalar>() -> AlgebraFn<T> {
    let tau = T::PI() + T::PI();
    let winding = vec![vec![T::one() / tau], vec![T::of(2.0).sqrt() / tau]];
    AlgebraFn::torus_lift(
        winding,
        Arc::new(move |th: &[T]| (tau * th[0]).cos() + (tau * th[1]).cos()),
        vec![vec![T::of(0.5)], vec![T::of(0.5)]],
    )
    .expect("valid winding")
    .with_gradient(Arc::new(move |th: &[T], g: &mut [T]| {
        g[0] = -tau * (tau * th[0]).sin();
        g[1] = -tau * (tau * th[1]).sin();
    }))
    .with_record(record("qp_cos_sqrt2", 1, "torus_lift"))
}

/// `cos(y) + cos(√2 y) + 1/(1 + |y|)`.
pub fn pap_cos_decay<T: Scalar>() -> AlgebraFn<T> {
    AlgebraFn::perturbed(
        qp_cos_sqrt2(),
        Arc::new(|y: &[T]| T::one() / (T::one() + y[0].abs())),
        T::one(),
    )
    .expect("valid base")
    .with_record(record("pap_cos_decay", 1, "perturbed"))
}

/// `cos(2πy₁) + cos(2πy₂)` on the unit square.
pub fn cos2d<T: Scalar>() -> AlgebraFn<T> {
    let tau = T::PI() + T::PI();
    AlgebraFn::periodic(
        vec![T::one(), T::one()],
        Arc::new(move |y: &[T]| (tau * y[0]).cos() + (tau * y[1]).cos()),
        vec![vec![T::of(0.5)], vec![T::of(0.5)]],
    )
    .expect("valid cell")
    .with_gradient(Arc::new(move |y: &[T], g: &mut [T]| {
        g[0] = -tau * (tau * y[0]).sin();
        g[1] = -tau * (tau * y[1]).sin();
    }))
    .with_record(record("cos2d", 2, "periodic"))
}

/// Look up a preset by name with default parameters.
pub fn preset<T: Scalar>(name: &str) -> Result<AlgebraFn<T>> {
    Ok(match name {
        "stefan_psi0" => stefan_psi0(),
        "tent4" => tent4(),
        "clamp_psi0" => clamp_psi0(T::of(0.5)).with_record(record("clamp_psi0", 1, "periodic")),
        "cos1" => cos1(),
        "sin1" => sin1(),
        "qp_cos_sqrt2" => qp_cos_sqrt2(),
        "pap_cos_decay" => pap_cos_decay(),
        "cos2d" => cos2d(),
        "one" => AlgebraFn::constant(1, T::one()).with_record(record("one", 1, "constant")),
        "zero" => AlgebraFn::constant(1, T::zero()).with_record(record("zero", 1, "constant")),
        other => return Err(Error::UnknownPreset(other.to_string())),
    })
}
