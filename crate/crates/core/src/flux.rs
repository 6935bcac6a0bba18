//! Two-scale pressure functions `f(x, y, u)`.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{compose_mean, presets as algebra_presets, sampling_span, AlgebraFn};
use crate::error::{Error, Result};
use crate::profile::MonotoneProfile;
use crate::quadrature::{adaptive_simpson, QuadratureOptions};
use crate::scalar::Scalar;

/// `(x, carrier values, u) ↦ ℝ`.
pub type CarrierRule<T> = Arc<dyn Fn(T, &[T], T) -> T + Send + Sync>;
/// `x ↦ ℝ`.
pub type XRule<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// `c(x, y) = scale(x)·base(y) + shift(x)`.
#[derive(Clone)]
pub struct Coefficient<T: Scalar> {
    pub base: AlgebraFn<T>,
    pub scale: Option<XRule<T>>,
    pub shift: Option<XRule<T>>,
}

impl<T: Scalar> Coefficient<T> {
    pub fn new(base: AlgebraFn<T>) -> Self {
        Self {
            base,
            scale: None,
            shift: None,
        }
    }

    pub fn constant(c: T) -> Self {
        Self::new(AlgebraFn::constant(1, c))
    }

    pub fn with_scale(mut self, scale: XRule<T>) -> Self {
        self.scale = Some(scale);
        self
    }

    pub fn with_shift(mut self, shift: XRule<T>) -> Self {
        self.shift = Some(shift);
        self
    }

    pub fn is_x_independent(&self) -> bool {
        self.scale.is_none() && self.shift.is_none()
    }

    /// `(scale(x), shift(x))`.
    pub fn affine_at(&self, x: T) -> (T, T) {
        (
            self.scale.as_ref().map_or(T::one(), |s| s(x)),
            self.shift.as_ref().map_or(T::zero(), |s| s(x)),
        )
    }

    pub fn eval(&self, x: T, y: T) -> T {
        let (a, b) = self.affine_at(x);
        a * self.base.eval1(y) + b
    }
}

#[derive(Clone)]
pub struct Type1<T: Scalar> {
    /// Functions of `y` the rules depend on; empty for y-independent fluxes.
    pub carriers: Vec<AlgebraFn<T>>,
    pub f: CarrierRule<T>,
    /// Inverse in `u`; found by bracketing when absent.
    pub g: Option<CarrierRule<T>>,
    /// `∂f/∂u`; central differences when absent.
    pub df: Option<CarrierRule<T>>,
    pub x_independent: bool,
}

#[derive(Clone)]
pub struct Type2<T: Scalar> {
    pub h: Coefficient<T>,
    pub s: Coefficient<T>,
    pub profile: MonotoneProfile<T>,
    /// Generalized inverse of `profile`.
    pub inverse: MonotoneProfile<T>,
    /// Jump set of `inverse`.
    pub jumps: Vec<T>,
}

#[derive(Clone)]
pub enum FluxKind<T: Scalar> {
    Type1(Type1<T>),
    Type2(Type2<T>),
}

#[derive(Clone)]
pub struct Flux<T: Scalar> {
    pub kind: FluxKind<T>,
    pub domain: (T, T),
    pub id: String,
}

impl<T: Scalar> fmt::Debug for Flux<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            FluxKind::Type1(_) => "type1",
            FluxKind::Type2(_) => "type2",
        };
        f.debug_struct("Flux")
            .field("id", &self.id)
            .field("kind", &kind)
            .field("domain", &self.domain)
            .finish()
    }
}

fn carrier_values<T: Scalar>(carriers: &[AlgebraFn<T>], y: T, out: &mut [T; 8]) -> usize {
    for (o, c) in out.iter_mut().zip(carriers) {
        *o = c.eval1(y);
    }
    carriers.len()
}

/// Solve `f(u) = v` for strictly increasing, coercive `f` by bracketing and bisection.
pub fn invert_increasing<T: Scalar>(f: impl Fn(T) -> T, v: T) -> T {
    let mut lo = -T::one();
    let mut hi = T::one();
    let mut guard = 0;
    while f(lo) > v && guard < 200 {
        lo = lo + lo;
        guard += 1;
    }
    guard = 0;
    while f(hi) < v && guard < 200 {
        hi = hi + hi;
        guard += 1;
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::of(0.5)
}

impl<T: Scalar> Type1<T> {
    pub(crate) fn f_at(&self, x: T, c: &[T], u: T) -> T {
        (self.f)(x, c, u)
    }

    pub(crate) fn df_at(&self, x: T, c: &[T], u: T) -> T {
        match &self.df {
            Some(df) => df(x, c, u),
            None => {
                let h = T::of(1e-7) * (T::one() + u.abs());
                (self.f_at(x, c, u + h) - self.f_at(x, c, u - h)) / (h + h)
            }
        }
    }

    pub(crate) fn g_at(&self, x: T, c: &[T], v: T) -> T {
        match &self.g {
            Some(g) => g(x, c, v),
            None => invert_increasing(|u| self.f_at(x, c, u), v),
        }
    }
}

impl<T: Scalar> Type2<T> {
    /// `(h(x,y), S(x,y))`.
    pub fn coefficients(&self, x: T, y: T) -> (T, T) {
        (self.h.eval(x, y), self.s.eval(x, y))
    }
}

impl<T: Scalar> Flux<T> {
    pub fn type1(domain: (T, T), id: &str, t: Type1<T>) -> Result<Self> {
        if t.carriers.len() > 8 {
            return Err(Error::InvalidArgument("at most 8 carriers".into()));
        }
        if t.carriers.iter().any(|c| c.dim() != 1) {
            return Err(Error::InvalidArgument("carriers must be one-dimensional".into()));
        }
        check_domain(domain)?;
        Ok(Self {
            kind: FluxKind::Type1(t),
            domain,
            id: id.to_string(),
        })
    }

    pub fn type2(
        domain: (T, T),
        id: &str,
        h: Coefficient<T>,
        s: Coefficient<T>,
        profile: MonotoneProfile<T>,
    ) -> Result<Self> {
        check_domain(domain)?;
        if h.base.dim() != 1 || s.base.dim() != 1 {
            return Err(Error::InvalidArgument("coefficients must be one-dimensional".into()));
        }
        let (inverse, jumps) = profile.generalized_inverse()?;
        Ok(Self {
            kind: FluxKind::Type2(Type2 {
                h,
                s,
                profile,
                inverse,
                jumps,
            }),
            domain,
            id: id.to_string(),
        })
    }

    pub fn is_type2(&self) -> bool {
        matches!(self.kind, FluxKind::Type2(_))
    }

    /// True when `f` does not depend on `y`.
    pub fn is_y_independent(&self) -> bool {
        match &self.kind {
            FluxKind::Type1(t) => t.carriers.iter().all(|c| c.as_constant().is_some()),
            FluxKind::Type2(t) => t.h.base.as_constant().is_some() && t.s.base.as_constant().is_some(),
        }
    }

    /// True when `f` does not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            FluxKind::Type1(t) => t.x_independent,
            FluxKind::Type2(t) => t.h.is_x_independent() && t.s.is_x_independent(),
        }
    }

    /// The functions of `y` this flux is built from.
    pub fn oscillating_parts(&self) -> Vec<&AlgebraFn<T>> {
        match &self.kind {
            FluxKind::Type1(t) => t.carriers.iter().collect(),
            FluxKind::Type2(t) => vec![&t.h.base, &t.s.base],
        }
    }

    /// Length of a window over which sampling in `y` sees every value.
    pub fn y_span(&self) -> T {
        sampling_span(&self.oscillating_parts(), T::of(64.0))
    }

    pub fn eval(&self, x: T, y: T, u: T) -> T {
        match &self.kind {
            FluxKind::Type1(t) => {
                let mut c = [T::zero(); 8];
                let k = carrier_values(&t.carriers, y, &mut c);
                t.f_at(x, &c[..k], u)
            }
            FluxKind::Type2(t) => {
                let (h, s) = t.coefficients(x, y);
                h * t.profile.eval(u) + s
            }
        }
    }

    /// `g(x, y, v)`, the inverse of `f` in `u`; right-continuous at jumps.
    pub fn pressure_inverse(&self, x: T, y: T, v: T) -> T {
        match &self.kind {
            FluxKind::Type1(t) => {
                let mut c = [T::zero(); 8];
                let k = carrier_values(&t.carriers, y, &mut c);
                t.g_at(x, &c[..k], v)
            }
            FluxKind::Type2(t) => {
                let (h, s) = t.coefficients(x, y);
                t.inverse.eval_right_limit((v - s) / h)
            }
        }
    }

    /// `g` written in terms of the values `c` of [`Flux::oscillating_parts`].
    pub fn pressure_inverse_carriers(&self, x: T, c: &[T], v: T) -> T {
        match &self.kind {
            FluxKind::Type1(t) => t.g_at(x, c, v),
            FluxKind::Type2(t) => {
                let (hs, ht) = t.h.affine_at(x);
                let (ss, st) = t.s.affine_at(x);
                let h = hs * c[0] + ht;
                let s = ss * c[1] + st;
                t.inverse.eval_right_limit((v - s) / h)
            }
        }
    }

    /// `ḡ(x, v)`, the mean over `y` of `g(x, ·, v)`.
    pub fn homogenized_g(&self, x: T, v: T, quad: &QuadratureOptions<T>) -> Result<T> {
        match &self.kind {
            FluxKind::Type1(t) => {
                if t.carriers.is_empty() {
                    return Ok(t.g_at(x, &[], v));
                }
                let refs: Vec<&AlgebraFn<T>> = t.carriers.iter().collect();
                compose_mean(&refs, &|c: &[T]| t.g_at(x, c, v), quad)
            }
            FluxKind::Type2(t) => {
                let (hs, ht) = t.h.affine_at(x);
                let (ss, st) = t.s.affine_at(x);
                compose_mean(
                    &[&t.h.base, &t.s.base],
                    &|c: &[T]| {
                        let h = hs * c[0] + ht;
                        let s = ss * c[1] + st;
                        t.inverse.eval_right_limit((v - s) / h)
                    },
                    quad,
                )
            }
        }
    }

    /// `G_*(x, y, v) = ∫₀^v g(x, y, s) ds`.
    pub fn g_star(&self, x: T, y: T, v: T) -> Result<T> {
        match &self.kind {
            FluxKind::Type1(t) => {
                let mut c = [T::zero(); 8];
                let k = carrier_values(&t.carriers, y, &mut c);
                g_star_type1(t, x, &c[..k], v)
            }
            FluxKind::Type2(t) => {
                let (h, s) = t.coefficients(x, y);
                Ok(h * t.inverse.integral(-s / h, (v - s) / h))
            }
        }
    }

    /// `Ḡ_*(x, v)`, the mean over `y` of `G_*(x, ·, v)`.
    pub fn gbar_star(&self, x: T, v: T, quad: &QuadratureOptions<T>) -> Result<T> {
        match &self.kind {
            FluxKind::Type1(t) => {
                if t.carriers.is_empty() {
                    return g_star_type1(t, x, &[], v);
                }
                let refs: Vec<&AlgebraFn<T>> = t.carriers.iter().collect();
                let err = std::sync::Mutex::new(None);
                let m = compose_mean(
                    &refs,
                    &|c: &[T]| match g_star_type1(t, x, c, v) {
                        Ok(val) => val,
                        Err(e) => {
                            *err.lock().unwrap() = Some(e);
                            T::zero()
                        }
                    },
                    quad,
                )?;
                match err.into_inner().unwrap() {
                    Some(e) => Err(e),
                    None => Ok(m),
                }
            }
            FluxKind::Type2(t) => {
                let (hs, ht) = t.h.affine_at(x);
                let (ss, st) = t.s.affine_at(x);
                compose_mean(
                    &[&t.h.base, &t.s.base],
                    &|c: &[T]| {
                        let h = hs * c[0] + ht;
                        let s = ss * c[1] + st;
                        h * t.inverse.integral(-s / h, (v - s) / h)
                    },
                    quad,
                )
            }
        }
    }

    /// `(1−θ)Ḡ_*(v₁) + θḠ_*(v₂) − Ḡ_*((1−θ)v₁ + θv₂)`.
    pub fn convexity_gap(&self, x: T, v1: T, v2: T, theta: T, quad: &QuadratureOptions<T>) -> Result<T> {
        if !(v1 < v2) || !(theta > T::zero() && theta < T::one()) {
            return Err(Error::InvalidArgument("need v1 < v2 and 0 < θ < 1".into()));
        }
        let one = T::one();
        let mid = (one - theta) * v1 + theta * v2;
        let a = self.gbar_star(x, v1, quad)?;
        let b = self.gbar_star(x, v2, quad)?;
        let c = self.gbar_star(x, mid, quad)?;
        Ok((one - theta) * a + theta * b - c)
    }

    /// Half the minimal chord slope of `ḡ(x, ·)` over 256 subintervals of `[v1, v2]`.
    pub fn convexity_constant(&self, x: T, v1: T, v2: T, quad: &QuadratureOptions<T>) -> Result<T> {
        let n = 256;
        let h = (v2 - v1) / T::of_usize(n);
        let vals: Vec<T> = (0..=n)
            .map(|i| self.homogenized_g(x, v1 + h * T::of_usize(i), quad))
            .collect::<Result<_>>()?;
        let min = vals
            .windows(2)
            .map(|w| (w[1] - w[0]) / h)
            .fold(T::infinity(), T::min);
        Ok(min * T::of(0.5))
    }
}

fn g_star_type1<T: Scalar>(t: &Type1<T>, x: T, c: &[T], v: T) -> Result<T> {
    adaptive_simpson(|s| t.g_at(x, c, s), T::zero(), v, T::of(1e-10), 40)
}

fn check_domain<T: Scalar>((a, b): (T, T)) -> Result<()> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid domain ({a}, {b})")));
    }
    Ok(())
}

/// Outcome of [`validate_flux`].
#[derive(Debug, Clone, PartialEq)]
pub struct FluxReport<T> {
    pub monotonicity_violations: usize,
    pub lipschitz: T,
    pub min_h: Option<T>,
    pub max_boundary_trace: T,
    /// `(max f at the lower end, min f at the upper end)` of the u-range.
    pub coercivity_witness: (T, T),
    /// Constant `C` with `|u₁ − u₂| ≥ C⁻¹|f̄(u₁) − f̄(u₂)|`.
    pub fbar_lipschitz_bound: T,
}

#[derive(Debug, Clone)]
pub struct ValidationOptions<T> {
    pub h_floor: T,
    pub boundary_tol: T,
    /// Oscillation scales at which the boundary trace is checked.
    pub epsilons: Vec<T>,
}

impl<T: Scalar> Default for ValidationOptions<T> {
    fn default() -> Self {
        Self {
            h_floor: T::of(1e-6),
            boundary_tol: T::of(1e-12),
            epsilons: [0.25, 0.125, 0.0625, 0.03125].iter().map(|&e| T::of(e)).collect(),
        }
    }
}

/// Scan `f` on an `(x, y, u)` grid and check the structural hypotheses.
pub fn validate_flux<T: Scalar>(
    flux: &Flux<T>,
    u_range: (T, T),
    resolution: usize,
    opts: &ValidationOptions<T>,
) -> Result<FluxReport<T>> {
    if !(u_range.0 < u_range.1) || resolution < 2 {
        return Err(Error::InvalidArgument("need a nonempty u-range and resolution ≥ 2".into()));
    }
    let (a, b) = flux.domain;
    let span = flux.y_span();
    let nx = if flux.is_x_independent() { 1 } else { resolution };
    let ny = if flux.is_y_independent() { 1 } else { resolution };
    let nu = resolution;
    let du = (u_range.1 - u_range.0) / T::of_usize(nu - 1);
    let strict = !flux.is_type2();

    let mut violations = 0usize;
    let mut lipschitz = T::zero();
    let mut low_max = T::neg_infinity();
    let mut high_min = T::infinity();
    let mut min_h: Option<T> = None;
    for ix in 0..nx {
        let x = if nx == 1 {
            (a + b) * T::of(0.5)
        } else {
            a + (b - a) * T::of_usize(ix) / T::of_usize(nx - 1)
        };
        for iy in 0..ny {
            let y = span * T::of_usize(iy) / T::of_usize(ny);
            if let FluxKind::Type2(t) = &flux.kind {
                let h = t.h.eval(x, y);
                min_h = Some(min_h.map_or(h, |m: T| m.min(h)));
            }
            let mut prev = flux.eval(x, y, u_range.0);
            low_max = low_max.max(prev);
            for iu in 1..nu {
                let u = u_range.0 + du * T::of_usize(iu);
                let cur = flux.eval(x, y, u);
                let d = cur - prev;
                if d < T::zero() || (strict && d <= T::zero()) {
                    violations += 1;
                }
                lipschitz = lipschitz.max(d.abs() / du);
                prev = cur;
            }
            high_min = high_min.min(prev);
        }
    }

    let mut trace = T::zero();
    for &x in &[a, b] {
        for &eps in &opts.epsilons {
            let y = x / eps;
            let v = match &flux.kind {
                FluxKind::Type1(_) => flux.eval(x, y, T::zero()),
                FluxKind::Type2(t) => t.s.eval(x, y),
            };
            trace = trace.max(v.abs());
        }
    }

    let mut failures = Vec::new();
    if violations > 0 {
        failures.push(format!("monotonicity: {violations} decreasing steps"));
    }
    if let Some(h) = min_h {
        if !(h > opts.h_floor) {
            failures.push(format!("h-floor: min h = {h} does not exceed {}", opts.h_floor));
        }
    }
    if !(trace < opts.boundary_tol) {
        failures.push(format!("boundary: |S| or |f(·,0)| reaches {trace} on the boundary"));
    }
    if !(high_min > low_max) {
        failures.push(format!(
            "coercivity: f at the top of the u-range ({high_min}) does not exceed f at the bottom ({low_max})"
        ));
    }
    if !failures.is_empty() {
        return Err(Error::ValidationFailure(failures));
    }
    Ok(FluxReport {
        monotonicity_violations: 0,
        lipschitz,
        min_h,
        max_boundary_trace: trace,
        coercivity_witness: (low_max, high_min),
        fbar_lipschitz_bound: lipschitz,
    })
}

/// Named fluxes.
pub mod presets {
    use super::*;

    pub const NAMES: &[&str] = &["stefan", "stefan-flat", "heat", "cubic", "cube", "harmonic"];

    /// `F(u) + ψ₀(y)` with the Stefan `F` on `Ω = (−2, 2)`.
    pub fn stefan<T: Scalar>() -> Flux<T> {
        stefan_scaled(T::one())
    }

    /// `F(u) + amplitude·ψ₀(y)`.
    pub fn stefan_scaled<T: Scalar>(amplitude: T) -> Flux<T> {
        let s = algebra_presets::stefan_psi0::<T>().affine(amplitude, T::zero());
        Flux::type2(
            (T::of(-2.0), T::of(2.0)),
            "stefan",
            Coefficient::constant(T::one()),
            Coefficient::new(s),
            MonotoneProfile::stefan(),
        )
        .expect("valid Stefan flux")
    }

    /// Stefan `F` with no oscillation.
    pub fn stefan_flat<T: Scalar>() -> Flux<T> {
        Flux::type2(
            (T::of(-2.0), T::of(2.0)),
            "stefan-flat",
            Coefficient::constant(T::one()),
            Coefficient::constant(T::zero()),
            MonotoneProfile::stefan(),
        )
        .expect("valid flux")
    }

    /// `f(u) = u` on `(0, 1)`.
    pub fn heat<T: Scalar>() -> Flux<T> {
        let id: CarrierRule<T> = Arc::new(|_, _, u| u);
        Flux::type1(
            (T::zero(), T::one()),
            "heat",
            Type1 {
                carriers: vec![],
                f: id.clone(),
                g: Some(id),
                df: Some(Arc::new(|_, _, _| T::one())),
                x_independent: true,
            },
        )
        .expect("valid flux")
    }

    /// `f(u) = u³ + u`.
    pub fn cubic<T: Scalar>() -> Flux<T> {
        Flux::type1(
            (T::zero(), T::one()),
            "cubic",
            Type1 {
                carriers: vec![],
                f: Arc::new(|_, _, u| u * u * u + u),
                g: None,
                df: Some(Arc::new(|_, _, u| T::of(3.0) * u * u + T::one())),
                x_independent: true,
            },
        )
        .expect("valid flux")
    }

    /// `f(u) = u³`, degenerate at zero.
    pub fn cube<T: Scalar>() -> Flux<T> {
        Flux::type1(
            (T::zero(), T::one()),
            "cube",
            Type1 {
                carriers: vec![],
                f: Arc::new(|_, _, u| u * u * u),
                g: Some(Arc::new(|_, _, v| v.cbrt())),
                df: Some(Arc::new(|_, _, u| T::of(3.0) * u * u)),
                x_independent: true,
            },
        )
        .expect("valid flux")
    }

    /// `f(y, u) = (2 + cos 2πy)·u` on `(−2, 2)`.
    pub fn harmonic<T: Scalar>() -> Flux<T> {
        let a = algebra_presets::cos1::<T>().affine(T::one(), T::of(2.0));
        Flux::type1(
            (T::of(-2.0), T::of(2.0)),
            "harmonic",
            Type1 {
                carriers: vec![a],
                f: Arc::new(|_, c, u| c[0] * u),
                g: Some(Arc::new(|_, c, v| v / c[0])),
                df: Some(Arc::new(|_, c, _| c[0])),
                x_independent: true,
            },
        )
        .expect("valid flux")
    }

    pub fn by_name<T: Scalar>(name: &str) -> Result<Flux<T>> {
        Ok(match name {
            "stefan" => stefan(),
            "stefan-flat" => stefan_flat(),
            "heat" => heat(),
            "cubic" => cubic(),
            "cube" => cube(),
            "harmonic" => harmonic(),
            other => return Err(Error::UnknownPreset(other.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;
    use proptest::prelude::*;

    fn quad() -> QuadratureOptions<f64> {
        QuadratureOptions::default()
    }

    fn bisect(f: impl Fn(f64) -> f64, v: f64) -> f64 {
        let (mut lo, mut hi) = (-50.0, 50.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) < v {
                lo = m
            } else {
                hi = m
            }
        }
        hi
    }

    #[test]
    fn stefan_flux_values() {
        let f = stefan::<f64>();
        assert_eq!(f.eval(0.3, 1.0, 0.0), 1.0);
        assert_eq!(f.eval(-1.0, 0.0, 2.0), 1.5);
        assert_eq!(heat::<f64>().eval(0.5, 0.2, 5.0), 5.0);
    }

    #[test]
    fn stefan_inverse_against_bisection() {
        let f = stefan::<f64>();
        let fwd = |u: f64| f.eval(0.0, 0.0, u);
        assert!((f.pressure_inverse(0.0, 0.0, 1.0) - 1.5).abs() < 1e-12);
        assert!((f.pressure_inverse(0.0, 0.0, -1.0) + 1.5).abs() < 1e-12);
        for v in [-2.3, -0.7, 0.4, 3.1] {
            assert!((f.pressure_inverse(0.0, 0.0, v) - bisect(fwd, v)).abs() < 1e-10);
        }
        // right-continuous at the jump
        assert_eq!(f.pressure_inverse(0.0, 0.0, 0.0), 0.5);
        assert!((cubic::<f64>().pressure_inverse(0.5, 0.0, 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stefan_homogenized_g_closed_form() {
        let f = stefan::<f64>();
        // ḡ(v) = 3v/2 on |v| ≤ 1 and v ± 1/2 outside
        for (v, want) in [(1.0, 1.5), (2.0, 2.5), (-3.0, -3.5), (0.4, 0.6), (0.0, 0.0)] {
            let got = f.homogenized_g(0.0, v, &quad()).unwrap();
            assert!((got - want).abs() < 1e-10, "v={v}: {got}");
        }
    }

    #[test]
    fn y_independent_homogenized_g_is_g() {
        let f = cubic::<f64>();
        for v in [-3.0, 0.0, 2.0] {
            let want = f.pressure_inverse(0.1, 0.0, v);
            assert_eq!(f.homogenized_g(0.1, v, &quad()).unwrap(), want);
        }
    }

    #[test]
    fn harmonic_mean_oracle() {
        // M(1/(2 + cos 2πy)) = 1/√3
        let f = harmonic::<f64>();
        let got = f.homogenized_g(0.0, 1.0, &quad()).unwrap();
        assert!((got - 1.0 / 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn g_star_values() {
        let heat = heat::<f64>();
        assert!((heat.g_star(0.0, 0.0, 2.0).unwrap() - 2.0).abs() < 1e-10);
        let f = stefan::<f64>();
        assert!((f.g_star(0.0, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(f.g_star(0.0, 0.7, 0.0).unwrap(), 0.0);
        assert_eq!(heat.g_star(0.0, 0.0, 0.0).unwrap(), 0.0);
        // oracle: integrate the inverse directly
        let direct = adaptive_simpson(|s| f.pressure_inverse(0.0, 0.7, s), 0.0, 1.3, 1e-12, 50).unwrap();
        assert!((f.g_star(0.0, 0.7, 1.3).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn convexity_gap_values() {
        let heat = heat::<f64>();
        let gap = heat.convexity_gap(0.0, 0.0, 2.0, 0.5, &quad()).unwrap();
        assert!((gap - 0.5).abs() < 1e-9);
        let f = stefan::<f64>();
        let gap = f.convexity_gap(0.0, -1.0, 1.0, 0.5, &quad()).unwrap();
        assert!(gap >= 0.75 - 1e-9, "{gap}");
        let c = f.convexity_constant(0.0, -1.0, 1.0, &quad()).unwrap();
        assert!((c - 0.75).abs() < 1e-9);
        let tiny = f.convexity_gap(0.0, -1.0, 1.0, 1e-9, &quad()).unwrap();
        assert!(tiny.abs() < 1e-7);
        assert!(f.convexity_gap(0.0, 1.0, -1.0, 0.5, &quad()).is_err());
    }

    #[test]
    fn validation() {
        let opts = ValidationOptions::default();
        let r = validate_flux(&stefan::<f64>(), (-4.0, 4.0), 65, &opts).unwrap();
        assert!((r.lipschitz - 1.0).abs() < 1e-12);
        assert_eq!(r.monotonicity_violations, 0);
        assert!(validate_flux(&cube::<f64>(), (-4.0, 4.0), 64, &opts).is_ok());

        let dip = algebra_presets::cos1::<f64>().affine(1.0, 1.0);
        let bad = Flux::type2(
            (-2.0, 2.0),
            "dip",
            Coefficient::new(dip),
            Coefficient::constant(0.0),
            MonotoneProfile::stefan(),
        )
        .unwrap();
        match validate_flux(&bad, (-4.0, 4.0), 64, &opts) {
            Err(Error::ValidationFailure(v)) => assert!(v.iter().any(|s| s.starts_with("h-floor"))),
            other => panic!("{other:?}"),
        }

        let offset = Flux::type2(
            (-2.0, 2.0),
            "offset",
            Coefficient::constant(1.0),
            Coefficient::new(algebra_presets::cos1()),
            MonotoneProfile::stefan(),
        )
        .unwrap();
        match validate_flux(&offset, (-4.0, 4.0), 16, &opts) {
            Err(Error::ValidationFailure(v)) => assert!(v.iter().any(|s| s.starts_with("boundary"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(by_name::<f64>("nope"), Err(Error::UnknownPreset(_))));
        for name in NAMES {
            assert!(by_name::<f64>(name).is_ok());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn forward_of_inverse(y in -10.0f64..10.0, v in -6.0f64..6.0) {
            let f = stefan::<f64>();
            let u = f.pressure_inverse(0.0, y, v);
            prop_assert!((f.eval(0.0, y, u) - v).abs() < 1e-12);
        }

        #[test]
        fn homogenization_is_order_reversing(shift in 0.01f64..1.0, v in -3.0f64..3.0) {
            // f₂ = f₁ + shift pointwise, so g₂ ≤ g₁ and ḡ₂ ≤ ḡ₁
            let f1 = stefan::<f64>();
            let s2 = algebra_presets::stefan_psi0::<f64>().affine(1.0, shift);
            let f2 = Flux::type2((-2.0, 2.0), "shifted", Coefficient::constant(1.0), Coefficient::new(s2), MonotoneProfile::stefan()).unwrap();
            let g1 = f1.homogenized_g(0.0, v, &quad()).unwrap();
            let g2 = f2.homogenized_g(0.0, v, &quad()).unwrap();
            prop_assert!(g2 <= g1 + 1e-12);
        }
    }
}
