//! Level-set measure estimation and strongly regular values.

use super::{compose_mean, AlgebraFn, AlgebraKind};
use crate::error::{Error, Result};
use crate::quadrature::{QuadratureOptions, MAX_DIM};
use crate::scalar::Scalar;

pub const DEFAULT_DELTA_SCHEDULE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Estimates of `M(|ψ − α| ≤ δ_k)` along a shrinking schedule, and the
/// linear-in-δ extrapolation to `δ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureEstimate<T> {
    pub alpha: T,
    pub delta_schedule: Vec<T>,
    pub estimates: Vec<T>,
    pub extrapolated: T,
    pub fit_residual: T,
    pub converged: bool,
}

fn panel_budget(dim: usize, delta: f64, period_len: f64) -> usize {
    let want = (4.0 * period_len / delta).ceil() as usize;
    let cap = if dim <= 1 { 1 << 20 } else { 4096 };
    want.clamp(64, cap)
}

fn total_length<T: Scalar>(f: &AlgebraFn<T>) -> f64 {
    match f.kind() {
        AlgebraKind::Periodic { cell, .. } => cell
            .iter()
            .map(|c| c.to_f64_lossy())
            .fold(0.0, f64::max),
        AlgebraKind::TorusLift { .. } => 1.0,
        AlgebraKind::Perturbed { base, .. } => total_length(base),
    }
}

/// Estimate the mean of the indicator of `{|ψ − α| ≤ δ}` for each δ in
/// `schedule` and extrapolate to the measure of the level set `{ψ = α}`.
pub fn level_set_measure<T: Scalar>(
    f: &AlgebraFn<T>,
    alpha: T,
    schedule: &[T],
    quad: &QuadratureOptions<T>,
) -> Result<MeasureEstimate<T>> {
    composed_level_set_measure(&[f], &|s: &[T]| s[0], alpha, schedule, quad)
}

/// Level-set measure of `ψ(y) = map(f₁(y), …, f_k(y))`.
pub fn composed_level_set_measure<T: Scalar>(
    fns: &[&AlgebraFn<T>],
    map: &dyn Fn(&[T]) -> T,
    alpha: T,
    schedule: &[T],
    quad: &QuadratureOptions<T>,
) -> Result<MeasureEstimate<T>> {
    if schedule.is_empty() || schedule.iter().any(|&d| !(d > T::zero())) {
        return Err(Error::InvalidArgument("delta schedule must be positive".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("delta schedule must be strictly decreasing".into()));
    }
    let len = fns
        .iter()
        .filter(|f| f.as_constant().is_none())
        .map(|f| total_length(f))
        .fold(0.0, f64::max)
        .max(1.0);
    let dim = fns.first().map(|f| f.dim()).unwrap_or(1);
    let estimates: Vec<T> = schedule
        .iter()
        .map(|&delta| {
            let opts = quad.with_min_panels(panel_budget(dim, delta.to_f64_lossy(), len));
            compose_mean(
                fns,
                &|s: &[T]| {
                    if (map(s) - alpha).abs() <= delta {
                        T::one()
                    } else {
                        T::zero()
                    }
                },
                &opts,
            )
        })
        .collect::<Result<_>>()?;

    let k = schedule.len().min(3);
    let ds = &schedule[schedule.len() - k..];
    let es = &estimates[estimates.len() - k..];
    let (c, a) = if k == 1 {
        (es[0], T::zero())
    } else {
        linear_fit(ds, es)
    };
    let fit_residual = ds
        .iter()
        .zip(es)
        .map(|(&d, &e)| (e - (c + a * d)).abs())
        .fold(T::zero(), T::max);
    let extrapolated = c.max(T::zero()).min(T::one());
    Ok(MeasureEstimate {
        alpha,
        delta_schedule: schedule.to_vec(),
        estimates,
        extrapolated,
        fit_residual,
        converged: fit_residual < T::of(1e-3),
    })
}

/// Least-squares `y ≈ c + a·x`; returns `(c, a)`.
fn linear_fit<T: Scalar>(x: &[T], y: &[T]) -> (T, T) {
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let sxx: T = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: T = x.iter().zip(y).map(|(&u, &v)| (u - mx) * (v - my)).sum();
    let a = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    (my - a * mx, a)
}

#[derive(Debug, Clone, Copy)]
pub struct RegularityOptions<T> {
    /// Margin must exceed this floor to certify.
    pub floor: T,
    /// Allowed relative change of the margin between the two resolutions.
    pub rel_change: T,
}

impl<T: Scalar> Default for RegularityOptions<T> {
    fn default() -> Self {
        Self {
            floor: T::of(1e-6),
            rel_change: T::of(0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityCertificate<T> {
    pub certified: bool,
    /// Margin on the finer of the two grids.
    pub margin: T,
    pub coarse_margin: T,
}

/// Sample `|ψ − α|² + |∇ψ|²` on a vertex grid of one period cell (or of the
/// unit torus) at `resolution` and `2·resolution` points per axis. The value
/// is certified strongly regular when both minima clear the floor and agree
/// to the configured relative change.
pub fn strongly_regular<T: Scalar>(
    f: &AlgebraFn<T>,
    alpha: T,
    resolution: usize,
    opts: &RegularityOptions<T>,
) -> Result<RegularityCertificate<T>> {
    if !f.has_gradient() {
        return Err(Error::MissingGradient);
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let coarse = grid_margin(f, alpha, resolution)?;
    let fine = grid_margin(f, alpha, 2 * resolution)?;
    let change = (fine - coarse).abs();
    let certified = coarse > opts.floor && fine > opts.floor && change < opts.rel_change * coarse;
    Ok(RegularityCertificate {
        certified,
        margin: fine,
        coarse_margin: coarse,
    })
}

fn grid_margin<T: Scalar>(f: &AlgebraFn<T>, alpha: T, res: usize) -> Result<T> {
    match f.kind() {
        AlgebraKind::Periodic { cell, .. } => {
            let dim = cell.len();
            let mut best = T::infinity();
            let mut y = [T::zero(); MAX_DIM];
            let mut g = [T::zero(); MAX_DIM];
            let total = res.pow(dim as u32);
            for idx in 0..total {
                let mut rem = idx;
                for d in 0..dim {
                    y[d] = cell[d] * T::of_usize(rem % res) / T::of_usize(res);
                    rem /= res;
                }
                let v = f.eval(&y[..dim]) - alpha;
                f.gradient(&y[..dim], &mut g[..dim])?;
                let m = v * v + g[..dim].iter().map(|&x| x * x).sum::<T>();
                best = best.min(m);
            }
            Ok(best)
        }
        AlgebraKind::TorusLift { winding, torus_rule, .. } => {
            let m = winding.len();
            let dim = f.dim();
            let total = res.checked_pow(m as u32).ok_or_else(|| {
                Error::InvalidArgument("torus sampling grid too large".into())
            })?;
            // the lift is dense in the torus, so the infimum over ℝⁿ equals the
            // infimum over torus points; gradients are mapped through Λᵀ
            let grad_rule = f.torus_gradient().ok_or(Error::MissingGradient)?;
            let mut th = [T::zero(); MAX_DIM];
            let mut gt = [T::zero(); MAX_DIM];
            let mut best = T::infinity();
            for idx in 0..total {
                let mut rem = idx;
                for d in 0..m {
                    th[d] = T::of_usize(rem % res) / T::of_usize(res);
                    rem /= res;
                }
                let v = torus_rule(&th[..m]) - alpha;
                grad_rule(&th[..m], &mut gt[..m]);
                let mut g2 = T::zero();
                for j in 0..dim {
                    let gj: T = (0..m).map(|k| gt[k] * winding[k][j]).sum();
                    g2 = g2 + gj * gj;
                }
                best = best.min(v * v + g2);
            }
            Ok(best)
        }
        AlgebraKind::Perturbed { .. } => Err(Error::InvalidArgument(
            "strong regularity is certified on periodic or torus-lift functions only".into(),
        )),
    }
}

impl<T: Scalar> AlgebraFn<T> {
    pub(crate) fn torus_gradient(&self) -> Option<&super::GradientRule<T>> {
        match self.kind() {
            AlgebraKind::TorusLift { .. } => self.gradient.as_ref(),
            _ => None,
        }
    }
}
