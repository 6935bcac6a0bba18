//! Functions with a mean value: periodic, quasi-periodic (torus lift) and
//! quasi-periodic plus a decaying perturbation.
//!
//! The compactification of the algebra is never built. Every "for almost
//! every z" statement is evaluated through the mean of a composition, which
//! for the representations below reduces to a quadrature over one period
//! cell or over the unit torus.

mod ergodic;
mod level_set;
pub mod presets;
mod record;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_box, QuadratureOptions, MAX_DIM};
use crate::scalar::{wrap, Scalar};

pub use ergodic::{ball_average, ergodicity_defect, BallAverageOptions};
pub use level_set::{
    composed_level_set_measure, level_set_measure, strongly_regular, MeasureEstimate, RegularityCertificate,
    RegularityOptions, DEFAULT_DELTA_SCHEDULE,
};
pub use record::AlgebraRecord;

/// Pointwise evaluation rule on ℝⁿ (or on the torus for a lift).
pub type Rule<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Gradient rule: writes the gradient at the first argument into the second.
pub type GradientRule<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// Largest number of functions accepted by [`compose_mean`].
pub const MAX_COMPOSE: usize = 8;

#[derive(Clone)]
pub enum AlgebraKind<T: Scalar> {
    /// `rule` is periodic with the box `[0, cell)` as period cell. `breaks[k]`
    /// lists coordinates in `[0, cell[k])` where the rule has kinks or jumps.
    Periodic {
        cell: Vec<T>,
        rule: Rule<T>,
        breaks: Vec<Vec<T>>,
    },
    /// `eval(y) = torus_rule(Λ·y mod 1)` with `winding` the m×n matrix Λ
    /// (one row per frequency). Rows are assumed rationally independent.
    TorusLift {
        winding: Vec<Vec<T>>,
        torus_rule: Rule<T>,
        breaks: Vec<Vec<T>>,
    },
    /// `base + tail` with `|tail(y)| <= decay / (1 + |y|)`.
    Perturbed {
        base: Arc<AlgebraFn<T>>,
        tail: Rule<T>,
        decay: T,
    },
}

/// A bounded uniformly continuous function on ℝⁿ (n ∈ {1, 2}) that has a mean value.
#[derive(Clone)]
pub struct AlgebraFn<T: Scalar> {
    dim: usize,
    kind: AlgebraKind<T>,
    /// For `TorusLift` this is the gradient with respect to the torus variable.
    gradient: Option<GradientRule<T>>,
    constant: Option<T>,
    record: Option<AlgebraRecord>,
}

impl<T: Scalar> fmt::Debug for AlgebraFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            AlgebraKind::Periodic { cell, .. } => format!("Periodic(cell={cell:?})"),
            AlgebraKind::TorusLift { winding, .. } => format!("TorusLift(winding={winding:?})"),
            AlgebraKind::Perturbed { decay, .. } => format!("Perturbed(decay={decay:?})"),
        };
        f.debug_struct("AlgebraFn")
            .field("dim", &self.dim)
            .field("kind", &kind)
            .field("record", &self.record)
            .finish()
    }
}

impl<T: Scalar> AlgebraFn<T> {
    pub fn periodic(cell: Vec<T>, rule: Rule<T>, breaks: Vec<Vec<T>>) -> Result<Self> {
        let dim = cell.len();
        check_dim(dim)?;
        if cell.iter().any(|&c| !(c > T::zero()) || !c.is_finite()) {
            return Err(Error::InvalidArgument("period cell edges must be positive".into()));
        }
        let mut breaks = breaks;
        breaks.resize(dim, Vec::new());
        Ok(Self {
            dim,
            kind: AlgebraKind::Periodic { cell, rule, breaks },
            gradient: None,
            constant: None,
            record: None,
        })
    }

    pub fn torus_lift(winding: Vec<Vec<T>>, torus_rule: Rule<T>, breaks: Vec<Vec<T>>) -> Result<Self> {
        let m = winding.len();
        if m == 0 || m > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "torus lift needs between 1 and {MAX_DIM} frequencies, got {m}"
            )));
        }
        let dim = winding[0].len();
        check_dim(dim)?;
        if winding.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidArgument("winding rows must share the dimension".into()));
        }
        let mut breaks = breaks;
        breaks.resize(m, Vec::new());
        Ok(Self {
            dim,
            kind: AlgebraKind::TorusLift {
                winding,
                torus_rule,
                breaks,
            },
            gradient: None,
            constant: None,
            record: None,
        })
    }

    pub fn perturbed(base: AlgebraFn<T>, tail: Rule<T>, decay: T) -> Result<Self> {
        if !matches!(base.kind, AlgebraKind::TorusLift { .. } | AlgebraKind::Periodic { .. }) {
            return Err(Error::InvalidArgument("perturbation base must be periodic or a torus lift".into()));
        }
        Ok(Self {
            dim: base.dim,
            kind: AlgebraKind::Perturbed {
                base: Arc::new(base),
                tail,
                decay,
            },
            gradient: None,
            constant: None,
            record: None,
        })
    }

    /// The constant function `c`; compatible with every other representation.
    pub fn constant(dim: usize, c: T) -> Self {
        let cell = vec![T::one(); dim.clamp(1, 2)];
        let dim = cell.len();
        Self {
            dim,
            kind: AlgebraKind::Periodic {
                cell,
                rule: Arc::new(move |_| c),
                breaks: vec![Vec::new(); dim],
            },
            gradient: Some(Arc::new(|_, g: &mut [T]| g.iter_mut().for_each(|v| *v = T::zero()))),
            constant: Some(c),
            record: None,
        }
    }

    pub fn with_gradient(mut self, gradient: GradientRule<T>) -> Self {
        self.gradient = Some(gradient);
        self
    }

    pub fn with_record(mut self, record: AlgebraRecord) -> Self {
        self.record = Some(record);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &AlgebraKind<T> {
        &self.kind
    }

    pub fn record(&self) -> Option<&AlgebraRecord> {
        self.record.as_ref()
    }

    pub fn as_constant(&self) -> Option<T> {
        self.constant
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Value at `y`.
    pub fn eval(&self, y: &[T]) -> T {
        debug_assert_eq!(y.len(), self.dim);
        match &self.kind {
            AlgebraKind::Periodic { rule, .. } => rule(y),
            AlgebraKind::TorusLift {
                winding,
                torus_rule,
                ..
            } => {
                let theta = lift(winding, y);
                torus_rule(&theta[..winding.len()])
            }
            AlgebraKind::Perturbed { base, tail, .. } => base.eval(y) + tail(y),
        }
    }

    pub fn eval1(&self, y: T) -> T {
        self.eval(&[y])
    }

    /// Gradient with respect to `y`, if a gradient rule is attached.
    pub fn gradient(&self, y: &[T], out: &mut [T]) -> Result<()> {
        let grad = self.gradient.as_ref().ok_or(Error::MissingGradient)?;
        match &self.kind {
            AlgebraKind::TorusLift { winding, .. } => {
                let theta = lift(winding, y);
                let m = winding.len();
                let mut gt = [T::zero(); MAX_DIM];
                grad(&theta[..m], &mut gt[..m]);
                for (j, o) in out.iter_mut().enumerate().take(self.dim) {
                    *o = (0..m).map(|k| gt[k] * winding[k][j]).sum();
                }
            }
            _ => grad(y, out),
        }
        Ok(())
    }

    /// `y ↦ self(y + shift)`.
    pub fn translate(&self, shift: &[T]) -> Self {
        let s: Vec<T> = shift.to_vec();
        let dim = self.dim;
        let kind = match &self.kind {
            AlgebraKind::Periodic { cell, rule, breaks } => {
                let rule = rule.clone();
                let s2 = s.clone();
                let shifted: Rule<T> = Arc::new(move |y: &[T]| {
                    let mut p = [T::zero(); MAX_DIM];
                    for k in 0..y.len() {
                        p[k] = y[k] + s2[k];
                    }
                    rule(&p[..y.len()])
                });
                let breaks = breaks
                    .iter()
                    .zip(cell)
                    .zip(&s)
                    .map(|((bk, &c), &sk)| bk.iter().map(|&b| wrap(b - sk, c)).collect())
                    .collect();
                AlgebraKind::Periodic {
                    cell: cell.clone(),
                    rule: shifted,
                    breaks,
                }
            }
            AlgebraKind::TorusLift {
                winding,
                torus_rule,
                breaks,
            } => {
                let m = winding.len();
                let phase: Vec<T> = winding
                    .iter()
                    .map(|row| row.iter().zip(&s).map(|(&l, &sk)| l * sk).sum())
                    .collect();
                let rule = torus_rule.clone();
                let ph = phase.clone();
                let shifted: Rule<T> = Arc::new(move |th: &[T]| {
                    let mut p = [T::zero(); MAX_DIM];
                    for k in 0..th.len() {
                        p[k] = wrap(th[k] + ph[k], T::one());
                    }
                    rule(&p[..th.len()])
                });
                let breaks = breaks
                    .iter()
                    .zip(&phase)
                    .map(|(bk, &pk)| bk.iter().map(|&b| wrap(b - pk, T::one())).collect())
                    .collect::<Vec<Vec<T>>>();
                debug_assert_eq!(breaks.len(), m);
                AlgebraKind::TorusLift {
                    winding: winding.clone(),
                    torus_rule: shifted,
                    breaks,
                }
            }
            AlgebraKind::Perturbed { base, tail, decay } => {
                let tail = tail.clone();
                let s2 = s.clone();
                let shifted: Rule<T> = Arc::new(move |y: &[T]| {
                    let mut p = [T::zero(); MAX_DIM];
                    for k in 0..y.len() {
                        p[k] = y[k] + s2[k];
                    }
                    tail(&p[..y.len()])
                });
                // the decay constant of a shifted tail grows by at most 1 + |shift|
                let norm = s.iter().map(|&v| v * v).sum::<T>().sqrt();
                AlgebraKind::Perturbed {
                    base: Arc::new(base.translate(shift)),
                    tail: shifted,
                    decay: *decay * (T::one() + norm),
                }
            }
        };
        let gradient = self.gradient.clone().map(|g| -> GradientRule<T> {
            match &self.kind {
                AlgebraKind::TorusLift { winding, .. } => {
                    let phase: Vec<T> = winding
                        .iter()
                        .map(|row| row.iter().zip(&s).map(|(&l, &sk)| l * sk).sum())
                        .collect();
                    Arc::new(move |th: &[T], out: &mut [T]| {
                        let mut p = [T::zero(); MAX_DIM];
                        for k in 0..th.len() {
                            p[k] = wrap(th[k] + phase[k], T::one());
                        }
                        g(&p[..th.len()], out)
                    })
                }
                _ => {
                    let s2 = s.clone();
                    Arc::new(move |y: &[T], out: &mut [T]| {
                        let mut p = [T::zero(); MAX_DIM];
                        for k in 0..y.len() {
                            p[k] = y[k] + s2[k];
                        }
                        g(&p[..y.len()], out)
                    })
                }
            }
        });
        Self {
            dim,
            kind,
            gradient,
            constant: self.constant,
            record: None,
        }
    }

    /// Pointwise affine image `scale * self + offset`, keeping the representation.
    pub fn affine(&self, scale: T, offset: T) -> Self {
        let map_rule = |r: &Rule<T>| -> Rule<T> {
            let r = r.clone();
            Arc::new(move |y: &[T]| scale * r(y) + offset)
        };
        let kind = match &self.kind {
            AlgebraKind::Periodic { cell, rule, breaks } => AlgebraKind::Periodic {
                cell: cell.clone(),
                rule: map_rule(rule),
                breaks: breaks.clone(),
            },
            AlgebraKind::TorusLift {
                winding,
                torus_rule,
                breaks,
            } => AlgebraKind::TorusLift {
                winding: winding.clone(),
                torus_rule: map_rule(torus_rule),
                breaks: breaks.clone(),
            },
            AlgebraKind::Perturbed { base, tail, decay } => {
                let t = tail.clone();
                AlgebraKind::Perturbed {
                    base: Arc::new(base.affine(scale, offset)),
                    tail: Arc::new(move |y: &[T]| scale * t(y)),
                    decay: *decay * scale.abs(),
                }
            }
        };
        let gradient = self.gradient.clone().map(|g| -> GradientRule<T> {
            Arc::new(move |y: &[T], out: &mut [T]| {
                g(y, out);
                out.iter_mut().for_each(|v| *v = *v * scale);
            })
        });
        Self {
            dim: self.dim,
            kind,
            gradient,
            constant: self.constant.map(|c| scale * c + offset),
            record: None,
        }
    }

    /// Characteristic length of the oscillation: the largest period edge, or
    /// the slowest torus frequency's wavelength.
    pub fn period(&self) -> Option<T> {
        if self.constant.is_some() {
            return None;
        }
        match &self.kind {
            AlgebraKind::Periodic { cell, .. } => cell.iter().copied().fold(None, |acc, c| {
                Some(acc.map_or(c, |a: T| a.max(c)))
            }),
            AlgebraKind::TorusLift { winding, .. } => winding
                .iter()
                .map(|row| row.iter().map(|&l| l * l).sum::<T>().sqrt())
                .filter(|&n| n > T::zero())
                .map(|n| T::one() / n)
                .fold(None, |acc, p| Some(acc.map_or(p, |a: T| a.max(p)))),
            AlgebraKind::Perturbed { base, .. } => base.period(),
        }
    }

    /// Mean value.
    pub fn mean(&self, opts: &QuadratureOptions<T>) -> Result<T> {
        compose_mean(&[self], &|s: &[T]| s[0], opts)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > 2 {
        return Err(Error::InvalidArgument(format!(
            "spatial dimension must be 1 or 2, got {dim}"
        )));
    }
    Ok(())
}

fn lift<T: Scalar>(winding: &[Vec<T>], y: &[T]) -> [T; MAX_DIM] {
    let mut theta = [T::zero(); MAX_DIM];
    for (k, row) in winding.iter().enumerate() {
        let s: T = row.iter().zip(y).map(|(&l, &yj)| l * yj).sum();
        theta[k] = wrap(s, T::one());
    }
    theta
}

/// Integer-multiple common period of two cell edges, if one exists with
/// multipliers at most 64.
fn common_period<T: Scalar>(a: T, b: T) -> Option<T> {
    let (big, small) = if a >= b { (a, b) } else { (b, a) };
    for k in 1..=64usize {
        let cand = big * T::of_usize(k);
        let r = cand / small;
        if (r - r.round()).abs() <= T::of(1e-9) * r {
            return Some(cand);
        }
    }
    None
}

/// Length of a 1-D window that is representative for sampling all of `fns`:
/// the common period if every non-constant function is periodic, otherwise
/// `fallback`.
pub fn sampling_span<T: Scalar>(fns: &[&AlgebraFn<T>], fallback: T) -> T {
    let mut span: Option<T> = None;
    for f in fns {
        let base = match &f.kind {
            AlgebraKind::Perturbed { base, .. } => base.as_ref(),
            _ => *f,
        };
        if base.constant.is_some() {
            continue;
        }
        let AlgebraKind::Periodic { cell, .. } = &base.kind else {
            return fallback;
        };
        span = match span {
            None => Some(cell[0]),
            Some(s) => match common_period(s, cell[0]) {
                Some(p) => Some(p),
                None => return fallback,
            },
        };
    }
    span.unwrap_or(T::one())
}

/// Mean of `y ↦ map(f₁(y), …, f_k(y))`.
///
/// Constants are substituted, perturbed functions contribute only through
/// their base (the decaying tail has zero mean), and the remaining functions
/// must share a representation: commensurate period cells or an identical
/// winding matrix.
pub fn compose_mean<T: Scalar>(
    fns: &[&AlgebraFn<T>],
    map: &dyn Fn(&[T]) -> T,
    opts: &QuadratureOptions<T>,
) -> Result<T> {
    if fns.len() > MAX_COMPOSE {
        return Err(Error::InvalidArgument(format!(
            "compose_mean accepts at most {MAX_COMPOSE} functions"
        )));
    }
    let dim = fns.first().map(|f| f.dim).unwrap_or(1);
    if fns.iter().any(|f| f.dim != dim) {
        return Err(Error::IncompatibleRepresentations(
            "functions live in different dimensions".into(),
        ));
    }

    // strip perturbations
    let bases: Vec<&AlgebraFn<T>> = fns
        .iter()
        .map(|f| match &f.kind {
            AlgebraKind::Perturbed { base, .. } => base.as_ref(),
            _ => *f,
        })
        .collect();

    let mut consts = [T::zero(); MAX_COMPOSE];
    let mut active: Vec<usize> = Vec::new();
    for (i, f) in bases.iter().enumerate() {
        match f.constant {
            Some(c) => consts[i] = c,
            None => active.push(i),
        }
    }
    let k = fns.len();
    if active.is_empty() {
        return Ok(map(&consts[..k]));
    }

    let first = bases[active[0]];
    match &first.kind {
        AlgebraKind::Periodic { .. } => {
            let mut cell: Vec<T> = vec![T::zero(); dim];
            for &i in &active {
                let AlgebraKind::Periodic { cell: c, .. } = &bases[i].kind else {
                    return Err(Error::IncompatibleRepresentations(
                        "cannot mix periodic and torus-lift functions".into(),
                    ));
                };
                for d in 0..dim {
                    cell[d] = if cell[d] == T::zero() {
                        c[d]
                    } else {
                        common_period(cell[d], c[d]).ok_or_else(|| {
                            Error::IncompatibleRepresentations(format!(
                                "period cells {:?} and {:?} are not commensurate",
                                cell[d], c[d]
                            ))
                        })?
                    };
                }
            }
            let mut breaks: Vec<Vec<T>> = vec![Vec::new(); dim];
            for &i in &active {
                let AlgebraKind::Periodic { cell: c, breaks: b, .. } = &bases[i].kind else {
                    unreachable!()
                };
                for d in 0..dim {
                    let reps = (cell[d] / c[d]).round().to_usize().unwrap_or(1);
                    for r in 0..reps {
                        let off = c[d] * T::of_usize(r);
                        breaks[d].extend(b[d].iter().map(|&x| x + off));
                    }
                }
            }
            let rules: Vec<(usize, Rule<T>)> = active
                .iter()
                .map(|&i| match &bases[i].kind {
                    AlgebraKind::Periodic { rule, .. } => (i, rule.clone()),
                    _ => unreachable!(),
                })
                .collect();
            let integrand = |y: &[T]| {
                let mut vals = consts;
                for (i, rule) in &rules {
                    vals[*i] = rule(y);
                }
                map(&vals[..k])
            };
            let lo = vec![T::zero(); dim];
            let vol: T = cell.iter().copied().fold(T::one(), |a, c| a * c);
            let total = integrate_box(&integrand, &lo, &cell, &breaks, opts)?;
            Ok(total / vol)
        }
        AlgebraKind::TorusLift { winding, .. } => {
            let m = winding.len();
            let mut breaks: Vec<Vec<T>> = vec![Vec::new(); m];
            let mut rules: Vec<(usize, Rule<T>)> = Vec::new();
            for &i in &active {
                let AlgebraKind::TorusLift {
                    winding: w,
                    torus_rule,
                    breaks: b,
                } = &bases[i].kind
                else {
                    return Err(Error::IncompatibleRepresentations(
                        "cannot mix periodic and torus-lift functions".into(),
                    ));
                };
                if !same_winding(w, winding) {
                    return Err(Error::IncompatibleRepresentations(
                        "torus lifts use different winding matrices".into(),
                    ));
                }
                for d in 0..m {
                    breaks[d].extend(b[d].iter().copied());
                }
                rules.push((i, torus_rule.clone()));
            }
            let integrand = |th: &[T]| {
                let mut vals = consts;
                for (i, rule) in &rules {
                    vals[*i] = rule(th);
                }
                map(&vals[..k])
            };
            let lo = vec![T::zero(); m];
            let hi = vec![T::one(); m];
            integrate_box(&integrand, &lo, &hi, &breaks, opts)
        }
        AlgebraKind::Perturbed { .. } => unreachable!("perturbations were stripped"),
    }
}

fn same_winding<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(ra, rb)| {
            ra.len() == rb.len()
                && ra
                    .iter()
                    .zip(rb)
                    .all(|(&x, &y)| (x - y).abs() <= T::of(1e-12) * (T::one() + x.abs()))
        })
}
