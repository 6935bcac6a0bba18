//! The homogenized flux `f̄(x, ·)`, the inverse of `ḡ(x, ·)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{composed_level_set_measure, DEFAULT_DELTA_SCHEDULE};
use crate::error::{Error, Result};
use crate::flux::{Flux, FluxKind};
use crate::profile::MonotoneProfile;
use crate::quadrature::QuadratureOptions;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct HomogenizeOptions<T> {
    /// u-window covered by the tables; outside it the end slopes continue.
    pub u_range: (T, T),
    /// x-grid for x-dependent fluxes; ignored otherwise.
    pub x_grid: Vec<T>,
    pub initial_points: usize,
    /// Refine where the local slope of `ḡ` drops below this fraction of the median.
    pub flat_ratio: T,
    /// Refine where linear interpolation misses the midpoint by more than this.
    pub interp_tol: T,
    pub max_points: usize,
    pub em0_tol: T,
    pub em0_probes: usize,
    pub quad: QuadratureOptions<T>,
}

impl<T: Scalar> Default for HomogenizeOptions<T> {
    fn default() -> Self {
        Self {
            u_range: (T::of(-8.0), T::of(8.0)),
            x_grid: Vec::new(),
            initial_points: 65,
            flat_ratio: T::of(0.05),
            interp_tol: T::of(1e-9),
            max_points: 8192,
            em0_tol: T::of(1e-3),
            em0_probes: 17,
            quad: QuadratureOptions::default(),
        }
    }
}

/// Level-set measurement of `ψ_α = α·h + S` for one jump value `α` at one `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Em0Entry {
    pub alpha: f64,
    pub x: f64,
    pub probes: usize,
    /// Probe value with the largest extrapolated measure.
    pub worst_v: f64,
    pub worst_mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Em0Report {
    pub entries: Vec<Em0Entry>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Sampling of `ḡ(x, ·)` behind one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VSampling {
    pub x: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub points: usize,
    pub min_slope: f64,
}

#[derive(Debug, Clone)]
pub enum FbarProfile<T: Scalar> {
    /// `f̄` as a table, with `ḡ` as its inverse.
    Table {
        fbar: MonotoneProfile<T>,
        gbar: MonotoneProfile<T>,
    },
    /// y-independent type-1 flux: `f̄ = f`.
    Passthrough,
}

#[derive(Debug, Clone)]
pub struct HomogenizedFlux<T: Scalar> {
    flux: Flux<T>,
    x_grid: Vec<T>,
    profiles: Vec<Arc<FbarProfile<T>>>,
    pub em0: Em0Report,
    pub sampling: Vec<VSampling>,
}

impl<T: Scalar> HomogenizedFlux<T> {
    pub fn flux(&self) -> &Flux<T> {
        &self.flux
    }

    pub fn x_grid(&self) -> &[T] {
        &self.x_grid
    }

    pub fn profiles(&self) -> &[Arc<FbarProfile<T>>] {
        &self.profiles
    }

    /// Bracketing grid index and weight for `x`.
    fn locate(&self, x: T) -> (usize, usize, T) {
        let n = self.x_grid.len();
        if n == 1 {
            return (0, 0, T::zero());
        }
        let p = self.x_grid.partition_point(|&g| g <= x);
        if p == 0 {
            return (0, 0, T::zero());
        }
        if p >= n {
            return (n - 1, n - 1, T::zero());
        }
        let (x0, x1) = (self.x_grid[p - 1], self.x_grid[p]);
        (p - 1, p, (x - x0) / (x1 - x0))
    }

    fn profile_eval(&self, k: usize, x: T, u: T) -> T {
        match self.profiles[k].as_ref() {
            FbarProfile::Table { fbar, .. } => fbar.eval(u),
            FbarProfile::Passthrough => self.flux.eval(x, T::zero(), u),
        }
    }

    fn profile_inverse(&self, k: usize, x: T, v: T) -> T {
        match self.profiles[k].as_ref() {
            FbarProfile::Table { gbar, .. } => gbar.eval(v),
            FbarProfile::Passthrough => self.flux.pressure_inverse(x, T::zero(), v),
        }
    }

    /// `f̄(x, u)`, piecewise linear in `x` between grid points.
    pub fn eval(&self, x: T, u: T) -> T {
        let (i, j, w) = self.locate(x);
        let a = self.profile_eval(i, x, u);
        if i == j {
            return a;
        }
        a + (self.profile_eval(j, x, u) - a) * w
    }

    /// `ḡ(x, v)` from the tables.
    pub fn inverse(&self, x: T, v: T) -> T {
        let (i, j, w) = self.locate(x);
        let a = self.profile_inverse(i, x, v);
        if i == j {
            return a;
        }
        a + (self.profile_inverse(j, x, v) - a) * w
    }

    /// The table at the grid point nearest to `x`.
    pub fn profile_at(&self, x: T) -> Arc<FbarProfile<T>> {
        let (i, j, w) = self.locate(x);
        if w > T::of(0.5) {
            self.profiles[j].clone()
        } else {
            self.profiles[i].clone()
        }
    }

    /// Smallest slope of any `f̄` table (the strict-monotonicity modulus).
    pub fn min_slope(&self) -> T {
        self.profiles
            .iter()
            .map(|p| match p.as_ref() {
                FbarProfile::Table { fbar, .. } => fbar.min_slope(),
                FbarProfile::Passthrough => T::nan(),
            })
            .filter(|s| !s.is_nan())
            .fold(T::infinity(), T::min)
    }

    /// CSV with a JSON header line, then `x,u,fbar` rows over `u_grid`.
    pub fn to_csv(&self, u_grid: &[T]) -> String {
        let header = serde_json::json!({
            "flux": self.flux.id,
            "em0_report": self.em0,
            "sampling": self.sampling,
        });
        let mut s = String::new();
        writeln!(s, "# {header}").unwrap();
        s.push_str("x,u,fbar\n");
        for &x in &self.x_grid {
            for &u in u_grid {
                writeln!(s, "{:e},{:e},{:e}", x, u, self.eval(x, u)).unwrap();
            }
        }
        s
    }
}

/// Measure the level sets of `α·h(x,·) + S(x,·)` for every jump value α.
pub fn em0_check<T: Scalar>(flux: &Flux<T>, x: T, opts: &HomogenizeOptions<T>) -> Result<Vec<Em0Entry>> {
    let FluxKind::Type2(t) = &flux.kind else {
        return Ok(Vec::new());
    };
    let schedule: Vec<T> = DEFAULT_DELTA_SCHEDULE.iter().map(|&d| T::of(d)).collect();
    let (hs, ht) = t.h.affine_at(x);
    let (ss, st) = t.s.affine_at(x);
    let span = flux.y_span();
    let samples = 8192;
    let mut out = Vec::new();
    for &alpha in &t.jumps {
        let psi = |c: &[T]| alpha * (hs * c[0] + ht) + ss * c[1] + st;
        let mut vals: Vec<T> = (0..samples)
            .map(|i| {
                let y = span * T::of_usize(i) / T::of_usize(samples);
                psi(&[t.h.base.eval1(y), t.s.base.eval1(y)])
            })
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        let lo = vals[0];
        let hi = vals[samples - 1];

        let mut probes: Vec<T> = Vec::new();
        let np = opts.em0_probes.max(2);
        for k in 0..np {
            probes.push(lo + (hi - lo) * T::of_usize(k) / T::of_usize(np - 1));
        }
        // repeated sample values hint at atoms of the value distribution
        let mut counts: BTreeMap<i64, (usize, T)> = BTreeMap::new();
        let scale = (hi - lo).abs().max(T::one());
        for &v in &vals {
            let key = (v / scale * T::of(1e9)).round().to_i64().unwrap_or(0);
            counts.entry(key).or_insert((0, v)).0 += 1;
        }
        for (_, (c, v)) in counts {
            if c as f64 > 1e-3 * samples as f64 && !probes.contains(&v) {
                probes.push(v);
            }
        }

        let mut worst_v = probes[0];
        let mut worst = T::zero();
        for &v in &probes {
            let est = composed_level_set_measure(&[&t.h.base, &t.s.base], &psi, v, &schedule, &opts.quad)?;
            if est.extrapolated > worst {
                worst = est.extrapolated;
                worst_v = v;
            }
        }
        out.push(Em0Entry {
            alpha: alpha.to_f64_lossy(),
            x: x.to_f64_lossy(),
            probes: probes.len(),
            worst_v: worst_v.to_f64_lossy(),
            worst_mass: worst.to_f64_lossy(),
        });
    }
    Ok(out)
}

/// Sample `ḡ(x, ·)` adaptively and invert it into a table for `f̄(x, ·)`.
fn build_table<T: Scalar>(
    flux: &Flux<T>,
    x: T,
    opts: &HomogenizeOptions<T>,
) -> Result<(MonotoneProfile<T>, MonotoneProfile<T>, VSampling)> {
    let g = |v: T| flux.homogenized_g(x, v, &opts.quad);
    let (u_lo, u_hi) = opts.u_range;

    let mut v_lo = -T::one();
    while g(v_lo)? > u_lo {
        v_lo = v_lo + v_lo;
        if v_lo < T::of(-1e12) {
            return Err(Error::NonCoercive("ḡ does not reach the lower end of the u-range".into()));
        }
    }
    let mut v_hi = T::one();
    while g(v_hi)? < u_hi {
        v_hi = v_hi + v_hi;
        if v_hi > T::of(1e12) {
            return Err(Error::NonCoercive("ḡ does not reach the upper end of the u-range".into()));
        }
    }

    let n0 = opts.initial_points.max(3);
    let mut pts: Vec<(T, T)> = (0..n0)
        .map(|i| {
            let v = v_lo + (v_hi - v_lo) * T::of_usize(i) / T::of_usize(n0 - 1);
            g(v).map(|gv| (v, gv))
        })
        .collect::<Result<_>>()?;

    let mut done = vec![false; pts.len() - 1];
    for _ in 0..60 {
        let mut slopes: Vec<T> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        let mut sorted = slopes.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite slopes"));
        let median = sorted[sorted.len() / 2];
        let mut next: Vec<(T, T)> = Vec::with_capacity(pts.len() * 2);
        let mut next_done = Vec::with_capacity(done.len() * 2);
        let mut refined = false;
        for (k, w) in pts.windows(2).enumerate() {
            next.push(w[0]);
            if done[k] || pts.len() + next_done.len() >= opts.max_points {
                next_done.push(true);
                continue;
            }
            let vm = (w[0].0 + w[1].0) * T::of(0.5);
            if vm <= w[0].0 || vm >= w[1].0 {
                next_done.push(true);
                continue;
            }
            let gm = g(vm)?;
            let interp = (w[0].1 + w[1].1) * T::of(0.5);
            let tol = opts.interp_tol * (T::one() + gm.abs());
            if (gm - interp).abs() > tol || slopes[k] < opts.flat_ratio * median {
                next.push((vm, gm));
                next_done.push(false);
                next_done.push(false);
                refined = true;
            } else {
                next_done.push(true);
            }
        }
        next.push(*pts.last().expect("nonempty"));
        pts = next;
        done = next_done;
        slopes.clear();
        if !refined {
            break;
        }
    }

    let vs: Vec<T> = pts.iter().map(|p| p.0).collect();
    let gs: Vec<T> = pts.iter().map(|p| p.1).collect();
    let n = pts.len();
    let min_slope = pts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .fold(T::infinity(), T::min);
    if !(min_slope > T::zero()) {
        return Err(Error::Em0Violation {
            alpha: f64::NAN,
            x: x.to_f64_lossy(),
            v: f64::NAN,
            mass: f64::NAN,
        });
    }
    let left = (gs[1] - gs[0]) / (vs[1] - vs[0]);
    let right = (gs[n - 1] - gs[n - 2]) / (vs[n - 1] - vs[n - 2]);
    let gbar = MonotoneProfile::from_points(&vs, &gs, left, right, false)?;
    let fbar = MonotoneProfile::from_points(&gs, &vs, T::one() / left, T::one() / right, false)?;
    Ok((
        fbar,
        gbar,
        VSampling {
            x: x.to_f64_lossy(),
            v_min: vs[0].to_f64_lossy(),
            v_max: vs[n - 1].to_f64_lossy(),
            points: n,
            min_slope: min_slope.to_f64_lossy(),
        },
    ))
}

/// Build `f̄` on the x-grid (a single shared table for x-independent fluxes).
///
/// For type-2 fluxes the level sets behind every jump of the inverse are
/// measured first; a mass at or above `em0_tol` is an `Em0Violation`.
pub fn homogenized_f<T: Scalar>(flux: &Flux<T>, opts: &HomogenizeOptions<T>) -> Result<HomogenizedFlux<T>> {
    let x_grid: Vec<T> = if flux.is_x_independent() || opts.x_grid.is_empty() {
        vec![(flux.domain.0 + flux.domain.1) * T::of(0.5)]
    } else {
        opts.x_grid.clone()
    };
    if let FluxKind::Type1(t) = &flux.kind {
        if t.carriers.iter().all(|c| c.as_constant().is_some()) && t.carriers.is_empty() {
            return Ok(HomogenizedFlux {
                flux: flux.clone(),
                x_grid: x_grid.clone(),
                profiles: x_grid.iter().map(|_| Arc::new(FbarProfile::Passthrough)).collect(),
                em0: Em0Report {
                    entries: Vec::new(),
                    tolerance: opts.em0_tol.to_f64_lossy(),
                    passed: true,
                },
                sampling: Vec::new(),
            });
        }
    }

    let entries: Vec<Vec<Em0Entry>> = x_grid
        .par_iter()
        .map(|&x| em0_check(flux, x, opts))
        .collect::<Result<_>>()?;
    let entries: Vec<Em0Entry> = entries.into_iter().flatten().collect();
    let tol = opts.em0_tol.to_f64_lossy();
    if let Some(bad) = entries.iter().find(|e| !(e.worst_mass < tol)) {
        return Err(Error::Em0Violation {
            alpha: bad.alpha,
            x: bad.x,
            v: bad.worst_v,
            mass: bad.worst_mass,
        });
    }

    let tables: Vec<(MonotoneProfile<T>, MonotoneProfile<T>, VSampling)> = x_grid
        .par_iter()
        .map(|&x| build_table(flux, x, opts))
        .collect::<Result<_>>()?;
    let mut profiles = Vec::with_capacity(tables.len());
    let mut sampling = Vec::with_capacity(tables.len());
    for (fbar, gbar, s) in tables {
        profiles.push(Arc::new(FbarProfile::Table { fbar, gbar }));
        sampling.push(s);
    }
    Ok(HomogenizedFlux {
        flux: flux.clone(),
        x_grid,
        profiles,
        em0: Em0Report {
            entries,
            tolerance: tol,
            passed: true,
        },
        sampling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::presets;

    fn stefan_fbar(u: f64) -> f64 {
        if u < -1.5 {
            u + 0.5
        } else if u <= 1.5 {
            2.0 * u / 3.0
        } else {
            u - 0.5
        }
    }

    #[test]
    fn stefan_closed_form() {
        let hf = homogenized_f(&presets::stefan::<f64>(), &HomogenizeOptions::default()).unwrap();
        for (u, want) in [(1.0, 2.0 / 3.0), (2.0, 1.5), (-3.0, -2.5)] {
            assert!((hf.eval(0.0, u) - want).abs() < 1e-6);
        }
        let worst = (0..400)
            .map(|i| -4.0 + 8.0 * i as f64 / 399.0)
            .map(|u| (hf.eval(0.3, u) - stefan_fbar(u)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        assert!(hf.em0.passed);
        assert_eq!(hf.em0.entries.len(), 1);
        assert!(hf.em0.entries[0].worst_mass < 1e-3);
        assert!((hf.min_slope() - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn flat_stefan_fails_em0() {
        match homogenized_f(&presets::stefan_flat::<f64>(), &HomogenizeOptions::default()) {
            Err(Error::Em0Violation { alpha, mass, .. }) => {
                assert_eq!(alpha, 0.0);
                assert!(mass > 0.9, "{mass}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn y_independent_type1_is_a_fixed_point() {
        let f = presets::cubic::<f64>();
        let hf = homogenized_f(&f, &HomogenizeOptions::default()).unwrap();
        for u in [-3.0, -0.2, 0.0, 1.7] {
            assert_eq!(hf.eval(0.4, u), f.eval(0.4, 0.0, u));
        }
    }

    #[test]
    fn unoscillating_type2_with_strict_profile() {
        let f = Flux::type2(
            (-1.0, 1.0),
            "plain",
            crate::flux::Coefficient::constant(1.0),
            crate::flux::Coefficient::constant(0.0),
            MonotoneProfile::from_points(&[0.0, 1.0], &[0.0, 2.0], 1.0, 0.5, false).unwrap(),
        )
        .unwrap();
        let hf = homogenized_f(&f, &HomogenizeOptions::default()).unwrap();
        for u in [-2.0f64, 0.3, 0.9, 4.0] {
            assert!((hf.eval(0.0, u) - f.eval(0.0, 0.0, u)).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_mean_type1() {
        let hf = homogenized_f(&presets::harmonic::<f64>(), &HomogenizeOptions::default()).unwrap();
        for u in [-1.0, 0.5, 2.0] {
            assert!((hf.eval(0.0, u) - 3f64.sqrt() * u).abs() < 1e-8);
        }
    }

    #[test]
    fn scaled_oscillation_against_brute_force() {
        let flux = presets::stefan_scaled::<f64>(0.9);
        let hf = homogenized_f(&flux, &HomogenizeOptions::default()).unwrap();
        // oracle: midpoint-rule mean of g over a period, inverted by bisection
        let gbar = |v: f64| {
            let n = 400_000;
            (0..n)
                .map(|i| flux.pressure_inverse(0.0, 4.0 * (i as f64 + 0.5) / n as f64, v))
                .sum::<f64>()
                / n as f64
        };
        for u in [-2.0, -0.4, 0.5, 1.3] {
            let (mut lo, mut hi) = (-10.0, 10.0);
            for _ in 0..45 {
                let m = 0.5 * (lo + hi);
                if gbar(m) < u {
                    lo = m
                } else {
                    hi = m
                }
            }
            assert!((hf.eval(0.0, u) - 0.5 * (lo + hi)).abs() < 1e-5, "u={u}");
        }
    }

    #[test]
    fn round_trip_and_csv() {
        let hf = homogenized_f(&presets::stefan::<f64>(), &HomogenizeOptions::default()).unwrap();
        let f = presets::stefan::<f64>();
        for i in 0..81 {
            let u = -4.0 + 0.1 * i as f64;
            let v = hf.eval(0.0, u);
            let back = f.homogenized_g(0.0, v, &QuadratureOptions::default()).unwrap();
            assert!((back - u).abs() < 1e-8, "u={u}");
        }
        let csv = hf.to_csv(&[0.0, 1.0]);
        let mut lines = csv.lines();
        let head = lines.next().unwrap();
        let json: serde_json::Value = serde_json::from_str(head.trim_start_matches("# ")).unwrap();
        assert_eq!(json["em0_report"]["passed"], true);
        assert_eq!(lines.next(), Some("x,u,fbar"));
        assert_eq!(lines.count(), 2);
    }
}
