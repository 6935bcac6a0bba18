//! ε-sweeps: solve the oscillating problems and the homogenized one, then
//! measure how far apart they are.

pub mod config;

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{FluxConfig, InitialConfig, OmegaConfig, ScenarioConfig, SigmaConfig, TestsConfig};

use crate::algebra::{compose_mean, sampling_span, AlgebraFn};
use crate::dual::{dual_distance, dual_residual};
use crate::error::{Error, Result};
use crate::flux::{presets as flux_presets, Flux, FluxKind, XRule};
use crate::homogenized::{homogenized_f, HomogenizeOptions, HomogenizedFlux};
use crate::quadrature::QuadratureOptions;
use crate::scalar::{pairwise_sum, Scalar};
use crate::solver::{
    bump, evolve, solve, DiscretePressure, Field, Grid1D, Role, Sampling, SigmaRule, StepOptions, TensorBump,
    Trajectory,
};

/// `(x, carrier values) ↦ u₀`.
pub type CarrierMap<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;

/// `u₀(x, y) = map(x, c₁(y), …, c_k(y))`.
#[derive(Clone)]
pub struct GeneralInitial<T: Scalar> {
    pub carriers: Vec<AlgebraFn<T>>,
    pub map: CarrierMap<T>,
}

impl<T: Scalar> GeneralInitial<T> {
    pub fn eval(&self, x: T, y: T) -> T {
        let c: Vec<T> = self.carriers.iter().map(|f| f.eval1(y)).collect();
        (self.map)(x, &c)
    }

    /// `u₀(x_i, x_i/ε)` at the cell centers.
    pub fn sample(&self, grid: &Grid1D<T>, eps: T) -> Result<Field<T>> {
        Field::from_fn(*grid, Role::Density, |x| self.eval(x, x / eps))
    }
}

#[derive(Clone)]
pub enum InitialData<T: Scalar> {
    /// Pressure `φ₀(x)`, independent of ε.
    WellPrepared(XRule<T>),
    General(GeneralInitial<T>),
}

impl<T: Scalar> InitialData<T> {
    pub fn to_general(&self, flux: &Flux<T>) -> GeneralInitial<T> {
        match self {
            InitialData::WellPrepared(phi0) => well_prepared_initial(flux, phi0.clone()),
            InitialData::General(g) => g.clone(),
        }
    }
}

/// `u₀(x, y) = g(x, y, φ₀(x))`.
pub fn well_prepared_initial<T: Scalar>(flux: &Flux<T>, phi0: XRule<T>) -> GeneralInitial<T> {
    let carriers: Vec<AlgebraFn<T>> = flux.oscillating_parts().into_iter().cloned().collect();
    let flux = flux.clone();
    GeneralInitial {
        carriers,
        map: Arc::new(move |x, c| flux.pressure_inverse_carriers(x, c, phi0(x))),
    }
}

/// Per-cell mean over `y` of `u₀(x_i, y)`.
pub fn initial_mean<T: Scalar>(u0: &GeneralInitial<T>, grid: &Grid1D<T>, quad: &QuadratureOptions<T>) -> Result<Field<T>> {
    let refs: Vec<&AlgebraFn<T>> = u0.carriers.iter().collect();
    let values = grid
        .centers()
        .into_iter()
        .map(|x| {
            if refs.is_empty() {
                Ok((u0.map)(x, &[]))
            } else {
                compose_mean(&refs, &|c: &[T]| (u0.map)(x, c), quad)
            }
        })
        .collect::<Result<Vec<T>>>()?;
    Field::density(*grid, values)
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smooth_step<T: Scalar>(t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    if t >= T::one() {
        return T::one();
    }
    let e = |s: T| (-T::one() / s).exp();
    e(t) / (e(t) + e(T::one() - t))
}

#[derive(Clone)]
pub struct Scenario<T: Scalar> {
    pub flux: Flux<T>,
    pub omega: (T, T),
    pub t_final: T,
    pub initial: InitialData<T>,
    /// Strictly decreasing.
    pub epsilons: Vec<T>,
    pub cells_per_period: usize,
    pub dt_factor: T,
    pub tests: Vec<TensorBump<T>>,
    pub sigma: SigmaRule<T>,
    /// Period of the fast variable.
    pub period: T,
    pub seed: u64,
    /// Cell-problem settings; the x-grid is filled in per scenario.
    pub homogenize: HomogenizeOptions<T>,
    pub step: StepOptions<T>,
}

/// `count` bumps in `x` with staggered centers, each spanning `(0, T)` in time.
pub fn default_tests<T: Scalar>(omega: (T, T), t_final: T, count: usize, width: T) -> Vec<TensorBump<T>> {
    let len = omega.1 - omega.0;
    (0..count)
        .map(|j| TensorBump {
            x_center: omega.0 + len * T::of_usize(j + 1) / T::of_usize(count + 1),
            x_width: width,
            t_center: t_final * T::of(0.5),
            t_width: t_final * T::of(0.5),
        })
        .collect()
}

fn param(params: &std::collections::BTreeMap<String, f64>, allowed: &[&str], key: &str, default: f64) -> Result<f64> {
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown initial parameter '{bad}'")));
    }
    Ok(params.get(key).copied().unwrap_or(default))
}

impl<T: Scalar> Scenario<T> {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let flux = flux_presets::by_name::<T>(&cfg.flux.preset)?;
        let (a, b) = (T::of(cfg.omega.a), T::of(cfg.omega.b));
        if !(a < b) {
            return Err(Error::Config("omega needs a < b".into()));
        }
        let t_final = T::of(cfg.t_final);
        if !(t_final > T::zero()) {
            return Err(Error::Config("T must be positive".into()));
        }
        if cfg.epsilons.is_empty() || cfg.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("epsilons must be positive and nonempty".into()));
        }
        if cfg.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("epsilons must decrease strictly".into()));
        }
        if cfg.tests.count == 0 || !(cfg.tests.width > 0.0) {
            return Err(Error::Config("tests need a positive count and width".into()));
        }
        let p = &cfg.initial.params;
        let centre = (a + b) * T::of(0.5);
        let half = (b - a) * T::of(0.5);
        let initial = match cfg.initial.kind.as_str() {
            "constant" => {
                let v = T::of(param(p, &["value"], "value", 0.0)?);
                InitialData::WellPrepared(Arc::new(move |_| v))
            }
            "sine" => {
                let amp = T::of(param(p, &["amplitude"], "amplitude", 1.0)?);
                InitialData::WellPrepared(Arc::new(move |x: T| amp * (T::PI() * (x - a) / (b - a)).sin()))
            }
            "cos-tent" => {
                let allowed = ["amplitude", "margin"];
                let amp = T::of(param(p, &allowed, "amplitude", 0.5)?);
                let margin = T::of(param(p, &allowed, "margin", 0.25)?);
                if !(margin > T::zero()) || margin >= half {
                    return Err(Error::Config("cos-tent margin must lie in (0, |Ω|/2)".into()));
                }
                InitialData::WellPrepared(Arc::new(move |x: T| {
                    let r = (x - centre).abs();
                    let dist = half - r;
                    let m2 = margin * T::of(0.5);
                    let cut = smooth_step((dist - m2) / m2);
                    amp * (T::PI() * (x - centre) / half).cos() * (half - r) / half * cut
                }))
            }
            "inverse-cos" => {
                let allowed = ["amplitude", "period", "radius"];
                let amp = T::of(param(p, &allowed, "amplitude", 0.3)?);
                let per = T::of(param(p, &allowed, "period", 4.0)?);
                let radius = T::of(param(p, &allowed, "radius", 1.5)?);
                let FluxKind::Type2(t) = &flux.kind else {
                    return Err(Error::Config("inverse-cos data needs a type-2 flux".into()));
                };
                let inverse = t.inverse.clone();
                let carrier = AlgebraFn::periodic(
                    vec![per],
                    Arc::new(move |y: &[T]| (T::TAU() * y[0] / per).cos()),
                    vec![vec![T::zero(), per * T::of(0.5)]],
                )?;
                InitialData::General(GeneralInitial {
                    carriers: vec![carrier],
                    map: Arc::new(move |x: T, c: &[T]| inverse.eval(amp * c[0]) * bump((x - centre) / radius)),
                })
            }
            other => return Err(Error::Config(format!("unknown initial kind '{other}'"))),
        };
        let sigma = match &cfg.sigma {
            Some(SigmaConfig::Fixed(s)) => SigmaRule::Fixed(T::of(*s)),
            Some(SigmaConfig::Continuation(v)) => SigmaRule::Continuation(v.iter().map(|s| T::of(*s)).collect()),
            None if flux.is_type2() => SigmaRule::Fixed(T::of(1e-3)),
            None => SigmaRule::Fixed(T::zero()),
        };
        let period = sampling_span(&flux.oscillating_parts(), T::one());
        Ok(Self {
            tests: default_tests((a, b), t_final, cfg.tests.count, T::of(cfg.tests.width)),
            flux,
            omega: (a, b),
            t_final,
            initial,
            epsilons: cfg.epsilons.iter().map(|e| T::of(*e)).collect(),
            cells_per_period: cfg.cells_per_period,
            dt_factor: T::of(cfg.dt_factor),
            sigma,
            period,
            seed: cfg.seed.unwrap_or(0),
            homogenize: HomogenizeOptions::default(),
            step: StepOptions::default(),
        })
    }

    /// Cells for `ε`: `cells_per_period` per ε-period, which must tile Ω.
    pub fn cells_for(&self, eps: T) -> Result<usize> {
        let exact = (self.omega.1 - self.omega.0) / (eps * self.period) * T::of_usize(self.cells_per_period);
        let n = exact.round();
        if (exact - n).abs() > T::of(1e-6) * n.max(T::one()) {
            return Err(Error::InvalidArgument(format!(
                "ε = {eps} does not fit a whole number of cells in Ω"
            )));
        }
        n.to_usize()
            .ok_or_else(|| Error::InvalidArgument(format!("ε = {eps} gives no valid grid")))
    }

    /// `(finest grid, common dt)` after checking the resolution rules.
    pub fn resolution(&self) -> Result<(Grid1D<T>, T)> {
        if self.cells_per_period < 16 {
            return Err(Error::ResolutionTooCoarse(format!(
                "{} cells per ε-period, at least 16 required",
                self.cells_per_period
            )));
        }
        let counts = self.epsilons.iter().map(|&e| self.cells_for(e)).collect::<Result<Vec<_>>>()?;
        let finest = *counts.iter().max().expect("nonempty epsilons");
        if let Some(c) = counts.iter().find(|&&c| finest % c != 0) {
            return Err(Error::InvalidArgument(format!(
                "grid of {c} cells does not divide the finest grid of {finest}"
            )));
        }
        let grid = Grid1D::new(self.omega.0, self.omega.1, finest)?;
        let dt = self.dt_factor * grid.dx();
        if !(self.dt_factor > T::zero()) || dt > grid.dx() {
            return Err(Error::ResolutionTooCoarse(format!(
                "dt = {dt} exceeds the finest dx = {}",
                grid.dx()
            )));
        }
        Ok((grid, dt))
    }

    pub fn homogenize_options(&self) -> HomogenizeOptions<T> {
        let mut opts = self.homogenize.clone();
        if !self.flux.is_x_independent() {
            let (a, b) = self.omega;
            opts.x_grid = (0..=32).map(|i| a + (b - a) * T::of_usize(i) / T::of(32.0)).collect();
        }
        opts
    }
}

/// Solve the homogenized problem on the finest grid with the common step.
pub fn solve_homogenized<T: Scalar>(scenario: &Scenario<T>, hf: &HomogenizedFlux<T>) -> Result<Trajectory<T>> {
    let (grid, dt) = scenario.resolution()?;
    let u0 = initial_mean(&scenario.initial.to_general(&scenario.flux), &grid, &scenario.homogenize.quad)?;
    let law = DiscretePressure::new(&scenario.flux, &grid, Sampling::Homogenized(hf))?;
    evolve(&law, &u0, scenario.t_final, dt, &scenario.step)
}

/// Block averages of a fine field onto a grid `factor` times coarser.
pub fn restrict<T: Scalar>(fine: &[T], factor: usize) -> Vec<T> {
    fine.chunks(factor)
        .map(|c| pairwise_sum(c) / T::of_usize(c.len()))
        .collect()
}

fn restrict_trajectory<T: Scalar>(fine: &Trajectory<T>, grid: Grid1D<T>) -> Trajectory<T> {
    let factor = fine.grid.n / grid.n;
    Trajectory {
        grid,
        times: fine.times.clone(),
        fields: fine.fields.iter().map(|f| restrict(f, factor)).collect(),
        dt: fine.dt,
        sigma: fine.sigma,
        label: fine.label.clone(),
        steps: fine.steps.clone(),
        cauchy: None,
    }
}

fn truncate<T: Scalar>(traj: &Trajectory<T>, upto: usize) -> Trajectory<T> {
    Trajectory {
        grid: traj.grid,
        times: traj.times[..=upto].to_vec(),
        fields: traj.fields[..=upto].to_vec(),
        dt: traj.dt,
        sigma: traj.sigma,
        label: traj.label.clone(),
        steps: traj.steps[..upto].to_vec(),
        cauchy: None,
    }
}

fn check_pair<T: Scalar>(a: &Trajectory<T>, b: &Trajectory<T>, upto: usize) -> Result<()> {
    if a.grid != b.grid || a.times.len() <= upto || b.times.len() <= upto {
        return Err(Error::InvalidArgument("trajectories are not sampled alike".into()));
    }
    Ok(())
}

/// `max_φ |Σ_{n ≤ upto} dt Σ_i (u_ε − ū) φ(x_i, t_n) dx|`.
pub fn weak_star_error<T: Scalar>(
    u_eps: &Trajectory<T>,
    u_bar: &Trajectory<T>,
    tests: &[TensorBump<T>],
    upto: usize,
) -> Result<T> {
    check_pair(u_eps, u_bar, upto)?;
    if tests.is_empty() {
        return Err(Error::InvalidArgument("weak-star error needs test functions".into()));
    }
    let xs = u_eps.grid.centers();
    let dx = u_eps.grid.dx();
    let mut worst = T::zero();
    for phi in tests {
        let mut terms = Vec::with_capacity(upto * xs.len());
        for n in 1..=upto {
            let dt = u_eps.times[n] - u_eps.times[n - 1];
            let t = u_eps.times[n];
            for (i, &x) in xs.iter().enumerate() {
                terms.push((u_eps.fields[n][i] - u_bar.fields[n][i]) * phi.eval(x, t) * dx * dt);
            }
        }
        worst = worst.max(pairwise_sum(&terms).abs());
    }
    Ok(worst)
}

/// L¹ distance between `u_ε` and `g(x, x/ε, f̄(x, ū))` over the cells within
/// `inner`·|Ω|/2 of the centre and the stored times in `[t_lo, t_upto]`.
pub fn corrector_error<T: Scalar>(
    u_eps: &Trajectory<T>,
    u_bar: &Trajectory<T>,
    hf: &HomogenizedFlux<T>,
    eps: T,
    t_lo: T,
    upto: usize,
    inner: T,
) -> Result<T> {
    check_pair(u_eps, u_bar, upto)?;
    let grid = u_eps.grid;
    let xs = grid.centers();
    let dx = grid.dx();
    let centre = (grid.a + grid.b) * T::of(0.5);
    let reach = inner * grid.length() * T::of(0.5);
    let flux = hf.flux();
    let mut terms = Vec::new();
    for n in 1..=upto {
        let t = u_eps.times[n];
        if t < t_lo {
            continue;
        }
        let dt = t - u_eps.times[n - 1];
        for (i, &x) in xs.iter().enumerate() {
            if (x - centre).abs() > reach {
                continue;
            }
            let v = hf.eval(x, u_bar.fields[n][i]);
            let rebuilt = flux.pressure_inverse(x, x / eps, v);
            terms.push((u_eps.fields[n][i] - rebuilt).abs() * dx * dt);
        }
    }
    Ok(pairwise_sum(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit<T> {
    pub slope: T,
    pub stderr: T,
    pub points: usize,
}

/// Least-squares slope of `log(error)` against `log(ε)`.
pub fn estimate_order<T: Scalar>(eps: &[T], errors: &[T]) -> Result<OrderFit<T>> {
    if eps.len() != errors.len() || eps.len() < 3 {
        return Err(Error::InvalidArgument("order fit needs at least three (ε, error) pairs".into()));
    }
    if eps.iter().chain(errors).any(|v| !(*v > T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidArgument("order fit needs positive finite values".into()));
    }
    let n = T::of_usize(eps.len());
    let xs: Vec<T> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<T> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum::<T>();
    if !(sxx > T::zero()) {
        return Err(Error::InvalidArgument("order fit needs distinct ε".into()));
    }
    let sxy = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum::<T>();
    let slope = sxy / sxx;
    let ssr = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = *y - (my + slope * (*x - mx));
            r * r
        })
        .sum::<T>();
    let dof = T::of_usize(eps.len() - 2);
    Ok(OrderFit {
        slope,
        stderr: (ssr / dof / sxx).sqrt(),
        points: eps.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow<T> {
    pub eps: T,
    pub t: T,
    pub weak_star: T,
    pub corrector_l1: T,
    pub dual_residual: T,
    pub runtime_s: f64,
}

#[derive(Debug, Clone)]
pub struct EpsRecord<T: Scalar> {
    pub eps: T,
    pub cells: usize,
    pub rows: Vec<MetricRow<T>>,
    pub runtime_s: f64,
    /// `max |Δ_h⁻¹(u_ε − ū)|` over interior cells and stored times.
    pub dual_distance: T,
    pub trajectory: Trajectory<T>,
}

#[derive(Debug, Clone)]
pub struct SweepReport<T: Scalar> {
    pub records: Vec<EpsRecord<T>>,
    /// `ū` on the finest grid.
    pub homogenized: Trajectory<T>,
    pub times: Vec<T>,
    pub orders: Vec<(String, Option<OrderFit<T>>)>,
    /// Half the minimal slope of `ḡ` on `[−1, 1]`; positive means strictly convex `Ḡ_*`.
    pub convexity_constant: T,
}

impl<T: Scalar> SweepReport<T> {
    /// The metric at time index `k` (into [`SweepReport::times`]) for every ε.
    pub fn column(&self, k: usize, pick: impl Fn(&MetricRow<T>) -> T) -> Vec<T> {
        self.records.iter().map(|r| pick(&r.rows[k])).collect()
    }

    pub fn epsilons(&self) -> Vec<T> {
        self.records.iter().map(|r| r.eps).collect()
    }

    /// `eps,t,weak_star,corrector_l1,dual_residual,runtime_s`.
    pub fn to_csv(&self, with_runtime: bool) -> String {
        let mut s = String::from("eps,t,weak_star,corrector_l1,dual_residual,runtime_s\n");
        for r in &self.records {
            for m in &r.rows {
                let rt = if with_runtime { format!("{:.3}", m.runtime_s) } else { String::new() };
                writeln!(
                    s,
                    "{:e},{:e},{:e},{:e},{:e},{}",
                    m.eps, m.t, m.weak_star, m.corrector_l1, m.dual_residual, rt
                )
                .unwrap();
            }
        }
        s
    }

    /// `metric,slope,stderr,points` at the final time.
    pub fn orders_csv(&self) -> String {
        let mut s = String::from("metric,slope,stderr,points\n");
        for (name, fit) in &self.orders {
            match fit {
                Some(f) => writeln!(s, "{name},{:e},{:e},{}", f.slope, f.stderr, f.points).unwrap(),
                None => writeln!(s, "{name},,,{}", self.records.len()).unwrap(),
            }
        }
        s
    }
}

/// Run every ε of the scenario against one homogenized solve.
pub fn run_sweep<T: Scalar>(scenario: &Scenario<T>) -> Result<SweepReport<T>> {
    let (fine, dt) = scenario.resolution()?;
    let hf = homogenized_f(&scenario.flux, &scenario.homogenize_options())?;
    let centre = (scenario.omega.0 + scenario.omega.1) * T::of(0.5);
    let convexity_constant =
        scenario
            .flux
            .convexity_constant(centre, -T::one(), T::one(), &scenario.homogenize.quad)?;
    let bar = solve_homogenized(scenario, &hf)?;
    let u0 = scenario.initial.to_general(&scenario.flux);
    let t = scenario.t_final;
    let times = vec![t * T::of(0.25), t * T::of(0.5), t];
    let t_lo = t * T::of(0.1);
    let inner = T::of(0.8);

    let records = scenario
        .epsilons
        .par_iter()
        .map(|&eps| -> Result<EpsRecord<T>> {
            let start = Instant::now();
            let grid = Grid1D::new(scenario.omega.0, scenario.omega.1, scenario.cells_for(eps)?)?;
            let law = DiscretePressure::new(&scenario.flux, &grid, Sampling::Eps(eps))?;
            let init = u0.sample(&grid, eps)?;
            let traj = solve(&law, &init, t, dt, &scenario.sigma, &scenario.step)?;
            let law = law.with_sigma(traj.sigma);
            let runtime_s = start.elapsed().as_secs_f64();
            let bar_r = restrict_trajectory(&bar, grid);
            let mut rows = Vec::with_capacity(times.len());
            for &tk in &times {
                let k = traj.index_at(tk).max(1);
                rows.push(MetricRow {
                    eps,
                    t: tk,
                    weak_star: weak_star_error(&traj, &bar_r, &scenario.tests, k)?,
                    corrector_l1: corrector_error(&traj, &bar_r, &hf, eps, t_lo, k, inner)?,
                    dual_residual: dual_residual(&truncate(&traj, k), &law)?.value,
                    runtime_s,
                });
            }
            let skip = (grid.n as f64 * 0.1).round() as usize;
            let dual = dual_distance(&traj, &bar_r, skip..grid.n - skip)?;
            Ok(EpsRecord {
                eps,
                cells: grid.n,
                rows,
                runtime_s,
                dual_distance: dual,
                trajectory: traj,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let _ = fine;

    let eps: Vec<T> = records.iter().map(|r| r.eps).collect();
    let last = times.len() - 1;
    let fit = |pick: fn(&MetricRow<T>) -> T| {
        let errs: Vec<T> = records.iter().map(|r| pick(&r.rows[last])).collect();
        estimate_order(&eps, &errs).ok()
    };
    let orders = vec![
        ("weak_star".to_string(), fit(|m| m.weak_star)),
        ("corrector_l1".to_string(), fit(|m| m.corrector_l1)),
        ("dual_residual".to_string(), fit(|m| m.dual_residual)),
    ];
    Ok(SweepReport {
        records,
        homogenized: bar,
        times,
        orders,
        convexity_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::presets as alg;
    use crate::flux::presets;
    use std::f64::consts::PI;

    #[test]
    fn order_fits() {
        let eps = [0.25, 0.125, 0.0625, 0.03125];
        let lin: Vec<f64> = eps.to_vec();
        let root: Vec<f64> = eps.iter().map(|e: &f64| e.sqrt()).collect();
        let flat = [0.3; 4];
        assert!((estimate_order(&eps, &lin).unwrap().slope - 1.0).abs() < 1e-12);
        assert!((estimate_order(&eps, &root).unwrap().slope - 0.5).abs() < 1e-12);
        let f = estimate_order(&eps, &flat).unwrap();
        assert!(f.slope.abs() < 1e-12 && f.stderr < 1e-12);
        assert!(estimate_order(&eps[..2], &lin[..2]).is_err());
        assert!(estimate_order(&eps, &[0.1, 0.0, 0.1, 0.1]).is_err());
    }

    #[test]
    fn initial_means() {
        let g = Grid1D::new(-1.0, 1.0, 16).unwrap();
        let q = QuadratureOptions::default();
        let plain = GeneralInitial::<f64> {
            carriers: vec![],
            map: Arc::new(|x, _| x * x),
        };
        let m = initial_mean(&plain, &g, &q).unwrap();
        for (i, v) in m.values.iter().enumerate() {
            assert_eq!(*v, g.center(i).powi(2));
        }
        let osc = GeneralInitial::<f64> {
            carriers: vec![alg::cos1()],
            map: Arc::new(|x, c| (1.0 + x) * c[0]),
        };
        let m = initial_mean(&osc, &g, &q).unwrap();
        assert!(m.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn well_prepared_stefan_means_match_gbar() {
        let flux = presets::stefan::<f64>();
        let phi0: XRule<f64> = Arc::new(|x| (PI * x).sin());
        let u0 = well_prepared_initial(&flux, phi0);
        // direct oracle: G(φ₀ − ψ₀(y)), G jumping from −1/2 to 1/2 at 0
        let g_inv = |r: f64| if r > 0.0 { r + 0.5 } else if r < 0.0 { r - 0.5 } else { 0.5 };
        for (x, y) in [(0.3, 0.7), (0.1, 2.9), (0.8, -1.3)] {
            let want = g_inv((PI * x).sin() - alg::psi0_value(y));
            assert!((u0.eval(x, y) - want).abs() < 1e-12);
        }
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let m = initial_mean(&u0, &g, &QuadratureOptions::default()).unwrap();
        for (i, v) in m.values.iter().enumerate() {
            let p = (PI * g.center(i)).sin();
            let gbar = if p.abs() <= 1.0 { 1.5 * p } else { p + 0.5 * p.signum() };
            assert!((v - gbar).abs() < 1e-8, "{v} {gbar}");
        }
        let heat = presets::heat::<f64>();
        let hp = well_prepared_initial(&heat, Arc::new(|x| 2.0 * x));
        assert_eq!(hp.eval(0.25, 17.0), 0.5);
    }

    #[test]
    fn resolution_rules() {
        let mut cfg = ScenarioConfig::preset("stefan-wellprepared").unwrap();
        let s = Scenario::<f64>::from_config(&cfg).unwrap();
        assert_eq!(s.period, 4.0);
        assert_eq!(s.cells_for(0.25).unwrap(), 64);
        let (g, dt) = s.resolution().unwrap();
        assert_eq!(g.n, 512);
        assert_eq!(dt, g.dx());
        cfg.cells_per_period = 8;
        let coarse = Scenario::<f64>::from_config(&cfg).unwrap();
        assert!(matches!(coarse.resolution(), Err(Error::ResolutionTooCoarse(_))));
        cfg.cells_per_period = 16;
        cfg.dt_factor = 2.0;
        let slow = Scenario::<f64>::from_config(&cfg).unwrap();
        assert!(matches!(slow.resolution(), Err(Error::ResolutionTooCoarse(_))));
        cfg.dt_factor = 1.0;
        cfg.epsilons = vec![0.25, 0.25];
        assert!(Scenario::<f64>::from_config(&cfg).is_err());
        cfg.epsilons = vec![0.3];
        assert!(Scenario::<f64>::from_config(&cfg).unwrap().resolution().is_err());
    }

    #[test]
    fn cos_tent_vanishes_near_the_walls() {
        let cfg = ScenarioConfig::preset("stefan-wellprepared").unwrap();
        let s = Scenario::<f64>::from_config(&cfg).unwrap();
        let InitialData::WellPrepared(phi) = &s.initial else { panic!() };
        assert_eq!(phi(-1.9), 0.0);
        assert_eq!(phi(1.88), 0.0);
        assert!((phi(0.0) - 0.5).abs() < 1e-15);
        assert!((phi(1.0) - 0.5 * (PI / 2.0).cos() * 0.5).abs() < 1e-15);
    }

    #[test]
    fn y_independent_sweep_is_flat() {
        let cfg = ScenarioConfig::preset("heat").unwrap();
        let s = Scenario::<f64>::from_config(&cfg).unwrap();
        let rep = run_sweep(&s).unwrap();
        assert_eq!(rep.records.len(), 3);
        // no oscillation: every ε sees only its own discretization error
        for r in &rep.records {
            for m in &r.rows {
                assert!(m.corrector_l1 < 1e-3 && m.weak_star < 1e-3, "{m:?}");
            }
        }
        assert!(rep.to_csv(false).lines().count() == 1 + 9);
        assert!(rep.orders_csv().contains("weak_star,"));
    }

    #[test]
    fn stationary_well_prepared_sweep() {
        let mut cfg = ScenarioConfig::preset("stefan-wellprepared").unwrap();
        cfg.initial = InitialConfig {
            kind: "constant".into(),
            params: [("value".to_string(), 0.0)].into_iter().collect(),
        };
        cfg.epsilons = vec![0.25, 0.125];
        cfg.t_final = 0.05;
        cfg.sigma = Some(SigmaConfig::Fixed(0.0));
        let s = Scenario::<f64>::from_config(&cfg).unwrap();
        let rep = run_sweep(&s).unwrap();
        for r in &rep.records {
            let phi = &r.trajectory.fields[0];
            for f in &r.trajectory.fields {
                for (a, b) in f.iter().zip(phi) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
            for m in &r.rows {
                assert!(m.corrector_l1 <= 2e-10, "{m:?}");
            }
        }
        let again = solve_homogenized(&s, &homogenized_f(&s.flux, &s.homogenize_options()).unwrap()).unwrap();
        assert_eq!(again.fields, rep.homogenized.fields);
    }

    #[test]
    fn single_eps_has_no_fit() {
        let mut cfg = ScenarioConfig::preset("heat").unwrap();
        cfg.epsilons = vec![0.25];
        let rep = run_sweep(&Scenario::<f64>::from_config(&cfg).unwrap()).unwrap();
        assert!(rep.orders.iter().all(|(_, f)| f.is_none()));
    }
}
