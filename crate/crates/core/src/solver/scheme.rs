//! Backward Euler with the three-point zero-pressure Laplacian.

use std::fmt::Write as _;

use super::diagnostics::weighted_l1_distance;
use super::grid::{apply_laplacian, Field, Grid1D, Role};
use super::law::DiscretePressure;
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct StepOptions<T> {
    /// Target for the ∞-norm of the nonlinear residual.
    pub tol: T,
    pub max_newton: usize,
    pub max_sweeps: usize,
}

impl<T: Scalar> Default for StepOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-10),
            max_newton: 60,
            max_sweeps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport<T> {
    pub newton_iterations: usize,
    pub sweeps: usize,
    pub residual: T,
}

/// Work buffers and the current iterate of one implicit step.
struct StepState<'a, T: Scalar> {
    law: &'a DiscretePressure<T>,
    un: &'a [T],
    dt: T,
    dx: T,
    u: Vec<T>,
    r: Vec<T>,
    norm: T,
    history: Vec<f64>,
}

impl<'a, T: Scalar> StepState<'a, T> {
    /// `R(u) = u − u_n − dt·Δ_h w(u)`; returns the ∞-norm.
    fn residual_of(&self, u: &[T], r: &mut [T]) -> T {
        let n = u.len();
        let mut w = vec![T::zero(); n];
        let mut lap = vec![T::zero(); n];
        self.law.pressures(u, &mut w);
        apply_laplacian(&w, self.dx, &mut lap);
        let mut norm = T::zero();
        for i in 0..n {
            r[i] = u[i] - self.un[i] - self.dt * lap[i];
            norm = norm.max(r[i].abs());
        }
        norm
    }

    fn refresh(&mut self) {
        let mut r = std::mem::take(&mut self.r);
        self.norm = self.residual_of(&self.u, &mut r);
        self.r = r;
    }

    /// Damped Newton until the line search stalls or the budget runs out.
    /// Once below `tol`, steps continue while they still reduce the residual.
    fn newton(&mut self, tol: T, budget: usize) -> Result<usize> {
        let n = self.u.len();
        let c = self.dt / (self.dx * self.dx);
        let sigma = self.law.sigma();
        let floor = sigma + T::of(1e-12);
        let (mut lower, mut diag, mut upper) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
        let mut delta = vec![T::zero(); n];
        let mut trial = vec![T::zero(); n];
        let mut rt = vec![T::zero(); n];
        let mut used = 0;
        while used < budget && self.norm > T::zero() {
            let converged = self.norm < tol;
            let mut d = vec![T::zero(); n];
            for (i, di) in d.iter_mut().enumerate() {
                let ui = self.u[i];
                if sigma == T::zero() && self.law.has_plateaus() && !converged && self.law.raw_slope(i, ui) == T::zero() {
                    return Err(Error::NeedsRegularization { cell: i });
                }
                *di = self.law.slope(i, ui).max(floor);
            }
            for i in 0..n {
                let stencil = if i == 0 || i + 1 == n { T::of(3.0) } else { T::of(2.0) };
                diag[i] = T::one() + c * stencil * d[i];
                lower[i] = if i > 0 { -c * d[i - 1] } else { T::zero() };
                upper[i] = if i + 1 < n { -c * d[i + 1] } else { T::zero() };
                delta[i] = -self.r[i];
            }
            solve_tridiagonal(&lower, &diag, &upper, &mut delta)?;
            used += 1;
            let mut lambda = T::one();
            let mut accepted = false;
            while lambda > T::of(1e-6) {
                for i in 0..n {
                    trial[i] = self.u[i] + lambda * delta[i];
                }
                let tn = self.residual_of(&trial, &mut rt);
                let enough = if converged {
                    tn < self.norm
                } else {
                    tn <= (T::one() - T::of(1e-4) * lambda) * self.norm
                };
                if enough {
                    std::mem::swap(&mut self.u, &mut trial);
                    std::mem::swap(&mut self.r, &mut rt);
                    self.norm = tn;
                    accepted = true;
                    break;
                }
                if converged {
                    break;
                }
                lambda = lambda * T::of(0.5);
            }
            self.history.push(self.norm.to_f64_lossy());
            if !accepted {
                break;
            }
        }
        Ok(used)
    }

    /// Nonlinear Gauss–Seidel: each row is increasing in its own unknown.
    fn sweep(&mut self) {
        let n = self.u.len();
        let c = self.dt / (self.dx * self.dx);
        for i in 0..n {
            let lw = if i == 0 { T::zero() } else { self.law.pressure(i - 1, self.u[i - 1]) };
            let rw = if i + 1 == n { T::zero() } else { self.law.pressure(i + 1, self.u[i + 1]) };
            let stencil = if i == 0 || i + 1 == n { T::of(3.0) } else { T::of(2.0) };
            let base = self.un[i] + c * (lw + rw);
            let law = self.law;
            let phi = |x: T| x + c * stencil * law.pressure(i, x) - base;
            self.u[i] = solve_scalar(phi, self.u[i]);
        }
    }
}

/// One implicit step `u = u_n + dt·Δ_h(f(x, u) + σu)`.
///
/// Damped Newton on the tridiagonal system. If the line search stalls,
/// nonlinear Gauss–Seidel sweeps take over and Newton resumes from the
/// improved iterate.
pub fn step_implicit<T: Scalar>(
    law: &DiscretePressure<T>,
    un: &Field<T>,
    dt: T,
    opts: &StepOptions<T>,
) -> Result<(Field<T>, StepReport<T>)> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    if !(law.sigma() >= T::zero()) {
        return Err(Error::InvalidArgument("sigma must be nonnegative".into()));
    }
    let n = un.grid.n;
    if law.len() != n {
        return Err(Error::InvalidArgument("pressure law and field sizes differ".into()));
    }
    let mut st = StepState {
        law,
        un: &un.values,
        dt,
        dx: un.grid.dx(),
        u: un.values.clone(),
        r: vec![T::zero(); n],
        norm: T::zero(),
        history: Vec::new(),
    };
    st.refresh();
    st.history.push(st.norm.to_f64_lossy());

    let mut iterations = 0;
    let mut sweeps = 0;
    loop {
        iterations += st.newton(opts.tol, opts.max_newton.saturating_sub(iterations))?;
        if st.norm < opts.tol || sweeps >= opts.max_sweeps {
            break;
        }
        // sweep until the residual drops tenfold, then hand back to Newton
        let target = st.norm * T::of(0.1);
        while sweeps < opts.max_sweeps && st.norm >= target.max(opts.tol * T::of(1e-3)) {
            st.sweep();
            sweeps += 1;
            st.refresh();
            if sweeps % 1000 == 0 {
                st.history.push(st.norm.to_f64_lossy());
            }
        }
        st.history.push(st.norm.to_f64_lossy());
        if iterations >= opts.max_newton && st.norm < opts.tol {
            break;
        }
    }
    if !(st.norm < opts.tol) {
        return Err(Error::NonlinearSolveFailure {
            iterations: iterations + sweeps,
            last: st.norm.to_f64_lossy(),
            history: st.history,
        });
    }
    Ok((
        Field {
            grid: un.grid,
            values: st.u,
            role: Role::Density,
        },
        StepReport {
            newton_iterations: iterations,
            sweeps,
            residual: st.norm,
        },
    ))
}

/// Root of a strictly increasing scalar function near `guess`.
fn solve_scalar<T: Scalar>(phi: impl Fn(T) -> T, guess: T) -> T {
    let mut lo = guess;
    let mut hi = guess;
    let mut step = T::one();
    let p0 = phi(guess);
    if p0 == T::zero() {
        return guess;
    }
    if p0 > T::zero() {
        loop {
            lo = lo - step;
            step = step + step;
            if phi(lo) <= T::zero() {
                break;
            }
        }
    } else {
        loop {
            hi = hi + step;
            step = step + step;
            if phi(hi) >= T::zero() {
                break;
            }
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::of(0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaRule<T> {
    Fixed(T),
    /// Strictly decreasing, at least three levels.
    Continuation(Vec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyRecord<T> {
    pub sigmas: Vec<T>,
    /// Weighted L¹ distance at the final time between consecutive σ-levels.
    pub distances: Vec<T>,
    pub ratios: Vec<T>,
    pub required: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub grid: Grid1D<T>,
    pub times: Vec<T>,
    pub fields: Vec<Vec<T>>,
    pub dt: T,
    pub sigma: T,
    pub label: String,
    pub steps: Vec<StepReport<T>>,
    pub cauchy: Option<CauchyRecord<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn final_field(&self) -> Field<T> {
        Field {
            grid: self.grid,
            values: self.fields.last().expect("trajectory has an initial field").clone(),
            role: Role::Density,
        }
    }

    pub fn field(&self, k: usize) -> Field<T> {
        Field {
            grid: self.grid,
            values: self.fields[k].clone(),
            role: Role::Density,
        }
    }

    /// Index of the stored time closest to `t`.
    pub fn index_at(&self, t: T) -> usize {
        let mut best = 0;
        for (k, &tk) in self.times.iter().enumerate() {
            if (tk - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }

    pub fn max_residual(&self) -> T {
        self.steps.iter().map(|s| s.residual).fold(T::zero(), T::max)
    }

    /// CSV rows `t,x,u,v` every `cadence` steps, after a `#` header line.
    pub fn to_csv(&self, law: &DiscretePressure<T>, cadence: usize) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# N={} dt={:e} sigma={:e} flux={}",
            self.grid.n, self.dt, self.sigma, self.label
        )
        .unwrap();
        s.push_str("t,x,u,v\n");
        let cadence = cadence.max(1);
        let xs = self.grid.centers();
        for (k, (t, u)) in self.times.iter().zip(&self.fields).enumerate() {
            if k % cadence != 0 && k + 1 != self.times.len() {
                continue;
            }
            for (i, (&x, &ui)) in xs.iter().zip(u).enumerate() {
                writeln!(s, "{:e},{:e},{:e},{:e}", t, x, ui, law.pressure(i, ui)).unwrap();
            }
        }
        s
    }
}

/// Integrate to `t_final` with a uniform step no larger than `dt`.
pub fn evolve<T: Scalar>(
    law: &DiscretePressure<T>,
    u0: &Field<T>,
    t_final: T,
    dt: T,
    opts: &StepOptions<T>,
) -> Result<Trajectory<T>> {
    if !(t_final > T::zero()) || !(dt > T::zero()) {
        return Err(Error::InvalidArgument("final time and dt must be positive".into()));
    }
    let steps = (t_final / dt).ceil().to_usize().unwrap_or(1).max(1);
    let dt = t_final / T::of_usize(steps);
    let mut times = Vec::with_capacity(steps + 1);
    let mut fields = Vec::with_capacity(steps + 1);
    let mut reports = Vec::with_capacity(steps);
    times.push(T::zero());
    fields.push(u0.values.clone());
    let mut cur = Field {
        grid: u0.grid,
        values: u0.values.clone(),
        role: Role::Density,
    };
    for k in 1..=steps {
        let (next, rep) = step_implicit(law, &cur, dt, opts)?;
        times.push(dt * T::of_usize(k));
        fields.push(next.values.clone());
        reports.push(rep);
        cur = next;
    }
    Ok(Trajectory {
        grid: u0.grid,
        times,
        fields,
        dt,
        sigma: law.sigma(),
        label: law.label().to_string(),
        steps: reports,
        cauchy: None,
    })
}

/// Solve with a fixed σ or along a σ-continuation.
///
/// A continuation runs every level and requires the final-time distances
/// between consecutive levels to shrink by at least `1.8^{log₂(σ_k/σ_{k+1})}`.
pub fn solve<T: Scalar>(
    law: &DiscretePressure<T>,
    u0: &Field<T>,
    t_final: T,
    dt: T,
    rule: &SigmaRule<T>,
    opts: &StepOptions<T>,
) -> Result<Trajectory<T>> {
    match rule {
        SigmaRule::Fixed(s) => evolve(&law.clone().with_sigma(*s), u0, t_final, dt, opts),
        SigmaRule::Continuation(levels) => {
            if levels.len() < 3 {
                return Err(Error::InvalidArgument("σ-continuation needs at least three levels".into()));
            }
            if levels.windows(2).any(|w| !(w[1] < w[0])) || !(levels[levels.len() - 1] > T::zero()) {
                return Err(Error::InvalidArgument("σ-levels must decrease strictly to a positive floor".into()));
            }
            let mut runs = Vec::with_capacity(levels.len());
            for &s in levels {
                runs.push(evolve(&law.clone().with_sigma(s), u0, t_final, dt, opts)?);
            }
            let distances: Vec<T> = runs
                .windows(2)
                .map(|w| weighted_l1_distance(&w[0].final_field(), &w[1].final_field()))
                .collect::<Result<_>>()?;
            let mut ratios = Vec::new();
            let mut required = Vec::new();
            for k in 0..distances.len() - 1 {
                ratios.push(distances[k] / distances[k + 1]);
                let halvings = (levels[k + 1] / levels[k + 2]).log2();
                required.push(T::of(1.8).powf(halvings));
            }
            let record = CauchyRecord {
                sigmas: levels.clone(),
                distances: distances.clone(),
                ratios: ratios.clone(),
                required: required.clone(),
            };
            if ratios.iter().zip(&required).any(|(r, q)| !(*r >= *q)) {
                return Err(Error::SigmaCauchyFailure {
                    distances: distances.iter().map(|d| d.to_f64_lossy()).collect(),
                    required: required.iter().map(|d| d.to_f64_lossy()).collect(),
                });
            }
            let mut last = runs.pop().expect("at least three runs");
            last.cauchy = Some(record);
            Ok(last)
        }
    }
}

/// `Φ_α`: the cell values with pressure `α`, i.e. `u_i = w_i⁻¹(α)`.
pub fn stationary_profile<T: Scalar>(law: &DiscretePressure<T>, grid: &Grid1D<T>, alpha: T) -> Result<Field<T>> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument("α must be finite".into()));
    }
    Field::density(*grid, (0..grid.n).map(|i| law.inverse(i, alpha)).collect())
}

#[cfg(test)]
mod tests {
    use super::super::law::Sampling;
    use super::*;
    use crate::flux::presets;
    use std::f64::consts::PI;

    fn heat_law(n: usize) -> (DiscretePressure<f64>, Grid1D<f64>) {
        let g = Grid1D::new(0.0, 1.0, n).unwrap();
        (DiscretePressure::new(&presets::heat(), &g, Sampling::Eps(1.0)).unwrap(), g)
    }

    #[test]
    fn zero_stays_zero() {
        let (law, g) = heat_law(32);
        let (u, rep) = step_implicit(&law, &Field::zeros(g, Role::Density), 1e-3, &StepOptions::default()).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
        assert_eq!(rep.newton_iterations, 0);
    }

    #[test]
    fn heat_step_matches_decay() {
        let (law, g) = heat_law(200);
        let u0 = Field::from_fn(g, Role::Density, |x| (PI * x).sin()).unwrap();
        let (u1, _) = step_implicit(&law, &u0, 1e-3, &StepOptions::default()).unwrap();
        let m0 = u0.values.iter().fold(0.0f64, |a, &b| a.max(b));
        let m1 = u1.values.iter().fold(0.0f64, |a, &b| a.max(b));
        assert!((m1 - (-PI * PI * 1e-3f64).exp() * m0).abs() < 1e-4);
    }

    #[test]
    fn stefan_stationary_profile_is_fixed() {
        let g = Grid1D::new(-2.0, 2.0, 128).unwrap();
        let flux = presets::stefan::<f64>();
        let law = DiscretePressure::new(&flux, &g, Sampling::Eps(0.125)).unwrap();
        let phi = stationary_profile(&law, &g, 0.0).unwrap();
        for i in 0..g.n {
            let x = g.center(i);
            let want = flux.pressure_inverse(x, x / 0.125, 0.0);
            assert_eq!(phi.values[i], want);
        }
        let traj = evolve(&law, &phi, 0.05, 0.01, &StepOptions::default()).unwrap();
        for f in &traj.fields {
            for (a, b) in f.iter().zip(&phi.values) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let reg = law.clone().with_sigma(1e-3);
        let phi_s = stationary_profile(&reg, &g, 0.0).unwrap();
        let (next, _) = step_implicit(&reg, &phi_s, 0.01, &StepOptions::default()).unwrap();
        for (a, b) in next.values.iter().zip(&phi_s.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn plateau_without_regularization_is_refused() {
        let g = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let law = DiscretePressure::new(&presets::stefan::<f64>(), &g, Sampling::Eps(0.125)).unwrap();
        let u0 = Field::from_fn(g, Role::Density, |x| 0.2 * (PI * x / 4.0).cos()).unwrap();
        match step_implicit(&law, &u0, 0.01, &StepOptions::default()) {
            Err(Error::NeedsRegularization { .. }) => {}
            other => panic!("{other:?}"),
        }
        let (next, rep) = step_implicit(&law.with_sigma(1e-3), &u0, 0.01, &StepOptions::default()).unwrap();
        assert!(rep.residual < 1e-10);
        assert!(next.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gauss_seidel_fallback_converges() {
        let (law, g) = heat_law(16);
        let u0 = Field::from_fn(g, Role::Density, |x| (PI * x).sin()).unwrap();
        let opts = StepOptions {
            max_newton: 0,
            ..StepOptions::default()
        };
        let (a, rep) = step_implicit(&law, &u0, 1e-3, &opts).unwrap();
        assert!(rep.sweeps > 0);
        let (b, _) = step_implicit(&law, &u0, 1e-3, &StepOptions::default()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn heat_solution_against_exact_decay() {
        let (law, g) = heat_law(400);
        let u0 = Field::from_fn(g, Role::Density, |x| (PI * x).sin()).unwrap();
        let traj = solve(&law, &u0, 0.1, 1e-4, &SigmaRule::Fixed(0.0), &StepOptions::default()).unwrap();
        let decay = (-PI * PI * 0.1f64).exp();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, u) in traj.final_field().values.iter().enumerate() {
            let e = decay * (PI * g.center(i)).sin();
            num += (u - e).powi(2);
            den += e * e;
        }
        assert!((num / den).sqrt() < 0.01);
        assert_eq!(traj.times.len(), 1001);
    }

    #[test]
    fn continuation_validation() {
        let (law, g) = heat_law(16);
        let u0 = Field::zeros(g, Role::Density);
        let opts = StepOptions::default();
        assert!(solve(&law, &u0, 0.1, 0.01, &SigmaRule::Continuation(vec![1e-2, 5e-3]), &opts).is_err());
        assert!(solve(&law, &u0, 0.1, 0.01, &SigmaRule::Continuation(vec![1e-2, 2e-2, 1e-3]), &opts).is_err());
    }

    #[test]
    fn csv_header() {
        let (law, g) = heat_law(8);
        let u0 = Field::zeros(g, Role::Density);
        let t = evolve(&law, &u0, 0.1, 0.05, &StepOptions::default()).unwrap();
        let csv = t.to_csv(&law, 1);
        assert!(csv.starts_with("# N=8"));
        assert_eq!(csv.lines().count(), 2 + 3 * 8);
    }
}
