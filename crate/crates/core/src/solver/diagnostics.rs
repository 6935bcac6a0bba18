//! Structural checks on discrete solutions: weighted distances, moduli,
//! comparison, contraction, conservation and entropy residuals.

use super::grid::{apply_laplacian, Field, Grid1D, Role};
use super::law::DiscretePressure;
use super::scheme::{evolve, step_implicit, StepOptions, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{sgn, Scalar};

fn same_grid<T: Scalar>(a: &Grid1D<T>, b: &Grid1D<T>) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    Ok(())
}

/// `Σ |u1 − u2| ξ dx` with the first Dirichlet eigenfunction `ξ`.
pub fn weighted_l1_distance<T: Scalar>(u1: &Field<T>, u2: &Field<T>) -> Result<T> {
    same_grid(&u1.grid, &u2.grid)?;
    Ok(weighted_l1(&u1.grid, &u1.values, &u2.values))
}

pub(crate) fn weighted_l1<T: Scalar>(grid: &Grid1D<T>, a: &[T], b: &[T]) -> T {
    let dx = grid.dx();
    let xi = grid.eigen_weight();
    a.iter()
        .zip(b)
        .zip(&xi)
        .fold(T::zero(), |acc, ((x, y), w)| acc + (*x - *y).abs() * *w * dx)
}

/// `Σ |u1 − u2| dx`.
pub fn l1_distance<T: Scalar>(u1: &Field<T>, u2: &Field<T>) -> Result<T> {
    same_grid(&u1.grid, &u2.grid)?;
    let dx = u1.grid.dx();
    Ok(u1
        .values
        .iter()
        .zip(&u2.values)
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y).abs() * dx))
}

/// Weighted L¹ norm of `u(· + m·dx) − u` over the cells where both exist.
pub fn translation_modulus<T: Scalar>(field: &Field<T>, m: usize) -> Result<T> {
    if m == 0 || m >= field.grid.n {
        return Err(Error::InvalidArgument(format!("shift {m} outside 1..{}", field.grid.n)));
    }
    let dx = field.grid.dx();
    let xi = field.grid.eigen_weight();
    let v = &field.values;
    Ok((0..field.grid.n - m).fold(T::zero(), |acc, i| acc + (v[i + m] - v[i]).abs() * xi[i] * dx))
}

/// Largest weighted L¹ distance between time levels `lag` steps apart.
pub fn time_modulus<T: Scalar>(traj: &Trajectory<T>, lag: usize) -> Result<T> {
    if lag == 0 || lag >= traj.fields.len() {
        return Err(Error::InvalidArgument(format!("lag {lag} outside 1..{}", traj.fields.len())));
    }
    Ok((0..traj.fields.len() - lag)
        .map(|n| weighted_l1(&traj.grid, &traj.fields[n + lag], &traj.fields[n]))
        .fold(T::zero(), T::max))
}

/// Evolve ordered data and count cell/time pairs where the order breaks by
/// more than `1e-10`.
pub fn comparison_check<T: Scalar>(
    law: &DiscretePressure<T>,
    u01: &Field<T>,
    u02: &Field<T>,
    t_final: T,
    dt: T,
    opts: &StepOptions<T>,
) -> Result<usize> {
    same_grid(&u01.grid, &u02.grid)?;
    if u01.values.iter().zip(&u02.values).any(|(a, b)| a > b) {
        return Err(Error::InvalidArgument("comparison needs u01 ≤ u02".into()));
    }
    let t1 = evolve(law, u01, t_final, dt, opts)?;
    let t2 = evolve(law, u02, t_final, dt, opts)?;
    let tol = T::of(1e-10);
    Ok(t1
        .fields
        .iter()
        .zip(&t2.fields)
        .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| **x > **y + tol).count())
        .sum())
}

/// Per-step unweighted and weighted distances of two runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRecord<T> {
    pub times: Vec<T>,
    pub l1: Vec<T>,
    pub weighted: Vec<T>,
    /// `Ĉ = L·λ₁` with `L` the observed Lipschitz constant of the pressure.
    pub growth_rate: T,
}

impl<T: Scalar> ContractionRecord<T> {
    /// Largest one-step increase of the unweighted distance.
    pub fn max_l1_increase(&self) -> T {
        self.l1.windows(2).map(|w| w[1] - w[0]).fold(T::neg_infinity(), T::max)
    }

    /// Worst ratio `d(t) / (e^{Ĉt} d(0))`; at most one when the bound holds.
    pub fn growth_ratio(&self) -> T {
        let d0 = self.weighted[0];
        if d0 == T::zero() {
            return if self.weighted.iter().all(|d| *d == T::zero()) { T::zero() } else { T::infinity() };
        }
        self.times
            .iter()
            .zip(&self.weighted)
            .map(|(t, d)| *d / ((self.growth_rate * *t).exp() * d0))
            .fold(T::zero(), T::max)
    }
}

pub fn contraction_record<T: Scalar>(
    law: &DiscretePressure<T>,
    u01: &Field<T>,
    u02: &Field<T>,
    t_final: T,
    dt: T,
    opts: &StepOptions<T>,
) -> Result<ContractionRecord<T>> {
    same_grid(&u01.grid, &u02.grid)?;
    let t1 = evolve(law, u01, t_final, dt, opts)?;
    let t2 = evolve(law, u02, t_final, dt, opts)?;
    let grid = u01.grid;
    let dx = grid.dx();
    let mut lip = T::zero();
    for (a, b) in t1.fields.iter().zip(&t2.fields) {
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            if x != y {
                lip = lip.max(((law.pressure(i, *x) - law.pressure(i, *y)) / (*x - *y)).abs());
            }
        }
    }
    let l1 = t1
        .fields
        .iter()
        .zip(&t2.fields)
        .map(|(a, b)| a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + (*x - *y).abs() * dx))
        .collect();
    let weighted = t1
        .fields
        .iter()
        .zip(&t2.fields)
        .map(|(a, b)| weighted_l1(&grid, a, b))
        .collect();
    Ok(ContractionRecord {
        times: t1.times.clone(),
        l1,
        weighted,
        growth_rate: lip * grid.first_eigenvalue(),
    })
}

/// Worst per-step mismatch between the mass change and the boundary flux
/// `−2(w_0 + w_{N−1})/dx`.
pub fn conservation_defect<T: Scalar>(traj: &Trajectory<T>, law: &DiscretePressure<T>) -> T {
    let n = traj.grid.n;
    let dx = traj.grid.dx();
    let mut worst = T::zero();
    for k in 1..traj.fields.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let (a, b) = (&traj.fields[k - 1], &traj.fields[k]);
        let mass: Vec<T> = a.iter().zip(b).map(|(x, y)| (*y - *x) * dx).collect();
        let change = crate::scalar::pairwise_sum(&mass);
        let flux = -T::of(2.0) * (law.pressure(0, b[0]) + law.pressure(n - 1, b[n - 1])) / dx;
        worst = worst.max((change - dt * flux).abs());
    }
    worst
}

/// Raise `u_n` by `bump` in each listed cell and count cells of `u_{n+1}`
/// that decrease by more than `1e-12`.
pub fn monotone_probe<T: Scalar>(
    law: &DiscretePressure<T>,
    un: &Field<T>,
    dt: T,
    cells: &[usize],
    bump: T,
    opts: &StepOptions<T>,
) -> Result<usize> {
    if !(bump > T::zero()) {
        return Err(Error::InvalidArgument("probe bump must be positive".into()));
    }
    let (base, _) = step_implicit(law, un, dt, opts)?;
    let mut violations = 0;
    for &c in cells {
        if c >= un.grid.n {
            return Err(Error::InvalidArgument(format!("cell {c} outside the grid")));
        }
        let mut up = un.clone();
        up.values[c] = up.values[c] + bump;
        let (next, _) = step_implicit(law, &up, dt, opts)?;
        violations += next
            .values
            .iter()
            .zip(&base.values)
            .filter(|(a, b)| **a < **b - T::of(1e-12))
            .count();
    }
    Ok(violations)
}

/// `b(s) = exp(−1/(1 − s²))` on `|s| < 1`, zero outside.
pub fn bump<T: Scalar>(s: T) -> T {
    if s.abs() >= T::one() {
        T::zero()
    } else {
        (-T::one() / (T::one() - s * s)).exp()
    }
}

/// Product bump `b((x − xc)/xw)·b((t − tc)/tw)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorBump<T> {
    pub x_center: T,
    pub x_width: T,
    pub t_center: T,
    pub t_width: T,
}

impl<T: Scalar> TensorBump<T> {
    pub fn eval(&self, x: T, t: T) -> T {
        bump((x - self.x_center) / self.x_width) * bump((t - self.t_center) / self.t_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyResidual<T> {
    pub value: T,
    /// `C·(dx + dt)` with `C = 1`.
    pub tolerance: T,
}

impl<T: Scalar> EntropyResidual<T> {
    pub fn passed(&self) -> bool {
        self.value >= -self.tolerance
    }
}

/// Discrete left side of the Kruzhkov inequality for the constant `k`:
///
/// `Σ_n Σ_i dx [|u^n − k|(φ^{n+1} − φ^n) + dt φ^{n+1}(Δ_h|W^{n+1}| + sgn(u^{n+1} − k) Δ_h w(k))]`
///
/// with `W = w(u) − w(k)`. `φ` must vanish at the first and last stored times.
pub fn kruzhkov_residual<T: Scalar>(
    traj: &Trajectory<T>,
    law: &DiscretePressure<T>,
    k: T,
    phi: impl Fn(T, T) -> T,
) -> Result<EntropyResidual<T>> {
    if !k.is_finite() {
        return Err(Error::InvalidArgument("k must be finite".into()));
    }
    let m = traj.fields.len();
    if m < 2 {
        return Err(Error::InvalidArgument("entropy residual needs two time levels".into()));
    }
    let grid = traj.grid;
    let n = grid.n;
    let dx = grid.dx();
    let xs = grid.centers();
    let phis: Vec<Vec<T>> = traj.times.iter().map(|&t| xs.iter().map(|&x| phi(x, t)).collect()).collect();
    if phis.iter().flatten().any(|p| !(*p >= T::zero())) {
        return Err(Error::InvalidArgument("test function must be nonnegative".into()));
    }
    if phis[0].iter().chain(&phis[m - 1]).any(|p| *p != T::zero()) {
        return Err(Error::InvalidArgument("test function must vanish at the first and last times".into()));
    }
    let wk: Vec<T> = (0..n).map(|i| law.pressure(i, k)).collect();
    let mut lap_k = vec![T::zero(); n];
    apply_laplacian(&wk, dx, &mut lap_k);
    let mut abs_w = vec![T::zero(); n];
    let mut lap_w = vec![T::zero(); n];
    let mut terms = Vec::with_capacity(n * (m - 1));
    for step in 0..m - 1 {
        let dt = traj.times[step + 1] - traj.times[step];
        let (un, un1) = (&traj.fields[step], &traj.fields[step + 1]);
        for i in 0..n {
            abs_w[i] = (law.pressure(i, un1[i]) - wk[i]).abs();
        }
        apply_laplacian(&abs_w, dx, &mut lap_w);
        for i in 0..n {
            let time = (un[i] - k).abs() * (phis[step + 1][i] - phis[step][i]);
            let space = dt * phis[step + 1][i] * (lap_w[i] + sgn(un1[i] - k) * lap_k[i]);
            terms.push((time + space) * dx);
        }
    }
    Ok(EntropyResidual {
        value: crate::scalar::pairwise_sum(&terms),
        tolerance: dx + traj.dt,
    })
}

/// Constant field, for envelope and maximum-principle checks.
pub fn constant_field<T: Scalar>(grid: Grid1D<T>, c: T) -> Field<T> {
    Field {
        grid,
        values: vec![c; grid.n],
        role: Role::Density,
    }
}
