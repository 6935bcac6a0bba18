//! The potential `U = Δ_h⁻¹u` and the residual of `∂_t U = w(Δ_h U)`.

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::scalar::{pairwise_sum, Scalar};
use crate::solver::{apply_laplacian, Field, Grid1D, Role, DiscretePressure, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct DualField<T> {
    pub field: Field<T>,
    /// `‖Δ_h U − h‖_∞`.
    pub defect: T,
}

/// Solve `Δ_h U = h` with the zero-pressure ghosts.
pub fn inverse_laplacian<T: Scalar>(h: &Field<T>) -> Result<DualField<T>> {
    let values = inverse_laplacian_values(&h.grid, &h.values)?;
    let dx = h.grid.dx();
    let mut back = vec![T::zero(); h.grid.n];
    apply_laplacian(&values, dx, &mut back);
    let defect = back
        .iter()
        .zip(&h.values)
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    Ok(DualField {
        field: Field {
            grid: h.grid,
            values,
            role: Role::Pressure,
        },
        defect,
    })
}

pub(crate) fn inverse_laplacian_values<T: Scalar>(grid: &Grid1D<T>, h: &[T]) -> Result<Vec<T>> {
    let n = grid.n;
    if h.len() != n {
        return Err(Error::InvalidArgument("right-hand side does not match the grid".into()));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("right-hand side must be finite".into()));
    }
    let inv = T::one() / (grid.dx() * grid.dx());
    let lower = vec![inv; n];
    let upper = vec![inv; n];
    let diag: Vec<T> = (0..n)
        .map(|i| if i == 0 || i + 1 == n { -T::of(3.0) * inv } else { -T::of(2.0) * inv })
        .collect();
    let mut rhs = h.to_vec();
    solve_tridiagonal(&lower, &diag, &upper, &mut rhs)?;
    Ok(rhs)
}

/// `(b − a)²/8`, the sup of the Green's function integral on the interval.
pub fn green_bound<T: Scalar>(grid: &Grid1D<T>) -> T {
    grid.length() * grid.length() / T::of(8.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualResidual<T> {
    /// `Σ_n dt Σ_i |∂_t U − w(Δ_h U)| ξ dx` over interior time levels.
    pub value: T,
    /// Per interior level, the weighted L¹ mismatch.
    pub series: Vec<T>,
    pub dx: T,
    pub dt: T,
}

/// Residual of the potential equation along a primal trajectory, with `w`
/// the same pressure law (and σ) the trajectory was computed with.
pub fn dual_residual<T: Scalar>(traj: &Trajectory<T>, law: &DiscretePressure<T>) -> Result<DualResidual<T>> {
    let m = traj.fields.len();
    if m < 2 {
        return Err(Error::InvalidArgument("dual residual needs two time levels".into()));
    }
    if law.len() != traj.grid.n {
        return Err(Error::InvalidArgument("pressure law and trajectory sizes differ".into()));
    }
    let grid = traj.grid;
    let dx = grid.dx();
    let xi = grid.eigen_weight();
    let potentials: Vec<Vec<T>> = traj
        .fields
        .iter()
        .map(|u| inverse_laplacian_values(&grid, u))
        .collect::<Result<_>>()?;
    let mut lap = vec![T::zero(); grid.n];
    let mut series = Vec::with_capacity(m.saturating_sub(2));
    let mut weights = Vec::with_capacity(m.saturating_sub(2));
    for k in 1..m.saturating_sub(1) {
        let span = traj.times[k + 1] - traj.times[k - 1];
        apply_laplacian(&potentials[k], dx, &mut lap);
        let terms: Vec<T> = (0..grid.n)
            .map(|i| {
                let dudt = (potentials[k + 1][i] - potentials[k - 1][i]) / span;
                (dudt - law.pressure(i, lap[i])).abs() * xi[i] * dx
            })
            .collect();
        series.push(pairwise_sum(&terms));
        weights.push(span * T::of(0.5));
    }
    let value = pairwise_sum(&series.iter().zip(&weights).map(|(s, w)| *s * *w).collect::<Vec<_>>());
    Ok(DualResidual {
        value,
        series,
        dx,
        dt: traj.dt,
    })
}

/// `max_{n,i} |U_ε − Ū|` over stored times and the cells of `interior`.
pub fn dual_distance<T: Scalar>(
    u_eps: &Trajectory<T>,
    u_bar: &Trajectory<T>,
    interior: std::ops::Range<usize>,
) -> Result<T> {
    if u_eps.grid != u_bar.grid || u_eps.fields.len() != u_bar.fields.len() {
        return Err(Error::InvalidArgument("trajectories are not sampled alike".into()));
    }
    let mut worst = T::zero();
    for (a, b) in u_eps.fields.iter().zip(&u_bar.fields) {
        let diff: Vec<T> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
        let pot = inverse_laplacian_values(&u_eps.grid, &diff)?;
        for v in &pot[interior.clone()] {
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// Per-ε `max |U_ε − Ū|` recorded by a sweep, in sweep order.
pub fn uniform_dual_convergence<T: Scalar>(report: &crate::harness::SweepReport<T>) -> Vec<T> {
    report.records.iter().map(|r| r.dual_distance).collect()
}
