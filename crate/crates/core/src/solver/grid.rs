use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform cell-centered grid on `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    pub a: T,
    pub b: T,
    pub n: usize,
}

impl<T: Scalar> Grid1D<T> {
    pub fn new(a: T, b: T, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidArgument(format!("grid needs at least 8 cells, got {n}")));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid interval ({a}, {b})")));
        }
        Ok(Self { a, b, n })
    }

    pub fn dx(&self) -> T {
        (self.b - self.a) / T::of_usize(self.n)
    }

    pub fn center(&self, i: usize) -> T {
        self.a + (T::of_usize(i) + T::of(0.5)) * self.dx()
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    pub fn length(&self) -> T {
        self.b - self.a
    }

    /// `ξ(x) = sin(π(x − a)/(b − a))` at the cell centers.
    pub fn eigen_weight(&self) -> Vec<T> {
        let l = self.length();
        (0..self.n)
            .map(|i| (T::PI() * (self.center(i) - self.a) / l).sin())
            .collect()
    }

    /// First eigenvalue of the discrete Dirichlet Laplacian, `(4/dx²) sin²(π/(2N))`.
    pub fn first_eigenvalue(&self) -> T {
        let dx = self.dx();
        let s = (T::PI() / (T::of(2.0) * T::of_usize(self.n))).sin();
        T::of(4.0) * s * s / (dx * dx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Density,
    Pressure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: Grid1D<T>,
    pub values: Vec<T>,
    pub role: Role,
}

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid1D<T>, values: Vec<T>, role: Role) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} cells",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(Self { grid, values, role })
    }

    pub fn density(grid: Grid1D<T>, values: Vec<T>) -> Result<Self> {
        Self::new(grid, values, Role::Density)
    }

    pub fn pressure(grid: Grid1D<T>, values: Vec<T>) -> Result<Self> {
        Self::new(grid, values, Role::Pressure)
    }

    pub fn from_fn(grid: Grid1D<T>, role: Role, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(grid, grid.centers().into_iter().map(f).collect(), role)
    }

    pub fn zeros(grid: Grid1D<T>, role: Role) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.n],
            role,
        }
    }
}

/// `(v_{i−1} − 2v_i + v_{i+1})/dx²` with ghosts `v_{−1} = −v_0`, `v_N = −v_{N−1}`.
pub fn apply_laplacian<T: Scalar>(v: &[T], dx: T, out: &mut [T]) {
    let n = v.len();
    let inv = T::one() / (dx * dx);
    for i in 0..n {
        let left = if i == 0 { -v[0] } else { v[i - 1] };
        let right = if i + 1 == n { -v[n - 1] } else { v[i + 1] };
        out[i] = (left - (v[i] + v[i]) + right) * inv;
    }
}

/// Discrete Laplacian with the zero-pressure boundary condition.
pub fn laplacian_dirichlet<T: Scalar>(v: &Field<T>) -> Result<Field<T>> {
    if v.role != Role::Pressure {
        return Err(Error::InvalidArgument("the Laplacian acts on pressure fields".into()));
    }
    let mut out = vec![T::zero(); v.grid.n];
    apply_laplacian(&v.values, v.grid.dx(), &mut out);
    Ok(Field {
        grid: v.grid,
        values: out,
        role: Role::Pressure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_basics() {
        assert!(Grid1D::new(0.0, 1.0, 7).is_err());
        assert!(Grid1D::new(1.0, 0.0, 16).is_err());
        let g = Grid1D::new(0.0f64, 1.0, 10).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert!((g.center(0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn laplacian_of_zero_and_affine() {
        let g = Grid1D::new(0.0f64, 1.0, 16).unwrap();
        let z = laplacian_dirichlet(&Field::zeros(g, Role::Pressure)).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        let lin = Field::from_fn(g, Role::Pressure, |x| 2.0 * x + 1.0).unwrap();
        let l = laplacian_dirichlet(&lin).unwrap();
        for v in &l.values[1..15] {
            assert!(v.abs() < 1e-10);
        }
        assert!(l.values[0] < -1.0 && l.values[15] < -1.0);
        assert!(laplacian_dirichlet(&Field::zeros(g, Role::Density)).is_err());
    }

    #[test]
    fn sine_is_an_eigenvector() {
        for n in [32, 64, 128] {
            let g = Grid1D::new(0.0f64, 1.0, n).unwrap();
            let v = Field::pressure(g, g.eigen_weight()).unwrap();
            let l = laplacian_dirichlet(&v).unwrap();
            let lam = g.first_eigenvalue();
            for i in 0..n {
                assert!((l.values[i] + lam * v.values[i]).abs() < 1e-9);
                // second-order agreement with the continuum eigenvalue
                assert!((l.values[i] + PI * PI * v.values[i]).abs() < 2.0 * g.dx() * g.dx() * PI.powi(4));
            }
        }
    }
}
