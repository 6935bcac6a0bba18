//! Cell-wise pressure laws `w_i(u) = f(x_i, y_i, u) + σu`.

use std::sync::Arc;

use super::grid::Grid1D;
use crate::error::Result;
use crate::flux::{invert_increasing, Flux, FluxKind, Type1};
use crate::homogenized::{FbarProfile, HomogenizedFlux};
use crate::profile::MonotoneProfile;
use crate::scalar::Scalar;

/// Where the flux is sampled.
#[derive(Clone, Copy)]
pub enum Sampling<'a, T: Scalar> {
    /// `f(x, x/ε, u)`.
    Eps(T),
    /// `f̄(x, u)`.
    Homogenized(&'a HomogenizedFlux<T>),
}

#[derive(Clone)]
enum CellLaw<T: Scalar> {
    /// `h·P(u) + s`, with `Q` the inverse of `P` taken right-continuously.
    Scaled {
        h: T,
        s: T,
        profile: Arc<MonotoneProfile<T>>,
        inverse: Arc<MonotoneProfile<T>>,
    },
    Rule {
        x: T,
        carriers: [T; 8],
        k: usize,
        rule: Arc<Type1<T>>,
    },
}

impl<T: Scalar> CellLaw<T> {
    fn eval(&self, u: T) -> T {
        match self {
            CellLaw::Scaled { h, s, profile, .. } => *h * profile.eval(u) + *s,
            CellLaw::Rule { x, carriers, k, rule } => rule.f_at(*x, &carriers[..*k], u),
        }
    }

    fn slope(&self, u: T) -> T {
        match self {
            CellLaw::Scaled { h, profile, .. } => *h * profile.slope(u),
            CellLaw::Rule { x, carriers, k, rule } => rule.df_at(*x, &carriers[..*k], u),
        }
    }

    fn inverse(&self, v: T) -> T {
        match self {
            CellLaw::Scaled { h, s, inverse, .. } => inverse.eval_right_limit((v - *s) / *h),
            CellLaw::Rule { x, carriers, k, rule } => rule.g_at(*x, &carriers[..*k], v),
        }
    }
}

/// The flux frozen on a grid, plus the regularization `σ`.
#[derive(Clone)]
pub struct DiscretePressure<T: Scalar> {
    cells: Vec<CellLaw<T>>,
    sigma: T,
    plateaus: bool,
    label: String,
}

impl<T: Scalar> DiscretePressure<T> {
    pub fn new(flux: &Flux<T>, grid: &Grid1D<T>, sampling: Sampling<'_, T>) -> Result<Self> {
        let xs = grid.centers();
        match sampling {
            Sampling::Eps(eps) => {
                let (cells, plateaus) = match &flux.kind {
                    FluxKind::Type2(t) => {
                        let profile = Arc::new(t.profile.clone());
                        let inverse = Arc::new(t.inverse.clone());
                        let cells = xs
                            .iter()
                            .map(|&x| {
                                let (h, s) = t.coefficients(x, x / eps);
                                CellLaw::Scaled {
                                    h,
                                    s,
                                    profile: profile.clone(),
                                    inverse: inverse.clone(),
                                }
                            })
                            .collect();
                        (cells, !t.profile.plateaus().is_empty())
                    }
                    FluxKind::Type1(t) => {
                        let rule = Arc::new(t.clone());
                        let cells = xs
                            .iter()
                            .map(|&x| {
                                let y = x / eps;
                                let mut carriers = [T::zero(); 8];
                                for (c, a) in carriers.iter_mut().zip(&t.carriers) {
                                    *c = a.eval1(y);
                                }
                                CellLaw::Rule {
                                    x,
                                    carriers,
                                    k: t.carriers.len(),
                                    rule: rule.clone(),
                                }
                            })
                            .collect();
                        (cells, false)
                    }
                };
                Ok(Self {
                    cells,
                    sigma: T::zero(),
                    plateaus,
                    label: format!("{} (eps={})", flux.id, eps),
                })
            }
            Sampling::Homogenized(hf) => {
                let mut shared: Vec<(usize, Arc<MonotoneProfile<T>>, Arc<MonotoneProfile<T>>)> = Vec::new();
                let mut cells = Vec::with_capacity(xs.len());
                for &x in &xs {
                    let p = hf.profile_at(x);
                    match p.as_ref() {
                        FbarProfile::Table { fbar, gbar } => {
                            let key = Arc::as_ptr(&p) as usize;
                            let (pf, pg) = match shared.iter().find(|e| e.0 == key) {
                                Some(e) => (e.1.clone(), e.2.clone()),
                                None => {
                                    let e = (key, Arc::new(fbar.clone()), Arc::new(gbar.clone()));
                                    shared.push(e.clone());
                                    (e.1, e.2)
                                }
                            };
                            cells.push(CellLaw::Scaled {
                                h: T::one(),
                                s: T::zero(),
                                profile: pf,
                                inverse: pg,
                            });
                        }
                        FbarProfile::Passthrough => {
                            let FluxKind::Type1(t) = &hf.flux().kind else {
                                unreachable!("passthrough tables come from type-1 fluxes")
                            };
                            cells.push(CellLaw::Rule {
                                x,
                                carriers: [T::zero(); 8],
                                k: 0,
                                rule: Arc::new(t.clone()),
                            });
                        }
                    }
                }
                Ok(Self {
                    cells,
                    sigma: T::zero(),
                    plateaus: false,
                    label: format!("{} (homogenized)", hf.flux().id),
                })
            }
        }
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// True when some cell law has a flat piece.
    pub fn has_plateaus(&self) -> bool {
        self.plateaus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `f(x_i, y_i, u)` without the regularization.
    pub fn raw(&self, i: usize, u: T) -> T {
        self.cells[i].eval(u)
    }

    /// `w_i(u) = f_i(u) + σu`.
    pub fn pressure(&self, i: usize, u: T) -> T {
        self.cells[i].eval(u) + self.sigma * u
    }

    /// Right derivative of `w_i`.
    pub fn slope(&self, i: usize, u: T) -> T {
        self.cells[i].slope(u) + self.sigma
    }

    /// Raw slope of `f_i` (no σ).
    pub fn raw_slope(&self, i: usize, u: T) -> T {
        self.cells[i].slope(u)
    }

    /// `w_i⁻¹(v)`.
    pub fn inverse(&self, i: usize, v: T) -> T {
        if self.sigma == T::zero() {
            self.cells[i].inverse(v)
        } else {
            invert_increasing(|u| self.pressure(i, u), v)
        }
    }

    pub fn pressures(&self, u: &[T], out: &mut [T]) {
        for (i, (o, &ui)) in out.iter_mut().zip(u).enumerate() {
            *o = self.pressure(i, ui);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::presets;
    use crate::homogenized::{homogenized_f, HomogenizeOptions};

    #[test]
    fn stefan_cells() {
        let g = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let law = DiscretePressure::new(&presets::stefan::<f64>(), &g, Sampling::Eps(0.125)).unwrap();
        assert!(law.has_plateaus());
        for i in 0..g.n {
            let x = g.center(i);
            let s = crate::algebra::presets::psi0_value(x / 0.125);
            assert_eq!(law.pressure(i, 2.0), 1.5 + s);
            let u = law.inverse(i, 0.0);
            assert!(law.pressure(i, u).abs() < 1e-14);
        }
        let reg = law.clone().with_sigma(0.01);
        for i in [0, 17, 40] {
            let u = reg.inverse(i, 0.3);
            assert!((reg.pressure(i, u) - 0.3).abs() < 1e-12);
            assert_eq!(reg.slope(i, 0.0) - law.slope(i, 0.0), 0.01);
        }
    }

    #[test]
    fn homogenized_cells_share_tables() {
        let g = Grid1D::new(-2.0, 2.0, 32).unwrap();
        let flux = presets::stefan::<f64>();
        let hf = homogenized_f(&flux, &HomogenizeOptions::default()).unwrap();
        let law = DiscretePressure::new(&flux, &g, Sampling::Homogenized(&hf)).unwrap();
        assert!(!law.has_plateaus());
        assert!((law.pressure(3, 1.0) - 2.0 / 3.0).abs() < 1e-9);
        assert!((law.inverse(3, 1.0) - 1.5).abs() < 1e-9);
        let heat = presets::heat::<f64>();
        let hh = homogenized_f(&heat, &HomogenizeOptions::default()).unwrap();
        let g1 = Grid1D::new(0.0, 1.0, 16).unwrap();
        let l = DiscretePressure::new(&heat, &g1, Sampling::Homogenized(&hh)).unwrap();
        assert_eq!(l.pressure(2, 0.7), 0.7);
    }
}
