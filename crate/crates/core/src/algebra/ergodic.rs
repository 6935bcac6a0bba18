use super::AlgebraFn;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureOptions;
use crate::scalar::{pairwise_sum, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct BallAverageOptions {
    /// Midpoint samples per unit length along each axis (at least 64).
    pub points_per_unit: usize,
}

impl Default for BallAverageOptions {
    fn default() -> Self {
        Self { points_per_unit: 256 }
    }
}

/// Average of `f` over the ball `B(center; radius)` by the midpoint rule.
pub fn ball_average<T: Scalar>(
    f: &AlgebraFn<T>,
    center: &[T],
    radius: T,
    opts: &BallAverageOptions,
) -> Result<T> {
    if !(radius > T::zero()) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let ppu = opts.points_per_unit.max(64);
    let n = ((T::of(2.0) * radius).to_f64_lossy() * ppu as f64).ceil().max(1.0) as usize;
    let h = T::of(2.0) * radius / T::of_usize(n);
    let half = T::of(0.5);
    match f.dim() {
        1 => {
            let vals: Vec<T> = (0..n)
                .map(|i| f.eval1(center[0] - radius + (T::of_usize(i) + half) * h))
                .collect();
            Ok(pairwise_sum(&vals) / T::of_usize(n))
        }
        _ => {
            let r2 = radius * radius;
            let mut vals = Vec::new();
            for i in 0..n {
                let dx = -radius + (T::of_usize(i) + half) * h;
                for j in 0..n {
                    let dy = -radius + (T::of_usize(j) + half) * h;
                    if dx * dx + dy * dy <= r2 {
                        vals.push(f.eval(&[center[0] + dx, center[1] + dy]));
                    }
                }
            }
            let count = vals.len();
            Ok(pairwise_sum(&vals) / T::of_usize(count.max(1)))
        }
    }
}

/// For each radius, the empirical mean over `centers` of
/// `|ball_average(f, y, t) − mean(f)|²`. Ergodic representations drive this
/// to zero as the radius grows.
pub fn ergodicity_defect<T: Scalar>(
    f: &AlgebraFn<T>,
    radii: &[T],
    centers: &[Vec<T>],
    ball: &BallAverageOptions,
    quad: &QuadratureOptions<T>,
) -> Result<Vec<T>> {
    if centers.len() < 32 {
        return Err(Error::InvalidArgument(format!(
            "ergodicity defect needs at least 32 centers, got {}",
            centers.len()
        )));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be increasing".into()));
    }
    let mean = f.mean(quad)?;
    radii
        .iter()
        .map(|&t| {
            let sq: Vec<T> = centers
                .iter()
                .map(|c| ball_average(f, c, t, ball).map(|a| (a - mean) * (a - mean)))
                .collect::<Result<_>>()?;
            Ok(pairwise_sum(&sq) / T::of_usize(sq.len()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::presets;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn centers(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| vec![rng.gen_range(-100.0..100.0)]).collect()
    }

    #[test]
    fn constant_ball_average() {
        let c = AlgebraFn::constant(1, 5.0f64);
        let v = ball_average(&c, &[3.3], 0.7, &BallAverageOptions::default()).unwrap();
        assert!((v - 5.0).abs() < 1e-14);
        let d = ergodicity_defect(
            &c,
            &[1.0, 2.0],
            &centers(32, 1),
            &BallAverageOptions::default(),
            &QuadratureOptions::default(),
        )
        .unwrap();
        assert!(d.iter().all(|&x| x < 1e-28));
    }

    #[test]
    fn tent_over_full_periods_is_exact() {
        let psi = presets::stefan_psi0::<f64>();
        let v = ball_average(&psi, &[0.0], 2.0, &BallAverageOptions::default()).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn cosine_ball_average_closed_form() {
        let c = presets::cos1::<f64>();
        for t in [0.3, 0.75, 2.2] {
            let v = ball_average(&c, &[0.0], t, &BallAverageOptions::default()).unwrap();
            let exact = (2.0 * PI * t).sin() / (2.0 * PI * t);
            assert!((v - exact).abs() < 1e-4, "t={t}: {v} vs {exact}");
        }
    }

    #[test]
    fn tent_defect_vanishes_on_period_multiples() {
        let psi = presets::stefan_psi0::<f64>();
        let radii = [1.0, 2.0, 3.0, 4.0, 8.0, 16.0];
        let d = ergodicity_defect(
            &psi,
            &radii,
            &centers(40, 7),
            &BallAverageOptions::default(),
            &QuadratureOptions::default(),
        )
        .unwrap();
        for (t, v) in radii.iter().zip(&d) {
            if (t % 2.0) == 0.0 {
                assert!(*v < 1e-10, "radius {t}: {v}");
            } else {
                assert!(*v > 1e-4, "radius {t}: {v}");
            }
        }
        assert!(d[2] < d[0]);
    }

    #[test]
    fn cosine_defect_decays_like_inverse_square() {
        let c = presets::cos1::<f64>();
        let radii = [0.75, 1.75, 3.75, 7.75];
        let d = ergodicity_defect(
            &c,
            &radii,
            &centers(256, 3),
            &BallAverageOptions::default(),
            &QuadratureOptions::default(),
        )
        .unwrap();
        for (t, v) in radii.iter().zip(&d) {
            // E[cos²] over random centers ≈ 1/2, times (sin 2πt / 2πt)²
            let oracle = 0.5 / (2.0 * PI * t).powi(2);
            assert!((v / oracle - 1.0).abs() < 0.25, "t={t}: {v} vs {oracle}");
        }
        assert!(d.windows(2).all(|w| w[1] < w[0]));
        assert!(d[3] < d[0] / 4.0);
    }

    #[test]
    fn quasi_periodic_defect_decreases() {
        let qp = presets::qp_cos_sqrt2::<f64>();
        let radii = [1.0, 4.0, 16.0, 64.0];
        let d = ergodicity_defect(
            &qp,
            &radii,
            &centers(64, 11),
            &BallAverageOptions { points_per_unit: 64 },
            &QuadratureOptions::default(),
        )
        .unwrap();
        assert!(d[3] < d[0] / 4.0, "{d:?}");
    }

    #[test]
    fn preconditions() {
        let c = presets::cos1::<f64>();
        assert!(ball_average(&c, &[0.0], 0.0, &BallAverageOptions::default()).is_err());
        assert!(ergodicity_defect(
            &c,
            &[1.0],
            &centers(31, 0),
            &BallAverageOptions::default(),
            &QuadratureOptions::default()
        )
        .is_err());
    }

    #[test]
    fn disk_average_in_two_dimensions() {
        let f = presets::cos2d::<f64>();
        let v = ball_average(&f, &[0.0, 0.0], 3.0, &BallAverageOptions { points_per_unit: 64 }).unwrap();
        assert!(v.abs() < 0.05, "{v}");
    }
}
