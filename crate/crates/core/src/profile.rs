//! Piecewise-linear nondecreasing scalar functions with jumps and plateaus.
//!
//! A profile is stored as knots `u_0 < … < u_M` carrying a left and a right
//! limit. Between knots the function is linear; outside it continues with
//! the positive extension slopes. The graph, read as a monotone polyline with
//! vertical segments at jumps and horizontal segments on plateaus, is closed
//! under swapping axes, which is how generalized inverses are built.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which one-sided limit a profile takes at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot<T> {
    pub u: T,
    pub left: T,
    pub right: T,
    pub side: JumpSide,
}

impl<T: Scalar> Knot<T> {
    fn is_jump(&self) -> bool {
        self.right > self.left
    }

    fn value(&self) -> T {
        match self.side {
            JumpSide::Left => self.left,
            JumpSide::Right => self.right,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneProfile<T> {
    knots: Vec<Knot<T>>,
    left_slope: T,
    right_slope: T,
    allow_plateaus: bool,
    /// Cumulative integral from `u_0` to each knot.
    area: Vec<T>,
}

impl<T: Scalar> MonotoneProfile<T> {
    /// Build from knots. Extension slopes must be positive (coercivity).
    pub fn new(knots: Vec<Knot<T>>, left_slope: T, right_slope: T, allow_plateaus: bool) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidProfile("at least one knot is required".into()));
        }
        if !(left_slope > T::zero()) || !(right_slope > T::zero()) {
            return Err(Error::NonCoercive(format!(
                "extension slopes must be positive (got {left_slope}, {right_slope})"
            )));
        }
        for k in &knots {
            if !(k.u.is_finite() && k.left.is_finite() && k.right.is_finite()) {
                return Err(Error::InvalidProfile("non-finite knot".into()));
            }
            if k.right < k.left {
                return Err(Error::InvalidProfile(format!("decreasing jump at u = {}", k.u)));
            }
        }
        for w in knots.windows(2) {
            if !(w[1].u > w[0].u) {
                return Err(Error::InvalidProfile("knots must be strictly increasing".into()));
            }
            if w[1].left < w[0].right {
                return Err(Error::InvalidProfile(format!(
                    "profile decreases between u = {} and u = {}",
                    w[0].u, w[1].u
                )));
            }
            if w[1].left == w[0].right && !allow_plateaus {
                return Err(Error::InvalidProfile(format!(
                    "plateau on [{}, {}] but plateaus are not allowed",
                    w[0].u, w[1].u
                )));
            }
        }
        let mut area = Vec::with_capacity(knots.len());
        let mut acc = T::zero();
        area.push(acc);
        for w in knots.windows(2) {
            acc = acc + (w[0].right + w[1].left) * (w[1].u - w[0].u) * T::of(0.5);
            area.push(acc);
        }
        Ok(Self {
            knots,
            left_slope,
            right_slope,
            allow_plateaus,
            area,
        })
    }

    /// Continuous profile through `(us[i], vs[i])`.
    pub fn from_points(us: &[T], vs: &[T], left_slope: T, right_slope: T, allow_plateaus: bool) -> Result<Self> {
        if us.len() != vs.len() {
            return Err(Error::InvalidProfile("abscissae and values differ in length".into()));
        }
        let knots = us
            .iter()
            .zip(vs)
            .map(|(&u, &v)| Knot {
                u,
                left: v,
                right: v,
                side: JumpSide::Left,
            })
            .collect();
        Self::new(knots, left_slope, right_slope, allow_plateaus)
    }

    /// `u ↦ slope · u`.
    pub fn linear(slope: T) -> Result<Self> {
        Self::from_points(&[T::zero()], &[T::zero()], slope, slope, false)
    }

    pub fn identity() -> Self {
        Self::linear(T::one()).expect("unit slope is coercive")
    }

    /// The Stefan nonlinearity: `u + 1/2` below `-1/2`, `0` on `[-1/2, 1/2]`, `u - 1/2` above.
    pub fn stefan() -> Self {
        let h = T::of(0.5);
        Self::from_points(&[-h, h], &[T::zero(), T::zero()], T::one(), T::one(), true)
            .expect("valid Stefan profile")
    }

    pub fn knots(&self) -> &[Knot<T>] {
        &self.knots
    }

    pub fn extension_slopes(&self) -> (T, T) {
        (self.left_slope, self.right_slope)
    }

    pub fn allows_plateaus(&self) -> bool {
        self.allow_plateaus
    }

    pub fn with_jump_side(mut self, side: JumpSide) -> Self {
        for k in &mut self.knots {
            k.side = side;
        }
        self
    }

    /// Index of the last knot with `knot.u <= u`, or `None` if `u < u_0`.
    fn locate(&self, u: T) -> Option<usize> {
        let p = self.knots.partition_point(|k| k.u <= u);
        p.checked_sub(1)
    }

    fn eval_with(&self, u: T, side: Option<JumpSide>) -> T {
        let Some(k) = self.locate(u) else {
            let first = &self.knots[0];
            return first.left + self.left_slope * (u - first.u);
        };
        let knot = &self.knots[k];
        if u == knot.u {
            return match side {
                Some(JumpSide::Left) => knot.left,
                Some(JumpSide::Right) => knot.right,
                None => knot.value(),
            };
        }
        if k + 1 == self.knots.len() {
            return knot.right + self.right_slope * (u - knot.u);
        }
        let next = &self.knots[k + 1];
        let t = (u - knot.u) / (next.u - knot.u);
        knot.right + (next.left - knot.right) * t
    }

    /// Value, taking each knot's configured limit at jumps.
    pub fn eval(&self, u: T) -> T {
        self.eval_with(u, None)
    }

    pub fn eval_left_limit(&self, u: T) -> T {
        self.eval_with(u, Some(JumpSide::Left))
    }

    pub fn eval_right_limit(&self, u: T) -> T {
        self.eval_with(u, Some(JumpSide::Right))
    }

    /// Slope of the linear piece to the right of `u`.
    pub fn slope(&self, u: T) -> T {
        match self.locate(u) {
            None => self.left_slope,
            Some(k) if k + 1 == self.knots.len() => self.right_slope,
            Some(k) => {
                let (a, b) = (&self.knots[k], &self.knots[k + 1]);
                (b.left - a.right) / (b.u - a.u)
            }
        }
    }

    /// Slope of the linear piece to the left of `u`.
    pub fn slope_left(&self, u: T) -> T {
        let p = self.knots.partition_point(|k| k.u < u);
        if p == 0 {
            self.left_slope
        } else if p == self.knots.len() {
            self.right_slope
        } else {
            let (a, b) = (&self.knots[p - 1], &self.knots[p]);
            (b.left - a.right) / (b.u - a.u)
        }
    }

    /// Plateaus as `(u_start, u_end, value)`.
    pub fn plateaus(&self) -> Vec<(T, T, T)> {
        self.knots
            .windows(2)
            .filter(|w| w[1].left == w[0].right)
            .map(|w| (w[0].u, w[1].u, w[0].right))
            .collect()
    }

    /// Jumps as `(u, left limit, right limit)`.
    pub fn jumps(&self) -> Vec<(T, T, T)> {
        self.knots
            .iter()
            .filter(|k| k.is_jump())
            .map(|k| (k.u, k.left, k.right))
            .collect()
    }

    /// Minimal slope over all linear pieces and extensions.
    pub fn min_slope(&self) -> T {
        let inner = self
            .knots
            .windows(2)
            .map(|w| (w[1].left - w[0].right) / (w[1].u - w[0].u));
        inner.fold(self.left_slope.min(self.right_slope), T::min)
    }

    /// Maximal slope over all linear pieces and extensions.
    pub fn max_slope(&self) -> T {
        let inner = self
            .knots
            .windows(2)
            .map(|w| (w[1].left - w[0].right) / (w[1].u - w[0].u));
        inner.fold(self.left_slope.max(self.right_slope), T::max)
    }

    /// Antiderivative normalized to vanish at the first knot.
    fn antiderivative(&self, u: T) -> T {
        let half = T::of(0.5);
        let first = &self.knots[0];
        let Some(k) = self.locate(u) else {
            let d = first.u - u;
            return -first.left * d + self.left_slope * d * d * half;
        };
        let knot = &self.knots[k];
        let d = u - knot.u;
        let slope = if k + 1 == self.knots.len() {
            self.right_slope
        } else {
            let next = &self.knots[k + 1];
            (next.left - knot.right) / (next.u - knot.u)
        };
        self.area[k] + knot.right * d + slope * d * d * half
    }

    /// Exact `∫_a^b P(u) du`.
    pub fn integral(&self, a: T, b: T) -> T {
        self.antiderivative(b) - self.antiderivative(a)
    }

    /// Generalized inverse `G(r) = min{u : P(u) = r}` together with its
    /// discontinuity set `E` (the images of plateaus).
    pub fn generalized_inverse(&self) -> Result<(MonotoneProfile<T>, Vec<T>)> {
        let mut vertices: Vec<(T, T)> = Vec::with_capacity(2 * self.knots.len());
        for k in &self.knots {
            vertices.push((k.left, k.u));
            if k.is_jump() {
                vertices.push((k.right, k.u));
            }
        }
        let mut knots: Vec<Knot<T>> = Vec::new();
        for (v, u) in vertices {
            match knots.last_mut() {
                Some(last) if last.u == v => {
                    last.left = last.left.min(u);
                    last.right = last.right.max(u);
                }
                _ => knots.push(Knot {
                    u: v,
                    left: u,
                    right: u,
                    side: JumpSide::Left,
                }),
            }
        }
        let jumps: Vec<T> = knots.iter().filter(|k| k.is_jump()).map(|k| k.u).collect();
        let has_jumps = self.knots.iter().any(|k| k.is_jump());
        let inv = MonotoneProfile::new(
            knots,
            T::one() / self.left_slope,
            T::one() / self.right_slope,
            has_jumps,
        )?;
        Ok((inv, jumps))
    }

    /// Serialize as CSV rows `u,left,right,side` preceded by a comment line
    /// carrying the extension slopes.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# left_slope={:e} right_slope={:e} allow_plateaus={}",
            self.left_slope, self.right_slope, self.allow_plateaus
        )
        .unwrap();
        s.push_str("u,left,right,side\n");
        for k in &self.knots {
            let side = match k.side {
                JumpSide::Left => "left",
                JumpSide::Right => "right",
            };
            writeln!(s, "{:e},{:e},{:e},{}", k.u, k.left, k.right, side).unwrap();
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Config(format!("profile csv line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
        let mut left_slope = None;
        let mut right_slope = None;
        let mut allow = None;
        for tok in head.trim_start_matches('#').split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(1, "expected key=value"))?;
            match k {
                "left_slope" => left_slope = v.parse::<f64>().ok(),
                "right_slope" => right_slope = v.parse::<f64>().ok(),
                "allow_plateaus" => allow = v.parse::<bool>().ok(),
                _ => return Err(bad(1, &format!("unknown key '{k}'"))),
            }
        }
        let (Some(ls), Some(rs), Some(allow)) = (left_slope, right_slope, allow) else {
            return Err(bad(1, "missing slope or plateau flag"));
        };
        match lines.next() {
            Some((_, "u,left,right,side")) => {}
            _ => return Err(bad(2, "expected column header u,left,right,side")),
        }
        let mut knots = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(bad(i + 1, "expected 4 columns"));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            let side = match cols[3].trim() {
                "left" => JumpSide::Left,
                "right" => JumpSide::Right,
                _ => return Err(bad(i + 1, "side must be left or right")),
            };
            knots.push(Knot {
                u: T::of(num(cols[0])?),
                left: T::of(num(cols[1])?),
                right: T::of(num(cols[2])?),
                side,
            });
        }
        Self::new(knots, T::of(ls), T::of(rs), allow)
    }
}
