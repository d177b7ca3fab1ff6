//! Bowen balls, their masses, and the continuous mollifier
//! g(y) = clamp(2 − d_n(x, y)/ε, 0, 1) sandwiched between μ(B_n(x, ε)) and
//! μ(B_n(x, 2ε)).

mod cylinder;

pub use cylinder::{analytic_ball_mass, analytic_mollified_mass, resolving_depth, MassBracket, RefineOptions, TAIL_DIGITS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{AtomicMeasure, Measure};
use crate::systems::{dn_profile, Point, SystemHandle};

/// Which Bowen ball a query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallSide {
    /// B_n(x, ε) = {y : max_{0≤i<n} d(f^i x, f^i y) < ε}.
    #[serde(rename = "one")]
    Open,
    /// V[x, n, δ] = {y : max_{|i|≤n} d(f^i x, f^i y) ≤ δ}; needs an invertible map.
    #[serde(rename = "two")]
    TwoSidedClosed,
    /// {y : max_{0≤i≤n} d(f^i x, f^i y) ≤ δ}.
    #[serde(rename = "forward")]
    ForwardClosed,
}

impl BallSide {
    /// Smallest admissible n.
    pub fn min_n(self) -> usize {
        match self {
            BallSide::Open => 1,
            _ => 0,
        }
    }

    pub fn is_closed(self) -> bool {
        self != BallSide::Open
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallQuery {
    pub center: Point,
    pub n: usize,
    pub epsilon: f64,
    pub sided: BallSide,
}

impl BallQuery {
    pub fn new(center: Point, n: usize, epsilon: f64, sided: BallSide) -> Self {
        BallQuery { center, n, epsilon, sided }
    }

    pub fn open(center: Point, n: usize, epsilon: f64) -> Self {
        Self::new(center, n, epsilon, BallSide::Open)
    }

    pub fn two_sided(center: Point, n: usize, delta: f64) -> Self {
        Self::new(center, n, delta, BallSide::TwoSidedClosed)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        BallQuery { epsilon, ..self.clone() }
    }

    pub fn with_n(&self, n: usize) -> Self {
        BallQuery { n, ..self.clone() }
    }

    fn validate(&self, sys: &SystemHandle) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Invalid(format!("radius {} must be positive", self.epsilon)));
        }
        if self.n < self.sided.min_n() {
            return Err(Error::Invalid(format!("n = {} is too small for {:?}", self.n, self.sided)));
        }
        if self.sided == BallSide::TwoSidedClosed && !sys.invertible {
            return Err(Error::NotInvertible(sys.name.clone()));
        }
        Ok(())
    }
}

/// Governing distances for n = `sided.min_n()` ..= `n_max`, in that order:
/// d_n for open balls, max over [0, n] or [−n, n] for closed ones.
pub fn ball_distance_profile(
    sys: &SystemHandle,
    sided: BallSide,
    x: &Point,
    y: &Point,
    n_max: usize,
) -> Result<Vec<f64>> {
    match sided {
        BallSide::Open => {
            if n_max == 0 {
                return Ok(Vec::new());
            }
            dn_profile(sys, x, y, n_max)
        }
        BallSide::ForwardClosed => dn_profile(sys, x, y, n_max + 1),
        BallSide::TwoSidedClosed => {
            if !sys.invertible {
                return Err(Error::NotInvertible(sys.name.clone()));
            }
            let mut out = Vec::with_capacity(n_max + 1);
            let mut m = sys.metric(x, y)?;
            out.push(m);
            let (mut fa, mut fb) = (x.clone(), y.clone());
            let (mut ba, mut bb) = (x.clone(), y.clone());
            for _ in 1..=n_max {
                fa = sys.apply(&fa)?;
                fb = sys.apply(&fb)?;
                ba = sys.apply_inverse(&ba)?;
                bb = sys.apply_inverse(&bb)?;
                m = m.max(sys.metric(&fa, &fb)?).max(sys.metric(&ba, &bb)?);
                out.push(m);
            }
            Ok(out)
        }
    }
}

/// The distance that decides membership of y in the ball of `q`.
pub fn ball_distance(sys: &SystemHandle, q: &BallQuery, y: &Point) -> Result<f64> {
    q.validate(sys)?;
    Ok(*ball_distance_profile(sys, q.sided, &q.center, y, q.n)?.last().expect("n within range"))
}

#[inline]
fn inside(d: f64, epsilon: f64, sided: BallSide) -> bool {
    if sided.is_closed() {
        d <= epsilon
    } else {
        d < epsilon
    }
}

pub fn ball_contains(sys: &SystemHandle, q: &BallQuery, y: &Point) -> Result<bool> {
    Ok(inside(ball_distance(sys, q, y)?, q.epsilon, q.sided))
}

/// 1 on [0, ε], the ramp 2 − d/ε on [ε, 2ε], 0 beyond.
#[inline]
pub fn mollifier_value(d: f64, epsilon: f64) -> f64 {
    if d <= epsilon {
        1.0
    } else if d >= 2.0 * epsilon {
        0.0
    } else {
        2.0 - d / epsilon
    }
}

pub fn mollifier(sys: &SystemHandle, q: &BallQuery, y: &Point) -> Result<f64> {
    Ok(mollifier_value(ball_distance(sys, q, y)?, q.epsilon))
}

/// Governing distances from a fixed center to every atom, for all n up to
/// `n_max`; masses at any (n, ε) are then sums over a column.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    sided: BallSide,
    weights: Vec<f64>,
    /// dist[a][n - min_n]
    dist: Vec<Vec<f64>>,
}

impl DistanceTable {
    pub fn new(sys: &SystemHandle, sided: BallSide, x: &Point, mu: &AtomicMeasure, n_max: usize) -> Result<Self> {
        if n_max < sided.min_n() {
            return Err(Error::Invalid(format!("n = {n_max} is too small for {sided:?}")));
        }
        let dist = mu
            .atoms()
            .iter()
            .map(|a| ball_distance_profile(sys, sided, x, a, n_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(DistanceTable { sided, weights: mu.weights().to_vec(), dist })
    }

    pub fn n_max(&self) -> usize {
        self.sided.min_n() + self.dist[0].len() - 1
    }

    fn column(&self, n: usize) -> usize {
        assert!(n >= self.sided.min_n() && n <= self.n_max(), "n = {n} outside the table");
        n - self.sided.min_n()
    }

    /// Governing distance to atom `a` at time n.
    pub fn distance(&self, a: usize, n: usize) -> f64 {
        self.dist[a][self.column(n)]
    }

    pub fn mass(&self, epsilon: f64, n: usize) -> f64 {
        let c = self.column(n);
        let mut m = 0.0;
        for (w, d) in self.weights.iter().zip(&self.dist) {
            if inside(d[c], epsilon, self.sided) {
                m += w;
            }
        }
        m
    }

    pub fn mollified(&self, epsilon: f64, n: usize) -> f64 {
        self.mollified_with(epsilon, n, &mollifier_value)
    }

    /// ∫ profile(d, ε) dμ for an arbitrary profile of the governing distance.
    pub fn mollified_with(&self, epsilon: f64, n: usize, profile: &dyn Fn(f64, f64) -> f64) -> f64 {
        let c = self.column(n);
        let mut m = 0.0;
        for (w, d) in self.weights.iter().zip(&self.dist) {
            let g = profile(d[c], epsilon);
            if g != 0.0 {
                m += w * g;
            }
        }
        m
    }
}

/// μ of the ball. Atomic measures are summed exactly; analytic measures on
/// shifts use the cylinder refinement with default options.
pub fn ball_mass(sys: &SystemHandle, q: &BallQuery, mu: &Measure) -> Result<f64> {
    Ok(ball_mass_with(sys, q, mu, &RefineOptions::default())?.value)
}

pub fn ball_mass_with(sys: &SystemHandle, q: &BallQuery, mu: &Measure, opts: &RefineOptions) -> Result<MassBracket> {
    q.validate(sys)?;
    match mu {
        Measure::Atomic(m) => {
            let t = DistanceTable::new(sys, q.sided, &q.center, m, q.n)?;
            Ok(MassBracket { value: t.mass(q.epsilon, q.n), unresolved: 0.0, nodes: m.len() })
        }
        Measure::Analytic(a) => analytic_ball_mass(sys, q, a, opts),
    }
}

/// ∫ g dμ for the mollifier g of `q`.
pub fn mollified_mass(sys: &SystemHandle, q: &BallQuery, mu: &Measure) -> Result<f64> {
    Ok(mollified_mass_with(sys, q, mu, &RefineOptions::default())?.value)
}

pub fn mollified_mass_with(
    sys: &SystemHandle,
    q: &BallQuery,
    mu: &Measure,
    opts: &RefineOptions,
) -> Result<MassBracket> {
    q.validate(sys)?;
    match mu {
        Measure::Atomic(m) => {
            let t = DistanceTable::new(sys, q.sided, &q.center, m, q.n)?;
            Ok(MassBracket { value: t.mollified(q.epsilon, q.n), unresolved: 0.0, nodes: m.len() })
        }
        Measure::Analytic(a) => analytic_mollified_mass(sys, q, a, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::AnalyticMeasure;
    use crate::systems::{Sided, Word};

    #[test]
    fn doubling_examples() {
        let sys = SystemHandle::doubling();
        let y = Point::circle(0.1);
        assert!(ball_contains(&sys, &BallQuery::open(Point::circle(0.0), 2, 0.25), &y).unwrap());
        assert!(!ball_contains(&sys, &BallQuery::open(Point::circle(0.0), 2, 0.15), &y).unwrap());
        assert!(ball_contains(&sys, &BallQuery::open(y.clone(), 5, 1e-9), &y).unwrap());
        assert!(matches!(
            ball_contains(&sys, &BallQuery::two_sided(y.clone(), 1, 0.1), &y),
            Err(Error::NotInvertible(_))
        ));
    }

    #[test]
    fn mollifier_examples() {
        assert!((mollifier_value(0.15, 0.1) - 0.5).abs() < 1e-12);
        assert_eq!(mollifier_value(1.5, 1.0), 0.5);
        assert_eq!(mollifier_value(0.3, 0.1), 0.0);
        assert_eq!(mollifier_value(0.0, 0.1), 1.0);
        // two atoms at d_1 = 1.5ε and 3ε on the circle
        let sys = SystemHandle::rotation(0.1);
        let mu = AtomicMeasure::new(&sys, vec![Point::circle(0.15), Point::circle(0.3)], vec![0.5, 0.5]).unwrap();
        let g = mollified_mass(&sys, &BallQuery::open(Point::circle(0.0), 1, 0.1), &mu.into()).unwrap();
        assert!((g - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_has_full_mass() {
        let sys = SystemHandle::doubling();
        let mu: Measure = AtomicMeasure::dirac(&sys, Point::circle(0.0)).unwrap().into();
        for n in [1, 5, 40] {
            for e in [1e-6, 0.1] {
                assert_eq!(ball_mass(&sys, &BallQuery::open(Point::circle(0.0), n, e), &mu).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn bernoulli_cylinder_ball() {
        // at ε = 2^{-c} the ball is the cylinder of length n + c − 1
        let sys = SystemHandle::full_shift(2, Sided::One);
        let mu: Measure = AnalyticMeasure::bernoulli(vec![0.5, 0.5]).unwrap().into();
        let x = Point::Word(Word::one_sided((0..400).map(|i| (i % 3 == 0) as u8).collect()));
        for n in [1, 4, 9] {
            for c in [1, 3, 6] {
                let m = ball_mass(&sys, &BallQuery::open(x.clone(), n, 0.5f64.powi(c)), &mu).unwrap();
                assert_eq!(m, 0.5f64.powi(n as i32 + c - 1));
            }
        }
    }
}
