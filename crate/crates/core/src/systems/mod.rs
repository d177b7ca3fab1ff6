//! The system zoo: doubling and tent maps and the circle rotation on R/Z
//! with the circle metric, and full shifts with the product metric
//! ρ(x, y) = Σ 2^{-|i|} · ½ · [x_i ≠ y_i].

mod phase;
mod word;

pub use phase::Phase;
pub use word::Word;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of coordinates on each side summed by the shift metric. The
/// neglected tail is below 2^{-63}.
pub const METRIC_DEPTH: i64 = 64;

#[derive(Clone, PartialEq, Eq)]
pub enum Point {
    Circle(Phase),
    Word(Word),
}

impl std::fmt::Debug for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Point::Circle(p) => p.fmt(f),
            Point::Word(w) => w.fmt(f),
        }
    }
}

impl Point {
    pub fn circle(x: f64) -> Self {
        Point::Circle(Phase::from_f64(x))
    }

    pub fn as_phase(&self) -> Option<&Phase> {
        match self {
            Point::Circle(p) => Some(p),
            Point::Word(_) => None,
        }
    }

    pub fn as_word(&self) -> Option<&Word> {
        match self {
            Point::Word(w) => Some(w),
            Point::Circle(_) => None,
        }
    }
}

impl From<Phase> for Point {
    fn from(p: Phase) -> Self {
        Point::Circle(p)
    }
}

impl From<Word> for Point {
    fn from(w: Word) -> Self {
        Point::Word(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sided {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Doubling,
    Tent,
    /// Rotation by `step / 2^64`.
    Rotation { step: u64 },
    Shift { alphabet: u8, sided: Sided },
}

/// A declared expanding constant: d(fx, fy) ≥ λ d(x, y) whenever d(x, y) < radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expanding {
    pub lambda: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemHandle {
    pub name: String,
    pub kind: SystemKind,
    pub expanding: Option<Expanding>,
    pub lipschitz: Option<f64>,
    pub invertible: bool,
}

impl SystemHandle {
    pub fn doubling() -> Self {
        SystemHandle {
            name: "doubling".into(),
            kind: SystemKind::Doubling,
            expanding: Some(Expanding { lambda: 2.0, radius: 0.25 }),
            lipschitz: Some(2.0),
            invertible: false,
        }
    }

    pub fn tent() -> Self {
        SystemHandle {
            name: "tent".into(),
            kind: SystemKind::Tent,
            expanding: None,
            lipschitz: Some(2.0),
            invertible: false,
        }
    }

    pub fn rotation(alpha: f64) -> Self {
        let f = alpha - alpha.floor();
        SystemHandle {
            name: "rotation".into(),
            kind: SystemKind::Rotation { step: Phase::from_f64(f).fixed() },
            expanding: None,
            lipschitz: Some(1.0),
            invertible: true,
        }
    }

    /// Rotation by the golden-ratio conjugate (√5 − 1)/2.
    pub fn golden_rotation() -> Self {
        Self::rotation((5f64.sqrt() - 1.0) / 2.0)
    }

    pub fn full_shift(alphabet: u8, sided: Sided) -> Self {
        assert!(alphabet >= 2, "a full shift needs at least two symbols");
        let (name, expanding, invertible) = match sided {
            Sided::One => ("shift-one", Some(Expanding { lambda: 2.0, radius: 0.5 }), false),
            Sided::Two => ("shift-two", None, true),
        };
        SystemHandle {
            name: format!("{name}-{alphabet}"),
            kind: SystemKind::Shift { alphabet, sided },
            expanding,
            lipschitz: Some(2.0),
            invertible,
        }
    }

    pub fn with_expanding(mut self, lambda: f64, radius: f64) -> Self {
        self.expanding = Some(Expanding { lambda, radius });
        self
    }

    pub fn with_lipschitz(mut self, lambda: f64) -> Self {
        self.lipschitz = Some(lambda);
        self
    }

    pub fn is_shift(&self) -> bool {
        matches!(self.kind, SystemKind::Shift { .. })
    }

    pub fn shift_params(&self) -> Option<(u8, Sided)> {
        match self.kind {
            SystemKind::Shift { alphabet, sided } => Some((alphabet, sided)),
            _ => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            SystemKind::Shift { sided: Sided::One, .. } => 1.0,
            SystemKind::Shift { sided: Sided::Two, .. } => 1.5,
            _ => 0.5,
        }
    }

    fn mismatch(&self) -> Error {
        Error::Invalid(format!("point type does not match system `{}`", self.name))
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match (self.kind, x) {
            (SystemKind::Doubling, Point::Circle(p)) => Ok(Point::Circle(p.doubled())),
            (SystemKind::Tent, Point::Circle(p)) => Ok(Point::Circle(p.tented())),
            (SystemKind::Rotation { step }, Point::Circle(p)) => Ok(Point::Circle(p.rotated(step))),
            (SystemKind::Shift { .. }, Point::Word(w)) => Ok(Point::Word(w.shifted(1))),
            _ => Err(self.mismatch()),
        }
    }

    pub fn apply_inverse(&self, x: &Point) -> Result<Point> {
        if !self.invertible {
            return Err(Error::NotInvertible(self.name.clone()));
        }
        match (self.kind, x) {
            (SystemKind::Rotation { step }, Point::Circle(p)) => Ok(Point::Circle(p.unrotated(step))),
            (SystemKind::Shift { .. }, Point::Word(w)) => Ok(Point::Word(w.shifted(-1))),
            _ => Err(self.mismatch()),
        }
    }

    /// f^k x for k ≥ 0, or f^{-|k|} x for invertible systems.
    pub fn iterate_signed(&self, x: &Point, k: i64) -> Result<Point> {
        match (self.kind, x) {
            (SystemKind::Doubling, Point::Circle(p)) if k >= 0 => Ok(Point::Circle(p.shifted(k as u64))),
            (SystemKind::Shift { .. }, Point::Word(w)) if k >= 0 || self.invertible => {
                Ok(Point::Word(w.shifted(k)))
            }
            (SystemKind::Rotation { step }, Point::Circle(p)) => {
                Ok(Point::Circle(p.rotated(step.wrapping_mul(k as u64))))
            }
            _ if k >= 0 => {
                let mut y = x.clone();
                for _ in 0..k {
                    y = self.apply(&y)?;
                }
                Ok(y)
            }
            _ => {
                let mut y = x.clone();
                for _ in 0..k.unsigned_abs() {
                    y = self.apply_inverse(&y)?;
                }
                Ok(y)
            }
        }
    }

    pub fn metric(&self, x: &Point, y: &Point) -> Result<f64> {
        match (self.kind, x, y) {
            (SystemKind::Shift { sided, .. }, Point::Word(a), Point::Word(b)) => word_distance(a, b, sided),
            (SystemKind::Shift { .. }, _, _) => Err(self.mismatch()),
            (_, Point::Circle(a), Point::Circle(b)) => Ok(a.circle_distance(b)),
            _ => Err(self.mismatch()),
        }
    }

    /// A point drawn from the natural uniform measure: Lebesgue on the
    /// circle or the uniform Bernoulli measure on the shift. Words cover
    /// coordinates `[-reach, reach]` (two-sided) or `[0, reach]`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R, reach: usize) -> Point {
        match self.kind {
            SystemKind::Shift { alphabet, sided } => {
                let (start, len) = match sided {
                    Sided::One => (0, reach + 1),
                    Sided::Two => (-(reach as i64), 2 * reach + 1),
                };
                let data = (0..len).map(|_| rng.gen_range(0..alphabet)).collect();
                Point::Word(Word::window(start, data))
            }
            _ => Point::Circle(Phase::random(rng, reach + 64)),
        }
    }
}

fn word_distance(a: &Word, b: &Word, sided: Sided) -> Result<f64> {
    // bit 63 - j of `right` marks a disagreement at coordinate j, weight 2^{-j-1};
    // coordinate -j lands on the same bit with the same weight
    let mut right = 0u64;
    for j in 0..METRIC_DEPTH {
        if a.get(j)? != b.get(j)? {
            right |= 1u64 << (63 - j);
        }
    }
    let mut left = 0u64;
    if sided == Sided::Two {
        for j in 1..METRIC_DEPTH {
            if a.get(-j)? != b.get(-j)? {
                left |= 1u64 << (63 - j);
            }
        }
    }
    Ok((right as u128 + left as u128) as f64 / 18_446_744_073_709_551_616.0)
}

/// f^n x.
pub fn iterate(sys: &SystemHandle, x: &Point, n: usize) -> Result<Point> {
    sys.iterate_signed(x, n as i64)
}

/// Bowen distance d_n(x, y) = max_{0 ≤ i < n} d(f^i x, f^i y).
pub fn dn(sys: &SystemHandle, x: &Point, y: &Point, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("d_n needs n >= 1".into()));
    }
    Ok(*dn_profile(sys, x, y, n)?.last().expect("n >= 1"))
}

/// `[d_1, d_2, ..., d_n]` in one pass.
pub fn dn_profile(sys: &SystemHandle, x: &Point, y: &Point, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut a = x.clone();
    let mut b = y.clone();
    let mut m = 0.0f64;
    for i in 0..n {
        if i > 0 {
            a = sys.apply(&a)?;
            b = sys.apply(&b)?;
        }
        m = m.max(sys.metric(&a, &b)?);
        out.push(m);
    }
    Ok(out)
}

/// Two-sided Bowen distance D_n(x, y) = max_{|i| ≤ n} d(f^i x, f^i y).
pub fn dn_two_sided(sys: &SystemHandle, x: &Point, y: &Point, n: usize) -> Result<f64> {
    if !sys.invertible {
        return Err(Error::NotInvertible(sys.name.clone()));
    }
    let mut m = 0.0f64;
    for i in -(n as i64)..=(n as i64) {
        let a = sys.iterate_signed(x, i)?;
        let b = sys.iterate_signed(y, i)?;
        m = m.max(sys.metric(&a, &b)?);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axiom {
    Symmetry,
    Identity,
    Triangle,
    Expanding,
    Lipschitz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub system: String,
    pub samples: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn count(&self, axiom: Axiom) -> usize {
        self.violations.iter().filter(|v| v.axiom == axiom).count()
    }
}

const AXIOM_TOL: f64 = 1e-12;

/// A point near `x`: within the expanding radius on the circle, or agreeing
/// with `x` on a random central block for words.
fn nearby<R: Rng + ?Sized>(sys: &SystemHandle, x: &Point, rng: &mut R, radius: f64) -> Point {
    match (sys.kind, x) {
        (SystemKind::Shift { alphabet, sided }, Point::Word(w)) => {
            let (lo, hi) = w.coverage().expect("sampled words are windows");
            let keep = rng.gen_range(1..=12i64);
            let data = (lo..=hi)
                .map(|i| {
                    let inside = match sided {
                        Sided::One => i < keep,
                        Sided::Two => i.abs() < keep,
                    };
                    if inside {
                        w.get(i).expect("in coverage")
                    } else {
                        rng.gen_range(0..alphabet)
                    }
                })
                .collect();
            Point::Word(Word::window(lo, data))
        }
        (_, Point::Circle(p)) => {
            let span = (radius * 18_446_744_073_709_551_616.0) as u64;
            let delta = rng.gen_range(0..span.max(2));
            let w = if rng.gen::<bool>() { p.fixed().wrapping_add(delta) } else { p.fixed().wrapping_sub(delta) };
            Point::Circle(Phase::from_u64(w))
        }
        _ => x.clone(),
    }
}

/// Random-triple check of the metric axioms and of the declared expanding
/// and Lipschitz constants. Violations are returned as data.
pub fn verify_metric_axioms(sys: &SystemHandle, samples: usize, seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut push = |axiom, excess: f64| {
        if excess > AXIOM_TOL {
            violations.push(AxiomViolation { axiom, excess });
        }
    };
    let reach = 160;
    for _ in 0..samples {
        let x = sys.random_point(&mut rng, reach);
        let y = sys.random_point(&mut rng, reach);
        let z = sys.random_point(&mut rng, reach);
        let d = |a: &Point, b: &Point| sys.metric(a, b).expect("sampled windows cover the metric");
        let (dxy, dyx, dyz, dxz) = (d(&x, &y), d(&y, &x), d(&y, &z), d(&x, &z));
        push(Axiom::Symmetry, (dxy - dyx).abs());
        push(Axiom::Identity, d(&x, &x));
        if x != y && dxy == 0.0 {
            push(Axiom::Identity, 1.0);
        }
        push(Axiom::Triangle, dxz - (dxy + dyz));

        let fx = sys.apply(&x).expect("zoo map");
        if let Some(l) = sys.lipschitz {
            let fy = sys.apply(&y).expect("zoo map");
            push(Axiom::Lipschitz, d(&fx, &fy) - l * dxy);
            let w = nearby(sys, &x, &mut rng, 0.05);
            let fw = sys.apply(&w).expect("zoo map");
            push(Axiom::Lipschitz, d(&fx, &fw) - l * d(&x, &w));
        }
        if let Some(e) = sys.expanding {
            let w = nearby(sys, &x, &mut rng, e.radius);
            let dxw = d(&x, &w);
            if dxw < e.radius {
                let fw = sys.apply(&w).expect("zoo map");
                push(Axiom::Expanding, e.lambda * dxw - d(&fx, &fw));
            }
        }
    }
    AxiomReport { system: sys.name.clone(), samples, violations }
}
