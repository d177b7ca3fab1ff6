//! Atomic and analytic probability measures, the 1-Wasserstein metric on
//! atomic ones, and periodic approximation on full shifts.

mod analytic;
mod atomic;
mod transport;

pub use analytic::{AnalyticKind, AnalyticMeasure};
pub use atomic::{empirical_measure, periodic_measure, AtomicMeasure, MERGE_TOL};
pub use transport::{
    invariance_defect, solve_transport, wasserstein1, wasserstein1_capped, PlanEntry, WeakDistanceReport,
    DEFAULT_ATOM_CAP,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{Phase, Point, Sided, SystemHandle, Word};

#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Atomic(AtomicMeasure),
    Analytic(AnalyticMeasure),
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atomic(m)
    }
}

impl From<AnalyticMeasure> for Measure {
    fn from(m: AnalyticMeasure) -> Self {
        Measure::Analytic(m)
    }
}

impl Measure {
    pub fn as_atomic(&self) -> Option<&AtomicMeasure> {
        match self {
            Measure::Atomic(m) => Some(m),
            Measure::Analytic(_) => None,
        }
    }

    pub fn as_analytic(&self) -> Option<&AnalyticMeasure> {
        match self {
            Measure::Analytic(m) => Some(m),
            Measure::Atomic(_) => None,
        }
    }

    /// `count` points drawn from the measure: atoms by weight, or stationary
    /// windows covering `[-reach, reach]` (or `[0, reach]` one-sided).
    pub fn sample<R: Rng + ?Sized>(
        &self,
        sys: &SystemHandle,
        rng: &mut R,
        count: usize,
        reach: usize,
    ) -> Result<Vec<Point>> {
        match self {
            Measure::Atomic(m) => Ok((0..count)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    for (a, w) in m.iter() {
                        acc += w;
                        if u < acc {
                            return a.clone();
                        }
                    }
                    m.atoms()[m.len() - 1].clone()
                })
                .collect()),
            Measure::Analytic(a) => {
                let sided = a.check_system(sys)?;
                let (start, len) = match sided {
                    Sided::One => (0, reach + 1),
                    Sided::Two => (-(reach as i64), 2 * reach + 1),
                };
                Ok((0..count).map(|_| Point::Word(a.sample_window(rng, start, len))).collect())
            }
        }
    }
}

/// Empirical measure of a uniformly random orbit segment of `length`
/// points. Every atom keeps at least `reach` further coordinates (bits on
/// the circle), so orbits of length `reach` from atoms stay exact.
pub fn uniform_empirical<R: Rng + ?Sized>(
    sys: &SystemHandle,
    rng: &mut R,
    length: usize,
    reach: usize,
) -> Result<AtomicMeasure> {
    let z = sys.random_point(rng, length + reach);
    empirical_measure(sys, &z, length)
}

/// The periodic measure of …www… on a full shift.
pub fn periodize(sys: &SystemHandle, word: &[u8]) -> Result<AtomicMeasure> {
    let Some((k, _)) = sys.shift_params() else {
        return Err(Error::NotAShift(sys.name.clone()));
    };
    if word.is_empty() {
        return Err(Error::Invalid("cannot periodize an empty word".into()));
    }
    if let Some(&s) = word.iter().find(|&&s| s >= k) {
        return Err(Error::Invalid(format!("symbol {s} outside alphabet of size {k}")));
    }
    let x = Point::Word(Word::periodic(word.to_vec()));
    periodic_measure(sys, &x, word.len())
}

/// JSON form of a point: a number for circle points, `{"binary": "01",
/// "repeat": true}` for exact binary expansions, or a symbolic word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Real(f64),
    Binary {
        binary: String,
        #[serde(default)]
        repeat: bool,
    },
    Word {
        word: Vec<u8>,
        #[serde(default)]
        start: i64,
        #[serde(default)]
        periodic: bool,
    },
}

impl PointJson {
    pub fn to_point(&self) -> Result<Point> {
        match self {
            PointJson::Real(x) => Ok(Point::circle(*x)),
            PointJson::Binary { binary, repeat } => {
                let bits = binary
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::Invalid(format!("bad binary digit {c:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                if bits.is_empty() {
                    return Err(Error::Invalid("empty binary expansion".into()));
                }
                Ok(Point::Circle(if *repeat { Phase::periodic(&bits) } else { Phase::from_bits(&bits) }))
            }
            PointJson::Word { word, start, periodic } => {
                if word.is_empty() {
                    return Err(Error::Invalid("empty word".into()));
                }
                Ok(Point::Word(if *periodic {
                    Word::periodic(word.clone()).shifted(-start)
                } else {
                    Word::window(*start, word.clone())
                }))
            }
        }
    }

    pub fn from_point(x: &Point) -> Self {
        match x {
            Point::Circle(p) => match p.periodic_pattern() {
                Some(bits) => PointJson::Binary {
                    binary: bits.iter().map(|&b| if b { '1' } else { '0' }).collect(),
                    repeat: true,
                },
                None => PointJson::Real(p.to_f64()),
            },
            Point::Word(w) => match w.canonical_period() {
                Some(word) => PointJson::Word { word, start: 0, periodic: true },
                None => {
                    let (lo, hi) = w.coverage().expect("window words have coverage");
                    PointJson::Word { word: w.slice(lo, hi).expect("in coverage"), start: lo, periodic: false }
                }
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovJson {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
}

/// JSON/TOML form of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureJson {
    Atomic { atoms: Vec<PointJson>, weights: Vec<f64> },
    Bernoulli { bernoulli: Vec<f64> },
    Markov { markov: MarkovJson },
}

impl MeasureJson {
    pub fn build(&self, sys: &SystemHandle) -> Result<Measure> {
        match self {
            MeasureJson::Atomic { atoms, weights } => {
                let atoms = atoms.iter().map(PointJson::to_point).collect::<Result<Vec<_>>>()?;
                Ok(Measure::Atomic(AtomicMeasure::new(sys, atoms, weights.clone())?))
            }
            MeasureJson::Bernoulli { bernoulli } => {
                let m = AnalyticMeasure::bernoulli(bernoulli.clone())?;
                m.check_system(sys)?;
                Ok(Measure::Analytic(m))
            }
            MeasureJson::Markov { markov } => {
                let m = AnalyticMeasure::markov(markov.p.clone(), markov.pi.clone())?;
                m.check_system(sys)?;
                Ok(Measure::Analytic(m))
            }
        }
    }

    pub fn from_measure(m: &Measure) -> Self {
        match m {
            Measure::Atomic(a) => MeasureJson::Atomic {
                atoms: a.atoms().iter().map(PointJson::from_point).collect(),
                weights: a.weights().to_vec(),
            },
            Measure::Analytic(a) => match a.kind() {
                AnalyticKind::Bernoulli(p) => MeasureJson::Bernoulli { bernoulli: p.clone() },
                AnalyticKind::Markov { p, pi } => MeasureJson::Markov { markov: MarkovJson { p: p.clone(), pi: pi.clone() } },
            },
        }
    }
}
