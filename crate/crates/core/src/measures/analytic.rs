//! Bernoulli and Markov measures on full shifts.

use rand::Rng;

use super::atomic::AtomicMeasure;
use crate::error::{Error, Result};
use crate::systems::{Point, Sided, SystemHandle, Word};

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticKind {
    Bernoulli(Vec<f64>),
    Markov { p: Vec<Vec<f64>>, pi: Vec<f64> },
}

/// A stationary, non-atomic measure on a full shift with closed-form
/// cylinder masses.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticMeasure {
    kind: AnalyticKind,
}

impl AnalyticMeasure {
    pub fn bernoulli(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::Invalid("Bernoulli needs at least two symbols".into()));
        }
        if p.iter().any(|x| !(0.0..1.0).contains(x)) {
            return Err(Error::Invalid(format!("Bernoulli weights {p:?} must lie in [0, 1)")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Invalid(format!("Bernoulli weights sum to {s}")));
        }
        Ok(AnalyticMeasure { kind: AnalyticKind::Bernoulli(p) })
    }

    pub fn markov(p: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let k = pi.len();
        if k < 2 || p.len() != k || p.iter().any(|r| r.len() != k) {
            return Err(Error::Invalid("Markov matrix must be square and match pi".into()));
        }
        for row in &p {
            let s: f64 = row.iter().sum();
            if row.iter().any(|x| *x < 0.0) || (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Invalid(format!("row {row:?} is not stochastic")));
            }
        }
        let ps: f64 = pi.iter().sum();
        if pi.iter().any(|x| *x < 0.0) || (ps - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Invalid(format!("pi {pi:?} is not a probability vector")));
        }
        for j in 0..k {
            let v: f64 = (0..k).map(|i| pi[i] * p[i][j]).sum();
            if (v - pi[j]).abs() > STOCHASTIC_TOL {
                return Err(Error::Invalid(format!("pi is not stationary at state {j}")));
            }
        }
        let m = AnalyticMeasure { kind: AnalyticKind::Markov { p, pi } };
        if !(m.entropy() > 1e-12) {
            return Err(Error::Invalid("Markov measure has zero entropy (periodic chain)".into()));
        }
        Ok(m)
    }

    pub fn kind(&self) -> &AnalyticKind {
        &self.kind
    }

    pub fn alphabet(&self) -> usize {
        match &self.kind {
            AnalyticKind::Bernoulli(p) => p.len(),
            AnalyticKind::Markov { pi, .. } => pi.len(),
        }
    }

    /// Probability that the first symbol is `a`.
    pub fn marginal(&self, a: u8) -> f64 {
        match &self.kind {
            AnalyticKind::Bernoulli(p) => p[a as usize],
            AnalyticKind::Markov { pi, .. } => pi[a as usize],
        }
    }

    /// P(next = b | current = a); for Bernoulli independent of `a`.
    #[inline]
    pub fn transition(&self, a: u8, b: u8) -> f64 {
        match &self.kind {
            AnalyticKind::Bernoulli(p) => p[b as usize],
            AnalyticKind::Markov { p, .. } => p[a as usize][b as usize],
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self.kind, AnalyticKind::Bernoulli(_))
    }

    /// μ of the cylinder fixing consecutive coordinates to `word`.
    pub fn cylinder_mass(&self, word: &[u8]) -> f64 {
        let Some((&first, rest)) = word.split_first() else { return 1.0 };
        let mut m = self.marginal(first);
        let mut prev = first;
        for &b in rest {
            m *= self.transition(prev, b);
            prev = b;
        }
        m
    }

    pub fn check_system(&self, sys: &SystemHandle) -> Result<Sided> {
        match sys.shift_params() {
            Some((k, sided)) if k as usize == self.alphabet() => Ok(sided),
            _ => Err(Error::MeasureMismatch(sys.name.clone())),
        }
    }

    /// Kolmogorov–Sinai entropy in closed form.
    pub fn entropy(&self) -> f64 {
        let plogp = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
        match &self.kind {
            AnalyticKind::Bernoulli(p) => -p.iter().map(|&x| plogp(x)).sum::<f64>(),
            AnalyticKind::Markov { p, pi } => {
                -pi.iter().zip(p).map(|(&w, row)| w * row.iter().map(|&x| plogp(x)).sum::<f64>()).sum::<f64>()
            }
        }
    }

    /// Rényi entropy of order q ≠ 1: log(Σ p_i^q)/(1 − q) for Bernoulli,
    /// log ρ(P^{∘q})/(1 − q) for Markov.
    pub fn renyi_entropy(&self, q: f64) -> f64 {
        if (q - 1.0).abs() < 1e-15 {
            return self.entropy();
        }
        match &self.kind {
            AnalyticKind::Bernoulli(p) => p.iter().filter(|&&x| x > 0.0).map(|x| x.powf(q)).sum::<f64>().ln() / (1.0 - q),
            AnalyticKind::Markov { p, .. } => {
                let k = p.len();
                let mut v = vec![1.0 / k as f64; k];
                let mut rho = 1.0;
                for _ in 0..5000 {
                    let mut w = vec![0.0; k];
                    for i in 0..k {
                        for j in 0..k {
                            if p[i][j] > 0.0 {
                                w[j] += v[i] * p[i][j].powf(q);
                            }
                        }
                    }
                    let s: f64 = w.iter().sum();
                    for x in &mut w {
                        *x /= s;
                    }
                    let delta = v.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum::<f64>();
                    v = w;
                    rho = s;
                    if delta < 1e-15 {
                        break;
                    }
                }
                rho.ln() / (1.0 - q)
            }
        }
    }

    /// Stationary sample of coordinates `start .. start + len`.
    pub fn sample_window<R: Rng + ?Sized>(&self, rng: &mut R, start: i64, len: usize) -> Word {
        let k = self.alphabet();
        let draw = |rng: &mut R, probs: &dyn Fn(usize) -> f64| -> u8 {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for a in 0..k {
                acc += probs(a);
                if u < acc {
                    return a as u8;
                }
            }
            (0..k).rev().find(|&a| probs(a) > 0.0).unwrap_or(0) as u8
        };
        let mut data = Vec::with_capacity(len);
        if len > 0 {
            let first = draw(rng, &|a| self.marginal(a as u8));
            data.push(first);
            for _ in 1..len {
                let prev = *data.last().expect("nonempty");
                data.push(draw(rng, &|a| self.transition(prev, a as u8)));
            }
        }
        Word::window(start, data)
    }

    /// Atomic approximation at cylinder depth `depth`: one atom per positive
    /// cylinder (coordinates 0..depth one-sided, −depth..=depth two-sided),
    /// placed at the periodic extension of its word. Returns the measure and
    /// the cylinder diameter under ρ, which bounds the W1 error.
    pub fn discretize(&self, sys: &SystemHandle, depth: usize, cap: usize) -> Result<(AtomicMeasure, f64)> {
        let sided = self.check_system(sys)?;
        let len = match sided {
            Sided::One => depth.max(1),
            Sided::Two => 2 * depth + 1,
        };
        let k = self.alphabet();
        let count = (k as f64).powi(len as i32);
        if count > cap as f64 {
            return Err(Error::SizeCapExceeded { size: count.min(usize::MAX as f64) as usize, cap });
        }
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        let mut word = vec![0u8; len];
        loop {
            let m = self.cylinder_mass(&word);
            if m > 0.0 {
                let w = Word::periodic(word.clone());
                let w = if sided == Sided::Two { w.shifted(depth as i64) } else { w };
                atoms.push(Point::Word(w));
                weights.push(m);
            }
            let mut i = len;
            loop {
                if i == 0 {
                    let total: f64 = weights.iter().sum();
                    let weights = weights.into_iter().map(|w: f64| w / total).collect();
                    let mu = AtomicMeasure::new(sys, atoms, weights)?;
                    return Ok((mu, 0.5f64.powi(depth as i32)));
                }
                i -= 1;
                word[i] += 1;
                if (word[i] as usize) < k {
                    break;
                }
                word[i] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn golden_mean_entropy() {
        let m = AnalyticMeasure::markov(vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((m.entropy() - (2.0f64 / 3.0) * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(AnalyticMeasure::bernoulli(vec![1.0, 0.0]).is_err());
        assert!(AnalyticMeasure::markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5]).is_err());
        assert!(AnalyticMeasure::markov(vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn renyi_markov_matches_bernoulli_case() {
        let b = AnalyticMeasure::bernoulli(vec![0.25, 0.75]).unwrap();
        let m = AnalyticMeasure::markov(vec![vec![0.25, 0.75], vec![0.25, 0.75]], vec![0.25, 0.75]).unwrap();
        for q in [0.5, 2.0, 3.0] {
            assert!((b.renyi_entropy(q) - m.renyi_entropy(q)).abs() < 1e-12);
        }
        assert!((b.renyi_entropy(2.0) - (8.0f64 / 5.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn discretization_diameter() {
        let sys = SystemHandle::full_shift(2, Sided::One);
        let b = AnalyticMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let (mu, diam) = b.discretize(&sys, 8, 4096).unwrap();
        assert_eq!(mu.len(), 256);
        assert_eq!(diam, 1.0 / 256.0);
        let two = SystemHandle::full_shift(2, Sided::Two);
        let (mu2, d2) = b.discretize(&two, 3, 4096).unwrap();
        assert_eq!(mu2.len(), 128);
        assert_eq!(d2, 1.0 / 8.0);
        assert!(b.discretize(&two, 8, 4096).is_err());
    }

    #[test]
    fn sampler_frequencies() {
        let b = AnalyticMeasure::bernoulli(vec![0.25, 0.75]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let w = b.sample_window(&mut rng, 0, 20000);
        let ones = (0..20000).filter(|&i| w.get(i).unwrap() == 1).count() as f64 / 20000.0;
        assert!((ones - 0.75).abs() < 0.02);
    }
}
