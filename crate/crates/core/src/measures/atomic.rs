use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::systems::{Point, Sided, SystemHandle, SystemKind, METRIC_DEPTH};

/// Circle atoms closer than this are one atom.
pub const MERGE_TOL: f64 = 1e-12;

/// Finitely many weighted atoms, pairwise distinct under the system metric.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(sys: &SystemHandle, atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Invalid(format!("{} atoms with {} weights", atoms.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("weights sum to {total}")));
        }
        for a in &atoms {
            check_kind(sys, a)?;
        }
        let (atoms, weights) = merge(sys, atoms, weights)?;
        Ok(AtomicMeasure { atoms, weights })
    }

    pub fn dirac(sys: &SystemHandle, x: Point) -> Result<Self> {
        Self::new(sys, vec![x], vec![1.0])
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// f_*μ: every atom pushed through f, coinciding images merged.
    pub fn push_forward(&self, sys: &SystemHandle) -> Result<Self> {
        let atoms = self.atoms.iter().map(|a| sys.apply(a)).collect::<Result<Vec<_>>>()?;
        let (atoms, weights) = merge(sys, atoms, self.weights.clone())?;
        Ok(AtomicMeasure { atoms, weights })
    }

    /// Index of the atom within the merge tolerance of `x`, if any.
    pub fn atom_index(&self, sys: &SystemHandle, x: &Point) -> Result<Option<usize>> {
        for (i, a) in self.atoms.iter().enumerate() {
            if same_atom(sys, a, x)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Smallest distance between two distinct atoms (∞ for a Dirac mass).
    pub fn separation(&self, sys: &SystemHandle) -> Result<f64> {
        let mut best = f64::INFINITY;
        for i in 0..self.atoms.len() {
            for j in 0..i {
                best = best.min(sys.metric(&self.atoms[i], &self.atoms[j])?);
            }
        }
        Ok(best)
    }

    pub(crate) fn from_parts_unchecked(atoms: Vec<Point>, weights: Vec<f64>) -> Self {
        AtomicMeasure { atoms, weights }
    }
}

fn check_kind(sys: &SystemHandle, x: &Point) -> Result<()> {
    let ok = match (sys.kind, x) {
        (SystemKind::Shift { alphabet, .. }, Point::Word(w)) => w.max_symbol() < alphabet,
        (SystemKind::Shift { .. }, _) => false,
        (_, Point::Circle(_)) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid(format!("atom {x:?} does not belong to `{}`", sys.name)))
    }
}

/// Symbolic atoms coincide when they agree on the whole metric window;
/// circle atoms when they are within `MERGE_TOL`.
pub(crate) fn same_atom(sys: &SystemHandle, a: &Point, b: &Point) -> Result<bool> {
    match (a, b) {
        (Point::Circle(p), Point::Circle(q)) => Ok(p.circle_distance(q) <= MERGE_TOL),
        _ => Ok(sys.metric(a, b)? == 0.0),
    }
}

fn word_key(sys: &SystemHandle, x: &Point) -> Result<Vec<u8>> {
    let w = x.as_word().expect("checked kind");
    let lo = match sys.shift_params() {
        Some((_, Sided::Two)) => -(METRIC_DEPTH - 1),
        _ => 0,
    };
    w.slice(lo, METRIC_DEPTH - 1)
}

fn merge(sys: &SystemHandle, atoms: Vec<Point>, weights: Vec<f64>) -> Result<(Vec<Point>, Vec<f64>)> {
    if sys.is_shift() {
        let mut index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut out_a = Vec::new();
        let mut out_w: Vec<f64> = Vec::new();
        for (a, w) in atoms.into_iter().zip(weights) {
            let key = word_key(sys, &a)?;
            match index.get(&key) {
                Some(&i) => out_w[i] += w,
                None => {
                    index.insert(key, out_a.len());
                    out_a.push(a);
                    out_w.push(w);
                }
            }
        }
        return Ok((out_a, out_w));
    }
    // circle: sort by position, union runs closer than the tolerance,
    // including across 0, then restore first-appearance order
    let n = atoms.len();
    let mut order: Vec<usize> = (0..n).collect();
    let pos: Vec<u64> = atoms.iter().map(|a| a.as_phase().expect("checked kind").fixed()).collect();
    order.sort_by_key(|&i| (pos[i], i));
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while root[r] != r {
            r = root[r];
        }
        let mut c = i;
        while root[c] != r {
            let next = root[c];
            root[c] = r;
            c = next;
        }
        r
    }
    let close = |i: usize, j: usize| atoms[i].as_phase().unwrap().circle_distance(atoms[j].as_phase().unwrap()) <= MERGE_TOL;
    for k in 1..n {
        let (i, j) = (order[k - 1], order[k]);
        if close(i, j) {
            let (ri, rj) = (find(&mut root, i), find(&mut root, j));
            root[ri.max(rj)] = ri.min(rj);
        }
    }
    if n > 1 && close(order[0], order[n - 1]) {
        let (ri, rj) = (find(&mut root, order[0]), find(&mut root, order[n - 1]));
        root[ri.max(rj)] = ri.min(rj);
    }
    let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out_a = Vec::new();
    let mut out_w: Vec<f64> = Vec::new();
    for i in 0..n {
        let r = find(&mut root, i);
        match slot.get(&r) {
            Some(&s) => out_w[s] += weights[i],
            None => {
                slot.insert(r, out_a.len());
                out_a.push(atoms[i].clone());
                out_w.push(weights[i]);
            }
        }
    }
    Ok((out_a, out_w))
}

/// (1/period) Σ δ_{f^i x}; requires f^period x = x (within 1e-9 on the
/// circle, exactly on shifts).
pub fn periodic_measure(sys: &SystemHandle, x: &Point, period: usize) -> Result<AtomicMeasure> {
    if period == 0 {
        return Err(Error::Invalid("period must be at least 1".into()));
    }
    let back = sys.iterate_signed(x, period as i64)?;
    let gap = sys.metric(x, &back)?;
    let tol = if sys.is_shift() { 0.0 } else { 1e-9 };
    if gap > tol {
        return Err(Error::NotPeriodic { period, gap });
    }
    orbit_measure(sys, x, period)
}

/// Uniform weights on x, fx, ..., f^{length-1} x.
pub fn empirical_measure(sys: &SystemHandle, x: &Point, length: usize) -> Result<AtomicMeasure> {
    if length == 0 {
        return Err(Error::Invalid("length must be at least 1".into()));
    }
    orbit_measure(sys, x, length)
}

fn orbit_measure(sys: &SystemHandle, x: &Point, length: usize) -> Result<AtomicMeasure> {
    let mut atoms = Vec::with_capacity(length);
    let mut y = x.clone();
    for i in 0..length {
        if i > 0 {
            y = sys.apply(&y)?;
        }
        check_kind(sys, &y)?;
        atoms.push(y.clone());
    }
    let w = 1.0 / length as f64;
    let (atoms, weights) = merge(sys, atoms, vec![w; length])?;
    Ok(AtomicMeasure { atoms, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Phase, Word};

    #[test]
    fn third_orbit() {
        let sys = SystemHandle::doubling();
        let x = Point::Circle(Phase::periodic(&[false, true]));
        let mu = periodic_measure(&sys, &x, 2).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.weights(), &[0.5, 0.5]);
        let e = empirical_measure(&sys, &x, 4).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.weights(), &[0.5, 0.5]);
        let mu4 = periodic_measure(&sys, &x, 4).unwrap();
        assert_eq!(mu4.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn fixed_point_is_dirac() {
        let sys = SystemHandle::doubling();
        let mu = periodic_measure(&sys, &Point::circle(0.0), 1).unwrap();
        assert_eq!(mu.len(), 1);
        assert!(matches!(periodic_measure(&sys, &Point::circle(0.3), 1), Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn word_orbits() {
        let sys = SystemHandle::full_shift(2, Sided::One);
        let mu = periodic_measure(&sys, &Point::Word(Word::periodic(vec![0, 1])), 2).unwrap();
        assert_eq!(mu.len(), 2);
        let bad = Point::Word(Word::one_sided(vec![0; 300]));
        assert!(periodic_measure(&sys, &bad, 1).is_ok());
        let mut d = vec![0u8; 300];
        d[10] = 1;
        assert!(periodic_measure(&sys, &Point::Word(Word::one_sided(d)), 1).is_err());
    }

    #[test]
    fn merge_across_zero() {
        let sys = SystemHandle::doubling();
        let a = Point::Circle(Phase::from_u64(u64::MAX));
        let b = Point::Circle(Phase::from_u64(1));
        let mu = AtomicMeasure::new(&sys, vec![a, b, Point::circle(0.5)], vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_weights() {
        let sys = SystemHandle::doubling();
        assert!(AtomicMeasure::new(&sys, vec![Point::circle(0.1)], vec![0.9]).is_err());
        assert!(AtomicMeasure::new(&sys, vec![Point::circle(0.1), Point::circle(0.2)], vec![1.5, -0.5]).is_err());
    }
}
