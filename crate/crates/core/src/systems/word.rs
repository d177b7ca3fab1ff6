//! Symbolic points: finite windows with an anchor, or exactly periodic words.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
enum Symbols {
    Window { start: i64, data: Vec<u8> },
    Periodic { data: Vec<u8> },
}

/// A point of a shift space. Coordinate `i` of the point is read from the
/// underlying symbols at `i + shift`; applying σ only moves the anchor.
#[derive(Clone, PartialEq, Eq)]
pub struct Word {
    syms: Arc<Symbols>,
    shift: i64,
}

impl Word {
    /// Window whose first symbol is coordinate `start`.
    pub fn window(start: i64, data: Vec<u8>) -> Self {
        Word { syms: Arc::new(Symbols::Window { start, data }), shift: 0 }
    }

    /// One-sided window covering coordinates `0..data.len()`.
    pub fn one_sided(data: Vec<u8>) -> Self {
        Self::window(0, data)
    }

    /// The bi-infinite periodic point with coordinate i = data[i mod L].
    pub fn periodic(data: Vec<u8>) -> Self {
        assert!(!data.is_empty(), "periodic word must be nonempty");
        Word { syms: Arc::new(Symbols::Periodic { data }), shift: 0 }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(*self.syms, Symbols::Periodic { .. })
    }

    /// Stored period length for periodic words.
    pub fn period(&self) -> Option<usize> {
        match &*self.syms {
            Symbols::Periodic { data } => Some(data.len()),
            Symbols::Window { .. } => None,
        }
    }

    /// Coordinates this point can supply, as an inclusive range; `None` for
    /// periodic words, which supply all of them.
    pub fn coverage(&self) -> Option<(i64, i64)> {
        match &*self.syms {
            Symbols::Window { start, data } => {
                Some((start - self.shift, start - self.shift + data.len() as i64 - 1))
            }
            Symbols::Periodic { .. } => None,
        }
    }

    #[inline]
    pub fn get(&self, i: i64) -> Result<u8> {
        let j = i + self.shift;
        match &*self.syms {
            Symbols::Window { start, data } => {
                let k = j - start;
                if k < 0 || k >= data.len() as i64 {
                    Err(Error::WindowTooShort { index: i })
                } else {
                    Ok(data[k as usize])
                }
            }
            Symbols::Periodic { data } => Ok(data[j.rem_euclid(data.len() as i64) as usize]),
        }
    }

    /// Coordinates `lo..=hi` as a vector.
    pub fn slice(&self, lo: i64, hi: i64) -> Result<Vec<u8>> {
        (lo..=hi).map(|i| self.get(i)).collect()
    }

    pub fn shifted(&self, k: i64) -> Self {
        Word { syms: Arc::clone(&self.syms), shift: self.shift + k }
    }

    /// A copy translated so that the current coordinates become a fresh
    /// one-period periodic word; only valid for periodic words.
    pub fn canonical_period(&self) -> Option<Vec<u8>> {
        let l = self.period()?;
        self.slice(0, l as i64 - 1).ok()
    }

    /// Largest alphabet symbol present in the stored data.
    pub fn max_symbol(&self) -> u8 {
        match &*self.syms {
            Symbols::Window { data, .. } | Symbols::Periodic { data } => data.iter().copied().max().unwrap_or(0),
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.syms {
            Symbols::Periodic { .. } => {
                let p = self.canonical_period().unwrap_or_default();
                write!(f, "Word(({})^inf)", p.iter().map(|s| s.to_string()).collect::<String>())
            }
            Symbols::Window { .. } => {
                let (lo, hi) = self.coverage().unwrap_or((0, -1));
                let head: String =
                    (0..hi.min(15) + 1).filter_map(|i| self.get(i).ok()).map(|s| s.to_string()).collect();
                write!(f, "Word[{lo}..={hi}]({head}..)")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_moves_anchor() {
        let w = Word::window(-2, vec![0, 1, 2, 3, 4]);
        assert_eq!(w.get(-2).unwrap(), 0);
        assert_eq!(w.get(2).unwrap(), 4);
        assert!(w.get(3).is_err());
        let s = w.shifted(1);
        assert_eq!(s.get(-3).unwrap(), 0);
        assert_eq!(s.get(1).unwrap(), 4);
        assert_eq!(s.coverage(), Some((-3, 1)));
    }

    #[test]
    fn periodic_wraps_both_ways() {
        let w = Word::periodic(vec![0, 1, 1]);
        assert_eq!(w.get(-1).unwrap(), 1);
        assert_eq!(w.get(-3).unwrap(), 0);
        assert_eq!(w.shifted(1).canonical_period().unwrap(), vec![1, 1, 0]);
    }
}
