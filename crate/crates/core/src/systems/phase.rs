//! Points of the circle stored as binary expansions.
//!
//! A plain 64-bit fixed-point word forgets everything after 64 doublings, so
//! orbits longer than that are carried by an explicit expansion: a finite bit
//! string (zero padded) or an exactly periodic one. Only the leading 64 bits
//! are ever read for distances.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

const TWO64: f64 = 18_446_744_073_709_551_616.0;

#[derive(Clone, PartialEq, Eq)]
struct BitStore {
    // bit k of the expansion sits in words[k / 64] at position 63 - k % 64
    words: Vec<u64>,
    len: u64,
    period: Option<u64>,
}

impl BitStore {
    fn finite(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut words = Vec::new();
        let mut len = 0u64;
        for b in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if b {
                let w = words.last_mut().expect("pushed above");
                *w |= 1u64 << (63 - len % 64);
            }
            len += 1;
        }
        BitStore { words, len, period: None }
    }

    fn periodic(pattern: &[bool]) -> Self {
        let p = pattern.len();
        // unroll one period plus a full window so any 64-bit read stays in range
        let unrolled = (0..p + 64).map(|i| pattern[i % p]);
        let mut s = Self::finite(unrolled);
        s.period = Some(p as u64);
        s
    }

    fn word_at(&self, q: usize) -> u64 {
        self.words.get(q).copied().unwrap_or(0)
    }

    fn window(&self, offset: u64) -> u64 {
        let o = match self.period {
            Some(p) => offset % p,
            None => {
                if offset >= self.len {
                    return 0;
                }
                offset
            }
        };
        let q = (o / 64) as usize;
        let r = (o % 64) as u32;
        if r == 0 {
            self.word_at(q)
        } else {
            (self.word_at(q) << r) | (self.word_at(q + 1) >> (64 - r))
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
enum Repr {
    Fixed(u64),
    Expansion { store: Arc<BitStore>, offset: u64, flip: bool },
}

/// A point of [0, 1) viewed as the circle R/Z.
#[derive(Clone, PartialEq, Eq)]
pub struct Phase(Repr);

impl Phase {
    /// Nearest 64-bit fixed-point value of `x` (taken mod 1).
    pub fn from_f64(x: f64) -> Self {
        let f = x - x.floor();
        let w = (f * TWO64) as u64;
        Phase(Repr::Fixed(w))
    }

    pub fn from_u64(w: u64) -> Self {
        Phase(Repr::Fixed(w))
    }

    /// Finite expansion 0.b_0 b_1 ... followed by zeros.
    pub fn from_bits(bits: &[bool]) -> Self {
        Phase(Repr::Expansion { store: Arc::new(BitStore::finite(bits.iter().copied())), offset: 0, flip: false })
    }

    /// Purely periodic expansion 0.(pattern); `periodic(&[false, true])` is 1/3.
    pub fn periodic(pattern: &[bool]) -> Self {
        assert!(!pattern.is_empty(), "periodic pattern must be nonempty");
        Phase(Repr::Expansion { store: Arc::new(BitStore::periodic(pattern)), offset: 0, flip: false })
    }

    /// Uniformly random expansion with `nbits` random leading bits.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, nbits: usize) -> Self {
        let bits = (0..nbits).map(|_| rng.gen::<bool>());
        Phase(Repr::Expansion { store: Arc::new(BitStore::finite(bits)), offset: 0, flip: false })
    }

    /// The point f^k x for the doubling map when x shares this store.
    pub fn shifted(&self, k: u64) -> Self {
        match &self.0 {
            Repr::Fixed(w) => Phase(Repr::Fixed(if k >= 64 { 0 } else { w << k })),
            Repr::Expansion { store, offset, flip } => {
                Phase(Repr::Expansion { store: Arc::clone(store), offset: offset + k, flip: *flip })
            }
        }
    }

    /// Leading 64 bits as a fixed-point fraction.
    pub fn fixed(&self) -> u64 {
        match &self.0 {
            Repr::Fixed(w) => *w,
            Repr::Expansion { store, offset, flip } => {
                let w = store.window(*offset);
                if *flip {
                    !w
                } else {
                    w
                }
            }
        }
    }

    /// Nearest double in [0, 1); exact for points built by `from_f64`.
    pub fn to_f64(&self) -> f64 {
        let v = self.fixed() as f64 / TWO64;
        if v >= 1.0 {
            1.0 - f64::EPSILON / 2.0
        } else {
            v
        }
    }

    /// Length of one period when the expansion is exactly periodic.
    pub fn period_bits(&self) -> Option<u64> {
        match &self.0 {
            Repr::Fixed(_) => None,
            Repr::Expansion { store, .. } => store.period,
        }
    }

    /// The repeating pattern, phase-aligned with this point.
    pub fn periodic_pattern(&self) -> Option<Vec<bool>> {
        let p = self.period_bits()?;
        let flip = matches!(self.0, Repr::Expansion { flip: true, .. });
        let (store, offset) = match &self.0 {
            Repr::Expansion { store, offset, .. } => (store, *offset),
            Repr::Fixed(_) => return None,
        };
        Some(
            (0..p)
                .map(|i| {
                    let w = store.window(offset + i);
                    ((w >> 63) == 1) ^ flip
                })
                .collect(),
        )
    }

    pub(crate) fn doubled(&self) -> Self {
        self.shifted(1)
    }

    pub(crate) fn tented(&self) -> Self {
        let lead = self.fixed() >> 63 == 1;
        match &self.0 {
            Repr::Fixed(w) => {
                let v = if lead { !w } else { *w };
                Phase(Repr::Fixed(v << 1))
            }
            Repr::Expansion { store, offset, flip } => Phase(Repr::Expansion {
                store: Arc::clone(store),
                offset: offset + 1,
                flip: *flip ^ lead,
            }),
        }
    }

    pub(crate) fn rotated(&self, step: u64) -> Self {
        Phase(Repr::Fixed(self.fixed().wrapping_add(step)))
    }

    pub(crate) fn unrotated(&self, step: u64) -> Self {
        Phase(Repr::Fixed(self.fixed().wrapping_sub(step)))
    }

    /// Circle distance min(|x − y|, 1 − |x − y|) on the leading 64 bits.
    pub fn circle_distance(&self, other: &Phase) -> f64 {
        let d = self.fixed().wrapping_sub(other.fixed());
        let m = d.min(d.wrapping_neg());
        m as f64 / TWO64
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phase({:.17})", self.to_f64())
    }
}
