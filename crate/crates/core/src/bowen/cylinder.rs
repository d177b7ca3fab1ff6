//! Ball masses under Bernoulli and Markov measures on full shifts.
//!
//! Membership of y in a Bowen ball only depends on the disagreement pattern
//! b_j = [y_j ≠ x_j]. Each constraint Z_i = Σ_j w(j − i) b_j is bracketed by
//! the known coordinates and the geometric tail weight of the unknown ones,
//! so cylinders classify as inside, outside or straddling.
//!
//! One-sided balls with ε ≤ 1/2 force agreement on the first n coordinates
//! and reduce to the single tail T = 0.b_n b_{n+1}…, whose law is resolved
//! digit by digit. Everything else goes through a depth-first refinement
//! that stops at a mass floor and reports what it could not resolve.

use std::collections::HashMap;

use super::{BallSide, BallQuery};
use crate::error::{Error, Result};
use crate::measures::{AnalyticKind, AnalyticMeasure};
use crate::systems::{Sided, SystemHandle, Word};

/// Number of tail digits resolved by the one-sided recursion and used for
/// tail expectations. The tail beyond carries weight 2^{-TAIL_DIGITS}.
pub const TAIL_DIGITS: usize = 160;

/// How far the refinement may extend past the constraint window on either side.
const MAX_EXTENSION: i64 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Target ratio of unresolved mass to the value.
    pub rel_tol: f64,
    /// Total cylinder visits allowed per query.
    pub node_budget: usize,
    /// Largest resolving depth n + ceil(log2(4/ε)) accepted.
    pub depth_cap: usize,
    /// Use the tail recursion for one-sided balls where it applies.
    pub exact_tail: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { rel_tol: 1e-6, node_budget: 40_000_000, depth_cap: 4096, exact_tail: true }
    }
}

/// A mass with a certified bracket: the true value lies in
/// `[value - unresolved/2, value + unresolved/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBracket {
    pub value: f64,
    pub unresolved: f64,
    pub nodes: usize,
}

impl MassBracket {
    pub fn lower(&self) -> f64 {
        self.value - self.unresolved / 2.0
    }

    pub fn upper(&self) -> f64 {
        self.value + self.unresolved / 2.0
    }
}

/// Depth beyond which coordinate disagreements cannot move ρ over ε: the
/// two-sided tail Σ_{|i|>m} 2^{-|i|}·½ = 2^{-m} is below ε/4 once
/// m ≥ log2(4/ε), and the window itself spans n coordinates.
pub fn resolving_depth(epsilon: f64, n: usize) -> usize {
    n + (4.0 / epsilon).log2().ceil().max(0.0) as usize
}

#[derive(Clone, Copy)]
enum Mode {
    Indicator(f64),
    Mollifier(f64),
}

fn check(sys: &SystemHandle, q: &BallQuery, mu: &AnalyticMeasure, opts: &RefineOptions) -> Result<Sided> {
    let sided = mu.check_system(sys)?;
    if q.sided == BallSide::TwoSidedClosed && !sys.invertible {
        return Err(Error::NotInvertible(sys.name.clone()));
    }
    let depth = resolving_depth(q.epsilon, q.n);
    if depth > opts.depth_cap {
        return Err(Error::DepthCapExceeded { depth, unresolved: 1.0 });
    }
    Ok(sided)
}

pub fn analytic_ball_mass(
    sys: &SystemHandle,
    q: &BallQuery,
    mu: &AnalyticMeasure,
    opts: &RefineOptions,
) -> Result<MassBracket> {
    let sided = check(sys, q, mu, opts)?;
    let x = q.center.as_word().ok_or_else(|| Error::MeasureMismatch(sys.name.clone()))?;
    if let (Sided::One, Some(n)) = (sided, forward_length(q)) {
        if opts.exact_tail && q.epsilon <= 0.5 {
            let t = TailLaw::new(mu, x, n, false)?;
            let st = t.stats(2.0 * q.epsilon);
            return Ok(MassBracket {
                value: t.prefix * (st.below + st.below_unresolved / 2.0),
                unresolved: t.prefix * st.below_unresolved,
                nodes: 1,
            });
        }
    }
    refine(mu, x, q, sided, Mode::Indicator(q.epsilon), opts)
}

pub fn analytic_mollified_mass(
    sys: &SystemHandle,
    q: &BallQuery,
    mu: &AnalyticMeasure,
    opts: &RefineOptions,
) -> Result<MassBracket> {
    let sided = check(sys, q, mu, opts)?;
    let x = q.center.as_word().ok_or_else(|| Error::MeasureMismatch(sys.name.clone()))?;
    if let (Sided::One, Some(n)) = (sided, forward_length(q)) {
        if opts.exact_tail && q.epsilon <= 0.25 {
            // g = H(T) with H(T) = 1 − (T − 2ε)^+/(2ε) + (T − 4ε)^+/(2ε)
            let t = TailLaw::new(mu, x, n, true)?;
            let e = q.epsilon;
            let (lo, hi) = (t.stats(2.0 * e), t.stats(4.0 * e));
            let g = 1.0 - (lo.excess - hi.excess) / (2.0 * e);
            let err = (lo.excess_unresolved + hi.excess_unresolved) / (2.0 * e);
            return Ok(MassBracket { value: t.prefix * g, unresolved: t.prefix * err, nodes: 2 });
        }
    }
    refine(mu, x, q, sided, Mode::Mollifier(q.epsilon), opts)
}

/// Number of forward times constrained by a forward ball.
fn forward_length(q: &BallQuery) -> Option<usize> {
    match q.sided {
        BallSide::Open => Some(q.n),
        BallSide::ForwardClosed => Some(q.n + 1),
        BallSide::TwoSidedClosed => None,
    }
}

/// Mass distribution of the one-sided tail T = Σ_k 2^{-k-1}[y_{n+k} ≠ x_{n+k}]
/// on the cylinder where y agrees with x on 0..n.
struct TailLaw<'a> {
    mu: &'a AnalyticMeasure,
    /// x_{n-1}, the Markov state where the tail starts.
    start: u8,
    tail: Vec<u8>,
    prefix: f64,
    /// expect[d][u] = E[Σ_{k≥d} 2^{-k-1} b_{n+k} | y_{n+d-1} = u].
    expect: Option<Vec<Vec<f64>>>,
}

struct TailStats {
    below: f64,
    below_unresolved: f64,
    excess: f64,
    excess_unresolved: f64,
}

impl<'a> TailLaw<'a> {
    fn new(mu: &'a AnalyticMeasure, x: &Word, n: usize, with_expect: bool) -> Result<Self> {
        debug_assert!(n >= 1);
        let head = x.slice(0, n as i64 - 1)?;
        let avail = x.coverage().map_or(i64::MAX, |c| c.1);
        let last = (n as i64 + TAIL_DIGITS as i64 - 1).min(avail);
        let tail = if last >= n as i64 { x.slice(n as i64, last)? } else { Vec::new() };
        let prefix = mu.cylinder_mass(&head);
        let mut law = TailLaw { mu, start: head[n - 1], tail, prefix, expect: None };
        if with_expect {
            law.expect = Some(law.expectations());
        }
        Ok(law)
    }

    fn states(&self) -> usize {
        if self.mu.is_bernoulli() {
            1
        } else {
            self.mu.alphabet()
        }
    }

    fn expectations(&self) -> Vec<Vec<f64>> {
        let k = self.mu.alphabet();
        let states = self.states();
        let len = self.tail.len();
        let mut expect = vec![vec![0.0; states]; len + 1];
        for d in (0..len).rev() {
            let wgt = 0.5f64.powi(d as i32 + 1);
            for u in 0..states {
                let mut acc = 0.0;
                for w in 0..k {
                    let p = self.mu.transition(u as u8, w as u8);
                    if p == 0.0 {
                        continue;
                    }
                    let bit = if w as u8 != self.tail[d] { wgt } else { 0.0 };
                    acc += p * (bit + expect[d + 1][if states == 1 { 0 } else { w }]);
                }
                expect[d][u] = acc;
            }
        }
        expect
    }

    /// Children of a cell by the next digit: (agree, differ) state vectors.
    fn split(&self, d: usize, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mu = self.mu;
        let target = self.tail[d];
        if mu.is_bernoulli() {
            let p = mu.marginal(target);
            return (vec![v[0] * p], vec![v[0] * (1.0 - p)]);
        }
        let k = mu.alphabet();
        let mut agree = vec![0.0; k];
        let mut differ = vec![0.0; k];
        for w in 0..k {
            let m: f64 = (0..k).map(|u| v[u] * mu.transition(u as u8, w as u8)).sum();
            if w as u8 == target {
                agree[w] = m;
            } else {
                differ[w] = m;
            }
        }
        (agree, differ)
    }

    fn mean_from(&self, d: usize, v: &[f64]) -> f64 {
        self.expect.as_ref().map_or(0.0, |e| v.iter().zip(&e[d]).map(|(m, x)| m * x).sum())
    }

    /// Conditional P(T < a) and E[(T − a)^+], each with an unresolved bound.
    fn stats(&self, a: f64) -> TailStats {
        let states = self.states();
        let mut v = vec![0.0; states];
        v[if states == 1 { 0 } else { self.start as usize }] = 1.0;
        let truncation = 0.5f64.powi(self.tail.len() as i32);
        if a >= 1.0 {
            return TailStats { below: 1.0, below_unresolved: 0.0, excess: 0.0, excess_unresolved: 0.0 };
        }
        if a <= 0.0 {
            let mean = self.mean_from(0, &v);
            return TailStats { below: 0.0, below_unresolved: 0.0, excess: mean - a, excess_unresolved: truncation };
        }
        let mass_of = |u: &[f64]| u.iter().sum::<f64>();
        let mut lo = 0.0f64;
        let mut w = 1.0f64;
        let mut below = 0.0;
        let mut excess = 0.0;
        for d in 0..self.tail.len() {
            let half = w / 2.0;
            let (agree, differ) = self.split(d, &v);
            if lo + half <= a {
                below += mass_of(&agree);
                lo += half;
                v = differ;
            } else {
                // the digit-1 child lies wholly above a
                excess += mass_of(&differ) * (lo + half - a) + self.mean_from(d + 1, &differ);
                v = agree;
            }
            w = half;
            let m = mass_of(&v);
            if m == 0.0 || lo >= a {
                excess += m * (lo - a).max(0.0) + self.mean_from(d + 1, &v);
                return TailStats { below, below_unresolved: 0.0, excess, excess_unresolved: truncation };
            }
        }
        let m = mass_of(&v);
        TailStats { below, below_unresolved: m, excess, excess_unresolved: m * w + truncation }
    }
}

/// Weight of coordinate j in constraint i.
#[inline]
fn weight(j: i64, i: i64, two: bool) -> f64 {
    if !two && j < i {
        0.0
    } else {
        0.5f64.powi((j - i).abs() as i32 + 1)
    }
}

/// Σ_{j > b} w(j − i).
#[inline]
fn tail_right(i: i64, b: i64, two: bool) -> f64 {
    if b >= i {
        0.5f64.powi((b - i + 1) as i32)
    } else if two {
        1.5 - 0.5f64.powi((i - b) as i32)
    } else {
        1.0
    }
}

/// Σ_{j < a} w(j − i).
#[inline]
fn tail_left(i: i64, a: i64, two: bool) -> f64 {
    if !two {
        0.0
    } else if a <= i {
        0.5f64.powi((i - a + 1) as i32)
    } else {
        1.5 - 0.5f64.powi((a - i) as i32)
    }
}

struct Refiner<'a> {
    mu: &'a AnalyticMeasure,
    x: &'a Word,
    two: bool,
    i0: i64,
    i1: i64,
    mode: Mode,
    floor: f64,
    budget: usize,
    nodes: usize,
    l: Vec<f64>,
    lower: f64,
    unresolved: f64,
    right_mean: HashMap<(i64, u8), f64>,
    left_mean: HashMap<(i64, u8), f64>,
}

struct Exhausted;

impl<'a> Refiner<'a> {
    fn xs(&self, j: i64) -> Result<u8> {
        self.x.get(j)
    }

    /// Σ_{k≥1} 2^{-k-1} P(y_{b+k} ≠ x_{b+k} | y_b = u).
    fn right_expect(&mut self, b: i64, u: u8) -> Result<f64> {
        let key = if self.mu.is_bernoulli() { (b, 0) } else { (b, u) };
        if let Some(v) = self.right_mean.get(&key) {
            return Ok(*v);
        }
        let k = self.mu.alphabet();
        let depth = TAIL_DIGITS as i64 / 2;
        let mut next = vec![0.0; k];
        for d in (1..=depth).rev() {
            let xd = self.xs(b + d)?;
            let wgt = 0.5f64.powi(d as i32 + 1);
            let cur: Vec<f64> = (0..k)
                .map(|w| {
                    let own = if w as u8 != xd { wgt } else { 0.0 };
                    let rest: f64 = (0..k).map(|v| self.mu.transition(w as u8, v as u8) * next[v]).sum();
                    own + if d == depth { 0.0 } else { rest }
                })
                .collect();
            next = cur;
        }
        let v: f64 = (0..k).map(|w| self.mu.transition(u, w as u8) * next[w]).sum();
        self.right_mean.insert(key, v);
        Ok(v)
    }

    /// Σ_{k≥1} 2^{-k-1} P(y_{a-k} ≠ x_{a-k} | y_a = u), backward chain.
    fn left_expect(&mut self, a: i64, u: u8) -> Result<f64> {
        let key = if self.mu.is_bernoulli() { (a, 0) } else { (a, u) };
        if let Some(v) = self.left_mean.get(&key) {
            return Ok(*v);
        }
        let k = self.mu.alphabet();
        let back = |mu: &AnalyticMeasure, from: u8, to: u8| -> f64 {
            match mu.kind() {
                AnalyticKind::Bernoulli(p) => p[to as usize],
                AnalyticKind::Markov { p, pi } => {
                    if pi[from as usize] == 0.0 {
                        0.0
                    } else {
                        pi[to as usize] * p[to as usize][from as usize] / pi[from as usize]
                    }
                }
            }
        };
        let depth = TAIL_DIGITS as i64 / 2;
        let mut next = vec![0.0; k];
        for d in (1..=depth).rev() {
            let xd = self.xs(a - d)?;
            let wgt = 0.5f64.powi(d as i32 + 1);
            let cur: Vec<f64> = (0..k)
                .map(|w| {
                    let own = if w as u8 != xd { wgt } else { 0.0 };
                    let rest: f64 = (0..k).map(|v| back(self.mu, w as u8, v as u8) * next[v]).sum();
                    own + if d == depth { 0.0 } else { rest }
                })
                .collect();
            next = cur;
        }
        let v: f64 = (0..k).map(|w| back(self.mu, u, w as u8) * next[w]).sum();
        self.left_mean.insert(key, v);
        Ok(v)
    }

    fn bounds(&self, a: i64, b: i64) -> (f64, f64, usize) {
        let mut max_l = 0.0f64;
        let mut max_u = 0.0f64;
        let mut arg = 0;
        for (k, i) in (self.i0..=self.i1).enumerate() {
            let li = self.l[k];
            let ui = li + tail_right(i, b, self.two) + tail_left(i, a, self.two);
            if li > max_l {
                max_l = li;
                arg = k;
            }
            max_u = max_u.max(ui);
        }
        (max_l, max_u, arg)
    }

    fn visit(&mut self, a: i64, b: i64, mass: f64, ya: u8, yb: u8) -> std::result::Result<Result<()>, Exhausted> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Exhausted);
        }
        if mass == 0.0 {
            return Ok(Ok(()));
        }
        let covered = a <= self.i0 && b >= self.i1;
        let (max_l, max_u, arg) = self.bounds(a, b);
        match self.mode {
            Mode::Indicator(t) => {
                if max_l >= t {
                    return Ok(Ok(()));
                }
                if max_u <= t {
                    self.lower += mass;
                    return Ok(Ok(()));
                }
                if mass <= self.floor {
                    self.unresolved += mass;
                    return Ok(Ok(()));
                }
            }
            Mode::Mollifier(e) => {
                let g = |d: f64| (2.0 - d / e).clamp(0.0, 1.0);
                if max_u <= e {
                    self.lower += mass;
                    return Ok(Ok(()));
                }
                if max_l >= 2.0 * e {
                    return Ok(Ok(()));
                }
                if covered && max_l >= e && max_u <= 2.0 * e && self.fixed_argmax(arg, a, b) {
                    let i_star = self.i0 + arg as i64;
                    let r = match self.right_expect(b, yb) {
                        Ok(v) => v,
                        Err(err) => return Ok(Err(err)),
                    };
                    let mut ez = self.l[arg] + 0.5f64.powi((b - i_star) as i32) * r;
                    if self.two {
                        let lft = match self.left_expect(a, ya) {
                            Ok(v) => v,
                            Err(err) => return Ok(Err(err)),
                        };
                        ez += 0.5f64.powi((i_star - a) as i32) * lft;
                    }
                    self.lower += mass * (2.0 - ez / e);
                    return Ok(Ok(()));
                }
                if mass <= self.floor {
                    let (hi, lo) = (g(max_l), g(max_u));
                    self.lower += mass * lo;
                    self.unresolved += mass * (hi - lo);
                    return Ok(Ok(()));
                }
            }
        }
        // choose the next coordinate
        let go_right = b < self.i1 || !self.two || self.right_dominates(a, b);
        let j = if go_right { b + 1 } else { a - 1 };
        if j > self.i1 + MAX_EXTENSION || j < self.i0 - MAX_EXTENSION {
            match self.mode {
                Mode::Indicator(_) => self.unresolved += mass,
                Mode::Mollifier(e) => {
                    let g = |d: f64| (2.0 - d / e).clamp(0.0, 1.0);
                    let (hi, lo) = (g(max_l), g(max_u));
                    self.lower += mass * lo;
                    self.unresolved += mass * (hi - lo);
                }
            }
            return Ok(Ok(()));
        }
        let xj = match self.xs(j) {
            Ok(s) => s,
            Err(e) => return Ok(Err(e)),
        };
        let first = b < a;
        let k = self.mu.alphabet();
        if self.mu.is_bernoulli() {
            let p = self.mu.marginal(xj);
            for differ in [false, true] {
                let m = mass * if differ { 1.0 - p } else { p };
                if differ {
                    self.add(j, 1.0);
                }
                let (na, nb) = if first { (j, j) } else if go_right { (a, j) } else { (j, b) };
                let r = self.visit(na, nb, m, 0, 0);
                if differ {
                    self.add(j, -1.0);
                }
                match r {
                    Ok(Ok(())) => {}
                    other => return other,
                }
            }
            return Ok(Ok(()));
        }
        for s in 0..k as u8 {
            let m = if first {
                self.mu.marginal(s)
            } else if go_right {
                mass * self.mu.transition(yb, s)
            } else {
                let pa = self.mu.marginal(ya);
                if pa == 0.0 {
                    0.0
                } else {
                    mass * self.mu.marginal(s) * self.mu.transition(s, ya) / pa
                }
            };
            if m == 0.0 {
                continue;
            }
            let differ = s != xj;
            if differ {
                self.add(j, 1.0);
            }
            let (na, nb, nya, nyb) = if first {
                (j, j, s, s)
            } else if go_right {
                (a, j, ya, s)
            } else {
                (j, b, s, yb)
            };
            let r = self.visit(na, nb, m, nya, nyb);
            if differ {
                self.add(j, -1.0);
            }
            match r {
                Ok(Ok(())) => {}
                other => return other,
            }
        }
        Ok(Ok(()))
    }

    fn add(&mut self, j: i64, sign: f64) {
        for (k, i) in (self.i0..=self.i1).enumerate() {
            self.l[k] += sign * weight(j, i, self.two);
        }
    }

    /// Refine the side whose unknown tail weighs most on a constraint that
    /// is still undecided.
    fn right_dominates(&self, a: i64, b: i64) -> bool {
        let (lo, hi) = match self.mode {
            Mode::Indicator(t) => (t, t),
            Mode::Mollifier(e) => (e, 2.0 * e),
        };
        let (mut right, mut left) = (0.0f64, 0.0f64);
        for (k, i) in (self.i0..=self.i1).enumerate() {
            let (tr, tl) = (tail_right(i, b, true), tail_left(i, a, true));
            if self.l[k] < hi && self.l[k] + tr + tl > lo {
                right = right.max(tr);
                left = left.max(tl);
            }
        }
        right >= left
    }

    /// Whether constraint `arg` stays the maximum for every extension.
    fn fixed_argmax(&self, arg: usize, a: i64, b: i64) -> bool {
        let i_star = self.i0 + arg as i64;
        let rs = tail_right(i_star, b, self.two);
        let ls = tail_left(i_star, a, self.two);
        (self.i0..=self.i1).enumerate().all(|(k, i)| {
            k == arg || {
                let slack = (self.l[arg] - self.l[k])
                    + (rs - tail_right(i, b, self.two)).min(0.0)
                    + (ls - tail_left(i, a, self.two)).min(0.0);
                slack >= 0.0
            }
        })
    }
}

fn refine(
    mu: &AnalyticMeasure,
    x: &Word,
    q: &BallQuery,
    sided: Sided,
    mode: Mode,
    opts: &RefineOptions,
) -> Result<MassBracket> {
    let (i0, i1) = match q.sided {
        BallSide::Open => (0, q.n as i64 - 1),
        BallSide::ForwardClosed => (0, q.n as i64),
        BallSide::TwoSidedClosed => (-(q.n as i64), q.n as i64),
    };
    let two = sided == Sided::Two;
    let width = (i1 - i0 + 1) as usize;
    let mut floor = 1e-3;
    let mut used = 0usize;
    let mut last_unresolved = 1.0;
    loop {
        let mut r = Refiner {
            mu,
            x,
            two,
            i0,
            i1,
            mode,
            floor,
            budget: opts.node_budget.saturating_sub(used),
            nodes: 0,
            l: vec![0.0; width],
            lower: 0.0,
            unresolved: 0.0,
            right_mean: HashMap::new(),
            left_mean: HashMap::new(),
        };
        // the empty block sits just left of the window: a = i0, b = i0 − 1
        let outcome = r.visit(i0, i0 - 1, 1.0, 0, 0);
        used += r.nodes;
        match outcome {
            Err(Exhausted) => {
                return Err(Error::DepthCapExceeded { depth: resolving_depth(q.epsilon, q.n), unresolved: last_unresolved })
            }
            Ok(Err(e)) => return Err(e),
            Ok(Ok(())) => {}
        }
        let value = r.lower + r.unresolved / 2.0;
        if r.unresolved <= opts.rel_tol * value || r.unresolved == 0.0 || floor < 1e-300 {
            return Ok(MassBracket { value, unresolved: r.unresolved, nodes: used });
        }
        // unresolved mass shrinks at least like the square root of the floor
        // (straddling cells along a curve in two tail variables)
        last_unresolved = r.unresolved;
        let ratio = opts.rel_tol * value / r.unresolved;
        floor *= (0.5 * ratio * ratio).clamp(1e-6, 1e-1);
    }
}
