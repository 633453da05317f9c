//! Kneading theory for unimodal maps: itineraries over `{L, C, R}`, the
//! parity-lexicographic order, admissibility of kneading invariants and
//! numeric detection of periodic windows.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::maps::{Family, MapSpec, DEFAULT_ESCAPE_RADIUS};

pub const DEFAULT_C_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolicError {
    #[error("{0} is not a unimodal family")]
    NotUnimodal(Family),
    #[error("symbol C may only end a finite sequence")]
    MisplacedC,
    #[error("a symbol sequence cannot be empty")]
    Empty,
    #[error("sequence ends at the critical point; the admissibility rule does not cover it")]
    PeriodicCritical,
    #[error("cannot parse symbol sequence {0:?}")]
    Parse(String),
    #[error("need n >= 1 and period_max >= 1")]
    BadCount,
    #[error(transparent)]
    Map(#[from] crate::maps::MapError),
}

pub type Result<T> = std::result::Result<T, SymbolicError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    L,
    C,
    R,
}

impl Symbol {
    fn rank(self) -> u8 {
        match self {
            Symbol::L => 0,
            Symbol::C => 1,
            Symbol::R => 2,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::L => 'L',
            Symbol::C => 'C',
            Symbol::R => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'L' => Some(Symbol::L),
            'C' => Some(Symbol::C),
            'R' => Some(Symbol::R),
            _ => None,
        }
    }
}

/// A finite word, or an eventually periodic word `head tail tail tail ...`.
///
/// Invariants: not empty; `C` appears only as the last symbol of a finite
/// word; a repeating tail is reduced to its primitive period, and the head
/// does not end with the last tail symbol (so representations are unique).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolSequence {
    head: Vec<Symbol>,
    tail: Vec<Symbol>,
}

impl SymbolSequence {
    pub fn finite(word: Vec<Symbol>) -> Result<Self> {
        Self::new(word, Vec::new())
    }

    pub fn eventually_periodic(head: Vec<Symbol>, tail: Vec<Symbol>) -> Result<Self> {
        if tail.is_empty() {
            return Err(SymbolicError::Empty);
        }
        Self::new(head, tail)
    }

    fn new(mut head: Vec<Symbol>, mut tail: Vec<Symbol>) -> Result<Self> {
        if head.is_empty() && tail.is_empty() {
            return Err(SymbolicError::Empty);
        }
        let c_in_head = head.iter().position(|&s| s == Symbol::C);
        if tail.contains(&Symbol::C) || c_in_head.is_some_and(|i| i + 1 != head.len() || !tail.is_empty()) {
            return Err(SymbolicError::MisplacedC);
        }
        if !tail.is_empty() {
            let p = primitive_period(&tail);
            tail.truncate(p);
            // Absorb head symbols into the tail by rotating it backwards.
            while head.last() == tail.last() && head.last().is_some() {
                head.pop();
                tail.rotate_right(1);
            }
        }
        Ok(SymbolSequence { head, tail })
    }

    pub fn head(&self) -> &[Symbol] {
        &self.head
    }

    pub fn tail(&self) -> &[Symbol] {
        &self.tail
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_empty()
    }

    /// Length of a finite word; `None` for infinite sequences.
    pub fn len(&self) -> Option<usize> {
        self.is_finite().then_some(self.head.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_c(&self) -> bool {
        self.head.last() == Some(&Symbol::C)
    }

    /// Symbol at position `k`, or `None` past the end of a finite word.
    pub fn at(&self, k: usize) -> Option<Symbol> {
        if k < self.head.len() {
            Some(self.head[k])
        } else if self.tail.is_empty() {
            None
        } else {
            Some(self.tail[(k - self.head.len()) % self.tail.len()])
        }
    }

    /// The shift map applied `k` times; `None` if a finite word runs out.
    pub fn shift(&self, k: usize) -> Option<SymbolSequence> {
        if k < self.head.len() {
            Some(SymbolSequence { head: self.head[k..].to_vec(), tail: self.tail.clone() })
        } else if self.tail.is_empty() {
            None
        } else {
            let mut tail = self.tail.clone();
            tail.rotate_left((k - self.head.len()) % self.tail.len());
            Some(SymbolSequence { head: Vec::new(), tail })
        }
    }

    /// Finite prefix of length at most `n`.
    pub fn truncate(&self, n: usize) -> SymbolSequence {
        let word: Vec<Symbol> = (0..n).map_while(|k| self.at(k)).collect();
        SymbolSequence { head: word, tail: Vec::new() }
    }

    /// Number of positions that decide a comparison: both heads plus one
    /// common period, or the shorter finite length.
    fn horizon(&self, other: &SymbolSequence) -> usize {
        match (self.is_finite(), other.is_finite()) {
            (false, false) => self.head.len().max(other.head.len()) + lcm(self.tail.len(), other.tail.len()),
            (true, false) => self.head.len(),
            (false, true) => other.head.len(),
            (true, true) => self.head.len().min(other.head.len()),
        }
    }
}

/// Parity-lexicographic order: at the first difference, `L < C < R`, reversed
/// when the common prefix has an odd number of `R`s. Finite words are compared
/// over their common length, so a prefix compares equal to its extensions.
pub fn compare(a: &SymbolSequence, b: &SymbolSequence) -> Ordering {
    let n = a.horizon(b);
    let mut odd = false;
    for k in 0..n {
        let (x, y) = match (a.at(k), b.at(k)) {
            (Some(x), Some(y)) => (x, y),
            _ => return Ordering::Equal,
        };
        if x != y {
            let o = x.rank().cmp(&y.rank());
            return if odd { o.reverse() } else { o };
        }
        odd ^= x == Symbol::R;
    }
    Ordering::Equal
}

/// Whether `k` is maximal among its shifts. Eventually periodic sequences
/// need only the shifts up to head length plus one period.
pub fn is_admissible(k: &SymbolSequence) -> Result<bool> {
    if k.contains_c() {
        return Err(SymbolicError::PeriodicCritical);
    }
    let last = if k.is_finite() { k.head.len() } else { k.head.len() + k.tail.len() };
    for j in 1..last {
        if let Some(s) = k.shift(j) {
            if compare(&s, k) == Ordering::Greater {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

impl fmt::Display for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.head {
            write!(f, "{}", s.as_char())?;
        }
        if !self.tail.is_empty() {
            write!(f, "(")?;
            for s in &self.tail {
                write!(f, "{}", s.as_char())?;
            }
            write!(f, ")^inf")?;
        }
        Ok(())
    }
}

impl FromStr for SymbolSequence {
    type Err = SymbolicError;

    /// Accepts `HEAD`, `HEAD(TAIL)^inf` and the shorthand `HEAD(TAIL)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || SymbolicError::Parse(s.to_string());
        let word = |w: &str| w.chars().map(|c| Symbol::from_char(c).ok_or_else(bad)).collect::<Result<Vec<_>>>();
        let t = s.trim();
        match t.find('(') {
            None => SymbolSequence::finite(word(t)?),
            Some(i) => {
                let rest = &t[i + 1..];
                let j = rest.find(')').ok_or_else(bad)?;
                let suffix = &rest[j + 1..];
                if !(suffix.is_empty() || suffix == "^inf") {
                    return Err(bad());
                }
                SymbolSequence::eventually_periodic(word(&t[..i])?, word(&rest[..j])?)
            }
        }
    }
}

/// Symbols of `x0, f(x0), ..., f^{n-1}(x0)`. Emits `C` and stops when an
/// iterate is within `c_tol` of the turning point. When an iterate repeats
/// exactly, the result is eventually periodic.
pub fn itinerary(map: &MapSpec, x0: f64, n: usize, c_tol: f64) -> Result<SymbolSequence> {
    let c = map.critical_point().ok_or(SymbolicError::NotUnimodal(map.family()))?;
    if n == 0 {
        return Err(SymbolicError::BadCount);
    }
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut word = Vec::with_capacity(n);
    let mut x = x0;
    for k in 0..n {
        if (x - c).abs() <= c_tol {
            word.push(Symbol::C);
            return SymbolSequence::finite(word);
        }
        if let Some(&j) = seen.get(&x.to_bits()) {
            let tail = word.split_off(j);
            return SymbolSequence::eventually_periodic(word, tail);
        }
        seen.insert(x.to_bits(), k);
        word.push(if x < c { Symbol::L } else { Symbol::R });
        x = map.step([x, 0.0])[0];
    }
    SymbolSequence::finite(word)
}

/// Kneading invariant: the itinerary of the critical value.
pub fn kneading_invariant(map: &MapSpec, n: usize) -> Result<SymbolSequence> {
    let c = map.critical_point().ok_or(SymbolicError::NotUnimodal(map.family()))?;
    itinerary(map, map.step([c, 0.0])[0], n, DEFAULT_C_TOL)
}

/// A parameter interval carrying an attracting cycle of the given period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowOptions {
    pub n_transient: usize,
    /// Maximal distance between `x_k` and `x_{k+p}` for a detected cycle.
    pub tol: f64,
    /// Name of the swept parameter; the family's first parameter by default.
    pub param: Option<&'static str>,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions { n_transient: 20_000, tol: 1e-9, param: None }
    }
}

/// Scans `grid` evenly spaced parameter values over `[lo, hi]` (inclusive)
/// for attracting cycles of period at most `period_max`, and merges runs of
/// consecutive grid values with the same period into windows.
///
/// A cycle is detected from the critical orbit after the transient and kept
/// only if its multiplier has modulus below one.
pub fn find_windows(base: &MapSpec, range: (f64, f64), period_max: usize, grid: usize, opts: &WindowOptions) -> Result<Vec<Window>> {
    if !base.family().is_unimodal() {
        return Err(SymbolicError::NotUnimodal(base.family()));
    }
    if period_max == 0 || grid == 0 {
        return Err(SymbolicError::BadCount);
    }
    let name = opts.param.unwrap_or(base.family().param_names()[0]);
    let mus: Vec<f64> =
        (0..grid).map(|i| if grid == 1 { range.0 } else { range.0 + (range.1 - range.0) * i as f64 / (grid - 1) as f64 }).collect();
    let periods: Vec<Option<usize>> = mus
        .par_iter()
        .map(|&mu| -> Result<Option<usize>> {
            let m = base.with_param(name, mu)?;
            Ok(attracting_period(&m, period_max, opts))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<Window> = Vec::new();
    let mut prev: Option<usize> = None;
    for (mu, p) in mus.iter().zip(periods) {
        match (p, out.last_mut()) {
            (Some(p), Some(w)) if prev == Some(p) => w.mu_hi = *mu,
            (Some(p), _) => out.push(Window { mu_lo: *mu, mu_hi: *mu, period: p }),
            _ => {}
        }
        prev = p;
    }
    Ok(out)
}

/// Minimal period of an attracting cycle reached by the critical orbit.
pub fn attracting_period(map: &MapSpec, period_max: usize, opts: &WindowOptions) -> Option<usize> {
    let c = map.critical_point()?;
    let mut x = [c, 0.0];
    if map.iterate(&mut x, opts.n_transient, DEFAULT_ESCAPE_RADIUS).is_some() {
        return None;
    }
    let mut orbit = Vec::with_capacity(2 * period_max + 1);
    orbit.push(x[0]);
    for _ in 0..2 * period_max {
        x = map.step(x);
        orbit.push(x[0]);
    }
    let p = (1..=period_max).find(|&p| (0..=period_max).all(|k| (orbit[k + p] - orbit[k]).abs() <= opts.tol))?;
    let multiplier: f64 = orbit[..p].iter().map(|&z| map.jacobian_conv([z, 0.0])[(0, 0)]).product();
    (multiplier.abs() < 1.0).then_some(p)
}

fn primitive_period(w: &[Symbol]) -> usize {
    let n = w.len();
    (1..=n).find(|&p| n.is_multiple_of(p) && (0..n).all(|i| w[i] == w[i % p])).unwrap_or(n)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> SymbolSequence {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(seq("RL(LR)^inf").to_string(), "RL(LR)^inf");
        assert_eq!(seq("RL(LR)").to_string(), "RL(LR)^inf");
        assert_eq!(seq("R(LL)^inf").to_string(), "R(L)^inf");
        assert_eq!(seq("RLL(L)^inf"), seq("R(L)^inf"));
        assert!("RCL".parse::<SymbolSequence>().is_err());
        assert!("R(C)".parse::<SymbolSequence>().is_err());
        assert!("".parse::<SymbolSequence>().is_err());
        assert!("RX".parse::<SymbolSequence>().is_err());
    }

    #[test]
    fn parity_rule() {
        assert_eq!(compare(&seq("RLL"), &seq("RLR")), Ordering::Greater);
        assert_eq!(compare(&seq("LR"), &seq("LL")), Ordering::Greater);
        assert_eq!(compare(&seq("L(R)"), &seq("R(L)")), Ordering::Less);
        assert_eq!(compare(&seq("R(L)"), &seq("R(L)")), Ordering::Equal);
        assert_eq!(compare(&seq("RL"), &seq("RC")), Ordering::Greater);
    }

    #[test]
    fn periodic_comparison_uses_structure() {
        assert_eq!(compare(&seq("(RL)"), &seq("R(LR)")), Ordering::Equal);
        assert_ne!(compare(&seq("(RLL)"), &seq("(RL)")), Ordering::Equal);
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(&seq("R(L)")).unwrap());
        assert!(!is_admissible(&seq("L(R)")).unwrap());
        assert!(is_admissible(&seq("(RLR)")).unwrap());
        assert_eq!(is_admissible(&seq("RLC")), Err(SymbolicError::PeriodicCritical));
    }

    #[test]
    fn itineraries_of_critical_orbits() {
        let t = MapSpec::tent(2.0).unwrap();
        assert_eq!(itinerary(&t, 1.0, 50, DEFAULT_C_TOL).unwrap(), seq("R(L)"));
        assert_eq!(itinerary(&t, 0.5, 50, 0.0).unwrap(), seq("C"));
        let l = MapSpec::logistic(4.0).unwrap();
        assert_eq!(kneading_invariant(&l, 50).unwrap(), seq("R(L)"));
        assert!(itinerary(&MapSpec::lozi(1.7, 0.3).unwrap(), 0.1, 5, 0.0).is_err());
    }

    #[test]
    fn no_windows_for_expanding_tents() {
        let t = MapSpec::tent(1.5).unwrap();
        assert!(find_windows(&t, (1.5, 2.0), 6, 101, &WindowOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn logistic_period_three_window() {
        let l = MapSpec::logistic(3.83).unwrap();
        let w = find_windows(&l, (3.82, 3.86), 3, 401, &WindowOptions::default()).unwrap();
        let p3: Vec<_> = w.iter().filter(|w| w.period == 3).collect();
        assert_eq!(p3.len(), 1);
        let rc = 1.0 + 8f64.sqrt();
        assert!((p3[0].mu_lo - rc).abs() < 2e-4, "{:?}", p3[0]);
    }
}
