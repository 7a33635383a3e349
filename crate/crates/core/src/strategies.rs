//! Deterministic local strategies and their canonical representatives.
//!
//! A strategy assigns a fixed +-1 outcome to every setting on one side; a
//! pair of them yields a rank-1 sign matrix, one column of the LP. Globally
//! negating both sides leaves that matrix unchanged, so only pairs whose
//! first A-side sign is +1 are enumerated: 2^(n+m-1) canonical pairs.

use std::fmt;

use thiserror::Error;

/// Hard cap on one side's length; enumeration is exponential in it.
pub const MAX_SIGN_LEN: usize = 30;
/// Default cap on n+m for dense enumeration of all canonical pairs.
pub const DEFAULT_ENUM_CAP: usize = 22;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("sign vector length {len} exceeds the hard cap {MAX_SIGN_LEN}")]
    SideTooLong { len: usize },
    #[error("enumeration of 2^({n}+{m}-1) canonical pairs exceeds the cap n+m <= {cap}")]
    EnumerationTooLarge { n: usize, m: usize, cap: usize },
    #[error("strategy pair is {a}x{b} but the matrix is {rows}x{cols}")]
    DimensionMismatch {
        a: usize,
        b: usize,
        rows: usize,
        cols: usize,
    },
    #[error("side length must be at least 1")]
    EmptySide,
}

/// A packed vector of +-1 assignments; bit set means +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector {
    bits: u32,
    len: usize,
}

impl SignVector {
    pub fn from_bits(bits: u32, len: usize) -> Result<Self, StrategyError> {
        if len == 0 {
            return Err(StrategyError::EmptySide);
        }
        if len > MAX_SIGN_LEN {
            return Err(StrategyError::SideTooLong { len });
        }
        Ok(SignVector {
            bits: bits & Self::mask(len),
            len,
        })
    }

    pub fn all_plus(len: usize) -> Result<Self, StrategyError> {
        Self::from_bits(u32::MAX, len)
    }

    fn mask(len: usize) -> u32 {
        if len == 32 {
            u32::MAX
        } else {
            (1u32 << len) - 1
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Sign of entry `i` as +-1.0.
    pub fn sign(&self, i: usize) -> f64 {
        debug_assert!(i < self.len);
        if self.bits & (1 << i) != 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Globally negated copy.
    pub fn negated(&self) -> SignVector {
        SignVector {
            bits: !self.bits & Self::mask(self.len),
            len: self.len,
        }
    }

    /// Flips entry `i`.
    pub fn flipped(&self, i: usize) -> SignVector {
        debug_assert!(i < self.len);
        SignVector {
            bits: self.bits ^ (1 << i),
            len: self.len,
        }
    }

    /// Doubles the vector with a negated copy appended, the assignment for
    /// settings shifted by pi.
    pub fn extended_with_negation(&self) -> Result<SignVector, StrategyError> {
        let new_len = 2 * self.len;
        if new_len > MAX_SIGN_LEN {
            return Err(StrategyError::SideTooLong { len: new_len });
        }
        let negated = !self.bits & Self::mask(self.len);
        Ok(SignVector {
            bits: self.bits | (negated << self.len),
            len: new_len,
        })
    }

    /// Parses a string of '+'/'-' characters.
    pub fn parse(text: &str) -> Option<SignVector> {
        let mut bits = 0u32;
        let mut len = 0usize;
        for ch in text.chars() {
            if len >= MAX_SIGN_LEN {
                return None;
            }
            match ch {
                '+' => bits |= 1 << len,
                '-' => {}
                _ => return None,
            }
            len += 1;
        }
        if len == 0 {
            return None;
        }
        Some(SignVector { bits, len })
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bits & (1 << i) != 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// One deterministic LHV assignment: an A-side and a B-side sign vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyPair {
    pub a_signs: SignVector,
    pub b_signs: SignVector,
}

impl StrategyPair {
    pub fn new(a_signs: SignVector, b_signs: SignVector) -> Self {
        StrategyPair { a_signs, b_signs }
    }

    pub fn all_plus(n: usize, m: usize) -> Result<Self, StrategyError> {
        Ok(StrategyPair {
            a_signs: SignVector::all_plus(n)?,
            b_signs: SignVector::all_plus(m)?,
        })
    }

    /// Globally negates both sides; the product matrix is unchanged.
    pub fn negated(&self) -> StrategyPair {
        StrategyPair {
            a_signs: self.a_signs.negated(),
            b_signs: self.b_signs.negated(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.a_signs.sign(0) > 0.0
    }

    /// Product matrix entry `(i, j) = A_i * B_j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.a_signs.sign(i) * self.b_signs.sign(j)
    }

    /// Extends both sides with negated copies, the model extension to
    /// settings shifted by pi on each side.
    pub fn pi_extended(&self) -> Result<StrategyPair, StrategyError> {
        Ok(StrategyPair {
            a_signs: self.a_signs.extended_with_negation()?,
            b_signs: self.b_signs.extended_with_negation()?,
        })
    }
}

/// Canonical representative of `{p, negated p}`: the one whose first A-side
/// sign is +1.
pub fn canonicalize(p: StrategyPair) -> StrategyPair {
    if p.is_canonical() {
        p
    } else {
        p.negated()
    }
}

/// Writes the flattened rank-1 product matrix of `p` into `out` (row-major,
/// length `rows * cols`).
pub fn write_strategy_column(
    p: &StrategyPair,
    rows: usize,
    cols: usize,
    out: &mut [f64],
) -> Result<(), StrategyError> {
    if p.a_signs.len() != rows || p.b_signs.len() != cols || out.len() != rows * cols {
        return Err(StrategyError::DimensionMismatch {
            a: p.a_signs.len(),
            b: p.b_signs.len(),
            rows,
            cols,
        });
    }
    for i in 0..rows {
        let ai = p.a_signs.sign(i);
        for j in 0..cols {
            out[i * cols + j] = ai * p.b_signs.sign(j);
        }
    }
    Ok(())
}

/// Flattened rank-1 product matrix of `p` as a fresh vector.
pub fn strategy_column(
    p: &StrategyPair,
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>, StrategyError> {
    let mut out = vec![0.0; rows * cols];
    write_strategy_column(p, rows, cols, &mut out)?;
    Ok(out)
}

/// Deterministic enumeration of all canonical pairs: A-side bits major,
/// B-side bits minor.
#[derive(Debug, Clone)]
pub struct CanonicalPairs {
    n: usize,
    m: usize,
    next: usize,
    count: usize,
}

impl CanonicalPairs {
    pub fn count(&self) -> usize {
        self.count
    }

    /// Pair at enumeration index `k`, without iterating.
    pub fn pair_at(&self, k: usize) -> StrategyPair {
        canonical_pair_at(k, self.n, self.m)
    }
}

impl Iterator for CanonicalPairs {
    type Item = StrategyPair;

    fn next(&mut self) -> Option<StrategyPair> {
        if self.next >= self.count {
            return None;
        }
        let pair = canonical_pair_at(self.next, self.n, self.m);
        self.next += 1;
        Some(pair)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.count - self.next;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for CanonicalPairs {}

/// Canonical pair with enumeration index `k` in `0..2^(n+m-1)`.
pub fn canonical_pair_at(k: usize, n: usize, m: usize) -> StrategyPair {
    let b_bits = (k & ((1usize << m) - 1)) as u32;
    let a_rest = (k >> m) as u32;
    let a_bits = (a_rest << 1) | 1;
    StrategyPair {
        a_signs: SignVector {
            bits: a_bits,
            len: n,
        },
        b_signs: SignVector {
            bits: b_bits,
            len: m,
        },
    }
}

/// Enumeration index of a canonical pair, the inverse of
/// [`canonical_pair_at`].
pub fn canonical_index_of(p: &StrategyPair) -> usize {
    debug_assert!(p.is_canonical());
    let a_rest = (p.a_signs.bits() >> 1) as usize;
    (a_rest << p.b_signs.len()) | p.b_signs.bits() as usize
}

/// Iterates all `2^(n+m-1)` canonical pairs under the default cap.
pub fn enumerate_canonical(n: usize, m: usize) -> Result<CanonicalPairs, StrategyError> {
    enumerate_canonical_with_cap(n, m, DEFAULT_ENUM_CAP)
}

pub fn enumerate_canonical_with_cap(
    n: usize,
    m: usize,
    cap: usize,
) -> Result<CanonicalPairs, StrategyError> {
    if n == 0 || m == 0 {
        return Err(StrategyError::EmptySide);
    }
    if n > MAX_SIGN_LEN {
        return Err(StrategyError::SideTooLong { len: n });
    }
    if m > MAX_SIGN_LEN {
        return Err(StrategyError::SideTooLong { len: m });
    }
    if n + m > cap {
        return Err(StrategyError::EnumerationTooLarge { n, m, cap });
    }
    Ok(CanonicalPairs {
        n,
        m,
        next: 0,
        count: 1usize << (n + m - 1),
    })
}

/// Maximizes `sum_ij c[i*m+j] * A_i * B_j` over all canonical pairs in
/// closed form: enumerate the smaller side's sign vectors and set the other
/// side entrywise to the sign of the induced linear form (zeros break
/// toward +1). Ties go to the lowest enumeration index, so the result is
/// deterministic regardless of how the scan is partitioned.
pub fn max_bilinear_form(
    c: &[f64],
    n: usize,
    m: usize,
) -> Result<(StrategyPair, f64), StrategyError> {
    use rayon::prelude::*;

    if n == 0 || m == 0 {
        return Err(StrategyError::EmptySide);
    }
    if n > MAX_SIGN_LEN {
        return Err(StrategyError::SideTooLong { len: n });
    }
    if m > MAX_SIGN_LEN {
        return Err(StrategyError::SideTooLong { len: m });
    }
    assert_eq!(c.len(), n * m, "coefficient matrix must be {n}x{m}");

    let enumerate_a = n <= m;
    let side = if enumerate_a { n } else { m };
    let candidates = 1usize << (side - 1);

    let best = (0..candidates)
        .into_par_iter()
        .map(|idx| (idx, candidate_at(c, n, m, enumerate_a, idx)))
        .reduce_with(|best, cur| {
            let ((bi, (_, bv)), (ci, (_, cv))) = (&best, &cur);
            if cv > bv || (cv == bv && ci < bi) {
                cur
            } else {
                best
            }
        })
        .expect("at least one candidate");
    let (_, (pair, value)) = best;
    Ok((canonicalize(pair), value))
}

fn candidate_at(
    c: &[f64],
    n: usize,
    m: usize,
    enumerate_a: bool,
    idx: usize,
) -> (StrategyPair, f64) {
    if enumerate_a {
        // Enumerated side bits with the first sign pinned to +1.
        let a_bits = ((idx as u32) << 1) | 1;
        let a = SignVector { bits: a_bits, len: n };
        let mut b_bits = 0u32;
        let mut value = 0.0;
        for j in 0..m {
            let mut t = 0.0;
            for i in 0..n {
                t += a.sign(i) * c[i * m + j];
            }
            if t >= 0.0 {
                b_bits |= 1 << j;
                value += t;
            } else {
                value -= t;
            }
        }
        let b = SignVector { bits: b_bits, len: m };
        (StrategyPair { a_signs: a, b_signs: b }, value)
    } else {
        let b_bits = ((idx as u32) << 1) | 1;
        let b = SignVector { bits: b_bits, len: m };
        let mut a_bits = 0u32;
        let mut value = 0.0;
        for i in 0..n {
            let mut t = 0.0;
            for j in 0..m {
                t += b.sign(j) * c[i * m + j];
            }
            if t >= 0.0 {
                a_bits |= 1 << i;
                value += t;
            } else {
                value -= t;
            }
        }
        let a = SignVector { bits: a_bits, len: n };
        (StrategyPair { a_signs: a, b_signs: b }, value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn pair(a: &str, b: &str) -> StrategyPair {
        StrategyPair::new(
            SignVector::parse(a).unwrap(),
            SignVector::parse(b).unwrap(),
        )
    }

    #[test]
    fn canonicalize_flips_globally() {
        let p = pair("-+", "++");
        let c = canonicalize(p);
        assert_eq!(c, pair("+-", "--"));
        assert_eq!(canonicalize(pair("+-", "-+")), pair("+-", "-+"));
    }

    #[test]
    fn canonicalize_is_idempotent_and_pairing_invariant() {
        for n in 1..=3usize {
            for m in 1..=3usize {
                for a_bits in 0..1u32 << n {
                    for b_bits in 0..1u32 << m {
                        let p = StrategyPair::new(
                            SignVector::from_bits(a_bits, n).unwrap(),
                            SignVector::from_bits(b_bits, m).unwrap(),
                        );
                        let c = canonicalize(p);
                        assert!(c.is_canonical());
                        assert_eq!(canonicalize(c), c);
                        assert_eq!(canonicalize(p.negated()), c);
                        assert_eq!(
                            strategy_column(&c, n, m).unwrap(),
                            strategy_column(&p, n, m).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn one_by_one_has_two_canonical_pairs() {
        let pairs: Vec<_> = enumerate_canonical(1, 1).unwrap().collect();
        assert_eq!(pairs.len(), 2);
        let mats: Vec<Vec<f64>> = pairs
            .iter()
            .map(|p| strategy_column(p, 1, 1).unwrap())
            .collect();
        assert!(mats.contains(&vec![1.0]));
        assert!(mats.contains(&vec![-1.0]));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_canonical(2, 1).unwrap().count(), 4);
        assert_eq!(enumerate_canonical(2, 2).unwrap().count(), 8);
        assert_eq!(enumerate_canonical(3, 4).unwrap().len(), 64);
        assert!(matches!(
            enumerate_canonical(12, 12),
            Err(StrategyError::EnumerationTooLarge { cap: 22, .. })
        ));
    }

    #[test]
    fn enumeration_yields_distinct_canonical_matrices() {
        // Exhaustive distinctness oracle over small sizes.
        for (n, m) in [(2, 2), (1, 4), (3, 3), (4, 3), (5, 5)] {
            let mut seen = HashSet::new();
            let mut count = 0usize;
            for p in enumerate_canonical(n, m).unwrap() {
                assert!(p.is_canonical());
                let key: Vec<i8> = strategy_column(&p, n, m)
                    .unwrap()
                    .iter()
                    .map(|&x| x as i8)
                    .collect();
                assert!(seen.insert(key), "duplicate matrix for {p:?}");
                count += 1;
            }
            assert_eq!(count, 1usize << (n + m - 1));
        }
    }

    #[test]
    fn pair_at_matches_iteration_order() {
        let pairs: Vec<_> = enumerate_canonical(3, 2).unwrap().collect();
        for (k, p) in pairs.iter().enumerate() {
            assert_eq!(canonical_pair_at(k, 3, 2), *p);
            assert_eq!(canonical_index_of(p), k);
        }
    }

    #[test]
    fn strategy_column_reference_points() {
        assert_eq!(
            strategy_column(&pair("++", "+-"), 2, 2).unwrap(),
            vec![1.0, -1.0, 1.0, -1.0]
        );
        assert_eq!(
            strategy_column(&pair("+-", "+-"), 2, 2).unwrap(),
            vec![1.0, -1.0, -1.0, 1.0]
        );
        assert_eq!(
            strategy_column(&pair("+++", "++"), 3, 2).unwrap(),
            vec![1.0; 6]
        );
        assert!(strategy_column(&pair("++", "++"), 3, 2).is_err());
    }

    #[test]
    fn negated_pair_cancels_local_marginals() {
        let p = pair("+-+", "-+");
        let q = p.negated();
        for i in 0..3 {
            assert_eq!(p.a_signs.sign(i) + q.a_signs.sign(i), 0.0);
        }
        for j in 0..2 {
            assert_eq!(p.b_signs.sign(j) + q.b_signs.sign(j), 0.0);
        }
    }

    #[test]
    fn max_bilinear_matches_exhaustive_enumeration() {
        // Deterministic pseudo-random coefficients, both n<=m and n>m.
        for (n, m, seed) in [(2usize, 3usize, 1u64), (4, 2, 2), (3, 3, 3), (1, 5, 4)] {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            };
            let c: Vec<f64> = (0..n * m).map(|_| next()).collect();
            let (best_pair, best_val) = max_bilinear_form(&c, n, m).unwrap();
            let mut exhaustive = f64::NEG_INFINITY;
            for p in enumerate_canonical(n, m).unwrap() {
                let v: f64 = (0..n * m)
                    .map(|k| c[k] * p.entry(k / m, k % m))
                    .sum();
                exhaustive = exhaustive.max(v);
            }
            assert!((best_val - exhaustive).abs() < 1e-12);
            let achieved: f64 = (0..n * m)
                .map(|k| c[k] * best_pair.entry(k / m, k % m))
                .sum();
            assert!((achieved - best_val).abs() < 1e-12);
        }
    }

    #[test]
    fn pi_extension_doubles_and_negates() {
        let p = pair("+-", "+");
        let e = p.pi_extended().unwrap();
        assert_eq!(e.a_signs.to_string(), "+--+");
        assert_eq!(e.b_signs.to_string(), "+-");
        assert!(SignVector::all_plus(16).unwrap().extended_with_negation().is_err());
    }

    #[test]
    fn sign_vector_display_round_trip() {
        for text in ["+", "-", "+-+", "---+", "++++++++"] {
            let v = SignVector::parse(text).unwrap();
            assert_eq!(v.to_string(), text);
        }
        assert!(SignVector::parse("").is_none());
        assert!(SignVector::parse("+x").is_none());
    }
}
