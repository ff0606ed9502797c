//! Symbol sequences `sigma = (lambda_1, lambda_2, ...)` over a finite alphabet.
//!
//! Symbols are 1-based, matching the indexing of maps in an IFS. Positions are
//! also 1-based: `symbol_at(1)` is the first map applied.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IfsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionRule {
    PerfectSquares,
    PowersOfTwo,
}

impl PositionRule {
    pub fn matches(&self, position: usize) -> bool {
        match self {
            PositionRule::PerfectSquares => {
                let r = position.isqrt();
                r * r == position
            }
            PositionRule::PowersOfTwo => position.is_power_of_two(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolSequence {
    Explicit(Vec<usize>),
    Periodic(Vec<usize>),
    /// Symbol 1 with probability `p`, symbol 2 otherwise.
    Bernoulli { p: f64, seed: u64 },
    /// `special` at positions selected by `rule`, `base` everywhere else.
    SparseDensity {
        special: usize,
        base: usize,
        rule: PositionRule,
    },
}

impl SymbolSequence {
    pub fn explicit(symbols: impl Into<Vec<usize>>) -> Self {
        SymbolSequence::Explicit(symbols.into())
    }

    pub fn periodic(pattern: impl Into<Vec<usize>>) -> Self {
        SymbolSequence::Periodic(pattern.into())
    }

    pub fn bernoulli(p: f64, seed: u64) -> Self {
        SymbolSequence::Bernoulli { p, seed }
    }

    /// Sparse sequence over `{1, 2}` with `special` at the positions of `rule`.
    pub fn sparse(special: usize, rule: PositionRule) -> Self {
        let base = if special == 1 { 2 } else { 1 };
        SymbolSequence::SparseDensity { special, base, rule }
    }

    pub fn validate(&self) -> Result<()> {
        let nonzero = |s: &[usize]| s.iter().all(|&x| x >= 1);
        match self {
            SymbolSequence::Explicit(s) if !nonzero(s) => {
                Err(IfsError::InvalidArgument("symbols are 1-based".into()))
            }
            SymbolSequence::Periodic(p) if p.is_empty() || !nonzero(p) => Err(
                IfsError::InvalidArgument("periodic pattern must be nonempty and 1-based".into()),
            ),
            SymbolSequence::Bernoulli { p, .. } if !(0.0..=1.0).contains(p) => Err(
                IfsError::InvalidArgument(format!("Bernoulli probability {p} not in [0, 1]")),
            ),
            SymbolSequence::SparseDensity { special, base, .. }
                if *special == 0 || *base == 0 || special == base =>
            {
                Err(IfsError::InvalidArgument(
                    "sparse sequence needs two distinct 1-based symbols".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// The symbol at 1-based `position`. Bernoulli symbols depend only on
    /// `(seed, position)`, so any position can be computed independently.
    pub fn symbol_at(&self, position: usize) -> Result<usize> {
        debug_assert!(position >= 1);
        match self {
            SymbolSequence::Explicit(s) => s.get(position - 1).copied().ok_or(
                IfsError::SequenceExhausted {
                    available: s.len(),
                    requested: position,
                },
            ),
            SymbolSequence::Periodic(p) => {
                if p.is_empty() {
                    return Err(IfsError::InvalidArgument("empty periodic pattern".into()));
                }
                Ok(p[(position - 1) % p.len()])
            }
            SymbolSequence::Bernoulli { p, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(2 * (position as u128 - 1));
                let u: f64 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                Ok(if u < *p { 1 } else { 2 })
            }
            SymbolSequence::SparseDensity { special, base, rule } => {
                Ok(if rule.matches(position) { *special } else { *base })
            }
        }
    }

    /// The first `n` symbols.
    pub fn prefix(&self, n: usize) -> Result<Vec<usize>> {
        self.validate()?;
        if let SymbolSequence::Explicit(s) = self {
            if s.len() < n {
                return Err(IfsError::SequenceExhausted {
                    available: s.len(),
                    requested: n,
                });
            }
            return Ok(s[..n].to_vec());
        }
        (1..=n).map(|i| self.symbol_at(i)).collect()
    }

    /// Prefix with every symbol checked against an alphabet `1..=alphabet`.
    pub fn prefix_checked(&self, n: usize, alphabet: usize) -> Result<Vec<usize>> {
        let prefix = self.prefix(n)?;
        if let Some((i, &s)) = prefix.iter().enumerate().find(|(_, &s)| s == 0 || s > alphabet) {
            return Err(IfsError::SymbolOutOfRange {
                symbol: s,
                position: i + 1,
                alphabet,
            });
        }
        Ok(prefix)
    }
}

/// Counts `(n1, n2)`: symbols among the first `n` that fall in `block1`, and the rest.
pub fn count_symbols(sigma: &SymbolSequence, n: usize, block1: &[usize]) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(IfsError::InvalidArgument("n must be at least 1".into()));
    }
    let n1 = sigma.prefix(n)?.iter().filter(|s| block1.contains(s)).count();
    Ok((n1, n - n1))
}

/// Uniform draws in `[lo, hi)`; small helper shared by the samplers and tests.
pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
