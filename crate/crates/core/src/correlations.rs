//! Chowla/Elliott-type correlations, sign-pattern statistics and the Kátai
//! bilinear criterion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averaging::{scheme_means, AvgKind, Interval, IntervalScheme, MeanReport, Pieces};
use crate::error::{MulabError, Result};
use crate::par;
use crate::seqgen::{primes::primes_between, SequenceBlock};
use crate::sum::ComplexSum;

/// One factor `C^conj a(dilation * m + shift)` of a correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub dilation: u64,
    pub shift: u64,
    pub conjugate: bool,
}

impl Term {
    pub fn shift(shift: u64) -> Self {
        Self { dilation: 1, shift, conjugate: false }
    }

    pub fn new(dilation: u64, shift: u64, conjugate: bool) -> Self {
        Self { dilation, shift, conjugate }
    }

    #[inline]
    fn index(&self, m: u64) -> u64 {
        self.dilation * m + self.shift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationQuery {
    terms: Vec<Term>,
    scheme: IntervalScheme,
}

impl CorrelationQuery {
    pub fn new(terms: Vec<Term>, scheme: IntervalScheme) -> Result<Self> {
        if terms.is_empty() {
            return Err(MulabError::InvalidArgument("correlation needs at least one term".into()));
        }
        if terms.iter().any(|t| t.dilation == 0) {
            return Err(MulabError::InvalidArgument("dilations must be positive".into()));
        }
        Ok(Self { terms, scheme })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn scheme(&self) -> &IntervalScheme {
        &self.scheme
    }

    /// True when `c_i n_j = c_j n_i` for some `i != j`.
    pub fn is_degenerate(&self) -> bool {
        let t = &self.terms;
        (0..t.len()).any(|i| {
            (i + 1..t.len()).any(|j| {
                t[i].dilation as u128 * t[j].shift as u128 == t[j].dilation as u128 * t[i].shift as u128
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub terms: Vec<Term>,
    pub degenerate: bool,
    pub report: MeanReport,
}

/// `E_m Π_i C^{conj_i} a_i(c_i m + n_i)` along every interval of the query.
///
/// `blocks` holds one block per term, or a single block shared by all terms.
/// Degenerate queries are evaluated and flagged.
pub fn correlation(blocks: &[&SequenceBlock], query: &CorrelationQuery) -> Result<CorrelationReport> {
    let terms = query.terms();
    let pick = |i: usize| -> Result<&SequenceBlock> {
        match blocks.len() {
            1 => Ok(blocks[0]),
            n if n == terms.len() => Ok(blocks[i]),
            n => Err(MulabError::InvalidArgument(format!(
                "{n} blocks for {} terms",
                terms.len()
            ))),
        }
    };
    let scheme = query.scheme();
    let (lo, hi) = (scheme.min_start(), scheme.max_end());
    let mut per_term = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        let b = pick(i)?;
        b.require(t.index(lo), t.index(hi))?;
        per_term.push((b, *t));
    }
    let means = scheme_means(scheme, |m| {
        per_term.iter().fold(Complex64::new(1.0, 0.0), |acc, (b, t)| {
            let v = b.get(t.index(m));
            acc * if t.conjugate { v.conj() } else { v }
        })
    });
    Ok(CorrelationReport {
        terms: terms.to_vec(),
        degenerate: query.is_degenerate(),
        report: MeanReport::from_means(scheme, means),
    })
}

pub const PATTERN_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternStats {
    pub ell: usize,
    pub kind: AvgKind,
    pub interval: Interval,
    /// Frequency of each word, indexed with the first symbol as the most
    /// significant bit and `1` meaning `-1` (lexicographic in "+-").
    pub frequencies: Vec<f64>,
    pub total_weight: f64,
}

impl PatternStats {
    pub fn pattern_string(ell: usize, index: usize) -> String {
        (0..ell).map(|j| if (index >> (ell - 1 - j)) & 1 == 1 { '-' } else { '+' }).collect()
    }

    pub fn frequency_of(&self, word: &str) -> Option<f64> {
        if word.len() != self.ell {
            return None;
        }
        let mut idx = 0usize;
        for c in word.chars() {
            idx = (idx << 1)
                | match c {
                    '+' => 0,
                    '-' => 1,
                    _ => return None,
                };
        }
        Some(self.frequencies[idx])
    }
}

/// Fixed-point weight of index `n`: 2^64 for Cesàro, floor(2^64 / n) for log.
#[inline]
pub(crate) fn fixed_weight(kind: AvgKind, n: u64) -> u128 {
    match kind {
        AvgKind::Cesaro => 1u128 << 64,
        AvgKind::Log => (1u128 << 64) / n as u128,
    }
}

#[inline]
fn bit_at(words: &[u64], i: usize) -> usize {
    ((words[i / 64] >> (i % 64)) & 1) as usize
}

/// Weighted counts of length-`ell` words starting at `n ∈ iv`.
pub(crate) fn word_counts(block: &SequenceBlock, ell: usize, iv: Interval, kind: AvgKind) -> Vec<u128> {
    let words = block.sign_words().expect("caller checked sign storage");
    let mask = (1usize << ell) - 1;
    let base = (iv.first() - block.start()) as usize;
    let chunk = par::CHUNK.max(1 << (ell + 2));
    let parts = par::map_chunks(iv.len() as usize, chunk, |r| {
        let mut counts = vec![0u128; 1 << ell];
        let mut w = 0usize;
        for j in 0..ell - 1 {
            w = (w << 1) | bit_at(words, base + r.start + j);
        }
        for i in r {
            w = ((w << 1) | bit_at(words, base + i + ell - 1)) & mask;
            counts[w] += fixed_weight(kind, iv.first() + i as u64);
        }
        counts
    });
    let mut total = vec![0u128; 1 << ell];
    for p in parts {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    total
}

pub(crate) fn check_sign_block(block: &SequenceBlock, ell: usize) -> Result<()> {
    if ell == 0 || ell > PATTERN_CAP {
        return Err(MulabError::PatternLengthCap { ell, cap: PATTERN_CAP });
    }
    if !block.is_sign() {
        let bad = (block.start()..block.end())
            .find(|&n| !matches!(block.get_int(n), Some(1) | Some(-1)))
            .unwrap_or(block.start());
        return Err(MulabError::NonsignValues { index: bad });
    }
    Ok(())
}

pub(crate) fn stats_from_counts(ell: usize, kind: AvgKind, iv: Interval, counts: &[u128]) -> PatternStats {
    let total: u128 = counts.iter().sum();
    let frequencies = counts.iter().map(|&c| c as f64 / total as f64).collect();
    PatternStats { ell, kind, interval: iv, frequencies, total_weight: total as f64 / 2f64.powi(64) }
}

/// Frequencies of length-`ell` sign patterns `(a(n), ..., a(n+ell-1))` for
/// `n` in each interval of the scheme.
pub fn pattern_densities(block: &SequenceBlock, ell: usize, scheme: &IntervalScheme) -> Result<Vec<PatternStats>> {
    check_sign_block(block, ell)?;
    block.require(scheme.min_start(), scheme.max_end() + ell as u64 - 1)?;
    let kind = scheme.kind();
    let pieces = Pieces::new(scheme.intervals());
    let piece_counts: Vec<Option<Vec<u128>>> = pieces
        .iter()
        .map(|p| pieces.used(p).then(|| word_counts(block, ell, pieces.piece(p), kind)))
        .collect();
    Ok(scheme
        .intervals()
        .iter()
        .map(|iv| {
            let mut counts = vec![0u128; 1 << ell];
            for p in pieces.covering(*iv) {
                for (c, x) in counts.iter_mut().zip(piece_counts[p].as_ref().unwrap()) {
                    *c += x;
                }
            }
            stats_from_counts(ell, kind, *iv, &counts)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KataiEntry {
    pub p: u64,
    pub q: u64,
    /// Averaging length `floor(N / q)`.
    pub m: u64,
    pub value: Complex64,
    pub abs_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KataiReport {
    pub n: u64,
    pub k: u64,
    pub max_value: f64,
    pub argmax: (u64, u64),
    pub table: Vec<KataiEntry>,
}

/// `max_{1<p<q<K} |E_{n <= N/q} a(pn) conj(a(qn))|` with the full table.
///
/// Pairs are listed lexicographically; ties keep the smallest pair.
pub fn katai_bilinear_max(block: &SequenceBlock, n: u64, k: u64) -> Result<KataiReport> {
    if k < 3 {
        return Err(MulabError::InsufficientPrimes { k });
    }
    let primes = primes_between(1, k);
    if primes.len() < 2 {
        return Err(MulabError::InsufficientPrimes { k });
    }
    let largest = *primes.last().unwrap();
    if n < largest {
        return Err(MulabError::InvalidArgument(format!("N = {n} is below the largest prime {largest}")));
    }
    block.require(1, n)?;
    let pairs: Vec<(u64, u64)> = primes
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| primes[i + 1..].iter().map(move |&q| (p, q)))
        .collect();
    let table = par::map_items(pairs, |(p, q)| {
        let m = n / q;
        let mut acc = ComplexSum::new();
        for j in 1..=m {
            acc.add(block.get(p * j) * block.get(q * j).conj());
        }
        let value = acc.value() / m as f64;
        KataiEntry { p, q, m, value, abs_value: value.norm() }
    });
    let mut best = 0;
    for (i, e) in table.iter().enumerate() {
        if e.abs_value > table[best].abs_value {
            best = i;
        }
    }
    Ok(KataiReport {
        n,
        k,
        max_value: table[best].abs_value,
        argmax: (table[best].p, table[best].q),
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::unit;
    use crate::seqgen::{materialize, sieve_liouville, SyntheticSpec};

    #[test]
    fn dilated_liouville_pair_is_one() {
        let b = sieve_liouville(1, 30_001).unwrap();
        let scheme = IntervalScheme::prefixes(&[10, 1000, 10_000], AvgKind::Cesaro).unwrap();
        let q = CorrelationQuery::new(vec![Term::new(2, 0, false), Term::new(3, 0, false)], scheme).unwrap();
        assert!(q.is_degenerate());
        let r = correlation(&[&b], &q).unwrap();
        assert!(r.degenerate);
        for m in &r.report.means {
            assert_eq!(*m, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn linear_phase_telescopes() {
        let alpha = 0.377;
        let n = 10_000;
        let b = materialize(&SyntheticSpec::PolyPhase { coeffs: vec![0.0, alpha] }.into(), 1, n + 2).unwrap();
        let q = CorrelationQuery::new(
            vec![Term::new(1, 1, false), Term::new(1, 0, true)],
            IntervalScheme::prefix(n, AvgKind::Cesaro),
        )
        .unwrap();
        assert!(!q.is_degenerate());
        let v = correlation(&[&b], &q).unwrap().report.extrapolated;
        assert!((v - unit(alpha)).norm() <= 2.0 / n as f64);
    }

    #[test]
    fn coverage_gap_is_reported() {
        let b = sieve_liouville(1, 100).unwrap();
        let q = CorrelationQuery::new(vec![Term::new(2, 0, false)], IntervalScheme::prefix(60, AvgKind::Cesaro)).unwrap();
        assert!(matches!(correlation(&[&b], &q), Err(MulabError::CoverageGap { needed: 120, .. })));
    }

    #[test]
    fn alternating_pairs() {
        let b = materialize(&SyntheticSpec::Alternating.into(), 1, 1002).unwrap();
        let s = pattern_densities(&b, 2, &IntervalScheme::prefix(1000, AvgKind::Cesaro)).unwrap();
        let st = &s[0];
        assert_eq!(st.frequency_of("+-"), Some(0.5));
        assert_eq!(st.frequency_of("-+"), Some(0.5));
        assert_eq!(st.frequency_of("++"), Some(0.0));
        assert_eq!(st.frequency_of("--"), Some(0.0));
        assert_eq!(PatternStats::pattern_string(3, 0b011), "+--");
    }

    #[test]
    fn pattern_errors() {
        let b = crate::seqgen::sieve_mobius(1, 100).unwrap();
        assert!(matches!(
            pattern_densities(&b, 2, &IntervalScheme::prefix(50, AvgKind::Cesaro)),
            Err(MulabError::NonsignValues { index: 4 })
        ));
        let s = sieve_liouville(1, 100).unwrap();
        assert!(matches!(
            pattern_densities(&s, 21, &IntervalScheme::prefix(50, AvgKind::Cesaro)),
            Err(MulabError::PatternLengthCap { .. })
        ));
        assert!(pattern_densities(&s, 3, &IntervalScheme::prefix(98, AvgKind::Cesaro)).is_err());
    }

    #[test]
    fn pattern_counts_match_direct_enumeration() {
        let b = sieve_liouville(1, 20_100).unwrap();
        let scheme = IntervalScheme::from_pairs(&[(0, 20_000), (7_000, 9_500)], AvgKind::Log).unwrap();
        let got = pattern_densities(&b, 4, &scheme).unwrap();
        for st in &got {
            let mut direct = vec![0.0f64; 16];
            let mut tot = 0.0;
            for n in st.interval.iter() {
                let mut w = 0;
                for j in 0..4 {
                    w = (w << 1) | usize::from(b.get_int(n + j).unwrap() == -1);
                }
                direct[w] += 1.0 / n as f64;
                tot += 1.0 / n as f64;
            }
            for (d, g) in direct.iter().zip(&st.frequencies) {
                assert!((d / tot - g).abs() < 1e-12);
            }
            assert!((st.frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn katai_constant_and_liouville() {
        let one = materialize(&SyntheticSpec::Constant { re: 1.0, im: 0.0 }.into(), 1, 1001).unwrap();
        let r = katai_bilinear_max(&one, 1000, 20).unwrap();
        assert_eq!(r.max_value, 1.0);
        assert_eq!(r.argmax, (2, 3));
        assert_eq!(r.table.len(), 28);
        let lam = sieve_liouville(1, 100_001).unwrap();
        assert_eq!(katai_bilinear_max(&lam, 100_000, 30).unwrap().max_value, 1.0);
        assert!(matches!(katai_bilinear_max(&one, 1000, 3), Err(MulabError::InsufficientPrimes { .. })));
        assert!(matches!(katai_bilinear_max(&one, 1000, 2), Err(MulabError::InsufficientPrimes { .. })));
    }
}
