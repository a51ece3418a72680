//! Cesàro and logarithmic averages over intervals and interval schemes.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MulabError, Result};
use crate::par;
use crate::seqgen::SequenceBlock;
use crate::sum::{ComplexSum, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvgKind {
    Cesaro,
    Log,
}

impl AvgKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AvgKind::Cesaro => "cesaro",
            AvgKind::Log => "log",
        }
    }

    #[inline]
    pub fn weight(self, n: u64) -> f64 {
        match self {
            AvgKind::Cesaro => 1.0,
            AvgKind::Log => 1.0 / n as f64,
        }
    }
}

impl std::str::FromStr for AvgKind {
    type Err = MulabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cesaro" => Ok(AvgKind::Cesaro),
            "log" => Ok(AvgKind::Log),
            _ => Err(MulabError::InvalidArgument(format!("unknown averaging kind `{s}`"))),
        }
    }
}

/// The integers `n` with `lo < n <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if hi <= lo {
            return Err(MulabError::InvalidScheme(format!("empty interval ({lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `[N] = {1, ..., N}`
    pub fn prefix(n: u64) -> Self {
        Self { lo: 0, hi: n.max(1) }
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn first(&self) -> u64 {
        self.lo + 1
    }

    pub fn last(&self) -> u64 {
        self.hi
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<u64> {
        self.first()..=self.last()
    }

    pub fn check_in(&self, block: &SequenceBlock) -> Result<()> {
        if !block.contains(self.first()) || !block.contains(self.last()) {
            return Err(MulabError::IntervalOutOfBlock {
                lo: self.lo,
                hi: self.hi,
                start: block.start(),
                end: block.end(),
            });
        }
        Ok(())
    }
}

/// `b_k = floor(base * ratio^k)`, `a_k = 0`, for `k < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixRule {
    pub base: f64,
    pub ratio: f64,
    pub count: usize,
}

/// A finite stand-in for a Følner sequence of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalScheme {
    intervals: Vec<Interval>,
    kind: AvgKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<PrefixRule>,
}

impl IntervalScheme {
    pub fn new(intervals: Vec<Interval>, kind: AvgKind) -> Result<Self> {
        if intervals.is_empty() {
            return Err(MulabError::InvalidScheme("no intervals".into()));
        }
        for iv in &intervals {
            Interval::new(iv.lo, iv.hi)?;
        }
        Ok(Self { intervals, kind, generator: None })
    }

    pub fn from_pairs(pairs: &[(u64, u64)], kind: AvgKind) -> Result<Self> {
        let ivs = pairs.iter().map(|&(a, b)| Interval::new(a, b)).collect::<Result<Vec<_>>>()?;
        Self::new(ivs, kind)
    }

    /// The single interval `[N]`.
    pub fn prefix(n: u64, kind: AvgKind) -> Self {
        Self { intervals: vec![Interval::prefix(n)], kind, generator: None }
    }

    /// Prefix intervals `[N]` for each listed `N`.
    pub fn prefixes(ns: &[u64], kind: AvgKind) -> Result<Self> {
        Self::new(ns.iter().map(|&n| Interval::prefix(n)).collect(), kind)
    }

    pub fn from_rule(rule: PrefixRule, kind: AvgKind) -> Result<Self> {
        if !(rule.base >= 1.0 && rule.ratio > 1.0 && rule.count > 0) {
            return Err(MulabError::InvalidScheme(
                "prefix rule needs base >= 1, ratio > 1, count > 0".into(),
            ));
        }
        let intervals = (0..rule.count)
            .map(|k| Interval::new(0, (rule.base * rule.ratio.powi(k as i32)).floor() as u64))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { intervals, kind, generator: Some(rule) })
    }

    /// Parse the config form: a JSON list of `[a, b]` pairs, or
    /// `{"rule": "prefix", "base": .., "ratio": .., "count": ..}`.
    pub fn from_json(text: &str, kind: AvgKind) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Pairs(Vec<[u64; 2]>),
            Rule { rule: String, base: f64, ratio: f64, count: usize },
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| MulabError::InvalidScheme(e.to_string()))?;
        match raw {
            Raw::Pairs(p) => Self::from_pairs(&p.iter().map(|&[a, b]| (a, b)).collect::<Vec<_>>(), kind),
            Raw::Rule { rule, base, ratio, count } => {
                if rule != "prefix" {
                    return Err(MulabError::InvalidScheme(format!("unknown rule `{rule}`")));
                }
                Self::from_rule(PrefixRule { base, ratio, count }, kind)
            }
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn kind(&self) -> AvgKind {
        self.kind
    }

    pub fn with_kind(&self, kind: AvgKind) -> Self {
        Self { kind, ..self.clone() }
    }

    pub fn last(&self) -> Interval {
        *self.intervals.last().expect("schemes are nonempty")
    }

    pub fn max_end(&self) -> u64 {
        self.intervals.iter().map(|i| i.hi).max().unwrap()
    }

    pub fn min_start(&self) -> u64 {
        self.intervals.iter().map(|i| i.first()).min().unwrap()
    }
}

fn harmonic_cache() -> &'static Mutex<HashMap<(u64, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `Σ_{n ∈ I} 1/n`, compensated and memoized per interval.
pub fn harmonic(iv: Interval) -> f64 {
    let key = (iv.lo, iv.hi);
    if let Some(&v) = harmonic_cache().lock().unwrap().get(&key) {
        return v;
    }
    let parts = par::map_chunks(iv.len() as usize, par::CHUNK, |r| {
        let base = iv.first();
        (r.start as u64..r.end as u64).map(|i| 1.0 / (base + i) as f64).collect::<KahanSum>()
    });
    let mut acc = KahanSum::new();
    for p in &parts {
        acc.merge(p);
    }
    let v = acc.value();
    harmonic_cache().lock().unwrap().insert(key, v);
    v
}

/// Total weight of an interval under the given averaging.
pub fn total_weight(iv: Interval, kind: AvgKind) -> f64 {
    match kind {
        AvgKind::Cesaro => iv.len() as f64,
        AvgKind::Log => harmonic(iv),
    }
}

/// Weighted sum of `f(n)` over `n ∈ I` (unnormalized).
pub fn weighted_sum<F>(iv: Interval, kind: AvgKind, f: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync + Send,
{
    let base = iv.first();
    let parts = par::map_chunks(iv.len() as usize, par::CHUNK, |r| {
        let mut acc = ComplexSum::new();
        for n in base + r.start as u64..base + r.end as u64 {
            acc.add(f(n) * kind.weight(n));
        }
        acc
    });
    crate::sum::merge_complex(&parts).value()
}

/// Means of `f` over every interval of the scheme.
///
/// Overlapping intervals share work: the union is cut at every endpoint and
/// each elementary piece is summed once.
pub fn scheme_means<F>(scheme: &IntervalScheme, f: F) -> Vec<Complex64>
where
    F: Fn(u64) -> Complex64 + Sync + Send,
{
    let kind = scheme.kind();
    let pieces = Pieces::new(scheme.intervals());
    let piece_sums: Vec<ComplexSum> = pieces
        .iter()
        .map(|p| {
            if !pieces.used(p) {
                return ComplexSum::new();
            }
            let iv = pieces.piece(p);
            let base = iv.first();
            let parts = par::map_chunks(iv.len() as usize, par::CHUNK, |r| {
                let mut acc = ComplexSum::new();
                for n in base + r.start as u64..base + r.end as u64 {
                    acc.add(f(n) * kind.weight(n));
                }
                acc
            });
            crate::sum::merge_complex(&parts)
        })
        .collect();
    scheme
        .intervals()
        .iter()
        .map(|iv| {
            let s = crate::sum::merge_complex(pieces.covering(*iv).map(|p| &piece_sums[p]));
            s.value() / total_weight(*iv, kind)
        })
        .collect()
}

/// The union of a family of intervals, cut at every endpoint.
pub(crate) struct Pieces {
    bounds: Vec<u64>,
    used: Vec<bool>,
}

impl Pieces {
    pub(crate) fn new(intervals: &[Interval]) -> Self {
        let mut bounds: Vec<u64> = intervals.iter().flat_map(|i| [i.lo, i.hi]).collect();
        bounds.sort_unstable();
        bounds.dedup();
        let mut used = vec![false; bounds.len().saturating_sub(1)];
        for iv in intervals {
            let a = bounds.binary_search(&iv.lo).unwrap();
            let b = bounds.binary_search(&iv.hi).unwrap();
            for u in &mut used[a..b] {
                *u = true;
            }
        }
        Self { bounds, used }
    }

    pub(crate) fn iter(&self) -> std::ops::Range<usize> {
        0..self.used.len()
    }

    pub(crate) fn used(&self, p: usize) -> bool {
        self.used[p]
    }

    pub(crate) fn piece(&self, p: usize) -> Interval {
        Interval { lo: self.bounds[p], hi: self.bounds[p + 1] }
    }

    pub(crate) fn covering(&self, iv: Interval) -> std::ops::Range<usize> {
        let a = self.bounds.binary_search(&iv.lo).unwrap();
        let b = self.bounds.binary_search(&iv.hi).unwrap();
        a..b
    }
}

/// Cesàro mean `(1/|A|) Σ_{n ∈ A} a(n)`.
pub fn cesaro_avg(block: &SequenceBlock, iv: Interval) -> Result<Complex64> {
    iv.check_in(block)?;
    if let Some(words) = block.sign_words() {
        // exact: sum = len - 2 * #(-1)
        let a = (iv.first() - block.start()) as usize;
        let b = (iv.last() - block.start()) as usize + 1;
        let neg = count_ones(words, a, b);
        let sum = iv.len() as i64 - 2 * neg as i64;
        return Ok(Complex64::new(sum as f64 / iv.len() as f64, 0.0));
    }
    Ok(weighted_sum(iv, AvgKind::Cesaro, |n| block.get(n)) / iv.len() as f64)
}

/// Logarithmic mean `(Σ a(n)/n) / (Σ 1/n)`.
pub fn log_avg(block: &SequenceBlock, iv: Interval) -> Result<Complex64> {
    iv.check_in(block)?;
    Ok(weighted_sum(iv, AvgKind::Log, |n| block.get(n)) / harmonic(iv))
}

pub fn average(block: &SequenceBlock, iv: Interval, kind: AvgKind) -> Result<Complex64> {
    match kind {
        AvgKind::Cesaro => cesaro_avg(block, iv),
        AvgKind::Log => log_avg(block, iv),
    }
}

/// Set bits among bit positions `[a, b)`.
pub(crate) fn count_ones(words: &[u64], a: usize, b: usize) -> u64 {
    if a >= b {
        return 0;
    }
    let (wa, wb) = (a / 64, (b - 1) / 64);
    let lo_mask = !0u64 << (a % 64);
    let hi_mask = if b % 64 == 0 { !0u64 } else { (1u64 << (b % 64)) - 1 };
    if wa == wb {
        return (words[wa] & lo_mask & hi_mask).count_ones() as u64;
    }
    let mut c = (words[wa] & lo_mask).count_ones() as u64 + (words[wb] & hi_mask).count_ones() as u64;
    c += words[wa + 1..wb].iter().map(|w| w.count_ones() as u64).sum::<u64>();
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FolnerReport {
    pub valid: bool,
    /// Index of the first interval at which the check breaks.
    pub witness: Option<usize>,
    pub final_ratio: f64,
    pub threshold: f64,
}

pub const DEFAULT_FOLNER_THRESHOLD: f64 = 10.0;

/// Finite-scale Følner diagnostic.
///
/// Cesàro: lengths strictly increase and last/first length >= threshold.
/// Log: `b_k / max(a_k, 1)` strictly increases and its final value >= threshold.
/// The witness is the index `k` such that interval `k + 1` fails to grow
/// past interval `k`, or the last index when only the ratio test fails.
pub fn folner_check(scheme: &IntervalScheme, threshold: f64) -> FolnerReport {
    let ivs = scheme.intervals();
    let measure: Vec<f64> = match scheme.kind() {
        AvgKind::Cesaro => ivs.iter().map(|i| i.len() as f64).collect(),
        AvgKind::Log => ivs.iter().map(|i| i.hi as f64 / i.lo.max(1) as f64).collect(),
    };
    let final_ratio = match scheme.kind() {
        AvgKind::Cesaro => measure[measure.len() - 1] / measure[0],
        AvgKind::Log => measure[measure.len() - 1],
    };
    let witness = measure.windows(2).position(|w| w[1] <= w[0]);
    let (valid, witness) = match witness {
        Some(k) => (false, Some(k)),
        None if final_ratio < threshold => (false, Some(ivs.len() - 1)),
        None => (true, None),
    };
    FolnerReport { valid, witness, final_ratio, threshold }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub intervals: Vec<Interval>,
    pub kind: AvgKind,
    pub means: Vec<Complex64>,
    pub extrapolated: Complex64,
    /// Largest absolute difference between consecutive interval means.
    pub stability_defect: f64,
}

impl MeanReport {
    pub fn from_means(scheme: &IntervalScheme, means: Vec<Complex64>) -> Self {
        let stability_defect = means.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
        Self {
            intervals: scheme.intervals().to_vec(),
            kind: scheme.kind(),
            extrapolated: *means.last().unwrap(),
            means,
            stability_defect,
        }
    }
}

/// Per-interval means of the block along the scheme, plus their spread.
pub fn mean_stability(block: &SequenceBlock, scheme: &IntervalScheme) -> Result<MeanReport> {
    for iv in scheme.intervals() {
        iv.check_in(block)?;
    }
    let means = match scheme.kind() {
        AvgKind::Cesaro if block.is_sign() => scheme
            .intervals()
            .iter()
            .map(|iv| cesaro_avg(block, *iv))
            .collect::<Result<Vec<_>>>()?,
        _ => scheme_means(scheme, |n| block.get(n)),
    };
    Ok(MeanReport::from_means(scheme, means))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{materialize, SyntheticSpec};

    fn constant(n: u64) -> SequenceBlock {
        materialize(&SyntheticSpec::Constant { re: 1.0, im: 0.0 }.into(), 1, n + 1).unwrap()
    }

    fn alternating(n: u64) -> SequenceBlock {
        materialize(&SyntheticSpec::Alternating.into(), 1, n + 1).unwrap()
    }

    #[test]
    fn constant_and_alternating() {
        let c = constant(100);
        assert_eq!(cesaro_avg(&c, Interval::prefix(100)).unwrap(), Complex64::new(1.0, 0.0));
        assert!((log_avg(&c, Interval::prefix(100)).unwrap() - 1.0).norm() < 1e-15);
        let a = alternating(100);
        assert_eq!(cesaro_avg(&a, Interval::prefix(100)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn out_of_block() {
        let c = constant(10);
        assert!(matches!(cesaro_avg(&c, Interval::prefix(11)), Err(MulabError::IntervalOutOfBlock { .. })));
        assert!(matches!(log_avg(&c, Interval { lo: 3, hi: 12 }), Err(MulabError::IntervalOutOfBlock { .. })));
    }

    #[test]
    fn popcount_path_matches_generic() {
        let b = materialize(&SyntheticSpec::Random { seed: 5 }.into(), 1, 5000).unwrap();
        for (lo, hi) in [(0, 4999), (63, 64), (64, 200), (100, 131), (7, 4000)] {
            let iv = Interval::new(lo, hi).unwrap();
            let fast = cesaro_avg(&b, iv).unwrap();
            let slow = iv.iter().map(|n| b.get(n)).sum::<Complex64>() / iv.len() as f64;
            assert!((fast - slow).norm() < 1e-15, "{lo} {hi}");
        }
    }

    #[test]
    fn log_average_of_half_indicator() {
        // direct summation oracle
        let n = 1_000_000u64;
        let vals: Vec<Complex64> = (1..=n).map(|k| Complex64::new(if k <= n / 2 { 1.0 } else { 0.0 }, 0.0)).collect();
        let b = SequenceBlock::from_complex(1, vals);
        let got = log_avg(&b, Interval::prefix(n)).unwrap().re;
        let num: f64 = (1..=n / 2).map(|k| 1.0 / k as f64).sum();
        let den: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        assert!((got - num / den).abs() < 1e-12);
        assert!((got - (1.0 - 2f64.ln() / (n as f64).ln())).abs() < 0.01);
    }

    #[test]
    fn log_average_of_alternating_is_small() {
        let n = 1_000_000;
        let a = alternating(n);
        let v = log_avg(&a, Interval::prefix(n)).unwrap();
        // |Σ (-1)^k / k| <= 1 over harmonic mass ~ 14.4
        assert!(v.norm() <= 0.001 || v.norm() <= 1.0 / harmonic(Interval::prefix(n)));
        assert!((v.re - (-(2f64.ln())) / harmonic(Interval::prefix(n))).abs() < 1e-6);
    }

    #[test]
    fn folner_examples() {
        let pref = IntervalScheme::prefixes(&[10, 100, 1000, 10_000, 100_000, 1_000_000], AvgKind::Cesaro).unwrap();
        assert!(folner_check(&pref, DEFAULT_FOLNER_THRESHOLD).valid);
        let windows = IntervalScheme::from_pairs(&[(0, 100), (1, 101), (2, 102)], AvgKind::Cesaro).unwrap();
        let r = folner_check(&windows, DEFAULT_FOLNER_THRESHOLD);
        assert!(!r.valid);
        assert_eq!(r.witness, Some(0));
        let sq = IntervalScheme::from_pairs(&[(10, 100), (100, 10_000), (1000, 1_000_000)], AvgKind::Log).unwrap();
        assert!(folner_check(&sq, DEFAULT_FOLNER_THRESHOLD).valid);
        let short = IntervalScheme::prefixes(&[10, 20], AvgKind::Cesaro).unwrap();
        let r = folner_check(&short, DEFAULT_FOLNER_THRESHOLD);
        assert_eq!((r.valid, r.witness), (false, Some(1)));
    }

    #[test]
    fn scheme_json_forms() {
        let s = IntervalScheme::from_json("[[0,10],[5,100]]", AvgKind::Log).unwrap();
        assert_eq!(s.intervals()[1], Interval { lo: 5, hi: 100 });
        let r = IntervalScheme::from_json(r#"{"rule":"prefix","base":10,"ratio":10,"count":3}"#, AvgKind::Cesaro)
            .unwrap();
        let ends: Vec<u64> = r.intervals().iter().map(|i| i.hi).collect();
        assert_eq!(ends, vec![10, 100, 1000]);
        assert!(IntervalScheme::from_json("[[5,5]]", AvgKind::Cesaro).is_err());
        assert!(IntervalScheme::from_json("[]", AvgKind::Cesaro).is_err());
    }

    #[test]
    fn stability_reports() {
        let c = constant(10_000);
        let s = IntervalScheme::prefixes(&[10, 100, 1000, 10_000], AvgKind::Cesaro).unwrap();
        assert_eq!(mean_stability(&c, &s).unwrap().stability_defect, 0.0);
        let a = alternating(10_001);
        let s = IntervalScheme::prefixes(&[11, 101, 1001, 10_001], AvgKind::Cesaro).unwrap();
        let r = mean_stability(&a, &s).unwrap();
        assert!(r.stability_defect <= 2.0 / 11.0);
        assert_eq!(r.extrapolated, Complex64::new(-1.0 / 10_001.0, 0.0));
    }

    #[test]
    fn scheme_means_match_direct_over_overlaps() {
        let b = materialize(&SyntheticSpec::Random { seed: 9 }.into(), 1, 3001).unwrap();
        let s = IntervalScheme::from_pairs(&[(0, 1000), (500, 3000), (200, 700)], AvgKind::Log).unwrap();
        let got = scheme_means(&s, |n| b.get(n));
        for (iv, g) in s.intervals().iter().zip(&got) {
            let num: Complex64 = iv.iter().map(|n| b.get(n) / n as f64).sum();
            let den: f64 = iv.iter().map(|n| 1.0 / n as f64).sum();
            assert!((num / den - g).norm() < 1e-12);
        }
        let p = Pieces::new(s.intervals());
        assert_eq!(p.covering(s.intervals()[2]).len(), 2);
        assert_eq!(p.piece(0).lo, 0);
    }
}
