//! Finite-scale Furstenberg correspondence: empirical cylinder measures of a
//! sign sequence, their shift-invariance defect, a one-sided ergodicity
//! diagnostic and the distance to the Bernoulli measure.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::averaging::{AvgKind, Interval, IntervalScheme, Pieces};
use crate::correlations::{check_sign_block, word_counts, PatternStats};
use crate::error::{MulabError, Result};
use crate::par;
use crate::scalar::{Accumulate, Scalar};
use crate::seqgen::SequenceBlock;
use crate::with_dense;

/// Identifies the block a measure was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceFingerprint {
    pub start: u64,
    pub len: u64,
    pub digest: u64,
}

impl SourceFingerprint {
    pub fn of(block: &SequenceBlock) -> Self {
        let mut h = DefaultHasher::new();
        block.storage().tag().hash(&mut h);
        block.payload_bytes().hash(&mut h);
        Self { start: block.start(), len: block.len() as u64, digest: h.finish() }
    }
}

/// Length-`ell` cylinder frequencies `μ_N([w])`, indexed MSB-first with bit 1
/// standing for `-`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    pub ell: usize,
    pub kind: AvgKind,
    pub interval: Interval,
    #[serde(serialize_with = "serialize_patterns")]
    pub frequencies: Vec<f64>,
    pub source: SourceFingerprint,
}

fn serialize_patterns<S: Serializer>(freqs: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    let ell = freqs.len().trailing_zeros() as usize;
    // index order is lexicographic because '+' < '-' in ASCII
    let mut map = ser.serialize_map(Some(freqs.len()))?;
    for (i, f) in freqs.iter().enumerate() {
        map.serialize_entry(&PatternStats::pattern_string(ell, i), f)?;
    }
    map.end()
}

impl EmpiricalMeasure {
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

/// Frequencies of the words `(a(n), ..., a(n+ell-1))` for `n ∈ iv`.
pub fn empirical_measure(block: &SequenceBlock, iv: Interval, ell: usize, kind: AvgKind) -> Result<EmpiricalMeasure> {
    check_sign_block(block, ell)?;
    block.require(iv.first(), iv.last() + ell as u64 - 1)?;
    let counts = word_counts(block, ell, iv, kind);
    let stats = crate::correlations::stats_from_counts(ell, kind, iv, &counts);
    Ok(EmpiricalMeasure {
        ell,
        kind,
        interval: iv,
        frequencies: stats.frequencies,
        source: SourceFingerprint::of(block),
    })
}

/// Largest marginal mismatch between a length-`ℓ` measure and the left and
/// right marginals of a length-`ℓ+1` measure from the same source.
pub fn invariance_defect(short: &EmpiricalMeasure, long: &EmpiricalMeasure) -> Result<f64> {
    if long.ell != short.ell + 1 {
        return Err(MulabError::MismatchedSources(format!("lengths {} and {}", short.ell, long.ell)));
    }
    if short.source != long.source || short.interval != long.interval || short.kind != long.kind {
        return Err(MulabError::MismatchedSources("block, interval or kind differ".into()));
    }
    let ell = short.ell;
    let mut defect = 0f64;
    for (w, &f) in short.frequencies.iter().enumerate() {
        let left = long.frequencies[w] + long.frequencies[(1 << ell) | w];
        let right = long.frequencies[w << 1] + long.frequencies[(w << 1) | 1];
        defect = defect.max((f - left).abs()).max((f - right).abs());
    }
    Ok(defect)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliDivergence {
    pub total_variation: f64,
    pub max_pattern_gap: f64,
}

/// Distance from the uniform measure on `{−1,+1}^ℓ`.
pub fn bernoulli_divergence(measure: &EmpiricalMeasure) -> BernoulliDivergence {
    let p = 0.5f64.powi(measure.ell as i32);
    let (mut tv, mut gap) = (0.0, 0f64);
    for &f in &measure.frequencies {
        tv += (f - p).abs();
        gap = gap.max((f - p).abs());
    }
    BernoulliDivergence { total_variation: tv / 2.0, max_pattern_gap: gap }
}

/// One factor `a(m+shift)` or its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Factor {
    pub shift: u64,
    pub conjugate: bool,
}

/// `a_1(m+h_1) ⋯ a_s(m+h_s)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ShiftProduct(pub Vec<Factor>);

impl ShiftProduct {
    /// Value at offset `i` of `v`.
    #[inline]
    fn eval<S: Scalar>(&self, v: &[S], i: usize) -> S::Wide {
        let mut acc = S::one().widen();
        for f in &self.0 {
            let x = v[i + f.shift as usize].widen();
            acc = acc * if f.conjugate { S::wide_conj(x) } else { x };
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    pub b: ShiftProduct,
    pub c: ShiftProduct,
    /// `E_{n≤n_cap} E_{m∈I} b(m+n) c(m)`.
    pub lhs: Complex64,
    /// `E_{m∈I} b(m) · E_{m∈I} c(m)`.
    pub rhs: Complex64,
    pub deviation: f64,
    pub random: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderDeviation {
    pub interval: Interval,
    pub max_deviation: f64,
    pub argmax: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub kind: AvgKind,
    pub term_budget: usize,
    pub shift_cap: u64,
    pub n_cap: u64,
    pub seed: u64,
    /// Every pair evaluated on the last interval of the scheme.
    pub pairs: Vec<PairResult>,
    pub max_deviation: f64,
    pub ladder: Vec<LadderDeviation>,
    /// A large deviation refutes ergodicity; a small one certifies nothing.
    pub one_sided: bool,
}

pub const DEFAULT_SHIFT_CAP: u64 = 5;
pub const RANDOM_PAIRS: usize = 32;
const ERGODICITY_WORK_BUDGET: f64 = 6e10;

/// Products with `s ∈ {1, 2}` factors, shifts in `0..=shift_cap`, factors
/// sorted (products commute) and conjugates only for complex data.
pub fn product_family(max_terms: usize, shift_cap: u64, complex: bool) -> Vec<ShiftProduct> {
    let conj: &[bool] = if complex { &[false, true] } else { &[false] };
    let factors: Vec<Factor> = (0..=shift_cap)
        .flat_map(|shift| conj.iter().map(move |&conjugate| Factor { shift, conjugate }))
        .collect();
    let mut out: Vec<ShiftProduct> = Vec::new();
    if max_terms >= 1 {
        out.extend(factors.iter().map(|&f| ShiftProduct(vec![f])));
    }
    if max_terms >= 2 {
        for i in 0..factors.len() {
            for j in i..factors.len() {
                out.push(ShiftProduct(vec![factors[i], factors[j]]));
            }
        }
    }
    out
}

fn random_product(rng: &mut ChaCha8Rng, term_budget: usize, shift_cap: u64, complex: bool) -> ShiftProduct {
    let s = rng.random_range(1..=term_budget);
    let mut f: Vec<Factor> = (0..s)
        .map(|_| Factor { shift: rng.random_range(0..=shift_cap), conjugate: complex && rng.random_bool(0.5) })
        .collect();
    f.sort();
    ShiftProduct(f)
}

/// Finite form of the ergodicity identity: for every pair `(b, c)` of the
/// family compare `E_{n≤n_cap} E_{m∈I} b(m+n)c(m)` with
/// `E_{m∈I} b(m) · E_{m∈I} c(m)` on every interval of the scheme.
pub fn ergodicity_diagnostic(
    block: &SequenceBlock,
    scheme: &IntervalScheme,
    term_budget: usize,
    shift_cap: u64,
    n_cap: u64,
    seed: u64,
) -> Result<ErgodicityReport> {
    if term_budget == 0 || n_cap == 0 {
        return Err(MulabError::InvalidArgument("term_budget and n_cap must be at least 1".into()));
    }
    let complex = block.storage() == crate::seqgen::Storage::ComplexPair;
    let mut products = product_family(term_budget.min(2), shift_cap, complex);
    let family = products.len();
    let mut pairs: Vec<(usize, usize, bool)> =
        (0..family).flat_map(|i| (0..family).map(move |j| (i, j, false))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_PAIRS {
        let b = random_product(&mut rng, term_budget, shift_cap, complex);
        let c = random_product(&mut rng, term_budget, shift_cap, complex);
        products.push(b);
        products.push(c);
        pairs.push((products.len() - 2, products.len() - 1, true));
    }

    let lo = scheme.min_start();
    let hi = scheme.max_end();
    let span = hi - lo + 1;
    let work = pairs.len() as f64 * span as f64 * (term_budget as f64 + 2.0);
    if work > ERGODICITY_WORK_BUDGET {
        return Err(MulabError::CostGuardExceeded {
            what: format!("{} pairs over {span} indices ({work:.3e} > {ERGODICITY_WORK_BUDGET:.3e})", pairs.len()),
        });
    }
    let reach = hi + n_cap + shift_cap;
    block.require(lo, reach)?;
    let dense = block.dense(lo, reach + 1)?;
    let pieces = Pieces::new(scheme.intervals());
    let kind = scheme.kind();

    let per_pair: Vec<Vec<[Complex64; 2]>> = with_dense!(&dense, v => {
        pair_sums(v, &products, &pairs, &pieces, scheme, lo, n_cap)
    });

    let mut results = Vec::new();
    let mut ladder = Vec::new();
    for (k, _) in scheme.intervals().iter().enumerate() {
        let mut best = (0f64, 0usize);
        for (p, sums) in per_pair.iter().enumerate() {
            let [lhs, rhs] = [sums[k][0], sums[k][1]];
            let dev = (lhs - rhs).norm();
            if dev > best.0 {
                best = (dev, p);
            }
            if k + 1 == scheme.intervals().len() {
                let (b, c, random) = pairs[p];
                results.push(PairResult {
                    b: products[b].clone(),
                    c: products[c].clone(),
                    lhs,
                    rhs,
                    deviation: dev,
                    random,
                });
            }
        }
        ladder.push(LadderDeviation { interval: scheme.intervals()[k], max_deviation: best.0, argmax: best.1 });
    }
    Ok(ErgodicityReport {
        kind,
        term_budget,
        shift_cap,
        n_cap,
        seed,
        pairs: results,
        max_deviation: ladder.last().map_or(0.0, |l| l.max_deviation),
        ladder,
        one_sided: true,
    })
}

/// Per pair and interval, `[lhs, rhs]`.
fn pair_sums<S: Accumulate>(
    v: &[S],
    products: &[ShiftProduct],
    pairs: &[(usize, usize, bool)],
    pieces: &Pieces,
    scheme: &IntervalScheme,
    lo: u64,
    n_cap: u64,
) -> Vec<Vec<[Complex64; 2]>>
where
    S::Wide: Send,
{
    let kind = scheme.kind();
    let span = (scheme.max_end() - lo + 1) as usize;
    let used: Vec<usize> = pieces.iter().filter(|&p| pieces.used(p)).collect();
    let piece_sum = |p: usize, f: &dyn Fn(usize) -> S::Wide| {
        let iv = pieces.piece(p);
        let mut acc = S::Acc::default();
        for n in iv.iter() {
            S::acc_add(&mut acc, kind, n, f((n - lo) as usize));
        }
        acc
    };
    let fold = |per_piece: &[S::Acc], iv: Interval| {
        let mut acc = S::Acc::default();
        for p in pieces.covering(iv) {
            if let Ok(k) = used.binary_search(&p) {
                S::acc_merge(&mut acc, &per_piece[k]);
            }
        }
        acc
    };

    let one = S::one().widen();
    let weight: Vec<S::Acc> = used.iter().map(|&p| piece_sum(p, &|_| one)).collect();
    // plain means of every product
    let means: Vec<Vec<S::Acc>> =
        par::map_indices(products.len(), |k| used.iter().map(|&p| piece_sum(p, &|i| products[k].eval(v, i))).collect());

    // group pairs by b so each window-sum array is built once
    let mut by_b: Vec<Vec<usize>> = vec![Vec::new(); products.len()];
    for (k, &(b, _, _)) in pairs.iter().enumerate() {
        by_b[b].push(k);
    }
    let jobs: Vec<usize> = (0..products.len()).filter(|&b| !by_b[b].is_empty()).collect();
    let cross: Vec<Vec<(usize, Vec<S::Acc>)>> = par::map_items(jobs, |b| {
        // window[i] = Σ_{n=1}^{n_cap} b(lo + i + n)
        let mut window = Vec::with_capacity(span);
        let mut w = S::Wide::default();
        for n in 1..=n_cap as usize {
            w = w + products[b].eval(v, n);
        }
        for i in 0..span {
            window.push(w);
            if i + 1 < span {
                w = w + products[b].eval(v, i + 1 + n_cap as usize) - products[b].eval(v, i + 1);
            }
        }
        by_b[b]
            .iter()
            .map(|&k| {
                let c = &products[pairs[k].1];
                (k, used.iter().map(|&p| piece_sum(p, &|i| c.eval(v, i) * window[i])).collect())
            })
            .collect()
    });

    let mut out = vec![Vec::new(); pairs.len()];
    for (k, sums) in cross.into_iter().flatten() {
        let (b, c, _) = pairs[k];
        out[k] = scheme
            .intervals()
            .iter()
            .map(|&iv| {
                let den = fold(&weight, iv);
                let lhs = S::acc_ratio(&fold(&sums, iv), &den, n_cap);
                let rhs = S::acc_ratio(&fold(&means[b], iv), &den, 1) * S::acc_ratio(&fold(&means[c], iv), &den, 1);
                [lhs, rhs]
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::cesaro_avg;
    use crate::seqgen::{materialize, sieve_liouville, SyntheticSpec};

    fn synth(spec: SyntheticSpec, end: u64) -> SequenceBlock {
        materialize(&spec.into(), 1, end).unwrap()
    }

    #[test]
    fn alternating_single_letters_are_balanced() {
        let b = synth(SyntheticSpec::Alternating, 200);
        let m = empirical_measure(&b, Interval::prefix(100), 1, AvgKind::Cesaro).unwrap();
        assert_eq!(m.frequencies, vec![0.5, 0.5]);
    }

    #[test]
    fn constant_is_a_point_mass() {
        let b = synth(SyntheticSpec::Constant { re: 1.0, im: 0.0 }, 200);
        for ell in 1..=4 {
            let m = empirical_measure(&b, Interval::prefix(100), ell, AvgKind::Log).unwrap();
            assert_eq!(m.frequencies[0], 1.0);
            assert!(m.frequencies[1..].iter().all(|&f| f == 0.0));
        }
        let m2 = empirical_measure(&b, Interval::prefix(100), 2, AvgKind::Cesaro).unwrap();
        let m3 = empirical_measure(&b, Interval::prefix(100), 3, AvgKind::Cesaro).unwrap();
        assert_eq!(invariance_defect(&m2, &m3).unwrap(), 0.0);
        assert_eq!(bernoulli_divergence(&m2).total_variation, 0.75);
    }

    #[test]
    fn single_letter_bias_is_the_mean() {
        let b = sieve_liouville(1, 100_010).unwrap();
        let iv = Interval::prefix(100_000);
        let m = empirical_measure(&b, iv, 1, AvgKind::Cesaro).unwrap();
        let mean = cesaro_avg(&b, iv).unwrap().re;
        assert!((m.frequencies[0] - m.frequencies[1] - mean).abs() < 1e-12);
    }

    #[test]
    fn defect_is_a_boundary_effect() {
        let b = sieve_liouville(1, 20_010).unwrap();
        let n = 20_000u64;
        for ell in 1..=5 {
            let s = empirical_measure(&b, Interval::prefix(n), ell, AvgKind::Cesaro).unwrap();
            let l = empirical_measure(&b, Interval::prefix(n), ell + 1, AvgKind::Cesaro).unwrap();
            assert!(invariance_defect(&s, &l).unwrap() <= (ell + 1) as f64 / n as f64);
        }
    }

    #[test]
    fn mismatched_sources_are_rejected() {
        let a = sieve_liouville(1, 1000).unwrap();
        let b = synth(SyntheticSpec::Alternating, 1000);
        let ma = empirical_measure(&a, Interval::prefix(500), 2, AvgKind::Cesaro).unwrap();
        let mb = empirical_measure(&b, Interval::prefix(500), 3, AvgKind::Cesaro).unwrap();
        let ma3 = empirical_measure(&a, Interval::prefix(500), 3, AvgKind::Cesaro).unwrap();
        assert!(matches!(invariance_defect(&ma, &mb), Err(MulabError::MismatchedSources(_))));
        assert!(matches!(invariance_defect(&ma, &ma), Err(MulabError::MismatchedSources(_))));
        assert!(invariance_defect(&ma, &ma3).is_ok());
    }

    #[test]
    fn json_keys_are_patterns() {
        let b = synth(SyntheticSpec::Alternating, 100);
        let m = empirical_measure(&b, Interval::prefix(50), 2, AvgKind::Cesaro).unwrap();
        let j = serde_json::to_string(&m).unwrap();
        let keys = j.find("\"++\"").unwrap() < j.find("\"+-\"").unwrap()
            && j.find("\"+-\"").unwrap() < j.find("\"-+\"").unwrap()
            && j.find("\"-+\"").unwrap() < j.find("\"--\"").unwrap();
        assert!(keys, "{j}");
        assert_eq!(m.frequency_of("+-"), Some(0.5));
    }

    #[test]
    fn family_sizes() {
        assert_eq!(product_family(2, 5, false).len(), 6 + 21);
        assert_eq!(product_family(2, 5, true).len(), 12 + 78);
        assert_eq!(product_family(1, 3, false).len(), 4);
    }

    #[test]
    fn constant_is_exactly_ergodic() {
        let b = synth(SyntheticSpec::Constant { re: 1.0, im: 0.0 }, 3000);
        for kind in [AvgKind::Cesaro, AvgKind::Log] {
            let scheme = IntervalScheme::prefixes(&[500, 2000], kind).unwrap();
            let r = ergodicity_diagnostic(&b, &scheme, 4, DEFAULT_SHIFT_CAP, 50, 7).unwrap();
            assert_eq!(r.max_deviation, 0.0);
            assert_eq!(r.pairs.len(), 27 * 27 + RANDOM_PAIRS);
        }
    }

    #[test]
    fn rotation_by_two_is_ergodic() {
        let b = synth(SyntheticSpec::Alternating, 21_000);
        let scheme = IntervalScheme::prefix(20_000, AvgKind::Cesaro);
        let r = ergodicity_diagnostic(&b, &scheme, 3, DEFAULT_SHIFT_CAP, 100, 1).unwrap();
        assert!(r.max_deviation < 1e-12, "{}", r.max_deviation);
    }

    /// Literal double sum on a small window.
    #[test]
    fn matches_brute_force() {
        let b = sieve_liouville(1, 600).unwrap();
        let scheme = IntervalScheme::from_pairs(&[(10, 300), (0, 500)], AvgKind::Log).unwrap();
        let r = ergodicity_diagnostic(&b, &scheme, 3, 2, 7, 11).unwrap();
        let a = |n: u64| b.get(n).re;
        let eval = |p: &ShiftProduct, m: u64| p.0.iter().map(|f| a(m + f.shift)).product::<f64>();
        for pr in r.pairs.iter().step_by(5) {
            let (mut lhs, mut mb, mut mc, mut w) = (0.0, 0.0, 0.0, 0.0);
            for m in 1..=500u64 {
                let wm = 1.0 / m as f64;
                w += wm;
                mb += wm * eval(&pr.b, m);
                mc += wm * eval(&pr.c, m);
                lhs += wm * eval(&pr.c, m) * (1..=7).map(|n| eval(&pr.b, m + n)).sum::<f64>() / 7.0;
            }
            assert!((pr.lhs.re - lhs / w).abs() < 1e-12);
            assert!((pr.rhs.re - mb * mc / (w * w)).abs() < 1e-12);
        }
    }

    #[test]
    fn block_signs_refute_ergodicity() {
        let b = synth(SyntheticSpec::BlockSignA, 101_000);
        let scheme = IntervalScheme::prefix(100_000, AvgKind::Cesaro);
        let r = ergodicity_diagnostic(&b, &scheme, 2, 1, 30, 0).unwrap();
        let aa = r
            .pairs
            .iter()
            .find(|p| p.b.0 == [Factor { shift: 0, conjugate: false }] && p.c == p.b)
            .unwrap();
        assert!(aa.deviation > 0.5, "{}", aa.deviation);
    }

    #[test]
    fn complex_data_gets_conjugates() {
        let b = synth(SyntheticSpec::PolyPhase { coeffs: vec![0.0, 0.3] }, 400);
        let scheme = IntervalScheme::prefix(300, AvgKind::Cesaro);
        let r = ergodicity_diagnostic(&b, &scheme, 2, 1, 5, 0).unwrap();
        assert_eq!(r.pairs.len(), (4 + 10) * (4 + 10) + RANDOM_PAIRS);
        // b = a, c = ā: E_n e(0.3 n) on the left, |E a|² on the right
        let p = r
            .pairs
            .iter()
            .find(|p| {
                p.b.0 == [Factor { shift: 0, conjugate: false }] && p.c.0 == [Factor { shift: 0, conjugate: true }]
            })
            .unwrap();
        let expect: Complex64 =
            (1..=5).map(|n| Complex64::from_polar(1.0, std::f64::consts::TAU * 0.3 * n as f64)).sum::<Complex64>() / 5.0;
        assert!((p.lhs - expect).norm() < 1e-12);
    }
}
