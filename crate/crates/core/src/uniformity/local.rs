//! Finite-scale local seminorms: the box average `U^s(I)` truncated to
//! `[H]^s`, and the star seminorm `E_{n∈I_N} ‖S_n a‖_{U^s[H]}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gowers::{gowers_interval_values, root_clamped, GowersMethod, GowersOptions, DEFAULT_WORK_BUDGET};
use crate::averaging::{total_weight, AvgKind, Interval, IntervalScheme, Pieces};
use crate::error::{MulabError, Result};
use crate::par;
use crate::scalar::{Accumulate, Scalar};
use crate::seqgen::SequenceBlock;
use crate::sum::KahanSum;
use crate::with_dense;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    #[serde(rename = "H")]
    pub h: u64,
    pub interval: Interval,
    /// Real part of the `2^s`-th power average.
    pub raw: f64,
    pub raw_imag: f64,
    pub value: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSeminormResult {
    pub s: u32,
    #[serde(rename = "H")]
    pub h_box: u64,
    pub kind: AvgKind,
    pub interval: Interval,
    pub raw: f64,
    pub value: f64,
    pub clamped: bool,
    /// Every (H, interval) pair of the ladder, H-major.
    pub grid: Vec<LadderEntry>,
}

/// `{H/100, H/10, H}`, dropping zeros and duplicates.
pub fn h_ladder(h: u64) -> Vec<u64> {
    let mut l: Vec<u64> = [h / 100, h / 10, h].into_iter().filter(|&x| x > 0).collect();
    l.dedup();
    l
}

/// `E_{h∈[H]^s} E_{n∈I} Π_ε C^{|ε|} a(n + ε·h)` for every interval of the
/// scheme and every `H` of [`h_ladder`]; the headline value is the largest
/// `H` on the last interval.
pub fn local_seminorm(block: &SequenceBlock, scheme: &IntervalScheme, s: u32, h_box: u64) -> Result<LocalSeminormResult> {
    local_seminorm_ladder(block, scheme, s, &h_ladder(h_box))
}

pub fn local_seminorm_ladder(
    block: &SequenceBlock,
    scheme: &IntervalScheme,
    s: u32,
    ladder: &[u64],
) -> Result<LocalSeminormResult> {
    if s == 0 || ladder.is_empty() || ladder.contains(&0) {
        return Err(MulabError::InvalidArgument("need s >= 1 and a nonempty ladder of positive H".into()));
    }
    let mut ladder = ladder.to_vec();
    ladder.sort_unstable();
    ladder.dedup();
    let h_max = *ladder.last().unwrap();
    let lo = scheme.min_start();
    let hi = scheme.max_end() + u64::from(s) * h_max;
    block.require(lo, hi)?;
    let span = (hi - lo + 1) as f64;
    let work = (h_max as f64).powi(s as i32 - 1) * span * f64::from(1u32 << (s - 1));
    if work > DEFAULT_WORK_BUDGET {
        return Err(MulabError::CostGuardExceeded {
            what: format!("local seminorm work {work:.3e} for s = {s}, H = {h_max}"),
        });
    }
    let dense = block.dense(lo, hi + 1)?;
    let sums = with_dense!(&dense, v => box_sums(v, lo, s, &ladder, scheme));

    let kind = scheme.kind();
    let mut grid = Vec::new();
    for (li, &h) in ladder.iter().enumerate() {
        for (ii, iv) in scheme.intervals().iter().enumerate() {
            let norm = (h as f64).powi(s as i32) * total_weight(*iv, kind);
            let raw = sums[li][ii] / norm;
            let (value, clamped) = root_clamped(raw.re, s);
            grid.push(LadderEntry { h, interval: *iv, raw: raw.re, raw_imag: raw.im, value, clamped });
        }
    }
    let last = grid.last().unwrap().clone();
    Ok(LocalSeminormResult {
        s,
        h_box: h_max,
        kind,
        interval: last.interval,
        raw: last.raw,
        value: last.value,
        clamped: last.clamped,
        grid,
    })
}

/// Unnormalized sums `Σ_{h∈[H]^s} Σ_{n∈I} w(n) Π ...`, indexed `[ladder][interval]`.
///
/// With `D(n) = Π_{ε'∈[[s-1]]} C^{|ε'|} a(n + ε'·h')`, the product over the
/// full cube is `D(n) conj(D(n + h_s))`, so the sum over `h_s ∈ [H]` is
/// `D(n) conj(W(n))` with `W` read off prefix sums of `D`.
fn box_sums<S: Accumulate>(
    v: &[S],
    lo: u64,
    s: u32,
    ladder: &[u64],
    scheme: &IntervalScheme,
) -> Vec<Vec<Complex64>> {
    let kind = scheme.kind();
    let pieces = Pieces::new(scheme.intervals());
    let used: Vec<usize> = pieces.iter().filter(|&p| pieces.used(p)).collect();
    let h_max = *ladder.last().unwrap() as usize;
    let outer = s as usize - 1;
    let n_items = h_max.pow(outer as u32);
    let d_len = v.len() - outer * h_max;

    let items = par::map_indices(n_items, |item| {
        let mut hp = vec![0usize; outer];
        let mut r = item;
        for hj in hp.iter_mut() {
            *hj = r % h_max + 1;
            r /= h_max;
        }
        let reach = hp.iter().copied().max().unwrap_or(0) as u64;
        let mut d = vec![S::one(); d_len];
        for eps in 0..1usize << outer {
            let off: usize = (0..outer).filter(|j| eps >> j & 1 == 1).map(|j| hp[j]).sum();
            let c = eps.count_ones() % 2 == 1;
            for (x, &y) in d.iter_mut().zip(&v[off..off + d_len]) {
                *x = x.mul(y.conj_if(c));
            }
        }
        let mut prefix = Vec::with_capacity(d_len + 1);
        let mut run = S::Wide::default();
        prefix.push(run);
        for x in &d {
            run = run + x.widen();
            prefix.push(run);
        }
        ladder
            .iter()
            .map(|&h| {
                let h = h as usize;
                if (h as u64) < reach {
                    return None;
                }
                Some(
                    used.iter()
                        .map(|&p| {
                            let iv = pieces.piece(p);
                            let mut acc = S::Acc::default();
                            for n in iv.iter() {
                                let i = (n - lo) as usize;
                                let w = prefix[i + h + 1] - prefix[i + 1];
                                S::acc_add(&mut acc, kind, n, d[i].widen() * S::wide_conj(w));
                            }
                            acc
                        })
                        .collect::<Vec<_>>(),
                )
            })
            .collect::<Vec<_>>()
    });

    ladder
        .iter()
        .enumerate()
        .map(|(li, _)| {
            let mut per_piece = vec![S::Acc::default(); used.len()];
            for item in &items {
                if let Some(accs) = &item[li] {
                    for (t, a) in per_piece.iter_mut().zip(accs) {
                        S::acc_merge(t, a);
                    }
                }
            }
            scheme
                .intervals()
                .iter()
                .map(|iv| {
                    let mut total = S::Acc::default();
                    for p in pieces.covering(*iv) {
                        let k = used.binary_search(&p).expect("covering pieces are used");
                        S::acc_merge(&mut total, &per_piece[k]);
                    }
                    S::acc_value(&total)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarSeminormResult {
    pub s: u32,
    #[serde(rename = "H")]
    pub h: u64,
    pub kind: AvgKind,
    pub intervals: Vec<Interval>,
    pub means: Vec<f64>,
    /// Mean over the last interval.
    pub value: f64,
}

/// Windows restart their sliding state at this spacing for complex data.
const RESYNC: usize = 1024;

/// `E_{n∈I} ‖S_n a‖_{U^s[H]}` with `(S_n a)(m) = a(n + m)`, `m ∈ [H]`,
/// weighted by `kind`, for every interval of the scheme.
pub fn local_star_seminorm(
    block: &SequenceBlock,
    scheme: &IntervalScheme,
    s: u32,
    h: u64,
    kind: AvgKind,
) -> Result<StarSeminormResult> {
    if s == 0 || h == 0 {
        return Err(MulabError::InvalidArgument("need s >= 1 and H >= 1".into()));
    }
    let scheme = scheme.with_kind(kind);
    let lo = scheme.min_start();
    let hi = scheme.max_end() + h;
    block.require(lo, hi)?;
    let span = (hi - lo + 1) as f64;
    let hf = h as f64;
    let work = match s {
        1 => span,
        2 => span * hf,
        _ => span * (2.0 * hf).powi(s as i32),
    };
    if work > DEFAULT_WORK_BUDGET {
        return Err(MulabError::CostGuardExceeded { what: format!("star seminorm work {work:.3e} for s = {s}, H = {h}") });
    }
    let dense = block.dense(lo, hi + 1)?;
    let pieces = Pieces::new(scheme.intervals());
    let piece_sums: Vec<KahanSum> = pieces
        .iter()
        .map(|p| {
            if !pieces.used(p) {
                return Ok(KahanSum::new());
            }
            let iv = pieces.piece(p);
            let base = (iv.first() - lo) as usize;
            let parts = with_dense!(&dense, v => window_norm_sums(v, base, iv, h as usize, s, kind))?;
            let mut acc = KahanSum::new();
            for part in &parts {
                acc.merge(part);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let means: Vec<f64> = scheme
        .intervals()
        .iter()
        .map(|iv| {
            let mut acc = KahanSum::new();
            for p in pieces.covering(*iv) {
                acc.merge(&piece_sums[p]);
            }
            acc.value() / total_weight(*iv, kind)
        })
        .collect();
    Ok(StarSeminormResult {
        s,
        h,
        kind,
        intervals: scheme.intervals().to_vec(),
        value: *means.last().unwrap(),
        means,
    })
}

/// `‖1_[H]‖^4_{U^2(Z_2H)}` in closed form.
fn indicator_u2_power(h: usize) -> f64 {
    let mut acc = (h as f64).powi(2);
    for l in 1..h {
        acc += 2.0 * ((h - l) as f64).powi(2);
    }
    acc / (2.0 * h as f64).powi(3)
}

/// Weighted sums of the window norms over `iv`, one per chunk.
/// `v[base + i + m]` is `a(n + m)` for `n = iv.first() + i`.
fn window_norm_sums<S: Scalar>(
    v: &[S],
    base: usize,
    iv: Interval,
    h: usize,
    s: u32,
    kind: AvgKind,
) -> Result<Vec<KahanSum>> {
    let len = iv.len() as usize;
    match s {
        1 => {
            let mut prefix = Vec::with_capacity(len + h + 1);
            let mut run = S::Wide::default();
            prefix.push(run);
            for x in &v[base..base + len + h] {
                run = run + x.widen();
                prefix.push(run);
            }
            Ok(par::map_chunks(len, par::CHUNK, |r| {
                let mut acc = KahanSum::new();
                for i in r {
                    let sum = S::wide_to_c64(prefix[i + 1 + h] - prefix[i + 1]);
                    acc.add(sum.norm() / h as f64 * kind.weight(iv.first() + i as u64));
                }
                acc
            }))
        }
        2 => {
            let ind = indicator_u2_power(h).powf(0.25);
            let scale = 1.0 / (2.0 * h as f64).powi(3);
            let resync = if std::any::TypeId::of::<S>() == std::any::TypeId::of::<i8>() { usize::MAX } else { RESYNC };
            Ok(par::map_chunks(len, par::CHUNK, |r| {
                let mut acc = KahanSum::new();
                let mut c = vec![S::Wide::default(); h];
                let mut since = usize::MAX;
                for i in r {
                    // window values a(n+1..=n+H) start at v[w0]
                    let w0 = base + i + 1;
                    if since >= resync {
                        for (l, cl) in c.iter_mut().enumerate() {
                            let mut t = S::Wide::default();
                            for j in 0..h - l {
                                t = t + v[w0 + j + l].widen() * S::wide_conj(v[w0 + j].widen());
                            }
                            *cl = t;
                        }
                        since = 0;
                    } else {
                        // slide from window at w0 - 1 to w0
                        for (l, cl) in c.iter_mut().enumerate() {
                            let old = v[w0 - 1 + l].widen() * S::wide_conj(v[w0 - 1].widen());
                            let new = v[w0 + h - 1].widen() * S::wide_conj(v[w0 + h - 1 - l].widen());
                            *cl = *cl - old + new;
                        }
                    }
                    since = since.saturating_add(1);
                    let mut p = S::wide_to_c64(c[0]).norm_sqr();
                    for cl in &c[1..] {
                        p += 2.0 * S::wide_to_c64(*cl).norm_sqr();
                    }
                    let (val, _) = root_clamped(p * scale, 2);
                    acc.add(val / ind * kind.weight(iv.first() + i as u64));
                }
                acc
            }))
        }
        _ => {
            let opts = GowersOptions::new(GowersMethod::Recursive);
            let parts = par::map_chunks(len, par::CHUNK, |r| {
                let mut acc = KahanSum::new();
                for i in r {
                    let w: Vec<Complex64> = v[base + i + 1..base + i + 1 + h].iter().map(|x| x.to_c64()).collect();
                    let g = gowers_interval_values(&w, s, &opts)?;
                    acc.add(g.value * kind.weight(iv.first() + i as u64));
                }
                Ok(acc)
            });
            parts.into_iter().collect()
        }
    }
}
