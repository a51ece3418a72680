//! Pretentious distances, the twist-minimized distance `M(f; N)` and
//! (strong) aperiodicity scans.
//!
//! Characters vanish at primes dividing their modulus; such a prime then
//! contributes `(1 - 0)/p` to a distance.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MulabError, Result};
use crate::par;
use crate::seqgen::{euler_phi, MultFuncSpec, SequenceBlock};
use crate::sum::{ComplexSum, KahanSum};

pub const SCAN_WORK_BUDGET: f64 = 6.0e10;
pub const Q_MAX_CAP: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    #[serde(rename = "N")]
    pub n: u64,
    pub squared_distance: f64,
    pub prime_count: usize,
}

/// `D(f, g; N)^2 = Σ_{p≤N} (1 - Re f(p) conj(g(p))) / p`.
pub fn distance(f: &MultFuncSpec, g: &MultFuncSpec, n: u64) -> Result<DistanceResult> {
    if n < 2 {
        return Err(MulabError::InvalidArgument(format!("N = {n} is below 2")));
    }
    let fv = f.prime_values(n)?;
    let gv = g.prime_values(n)?;
    let mut acc = KahanSum::new();
    for ((p, a), (_, b)) in fv.iter().zip(&gv) {
        acc.add(term(*a * b.conj(), *p as f64));
    }
    Ok(DistanceResult { n, squared_distance: acc.value(), prime_count: fv.len() })
}

/// `(1 - Re z) / p`, symmetric under conjugating `z`.
#[inline]
fn term(z: Complex64, p: f64) -> f64 {
    (1.0 - z.re) / p
}

/// `f(p) = p^{it}` at every prime up to `n`, as a custom spec.
pub fn archimedean_twist(t: f64, n: u64) -> MultFuncSpec {
    let phases: BTreeMap<u64, f64> = crate::seqgen::primes::primes_up_to(n)
        .into_iter()
        .map(|p| (p, t * (p as f64).ln() / TAU))
        .collect();
    MultFuncSpec::custom(phases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half-width of the scan window; `None` means `max(10, ln N)`.
    pub t_max: Option<f64>,
    pub step: f64,
    /// Scan `[-N, N]` as in the definition of `M(f; N)`.
    pub full_range: bool,
    /// Points on each side of the coarse argmin in the refinement stage.
    pub refine_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { t_max: None, step: 0.01, full_range: false, refine_points: 100 }
    }
}

impl GridSpec {
    pub fn window(&self, n: u64) -> f64 {
        if self.full_range {
            n as f64
        } else {
            self.t_max.unwrap_or_else(|| (n as f64).ln().max(10.0))
        }
    }

    /// Symmetric coarse grid `k·step`, `|k·step| ≤ window`.
    pub fn coarse(&self, n: u64) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(MulabError::EmptyGrid);
        }
        let k = (self.window(n) / self.step + 1e-9).floor();
        if !(k >= 0.0) {
            return Err(MulabError::EmptyGrid);
        }
        let k = k as i64;
        Ok((-k..=k).map(|j| j as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MScanResult {
    #[serde(rename = "N")]
    pub n: u64,
    pub t_grid: Vec<f64>,
    pub d2_values: Vec<f64>,
    pub min_value: f64,
    pub argmin_t: f64,
    pub coarse_min: f64,
    pub window: f64,
    /// False when the scan window is narrower than `|t| ≤ N`.
    pub full_range: bool,
}

/// Prime data for repeated twisted distances.
struct PrimeTable {
    p: Vec<f64>,
    logp: Vec<f64>,
    f: Vec<Complex64>,
}

impl PrimeTable {
    fn new(f: &MultFuncSpec, n: u64) -> Result<Self> {
        let fv = f.prime_values(n)?;
        Ok(Self {
            p: fv.iter().map(|(p, _)| *p as f64).collect(),
            logp: fv.iter().map(|(p, _)| (*p as f64).ln()).collect(),
            f: fv.iter().map(|(_, v)| *v).collect(),
        })
    }

    /// `D(f, n^{it}; N)^2`.
    fn d2(&self, t: f64) -> f64 {
        let mut acc = KahanSum::new();
        for i in 0..self.p.len() {
            let (s, c) = (t * self.logp[i]).sin_cos();
            // f(p) p^{-it}
            let z = self.f[i] * Complex64::new(c, -s);
            acc.add(term(z, self.p[i]));
        }
        acc.value()
    }
}

/// `min_t D(f, n^{it}; N)^2` over a coarse grid, refined around the coarse argmin.
pub fn m_scan(f: &MultFuncSpec, n: u64, grid: &GridSpec) -> Result<MScanResult> {
    if n < 2 {
        return Err(MulabError::InvalidArgument(format!("N = {n} is below 2")));
    }
    let coarse = grid.coarse(n)?;
    let table = PrimeTable::new(f, n)?;
    let work = coarse.len() as f64 * table.p.len() as f64;
    if work > SCAN_WORK_BUDGET {
        return Err(MulabError::CostGuardExceeded { what: format!("t-scan work {work:.3e}") });
    }
    scan_with_table(&table, n, grid, coarse)
}

fn scan_with_table(table: &PrimeTable, n: u64, grid: &GridSpec, coarse: Vec<f64>) -> Result<MScanResult> {
    let values = par::map_items(coarse.clone(), |t| table.d2(t));
    let (ci, coarse_min) = argmin(&values);
    let center = coarse[ci];
    let fine = grid.step / grid.refine_points.max(1) as f64;
    let k = grid.refine_points as i64;
    let refined: Vec<f64> = (-k..=k).filter(|&j| j != 0).map(|j| center + j as f64 * fine).collect();
    let refined_values = par::map_items(refined.clone(), |t| table.d2(t));

    let mut points: Vec<(f64, f64)> = coarse.into_iter().zip(values).chain(refined.into_iter().zip(refined_values)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    points.dedup_by(|a, b| a.0 == b.0);
    let (t_grid, d2_values): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let (mi, min_value) = argmin(&d2_values);
    Ok(MScanResult {
        n,
        argmin_t: t_grid[mi],
        t_grid,
        d2_values,
        min_value,
        coarse_min,
        window: grid.window(n),
        full_range: grid.full_range,
    })
}

/// First index attaining the minimum.
fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    (best, v[best])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AperiodicityRow {
    pub q: u64,
    pub character_index: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub min_value: f64,
    pub argmin_t: f64,
    /// Whether `M(f·χ; N)` strictly increases along the N list for this character.
    pub growth_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AperiodicityTable {
    pub n_list: Vec<u64>,
    pub q_max: u64,
    pub rows: Vec<AperiodicityRow>,
    pub growth_observed: bool,
}

/// `M(f·χ; N)` for every character of modulus `q ≤ q_max` and every `N`.
///
/// Rows are ordered by `(q, character index, N)`.
pub fn strong_aperiodicity_scan(f: &MultFuncSpec, n_list: &[u64], q_max: u64, grid: &GridSpec) -> Result<AperiodicityTable> {
    if q_max == 0 || q_max > Q_MAX_CAP {
        return Err(MulabError::InvalidArgument(format!("q_max = {q_max} outside 1..={Q_MAX_CAP}")));
    }
    if n_list.is_empty() {
        return Err(MulabError::InvalidArgument("empty N list".into()));
    }
    let chars: u64 = (1..=q_max).map(euler_phi).sum();
    let mut work = 0.0;
    for &n in n_list {
        let pts = grid.coarse(n)?.len() + 2 * grid.refine_points;
        work += pts as f64 * crate::seqgen::primes::primes_up_to(n).len() as f64;
    }
    work *= chars as f64;
    if work > SCAN_WORK_BUDGET {
        return Err(MulabError::CostGuardExceeded { what: format!("aperiodicity scan work {work:.3e}") });
    }
    let mut rows = Vec::new();
    for q in 1..=q_max {
        for idx in 0..euler_phi(q) {
            let twisted = f.clone().times(MultFuncSpec::dirichlet(q, idx));
            let mut mins = Vec::with_capacity(n_list.len());
            for &n in n_list {
                let r = m_scan(&twisted, n, grid)?;
                mins.push((n, r.min_value, r.argmin_t));
            }
            let growth = mins.windows(2).all(|w| w[1].1 > w[0].1);
            rows.extend(mins.into_iter().map(|(n, min_value, argmin_t)| AperiodicityRow {
                q,
                character_index: idx,
                n,
                min_value,
                argmin_t,
                growth_flag: growth,
            }));
        }
    }
    let growth_observed = rows.iter().all(|r| r.growth_flag);
    Ok(AperiodicityTable { n_list: n_list.to_vec(), q_max, rows, growth_observed })
}

/// `|E_{n≤N} f(an + b)|`.
pub fn aperiodicity_test(block: &SequenceBlock, a: u64, b: u64, n: u64) -> Result<f64> {
    if a == 0 || n == 0 {
        return Err(MulabError::InvalidArgument("need a >= 1 and N >= 1".into()));
    }
    block.require(a + b, a * n + b)?;
    let parts = par::map_chunks(n as usize, par::CHUNK, |r| {
        let mut acc = ComplexSum::new();
        for i in r {
            acc.add(block.get(a * (i as u64 + 1) + b));
        }
        acc
    });
    Ok((crate::sum::merge_complex(&parts).value() / n as f64).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::primes::primes_up_to;
    use crate::seqgen::{materialize, sieve_liouville, SyntheticSpec};

    #[test]
    fn self_distance_vanishes() {
        let f = archimedean_twist(0.7, 1000);
        assert!(distance(&f, &f, 1000).unwrap().squared_distance.abs() < 1e-15);
        // a character is not unit-valued at primes dividing its modulus
        let chi = MultFuncSpec::dirichlet(7, 2);
        assert!((distance(&chi, &chi, 1000).unwrap().squared_distance - 1.0 / 7.0).abs() < 1e-15);
        let lam = MultFuncSpec::liouville();
        assert_eq!(distance(&lam, &lam, 1000).unwrap().squared_distance, 0.0);
    }

    #[test]
    fn liouville_against_one() {
        let d = distance(&MultFuncSpec::liouville(), &MultFuncSpec::one(), 100).unwrap();
        let oracle: f64 = primes_up_to(100).iter().map(|&p| 2.0 / p as f64).sum();
        assert_eq!(d.prime_count, 25);
        assert!((d.squared_distance - oracle).abs() < 1e-14);
    }

    #[test]
    fn vanishing_character_convention() {
        let lam = MultFuncSpec::liouville();
        let d = distance(&lam, &lam.clone().times(MultFuncSpec::dirichlet(2, 0)), 10_000).unwrap();
        assert_eq!(d.squared_distance, 0.5);
    }

    #[test]
    fn symmetry_and_monotonicity() {
        let f = MultFuncSpec::dirichlet(5, 1);
        let g = MultFuncSpec::liouville();
        assert_eq!(distance(&f, &g, 5000).unwrap().squared_distance, distance(&g, &f, 5000).unwrap().squared_distance);
        assert!(distance(&f, &g, 5000).unwrap().squared_distance >= distance(&f, &g, 500).unwrap().squared_distance);
    }

    #[test]
    fn scan_of_one_and_of_a_twist() {
        let r = m_scan(&MultFuncSpec::one(), 1000, &GridSpec::default()).unwrap();
        assert_eq!((r.min_value, r.argmin_t), (0.0, 0.0));
        let f = archimedean_twist(1.0, 1000);
        let r = m_scan(&f, 1000, &GridSpec::default()).unwrap();
        assert!(r.min_value <= 1e-9 && (r.argmin_t - 1.0).abs() < 1e-9, "{} {}", r.min_value, r.argmin_t);
    }

    #[test]
    fn refinement_never_increases_min() {
        let f = archimedean_twist(0.123_456, 2000);
        let r = m_scan(&f, 2000, &GridSpec::default()).unwrap();
        assert!(r.min_value <= r.coarse_min);
        assert!(r.min_value < r.coarse_min);
        let at_zero = r.d2_values[r.t_grid.iter().position(|&t| t == 0.0).unwrap()];
        let d = distance(&f, &MultFuncSpec::one(), 2000).unwrap().squared_distance;
        assert!((at_zero - d).abs() < 1e-12 && r.min_value <= at_zero);
    }

    #[test]
    fn empty_grid() {
        let g = GridSpec { step: 0.0, ..GridSpec::default() };
        assert!(matches!(m_scan(&MultFuncSpec::one(), 100, &g), Err(MulabError::EmptyGrid)));
    }

    #[test]
    fn principal_self_scan() {
        let coarse = GridSpec { step: 0.05, refine_points: 10, ..GridSpec::default() };
        let t = strong_aperiodicity_scan(&MultFuncSpec::one(), &[100, 1000], 1, &coarse).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r.min_value == 0.0 && r.argmin_t == 0.0));
        assert!(!t.growth_observed);
        // the principal character mod 3 misses only p = 3
        let chi0 = MultFuncSpec::dirichlet(3, 0);
        let r = m_scan(&chi0.clone().times(MultFuncSpec::dirichlet(3, 0)), 1000, &coarse).unwrap();
        assert!((r.min_value - 1.0 / 3.0).abs() < 1e-12 && r.argmin_t == 0.0);
    }

    #[test]
    fn aperiodicity_cases() {
        let one = materialize(&SyntheticSpec::Constant { re: 1.0, im: 0.0 }.into(), 1, 1000).unwrap();
        assert_eq!(aperiodicity_test(&one, 3, 5, 100).unwrap(), 1.0);
        let chi = materialize(&MultFuncSpec::dirichlet(4, 1).into(), 1, 5000).unwrap();
        assert_eq!(aperiodicity_test(&chi, 4, 1, 1000).unwrap(), 1.0);
        let lam = sieve_liouville(1, 1000).unwrap();
        assert!(matches!(aperiodicity_test(&lam, 2, 0, 600), Err(MulabError::CoverageGap { .. })));
    }
}
