//! Executable forms of the norm-comparison, Gowers–Cauchy–Schwarz and
//! van der Corput inequalities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gowers::{gowers_zn, GowersMethod};
use super::local::{local_seminorm_ladder, local_star_seminorm};
use crate::averaging::IntervalScheme;
use crate::error::{MulabError, Result};
use crate::par;
use crate::seqgen::SequenceBlock;
use crate::sum::{ComplexSum, KahanSum};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEquivReport {
    pub s: u32,
    pub h_box: u64,
    #[serde(rename = "H")]
    pub h: u64,
    /// Star seminorm at window `H`.
    pub lhs: f64,
    /// Box seminorm at side `h_box`.
    pub box_value: f64,
    pub slack: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Star value at window `H` against `4 × box value + 2^s (s/H_box + s H_box/H)^(1/2^s)`,
/// both on the last interval of the scheme.
pub fn normequiv_check(
    block: &SequenceBlock,
    scheme: &IntervalScheme,
    s: u32,
    h_box: u64,
    h: u64,
) -> Result<NormEquivReport> {
    let star = local_star_seminorm(block, scheme, s, h, scheme.kind())?;
    let boxed = local_seminorm_ladder(block, scheme, s, &[h_box])?;
    let sf = f64::from(s);
    let hb = h_box as f64;
    let slack = 2f64.powi(s as i32) * (sf / hb + sf * hb / h as f64).powf(1.0 / f64::from(1u32 << s));
    let rhs = 4.0 * boxed.value + slack;
    Ok(NormEquivReport {
        s,
        h_box,
        h,
        lhs: star.value,
        box_value: boxed.value,
        slack,
        rhs,
        holds: star.value <= rhs + TOLERANCE,
    })
}

/// Largest `M` accepted by the cube checks at order `s`.
pub fn gcs_cap(s: u32) -> usize {
    match s {
        2 => 64,
        3 => 24,
        // keep M^(s+1) at or below 24^4
        _ => (331_776f64.powf(1.0 / f64::from(s + 1)) + 1e-9).floor() as usize,
    }
}

fn check_family(seqs: &[Vec<Complex64>], s: u32, m: usize, len: usize) -> Result<()> {
    if !(2..=8).contains(&s) {
        return Err(MulabError::InvalidArgument(format!("order s = {s} outside 2..=8")));
    }
    if m < 2 {
        return Err(MulabError::InvalidArgument(format!("M = {m} is below 2")));
    }
    if m > gcs_cap(s) {
        return Err(MulabError::CostGuardExceeded { what: format!("M = {m} exceeds {} for s = {s}", gcs_cap(s)) });
    }
    let want = (1usize << s) - 1;
    if seqs.len() != want {
        return Err(MulabError::InvalidArgument(format!("{} sequences given, {want} expected", seqs.len())));
    }
    if let Some(bad) = seqs.iter().position(|q| q.len() != len) {
        return Err(MulabError::InvalidArgument(format!("sequence {} has length {}, expected {len}", bad + 1, seqs[bad].len())));
    }
    Ok(())
}

/// `|Σ_{h ∈ box} w(h) Π_{ε≠0} a_ε(idx(m + ε·h))|` for one base point `m`.
///
/// `box_` lists the allowed values of each `h_j` with their weights;
/// `seqs[ε - 1]` is `a_ε`, with bit `j` of `ε` selecting `h_j`.
fn cube_abs(seqs: &[Vec<Complex64>], s: usize, m: usize, box_: &[(usize, f64)], modulus: Option<usize>) -> f64 {
    let k = box_.len();
    let mut acc = ComplexSum::new();
    let mut digits = vec![0usize; s];
    for _ in 0..k.pow(s as u32) {
        let mut w = 1.0;
        for &d in &digits {
            w *= box_[d].1;
        }
        if w != 0.0 {
            let mut prod = Complex64::new(w, 0.0);
            for (e, a) in seqs.iter().enumerate() {
                let eps = e + 1;
                let mut idx = m;
                for (j, &d) in digits.iter().enumerate() {
                    if eps >> j & 1 == 1 {
                        idx += box_[d].0;
                    }
                }
                if let Some(md) = modulus {
                    idx %= md;
                }
                prod *= a[idx];
            }
            acc.add(prod);
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    acc.value().norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcsReport {
    pub s: u32,
    #[serde(rename = "M")]
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub norms: Vec<f64>,
    pub holds: bool,
}

/// `E_m |E_{h∈Z_M^s} Π_{ε≠0} a_ε(m + ε·h)| ≤ Π_ε ‖a_ε‖_{U^s(Z_M)}`.
///
/// `seqs[ε - 1]` holds `a_ε` on `Z_M` for `ε = 1..2^s`, bit `j` of `ε` being
/// coordinate `j`.
pub fn gcs_check(seqs: &[Vec<Complex64>], s: u32, m: usize) -> Result<GcsReport> {
    check_family(seqs, s, m, m)?;
    let su = s as usize;
    let box_: Vec<(usize, f64)> = (0..m).map(|h| (h, 1.0)).collect();
    let per_m = par::map_indices(m, |base| cube_abs(seqs, su, base, &box_, Some(m)));
    let lhs = per_m.into_iter().collect::<KahanSum>().value() / (m as f64).powi(s as i32 + 1);
    let norms = seqs
        .iter()
        .map(|a| gowers_zn(a, s, GowersMethod::Recursive).map(|g| g.value))
        .collect::<Result<Vec<_>>>()?;
    let rhs = norms.iter().product();
    Ok(GcsReport { s, m, lhs, rhs, norms, holds: lhs <= rhs + TOLERANCE })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonperiodicGcsReport {
    pub s: u32,
    #[serde(rename = "M")]
    pub m: usize,
    pub lhs: f64,
    /// `min_ε ‖a_ε‖_{U^s(Z_{(s+1)M})}`.
    pub u_min: f64,
    pub c_s: f64,
    /// `C_s (U^{1/(s+1)} + 1/M)` with `C_s = (s+1)^{s+1}((2s)^s + 1)`.
    pub bound_stated: f64,
    /// `(s+1)^{s+1} (((4s)^s + 1) U^{1/(s+1)} + 2/M)`.
    pub bound_alternative: f64,
    pub holds_stated: bool,
    /// Holds against the larger of the two bounds.
    pub holds: bool,
    /// True when only the alternative bound covers the left side.
    pub needed_alternative: bool,
    /// The cyclic average with indicator weights `1_[M](h_j)` on `Z_{(s+1)M}`.
    pub indicator_average: f64,
    pub trapezoid: Option<TrapezoidDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidDiagnostic {
    #[serde(rename = "R")]
    pub r: usize,
    /// The same average with weights `φ(h_j)`.
    pub average: f64,
    /// `2sR / (s+1)M`.
    pub gap_bound: f64,
    pub within_gap: bool,
}

/// The trapezoid `φ` on `Z_{(s+1)M}`: ramps over `[0, R]` and `[M - R, M]`,
/// one in between, zero beyond `M`.
pub fn trapezoid(r: usize, m: usize, modulus: usize) -> Vec<f64> {
    (0..modulus)
        .map(|x| {
            if x <= r {
                x as f64 / r as f64
            } else if x <= m - r {
                1.0
            } else if x <= m {
                (m - x) as f64 / r as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// `E_{m∈[M]} |E_{h∈[M]^s} Π a_ε(m + ε·h)| ≤ C_s (min_ε ‖a_ε‖^{1/(s+1)} + 1/M)`
/// for `a_ε` on `[(s+1)M]`, stored so that `seqs[ε - 1][k - 1] = a_ε(k)`.
pub fn nonperiodic_gcs_check(seqs: &[Vec<Complex64>], s: u32, m: usize) -> Result<NonperiodicGcsReport> {
    let su = s as usize;
    let mt = (su + 1) * m;
    check_family(seqs, s, m, mt)?;
    if seqs.iter().flatten().any(|z| z.norm() > 1.0 + TOLERANCE) {
        return Err(MulabError::InvalidArgument("sequences must be bounded by 1".into()));
    }
    let sf = f64::from(s);
    let mf = m as f64;

    // array index k - 1 holds a(k); m, h_j >= 1 so m + ε·h - 1 >= 0
    let box_: Vec<(usize, f64)> = (1..=m).map(|h| (h, 1.0)).collect();
    let per_m = par::map_indices(m, |i| cube_abs(seqs, su, i, &box_, None));
    let lhs = per_m.into_iter().collect::<KahanSum>().value() / mf.powi(s as i32 + 1);

    let u_min = seqs
        .iter()
        .map(|a| gowers_zn(a, s, GowersMethod::Recursive).map(|g| g.value))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let root = u_min.powf(1.0 / (sf + 1.0));
    let lead = (sf + 1.0).powi(s as i32 + 1);
    let c_s = lead * ((2.0 * sf).powi(s as i32) + 1.0);
    let bound_stated = c_s * (root + 1.0 / mf);
    let bound_alternative = lead * (((4.0 * sf).powi(s as i32) + 1.0) * root + 2.0 / mf);
    let holds_stated = lhs <= bound_stated + TOLERANCE;
    let holds = lhs <= bound_stated.max(bound_alternative) + TOLERANCE;

    let cyclic = |weights: &[(usize, f64)]| {
        let per = par::map_indices(mt, |i| cube_abs(seqs, su, i, weights, Some(mt)));
        per.into_iter().collect::<KahanSum>().value() / (mt as f64).powi(s as i32 + 1)
    };
    // m ranges over Z_mt through the representatives 1..=mt, i.e. array offsets 0..mt
    let indicator_average = cyclic(&box_);
    let r = (root * mt as f64 / (4.0 * sf)).floor() as usize + 1;
    let trapezoid_diag = (2 * r < m).then(|| {
        let phi = trapezoid(r, m, mt);
        let weights: Vec<(usize, f64)> = phi.iter().enumerate().map(|(x, &w)| (x, w)).collect();
        let average = cyclic(&weights);
        let gap_bound = 2.0 * sf * r as f64 / mt as f64;
        TrapezoidDiagnostic {
            r,
            average,
            gap_bound,
            within_gap: (indicator_average - average).abs() <= gap_bound + TOLERANCE,
        }
    });
    Ok(NonperiodicGcsReport {
        s,
        m,
        lhs,
        u_min,
        c_s,
        bound_stated,
        bound_alternative,
        holds_stated,
        holds,
        needed_alternative: holds && !holds_stated,
        indicator_average,
        trapezoid: trapezoid_diag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdcReport {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "R")]
    pub r: usize,
    /// `|E_{m∈[M]} a(m)|^2`.
    pub lhs: f64,
    /// `E_{r∈[R]} (1 - r/R) Re E_{m∈[M]} a(m + r) conj(a(m))`.
    pub rhs_sum: f64,
    /// `4 (rhs_sum + 1/R + R/M)`.
    pub rhs: f64,
    pub holds: bool,
}

/// The van der Corput inequality at `n = 0`, reading `a(1..=M+R)` from the block.
pub fn vdc_check(block: &SequenceBlock, m: usize, r: usize) -> Result<VdcReport> {
    if r == 0 || r > m {
        return Err(MulabError::BadWindow { r, m });
    }
    block.require(1, (m + r) as u64)?;
    let a: Vec<Complex64> = (1..=(m + r) as u64).map(|n| block.get(n)).collect();
    vdc_values(&a, m, r)
}

/// As [`vdc_check`] with `a[k - 1] = a(k)`.
pub fn vdc_values(a: &[Complex64], m: usize, r: usize) -> Result<VdcReport> {
    if r == 0 || r > m {
        return Err(MulabError::BadWindow { r, m });
    }
    if a.len() < m + r {
        return Err(MulabError::InvalidArgument(format!("need {} values, got {}", m + r, a.len())));
    }
    let mean: ComplexSum = a[..m].iter().copied().collect();
    let lhs = (mean.value() / m as f64).norm_sqr();
    let terms = par::map_indices(r, |i| {
        let lag = i + 1;
        let mut c = ComplexSum::new();
        for j in 0..m {
            c.add(a[j + lag] * a[j].conj());
        }
        (1.0 - lag as f64 / r as f64) * c.value().re / m as f64
    });
    let rhs_sum = terms.into_iter().collect::<KahanSum>().value() / r as f64;
    let rhs = 4.0 * (rhs_sum + 1.0 / r as f64 + r as f64 / m as f64);
    Ok(VdcReport { m, r, lhs, rhs_sum, rhs, holds: lhs <= rhs + TOLERANCE })
}
