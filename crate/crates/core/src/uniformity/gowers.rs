//! Gowers norms on `Z_N` and the interval normalization `U^s[N]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::averaging::Interval;
use crate::error::{MulabError, Result};
use crate::par;
use crate::seqgen::SequenceBlock;
use crate::sum::{ComplexSum, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GowersMethod {
    Direct,
    FftU2,
    Recursive,
}

impl GowersMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            GowersMethod::Direct => "direct",
            GowersMethod::FftU2 => "fft_u2",
            GowersMethod::Recursive => "recursive",
        }
    }

    /// Cheapest exact method for order `s`.
    pub fn fastest(s: u32) -> Self {
        match s {
            1 => GowersMethod::Direct,
            2 => GowersMethod::FftU2,
            _ => GowersMethod::Recursive,
        }
    }
}

impl fmt::Display for GowersMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GowersMethod {
    type Err = MulabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(GowersMethod::Direct),
            "fft_u2" | "fft" => Ok(GowersMethod::FftU2),
            "recursive" => Ok(GowersMethod::Recursive),
            other => Err(MulabError::InvalidArgument(format!("unknown gowers method {other:?}"))),
        }
    }
}

pub const DEFAULT_WORK_BUDGET: f64 = 6.0e10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GowersOptions {
    pub method: GowersMethod,
    /// Subsampling step for the shifts of the recursive method; `1` is exact.
    pub stride: usize,
    pub work_budget: f64,
}

impl GowersOptions {
    pub fn new(method: GowersMethod) -> Self {
        Self { method, stride: 1, work_budget: DEFAULT_WORK_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GowersResult {
    pub s: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub method: GowersMethod,
    pub value: f64,
    /// The `2^s`-th power before taking the root.
    pub power: f64,
    pub clamped: bool,
    /// True when shifts were subsampled.
    pub estimate: bool,
}

/// `max(p, 0)^(1 / 2^s)` and whether clamping happened.
pub fn root_clamped(p: f64, s: u32) -> (f64, bool) {
    if p < 0.0 {
        (0.0, true)
    } else {
        (p.powf(1.0 / f64::from(1u32 << s)), false)
    }
}

fn work_estimate(n: usize, s: u32, opts: &GowersOptions) -> f64 {
    let nf = n as f64;
    match opts.method {
        GowersMethod::Direct if s == 1 => nf,
        GowersMethod::Direct => nf.powi(s as i32 + 1) * f64::from(1u32 << s),
        GowersMethod::FftU2 => nf * nf.log2().max(1.0),
        GowersMethod::Recursive => {
            let shifts = (nf / opts.stride as f64).ceil();
            shifts.powi(s as i32 - 1) * nf
        }
    }
}

/// `‖a‖_{U^s(Z_N)}` of a periodic array.
pub fn gowers_zn(a: &[Complex64], s: u32, method: GowersMethod) -> Result<GowersResult> {
    gowers_zn_with(a, s, &GowersOptions::new(method))
}

pub fn gowers_zn_with(a: &[Complex64], s: u32, opts: &GowersOptions) -> Result<GowersResult> {
    if s == 0 {
        return Err(MulabError::InvalidArgument("order s must be at least 1".into()));
    }
    if a.len() < 2 {
        return Err(MulabError::InvalidArgument(format!("N = {} is below 2", a.len())));
    }
    if opts.method == GowersMethod::FftU2 && s != 2 {
        return Err(MulabError::MethodMismatch { method: "fft_u2", s: s as usize });
    }
    if opts.stride == 0 {
        return Err(MulabError::InvalidArgument("stride must be positive".into()));
    }
    let work = work_estimate(a.len(), s, opts);
    if work > opts.work_budget {
        return Err(MulabError::WorkBudgetExceeded { work, budget: opts.work_budget });
    }
    let power = match opts.method {
        GowersMethod::Direct => direct_power(a, s),
        GowersMethod::FftU2 => fft_u2_power(a),
        GowersMethod::Recursive => recursive_power(a, s, opts.stride),
    };
    let (value, clamped) = root_clamped(power, s);
    Ok(GowersResult {
        s,
        n: a.len() as u64,
        method: opts.method,
        value,
        power,
        clamped,
        estimate: opts.method == GowersMethod::Recursive && opts.stride > 1 && s > 1,
    })
}

fn mean_abs2(a: &[Complex64]) -> f64 {
    let s: ComplexSum = a.iter().copied().collect();
    (s.value() / a.len() as f64).norm_sqr()
}

/// The defining average `E_{n,h} Π_ε C^{|ε|} a(n + ε·h)` over `Z_N^{s+1}`.
fn direct_power(a: &[Complex64], s: u32) -> f64 {
    match s {
        1 => mean_abs2(a),
        2 => direct_u2(a),
        _ => direct_generic(a, s),
    }
}

/// `Re Σ_n x(n + h) conj(x(n))` over `n < len`, with four independent lanes.
#[inline]
fn shifted_dot_re(re: &[f64], im: &[f64], h: usize, len: usize) -> f64 {
    let (xr, xi) = (&re[h..h + len], &im[h..h + len]);
    let (yr, yi) = (&re[..len], &im[..len]);
    let mut acc = [0.0f64; 4];
    let body = len / 4 * 4;
    for j in (0..body).step_by(4) {
        for l in 0..4 {
            acc[l] += xr[j + l] * yr[j + l] + xi[j + l] * yi[j + l];
        }
    }
    for j in body..len {
        acc[0] += xr[j] * yr[j] + xi[j] * yi[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// s = 2: for each `h1`, with `b(n) = a(n+h1) conj(a(n))`, the product over
/// the cube is `b(n+h2) conj(b(n))`. The summand is symmetric in `(h1, h2)`
/// and the total is real, so only `h2 >= h1` and real parts are summed.
fn direct_u2(a: &[Complex64]) -> f64 {
    let n = a.len();
    let rows = par::map_indices(n, |h1| {
        let b: Vec<Complex64> = (0..2 * n).map(|m| a[(m + h1) % n] * a[m % n].conj()).collect();
        let re: Vec<f64> = b.iter().map(|z| z.re).collect();
        let im: Vec<f64> = b.iter().map(|z| z.im).collect();
        let mut acc = KahanSum::new();
        acc.add(shifted_dot_re(&re, &im, h1, n));
        for h2 in h1 + 1..n {
            acc.add(2.0 * shifted_dot_re(&re, &im, h2, n));
        }
        acc
    });
    let mut total = KahanSum::new();
    for r in &rows {
        total.merge(r);
    }
    total.value() / (n as f64).powi(3)
}

/// Literal evaluation for any `s`, one `h` vector at a time.
fn direct_generic(a: &[Complex64], s: u32) -> f64 {
    let n = a.len();
    let s = s as usize;
    let cube = n.pow(s as u32 - 1);
    // parallel over h1; the remaining coordinates are enumerated inside
    let rows = par::map_indices(n, |h1| {
        let mut acc = ComplexSum::new();
        let mut h = vec![0usize; s];
        h[0] = h1;
        for rest in 0..cube {
            let mut r = rest;
            for hj in h.iter_mut().skip(1) {
                *hj = r % n;
                r /= n;
            }
            for m in 0..n {
                let mut prod = Complex64::new(1.0, 0.0);
                for eps in 0..1usize << s {
                    let mut idx = m;
                    for (j, hj) in h.iter().enumerate() {
                        if eps >> j & 1 == 1 {
                            idx += hj;
                        }
                    }
                    let v = a[idx % n];
                    prod *= if eps.count_ones() % 2 == 1 { v.conj() } else { v };
                }
                acc.add(prod);
            }
        }
        acc
    });
    let total = crate::sum::merge_complex(&rows).value();
    total.re / (n as f64).powi(s as i32 + 1)
}

/// `Σ_ξ |â(ξ)|^4` with `â(ξ) = E_n a(n) e(-nξ/N)`.
fn fft_u2_power(a: &[Complex64]) -> f64 {
    let n = a.len();
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    let mut buf = a.to_vec();
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|z| (z * scale).norm_sqr().powi(2)).collect::<KahanSum>().value()
}

/// `E_h ‖S_h a · ā‖^{2^(s-1)}_{U^{s-1}}`, with base case `|E a|^2`.
fn recursive_power(a: &[Complex64], s: u32, stride: usize) -> f64 {
    if s == 1 {
        return mean_abs2(a);
    }
    let n = a.len();
    let shifts: Vec<usize> = (0..n).step_by(stride).collect();
    let count = shifts.len();
    let parts = par::map_items(shifts, |h| {
        let d: Vec<Complex64> = (0..n).map(|m| a[(m + h) % n] * a[m].conj()).collect();
        recursive_power_seq(&d, s - 1, stride)
    });
    parts.into_iter().collect::<KahanSum>().value() / count as f64
}

fn recursive_power_seq(a: &[Complex64], s: u32, stride: usize) -> f64 {
    if s == 1 {
        return mean_abs2(a);
    }
    let n = a.len();
    let mut acc = KahanSum::new();
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    let mut count = 0usize;
    for h in (0..n).step_by(stride) {
        for m in 0..n {
            d[m] = a[(m + h) % n] * a[m].conj();
        }
        acc.add(recursive_power_seq(&d, s - 1, stride));
        count += 1;
    }
    acc.value() / count as f64
}

/// `‖a‖_{U^s[N]} = ‖a·1_[N]‖_{U^s(Z_2N)} / ‖1_[N]‖_{U^s(Z_2N)}` for `a` on
/// the interval, indexed from its first element.
pub fn gowers_interval(block: &SequenceBlock, iv: Interval, s: u32, method: GowersMethod) -> Result<GowersResult> {
    iv.check_in(block)?;
    let vals: Vec<Complex64> = iv.iter().map(|n| block.get(n)).collect();
    gowers_interval_values(&vals, s, &GowersOptions::new(method))
}

pub fn gowers_interval_values(a: &[Complex64], s: u32, opts: &GowersOptions) -> Result<GowersResult> {
    let n = a.len();
    let mut padded = a.to_vec();
    padded.resize(2 * n, Complex64::new(0.0, 0.0));
    let num = gowers_zn_with(&padded, s, opts)?;
    let den = indicator_norm(n, s, opts)?;
    let power = num.power / den.powi(1 << s);
    Ok(GowersResult { n: n as u64, value: num.value / den, power, ..num })
}

/// `‖1_[N]‖_{U^s(Z_2N)}`, computed by the same method as the numerator.
pub fn indicator_norm(n: usize, s: u32, opts: &GowersOptions) -> Result<f64> {
    let mut ind = vec![Complex64::new(1.0, 0.0); n];
    ind.resize(2 * n, Complex64::new(0.0, 0.0));
    Ok(gowers_zn_with(&ind, s, opts)?.value)
}
