//! Nilsequences on the Heisenberg nilmanifold, polynomial phases and Weyl
//! sums.
//!
//! Points are Mal'cev coordinates `(x, y, z)` with the group law
//! `(x,y,z)·(x',y',z') = (x+x', y+y', z+z'+x·y')`; the fundamental domain of
//! `Γ = Z³` is `[0,1)³`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MulabError, Result};
use crate::par;
use crate::phase::{poly_turns, Turns};
use crate::sum::ComplexSum;

pub const DEGREE_CAP: usize = 8;
/// Largest orbit materialized in one call.
pub const ORBIT_BUDGET: u64 = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeisenbergPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

fn frac(t: f64) -> f64 {
    let f = t - t.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

impl HeisenbergPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// The group law, without reduction.
    pub fn mul(self, o: Self) -> Self {
        Self { x: self.x + o.x, y: self.y + o.y, z: self.z + o.z + self.x * o.y }
    }

    /// Representative of `gΓ` in `[0,1)³`: right-multiply by
    /// `(−⌊x⌋, −⌊y⌋, 0)`, then drop the integer part of `z`.
    pub fn reduce(self) -> Self {
        let ky = self.y.floor();
        Self { x: frac(self.x), y: frac(self.y), z: frac(self.z - self.x * ky) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSpec {
    pub alpha: f64,
    pub beta: f64,
    pub length: u64,
}

/// `b^n Γ` for `n = 1..=length` with `b = (α, β, 0)`, reduced after every
/// step. Coordinates are carried in double-double turns, so the drift after
/// `n` steps is `O(n)` units of 1e-32 rather than of 1e-16.
pub fn heisenberg_orbit(spec: &OrbitSpec) -> Result<Vec<HeisenbergPoint>> {
    if spec.length == 0 {
        return Err(MulabError::InvalidArgument("orbit length must be at least 1".into()));
    }
    if spec.length > ORBIT_BUDGET {
        return Err(MulabError::RangeTooLarge { end: spec.length, budget: ORBIT_BUDGET });
    }
    let a = Turns::new(spec.alpha);
    let (fb, b) = (spec.beta.floor() as i64, Turns::new(spec.beta));
    let (mut x, mut y, mut z) = (Turns::default(), Turns::default(), Turns::default());
    let mut out = Vec::with_capacity(spec.length as usize);
    for _ in 0..spec.length {
        // b·(x,y,z) = (α+x, β+y, z+α·y), then reduce by ⌊β+y⌋ = fb + carry
        let y_next = y.add(b);
        let carry = (y_next.value() < y.value()) as i64;
        let ky = fb + carry;
        z = z.add(y.mul_f64(spec.alpha)).add(a.mul_i64(ky).neg()).add(x.mul_i64(ky).neg());
        x = x.add(a);
        y = y_next;
        out.push(HeisenbergPoint { x: x.value(), y: y.value(), z: z.value() });
    }
    Ok(out)
}

/// `e(k·z_n)`, evaluated on fundamental-domain coordinates.
pub fn vertical_character_eval(orbit: &[HeisenbergPoint], k: i64) -> Vec<Complex64> {
    orbit.iter().map(|p| Turns::new(p.z).mul_i64(k).unit()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceIdentity {
    pub max_error: f64,
    /// `2hα mod 1`.
    pub beta: f64,
    /// `e(h²α)`.
    pub constant: Complex64,
}

/// Checks `e((n+h)²α)·conj(e(n²α)) = e(h²α)·e(n·2hα)` for `n` in `[start, end)`.
pub fn char_difference_identity(alpha: f64, h: u64, start: u64, end: u64) -> Result<DifferenceIdentity> {
    if h == 0 {
        return Err(MulabError::InvalidArgument("h must be at least 1".into()));
    }
    if end <= start {
        return Err(MulabError::InvalidRange { start, end });
    }
    let quad = [0.0, 0.0, alpha];
    let a = Turns::new(alpha);
    let beta = a.mul_int(2 * h);
    let constant = a.mul_int(h * h).unit();
    let errs = par::map_chunks((end - start) as usize, par::CHUNK, |r| {
        r.map(|i| {
            let n = start + i as u64;
            let lhs = poly_turns(&quad, n + h).unit() * poly_turns(&quad, n).unit().conj();
            let rhs = constant * beta.mul_int(n).unit();
            (lhs - rhs).norm()
        })
        .fold(0f64, f64::max)
    });
    Ok(DifferenceIdentity { max_error: errs.into_iter().fold(0.0, f64::max), beta: beta.value(), constant })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    /// `|E_n e(k·x_n)|` per frequency vector.
    pub values: Vec<f64>,
    pub max: f64,
    pub argmax: usize,
}

/// Weyl sums `|E_n e(k·x_n)|` for each nonzero integer vector `k`.
pub fn weyl_test<P: AsRef<[f64]> + Sync>(points: &[P], freqs: &[Vec<i64>]) -> Result<WeylReport> {
    if points.is_empty() {
        return Err(MulabError::InvalidArgument("no points".into()));
    }
    let dim = points[0].as_ref().len();
    for k in freqs {
        if k.iter().all(|&c| c == 0) {
            return Err(MulabError::ZeroFrequency);
        }
        if k.len() != dim {
            return Err(MulabError::InvalidArgument(format!("frequency of length {} for points of dimension {dim}", k.len())));
        }
    }
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(MulabError::InvalidArgument("points of mixed dimension".into()));
    }
    let values: Vec<f64> = par::map_indices(freqs.len(), |j| {
        let k = &freqs[j];
        let parts = par::map_chunks(points.len(), par::CHUNK, |r| {
            let mut acc = ComplexSum::default();
            for p in &points[r] {
                let t = p.as_ref().iter().zip(k).fold(Turns::default(), |t, (&x, &c)| t.add(Turns::new(x).mul_i64(c)));
                acc.add(t.unit());
            }
            acc
        });
        let mut total = ComplexSum::default();
        for p in &parts {
            total.merge(p);
        }
        total.value().norm() / points.len() as f64
    });
    let (argmax, max) = values.iter().copied().enumerate().fold((0, 0f64), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    Ok(WeylReport { values, max, argmax })
}

/// `e(P(n))` for `n ∈ [start, end)`, `P(n) = Σ coeffs[j] n^j` in turns.
pub fn poly_phase(coeffs: &[f64], start: u64, end: u64) -> Result<Vec<Complex64>> {
    let degree = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    if degree > DEGREE_CAP {
        return Err(MulabError::DegreeCap { degree, cap: DEGREE_CAP });
    }
    if end < start {
        return Err(MulabError::InvalidRange { start, end });
    }
    let c = &coeffs[..=degree.min(coeffs.len().saturating_sub(1))];
    Ok((start..end).map(|n| poly_turns(c, n).unit()).collect())
}

/// Reproducible irrational parameters by name.
pub fn named_constant(name: &str) -> Option<f64> {
    match name {
        "sqrt2m1" => Some(std::f64::consts::SQRT_2 - 1.0),
        "sqrt3m1" => Some(3f64.sqrt() - 1.0),
        "golden" => Some((5f64.sqrt() - 1.0) / 2.0),
        _ => None,
    }
}

/// A decimal literal or one of the names accepted by [`named_constant`].
pub fn parse_real(s: &str) -> Result<f64> {
    named_constant(s)
        .or_else(|| s.parse::<f64>().ok().filter(|x| x.is_finite()))
        .ok_or_else(|| MulabError::InvalidArgument(format!("not a real number or known constant: {s}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::unit;

    /// `[[1,x,z],[0,1,y],[0,0,1]]`.
    type Mat = [[f64; 3]; 3];

    fn matmul(a: &Mat, b: &Mat) -> Mat {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    }

    /// Right-multiply by the integer matrix that moves `m` into `[0,1)³`.
    fn gamma_reduce(m: &Mat) -> Mat {
        let (x, y) = (m[0][1], m[1][2]);
        let g1: Mat = [[1.0, -x.floor(), 0.0], [0.0, 1.0, -y.floor()], [0.0, 0.0, 1.0]];
        let r = matmul(m, &g1);
        let g2: Mat = [[1.0, 0.0, -r[0][2].floor()], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        matmul(&r, &g2)
    }

    fn circ(a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        d.min(1.0 - d)
    }

    const A: f64 = std::f64::consts::SQRT_2 - 1.0;

    fn b3() -> f64 {
        3f64.sqrt() - 1.0
    }

    #[test]
    fn trivial_generator_stays_at_identity() {
        let o = heisenberg_orbit(&OrbitSpec { alpha: 0.0, beta: 0.0, length: 50 }).unwrap();
        assert!(o.iter().all(|p| *p == HeisenbergPoint::default()));
        assert!(heisenberg_orbit(&OrbitSpec { alpha: 0.1, beta: 0.2, length: 0 }).is_err());
    }

    #[test]
    fn unreduced_central_coordinate() {
        let b = HeisenbergPoint::new(A, b3(), 0.0);
        let mut g = HeisenbergPoint::default();
        for n in 1..=40u64 {
            g = b.mul(g);
            let want = (n * (n - 1) / 2) as f64 * A * b3();
            assert!((g.z - want).abs() < 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn matches_matrix_oracle() {
        let spec = OrbitSpec { alpha: A, beta: b3(), length: 10_000 };
        let o = heisenberg_orbit(&spec).unwrap();
        let bm: Mat = [[1.0, A, 0.0], [0.0, 1.0, b3()], [0.0, 0.0, 1.0]];
        let mut m: Mat = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut worst = 0f64;
        for p in &o {
            m = gamma_reduce(&matmul(&bm, &m));
            worst = worst.max(circ(p.x, m[0][1])).max(circ(p.y, m[1][2])).max(circ(p.z, m[0][2]));
        }
        assert!(worst < 1e-9, "{worst}");
    }

    /// Reduced `z_n = C(n,2)αβ − nα⌊nβ⌋ mod 1`, all in double-double.
    #[test]
    fn reduction_matches_closed_form() {
        let (a, b) = (0.7548776662466927, 0.5698402909980532);
        let o = heisenberg_orbit(&OrbitSpec { alpha: a, beta: b, length: 10_000 }).unwrap();
        let ab = Turns::new(a).mul_f64(b);
        let mut worst = 0f64;
        for (i, p) in o.iter().enumerate() {
            let n = i as u64 + 1;
            let kb = (n as f64 * b).floor() as u64;
            let z = ab.mul_int(n * (n - 1) / 2).add(Turns::new(a).mul_int(n * kb).neg());
            worst = worst.max((z.unit() - unit(p.z)).norm());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn reduce_is_idempotent() {
        for p in [
            HeisenbergPoint::new(3.7, -2.2, 11.9),
            HeisenbergPoint::new(-0.5, 0.999, -4.0),
            HeisenbergPoint::new(0.0, 5.0, 0.25),
        ] {
            let r = p.reduce();
            assert_eq!(r.reduce(), r);
            assert!([r.x, r.y, r.z].iter().all(|c| (0.0..1.0).contains(c)));
        }
    }

    #[test]
    fn abelian_orbits_have_trivial_vertical_character() {
        for (a, b) in [(0.0, b3()), (A, 0.0)] {
            let o = heisenberg_orbit(&OrbitSpec { alpha: a, beta: b, length: 500 }).unwrap();
            assert!(vertical_character_eval(&o, 3).iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        }
        let o = heisenberg_orbit(&OrbitSpec { alpha: A, beta: b3(), length: 10 }).unwrap();
        assert!(vertical_character_eval(&o, 0).iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn vertical_character_equidistributes() {
        let o = heisenberg_orbit(&OrbitSpec { alpha: A, beta: b3(), length: 100_000 }).unwrap();
        let pts: Vec<[f64; 1]> = o.iter().map(|p| [p.z]).collect();
        let r = weyl_test(&pts, &[vec![1]]).unwrap();
        let direct: Complex64 = vertical_character_eval(&o, 1).iter().sum::<Complex64>() / o.len() as f64;
        assert!((r.values[0] - direct.norm()).abs() < 1e-12);
        assert!(r.values[0] <= 0.05, "{}", r.values[0]);
    }

    #[test]
    fn difference_identity() {
        let r = char_difference_identity(A, 1, 1, 1_000_001).unwrap();
        assert!(r.max_error <= 1e-9, "{}", r.max_error);
        let q = char_difference_identity(0.25, 2, 1, 1000).unwrap();
        assert_eq!(q.beta, 0.0);
        assert!((q.constant - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(q.max_error < 1e-12);
    }

    #[test]
    fn linear_weyl_sum_obeys_geometric_bound() {
        let n = 100_000usize;
        let pts: Vec<[f64; 1]> = (1..=n).map(|k| [(k as f64 * A).fract()]).collect();
        let r = weyl_test(&pts, &[vec![1]]).unwrap();
        // |Σ e(nα)| ≤ 1/|sin πα| ≤ 1/(2‖α‖)
        let dist = A.min(1.0 - A);
        assert!(r.values[0] <= 1.0 / (2.0 * n as f64 * dist));
        let zero: Vec<[f64; 1]> = vec![[0.0]; 10];
        assert_eq!(weyl_test(&zero, &[vec![1]]).unwrap().max, 1.0);
        assert_eq!(weyl_test(&zero, &[vec![0]]), Err(MulabError::ZeroFrequency));
    }

    #[test]
    fn horizontal_marginal() {
        let o = heisenberg_orbit(&OrbitSpec { alpha: A, beta: b3(), length: 100_000 }).unwrap();
        let pts: Vec<[f64; 3]> = o.iter().map(|p| [p.x, p.y, p.z]).collect();
        let r = weyl_test(&pts, &[vec![1, 0, 0], vec![0, 1, 0], vec![1, 1, 0]]).unwrap();
        assert!(r.max <= 0.05, "{:?}", r.values);
    }

    #[test]
    fn polynomial_phases() {
        assert!(poly_phase(&[0.0; 4], 1, 20).unwrap().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let half = poly_phase(&[0.0, 0.0, 0.5], 1, 20).unwrap();
        for (i, v) in half.iter().enumerate() {
            let n = i as i32 + 1;
            assert_eq!(*v, Complex64::new((-1f64).powi(n), 0.0));
        }
        assert!(matches!(poly_phase(&[0.1; 10], 1, 2), Err(MulabError::DegreeCap { degree: 9, cap: 8 })));
        // trailing zeros do not count towards the degree
        let mut c = vec![0.1; 9];
        c.push(0.0);
        assert!(poly_phase(&c, 1, 2).is_ok());
    }

    /// `C(n,2)αβ = (n² − n)αβ/2`: the vertical character times the
    /// Γ-correction `e(nα⌊nβ⌋)` is a quadratic phase.
    #[test]
    fn vertical_character_is_a_quadratic_phase() {
        let (a, b) = (A, b3());
        let o = heisenberg_orbit(&OrbitSpec { alpha: a, beta: b, length: 10_000 }).unwrap();
        let ab = a * b;
        let q = poly_phase(&[0.0, -ab / 2.0, ab / 2.0], 1, 10_001).unwrap();
        let v = vertical_character_eval(&o, 1);
        let mut worst = 0f64;
        for (i, (qv, vv)) in q.iter().zip(&v).enumerate() {
            let n = i as u64 + 1;
            let corr = Turns::new(a).mul_int(n * (n as f64 * b).floor() as u64).unit();
            worst = worst.max((vv * corr - qv).norm());
        }
        // αβ/2 is rounded once in double precision, then scaled by n²
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn named_constants() {
        assert_eq!(parse_real("sqrt2m1").unwrap(), A);
        assert!((parse_real("golden").unwrap() - 0.6180339887498949).abs() < 1e-16);
        assert_eq!(parse_real("0.25").unwrap(), 0.25);
        assert!(parse_real("pi").is_err());
        assert!(parse_real("nan").is_err());
    }
}
