use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::block::SequenceBlock;
use super::dirichlet::DirichletCharacter;
use super::primes::{isqrt, primes_up_to};
use super::sieve::{sieve_liouville, sieve_mobius, SieveConfig};
use crate::error::{MulabError, Result};
use crate::par;
use crate::phase::{poly_turns, unit};

/// Values of a multiplicative function at prime powers `p^k`, `k >= 2`,
/// when it is not completely multiplicative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimePowerRule {
    /// f(p^k) = f(p)
    Strong,
    /// f(p^k) = 0
    Squarefree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    #[default]
    CompletelyMultiplicative,
    MultiplicativeWithPrimePowerRule(PrimePowerRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultFuncKind {
    Liouville,
    Mobius,
    Dirichlet { modulus: u64, index: u64 },
    /// Phase at each listed prime, in turns. Unlisted primes have phase 0.
    Custom { prime_phase: BTreeMap<u64, f64> },
    /// Pointwise product of two multiplicative functions.
    Product(Box<MultFuncSpec>, Box<MultFuncSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultFuncSpec {
    pub kind: MultFuncKind,
    #[serde(default)]
    pub completeness: Completeness,
}

impl MultFuncSpec {
    pub fn liouville() -> Self {
        Self { kind: MultFuncKind::Liouville, completeness: Completeness::CompletelyMultiplicative }
    }

    pub fn mobius() -> Self {
        Self {
            kind: MultFuncKind::Mobius,
            completeness: Completeness::MultiplicativeWithPrimePowerRule(PrimePowerRule::Squarefree),
        }
    }

    pub fn dirichlet(modulus: u64, index: u64) -> Self {
        Self {
            kind: MultFuncKind::Dirichlet { modulus, index },
            completeness: Completeness::CompletelyMultiplicative,
        }
    }

    pub fn custom(prime_phase: BTreeMap<u64, f64>) -> Self {
        Self { kind: MultFuncKind::Custom { prime_phase }, completeness: Completeness::default() }
    }

    /// The constant function 1.
    pub fn one() -> Self {
        Self::custom(BTreeMap::new())
    }

    pub fn times(self, other: MultFuncSpec) -> Self {
        Self {
            kind: MultFuncKind::Product(Box::new(self), Box::new(other)),
            completeness: Completeness::CompletelyMultiplicative,
        }
    }

    /// Check the spec without evaluating it.
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            MultFuncKind::Dirichlet { modulus, index } => {
                DirichletCharacter::new(*modulus, *index).map(|_| ())
            }
            MultFuncKind::Custom { prime_phase } => {
                for (&p, &t) in prime_phase {
                    if !t.is_finite() {
                        return Err(MulabError::NonunitPrimeValue { prime: p, modulus: f64::NAN });
                    }
                }
                Ok(())
            }
            MultFuncKind::Product(a, b) => {
                a.validate()?;
                b.validate()
            }
            _ => Ok(()),
        }
    }

    /// Evaluator for repeated value queries.
    pub fn evaluator(&self) -> Result<Evaluator<'_>> {
        self.validate()?;
        let chi = match &self.kind {
            MultFuncKind::Dirichlet { modulus, index } => Some(DirichletCharacter::new(*modulus, *index)?),
            _ => None,
        };
        let parts = match &self.kind {
            MultFuncKind::Product(a, b) => Some((Box::new(a.evaluator()?), Box::new(b.evaluator()?))),
            _ => None,
        };
        Ok(Evaluator { spec: self, chi, parts })
    }

    /// f(p) for every prime `p <= n`, with the modulus check.
    pub fn prime_values(&self, n: u64) -> Result<Vec<(u64, Complex64)>> {
        let ev = self.evaluator()?;
        primes_up_to(n)
            .into_iter()
            .map(|p| {
                let v = ev.at_prime(p);
                let m = v.norm();
                let zero_ok = ev.may_vanish_at_primes() && m == 0.0;
                if !zero_ok && (m - 1.0).abs() > 1e-12 {
                    return Err(MulabError::NonunitPrimeValue { prime: p, modulus: m });
                }
                Ok((p, v))
            })
            .collect()
    }
}

pub struct Evaluator<'a> {
    spec: &'a MultFuncSpec,
    chi: Option<DirichletCharacter>,
    parts: Option<(Box<Evaluator<'a>>, Box<Evaluator<'a>>)>,
}

impl Evaluator<'_> {
    pub fn at_prime(&self, p: u64) -> Complex64 {
        match &self.spec.kind {
            MultFuncKind::Liouville | MultFuncKind::Mobius => Complex64::new(-1.0, 0.0),
            MultFuncKind::Dirichlet { .. } => self.chi.as_ref().unwrap().value(p),
            MultFuncKind::Custom { prime_phase } => unit(prime_phase.get(&p).copied().unwrap_or(0.0)),
            MultFuncKind::Product(..) => {
                let (a, b) = self.parts.as_ref().unwrap();
                a.at_prime(p) * b.at_prime(p)
            }
        }
    }

    pub fn at_prime_power(&self, p: u64, k: u32) -> Complex64 {
        if k == 0 {
            return Complex64::new(1.0, 0.0);
        }
        match &self.spec.kind {
            MultFuncKind::Dirichlet { .. } => return self.chi.as_ref().unwrap().value(p.pow(k)),
            MultFuncKind::Product(..) => {
                let (a, b) = self.parts.as_ref().unwrap();
                return a.at_prime_power(p, k) * b.at_prime_power(p, k);
            }
            _ => {}
        }
        let fp = self.at_prime(p);
        match self.spec.completeness {
            Completeness::CompletelyMultiplicative => fp.powu(k),
            Completeness::MultiplicativeWithPrimePowerRule(PrimePowerRule::Strong) => fp,
            Completeness::MultiplicativeWithPrimePowerRule(PrimePowerRule::Squarefree) => {
                if k == 1 {
                    fp
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    /// Whether f(p) = 0 is allowed (characters at primes dividing the modulus).
    pub fn may_vanish_at_primes(&self) -> bool {
        match &self.spec.kind {
            MultFuncKind::Dirichlet { .. } => true,
            MultFuncKind::Product(..) => {
                let (a, b) = self.parts.as_ref().unwrap();
                a.may_vanish_at_primes() || b.may_vanish_at_primes()
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticSpec {
    Constant { re: f64, im: f64 },
    /// (-1)^n
    Alternating,
    /// e(Σ coeffs[j] n^j), coefficients in turns
    PolyPhase { coeffs: Vec<f64> },
    /// (-1)^k on [k^2, (k+1)^2)
    BlockSignA,
    /// (-1)^(n+k) on [k^2, (k+1)^2)
    BlockSignB,
    /// Independent fair ±1 values keyed by (seed, n)
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SequenceSpec {
    Mult(MultFuncSpec),
    Synthetic(SyntheticSpec),
}

// Not derived: untagged deserialization buffers the input, and the buffer
// cannot turn the string keys of `prime_phase` back into integers.
impl<'de> Deserialize<'de> for SequenceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if let Ok(m) = MultFuncSpec::deserialize(&v) {
            return Ok(SequenceSpec::Mult(m));
        }
        SyntheticSpec::deserialize(&v)
            .map(SequenceSpec::Synthetic)
            .map_err(|_| serde::de::Error::custom("not a multiplicative or synthetic sequence spec"))
    }
}

impl From<MultFuncSpec> for SequenceSpec {
    fn from(s: MultFuncSpec) -> Self {
        SequenceSpec::Mult(s)
    }
}

impl From<SyntheticSpec> for SequenceSpec {
    fn from(s: SyntheticSpec) -> Self {
        SequenceSpec::Synthetic(s)
    }
}

pub const POLY_DEGREE_CAP: usize = 8;

/// Values of `spec` on `[start, end)`, in the most compact exact storage.
pub fn materialize(spec: &SequenceSpec, start: u64, end: u64) -> Result<SequenceBlock> {
    if start < 1 || start >= end {
        return Err(MulabError::InvalidRange { start, end });
    }
    let budget = SieveConfig::default().max_entries;
    if end - start > budget {
        return Err(MulabError::RangeTooLarge { end, budget });
    }
    match spec {
        SequenceSpec::Mult(m) => materialize_mult(m, start, end),
        SequenceSpec::Synthetic(s) => materialize_synthetic(s, start, end),
    }
}

fn materialize_mult(spec: &MultFuncSpec, start: u64, end: u64) -> Result<SequenceBlock> {
    spec.validate()?;
    match &spec.kind {
        MultFuncKind::Liouville if spec.completeness == Completeness::CompletelyMultiplicative => {
            return sieve_liouville(start, end)
        }
        MultFuncKind::Mobius
            if spec.completeness
                == Completeness::MultiplicativeWithPrimePowerRule(PrimePowerRule::Squarefree) =>
        {
            return sieve_mobius(start, end)
        }
        MultFuncKind::Dirichlet { modulus, index } => {
            let chi = DirichletCharacter::new(*modulus, *index)?;
            let vals = (start..end).map(|n| chi.value(n)).collect();
            return Ok(SequenceBlock::from_values_compact(start, vals));
        }
        _ => {}
    }
    let ev = spec.evaluator()?;
    let primes = primes_up_to(isqrt(end - 1));
    let total = (end - start) as usize;
    let parts = par::map_chunks(total, 1 << 16, |r| {
        let lo = start + r.start as u64;
        let len = r.len();
        let mut rem: Vec<u64> = (lo..lo + len as u64).collect();
        let mut val = vec![Complex64::new(1.0, 0.0); len];
        for &p in &primes {
            let mut i = (lo.div_ceil(p) * p - lo) as usize;
            while i < len {
                let mut k = 0;
                while rem[i] % p == 0 {
                    rem[i] /= p;
                    k += 1;
                }
                val[i] *= ev.at_prime_power(p, k);
                i += p as usize;
            }
        }
        for i in 0..len {
            if rem[i] > 1 {
                val[i] *= ev.at_prime(rem[i]);
            }
        }
        val
    });
    Ok(SequenceBlock::from_values_compact(start, parts.into_iter().flatten().collect()))
}

#[inline]
fn square_block_parity(n: u64) -> u64 {
    isqrt(n) & 1
}

fn materialize_synthetic(spec: &SyntheticSpec, start: u64, end: u64) -> Result<SequenceBlock> {
    let range = start..end;
    let signs = |f: &dyn Fn(u64) -> bool| -> Result<SequenceBlock> {
        let v: Vec<i8> = range.clone().map(|n| if f(n) { -1 } else { 1 }).collect();
        SequenceBlock::from_signs(start, &v)
    };
    match spec {
        SyntheticSpec::Constant { re, im } => Ok(SequenceBlock::from_values_compact(
            start,
            vec![Complex64::new(*re, *im); (end - start) as usize],
        )),
        SyntheticSpec::Alternating => signs(&|n| n % 2 == 1),
        SyntheticSpec::BlockSignA => signs(&|n| square_block_parity(n) == 1),
        SyntheticSpec::BlockSignB => signs(&|n| (square_block_parity(n) + n) % 2 == 1),
        SyntheticSpec::PolyPhase { coeffs } => {
            if coeffs.len() > POLY_DEGREE_CAP + 1 {
                return Err(MulabError::DegreeCap { degree: coeffs.len() - 1, cap: POLY_DEGREE_CAP });
            }
            let vals = range.map(|n| poly_turns(coeffs, n).unit()).collect();
            Ok(SequenceBlock::from_values_compact(start, vals))
        }
        SyntheticSpec::Random { seed } => {
            // bit n of the ChaCha8 keystream for this seed, independent of the range
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            rng.set_word_pos((start / 32) as u128);
            let mut word = rng.next_u32();
            let mut v = Vec::with_capacity((end - start) as usize);
            for n in range {
                if n % 32 == 0 && n != start {
                    word = rng.next_u32();
                }
                v.push(if (word >> (n % 32)) & 1 == 1 { -1i8 } else { 1 });
            }
            SequenceBlock::from_signs(start, &v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(b: &SequenceBlock) -> Vec<i8> {
        (b.start()..b.end()).map(|n| b.get_int(n).unwrap()).collect()
    }

    #[test]
    fn json_round_trip() {
        let specs: Vec<SequenceSpec> = vec![
            MultFuncSpec::custom([(2, 0.25), (7, 0.5)].into_iter().collect()).into(),
            MultFuncSpec::mobius().times(MultFuncSpec::dirichlet(5, 1)).into(),
            SyntheticSpec::PolyPhase { coeffs: vec![0.0, 0.5] }.into(),
            SyntheticSpec::Alternating.into(),
        ];
        for s in specs {
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<SequenceSpec>(&text).unwrap(), s, "{text}");
        }
        assert!(serde_json::from_str::<SequenceSpec>(r#"{"nope":1}"#).is_err());
    }

    #[test]
    fn custom_minus_one_is_liouville() {
        let phases: BTreeMap<u64, f64> = primes_up_to(5000).into_iter().map(|p| (p, 0.5)).collect();
        let spec = SequenceSpec::Mult(MultFuncSpec::custom(phases));
        let a = materialize(&spec, 1, 5000).unwrap();
        let b = sieve_liouville(1, 5000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unspecified_primes_default_to_one() {
        let mut phases = BTreeMap::new();
        phases.insert(3, 0.5);
        let b = materialize(&MultFuncSpec::custom(phases).into(), 1, 13).unwrap();
        // f(n) = (-1)^{v_3(n)}
        assert_eq!(ints(&b), vec![1, 1, -1, 1, 1, -1, 1, 1, 1, 1, 1, -1]);
    }

    #[test]
    fn dirichlet_mod_four() {
        let b = materialize(&MultFuncSpec::dirichlet(4, 1).into(), 1, 4).unwrap();
        assert_eq!(ints(&b), vec![1, 0, -1]);
        assert!(matches!(
            materialize(&MultFuncSpec::dirichlet(4, 7).into(), 1, 4),
            Err(MulabError::BadCharacterIndex { .. })
        ));
    }

    #[test]
    fn poly_phase_linear() {
        let alpha = 0.1234;
        let b = materialize(&SyntheticSpec::PolyPhase { coeffs: vec![0.0, alpha] }.into(), 1, 5).unwrap();
        for n in 1..5u64 {
            assert!((b.get(n) - unit(n as f64 * alpha)).norm() < 1e-15);
        }
        let too_long = SyntheticSpec::PolyPhase { coeffs: vec![0.0; 10] };
        assert!(matches!(materialize(&too_long.into(), 1, 5), Err(MulabError::DegreeCap { .. })));
    }

    #[test]
    fn block_sign_sequences() {
        let a = materialize(&SyntheticSpec::BlockSignA.into(), 1, 17).unwrap();
        // k = 1 on [1,4), k = 2 on [4,9), k = 3 on [9,16), k = 4 at 16
        assert_eq!(ints(&a), vec![-1, -1, -1, 1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1, -1, 1]);
        let b = materialize(&SyntheticSpec::BlockSignB.into(), 1, 17).unwrap();
        for n in 1..17u64 {
            let sign = if n % 2 == 0 { 1 } else { -1 };
            assert_eq!(b.get_int(n).unwrap(), a.get_int(n).unwrap() * sign);
        }
    }

    #[test]
    fn random_is_range_consistent() {
        let spec: SequenceSpec = SyntheticSpec::Random { seed: 42 }.into();
        let whole = materialize(&spec, 1, 1000).unwrap();
        let part = materialize(&spec, 77, 500).unwrap();
        for n in 77..500 {
            assert_eq!(whole.get_int(n), part.get_int(n));
        }
        let other = materialize(&SyntheticSpec::Random { seed: 43 }.into(), 1, 1000).unwrap();
        assert_ne!(whole, other);
    }

    #[test]
    fn prime_power_rules() {
        let mut strong = MultFuncSpec::liouville();
        strong.completeness = Completeness::MultiplicativeWithPrimePowerRule(PrimePowerRule::Strong);
        let b = materialize(&strong.into(), 1, 13).unwrap();
        // f(n) = (-1)^{number of distinct prime factors}
        assert_eq!(ints(&b), vec![1, -1, -1, -1, -1, 1, -1, -1, -1, 1, -1, 1]);
        let mut sqf = MultFuncSpec::liouville();
        sqf.completeness = Completeness::MultiplicativeWithPrimePowerRule(PrimePowerRule::Squarefree);
        let mu = materialize(&sqf.into(), 1, 200).unwrap();
        assert_eq!(mu, sieve_mobius(1, 200).unwrap());
    }

    #[test]
    fn nonfinite_phase_is_nonunit() {
        let mut phases = BTreeMap::new();
        phases.insert(7, f64::NAN);
        let spec = MultFuncSpec::custom(phases);
        assert!(matches!(spec.prime_values(10), Err(MulabError::NonunitPrimeValue { prime: 7, .. })));
    }

    #[test]
    fn character_prime_values_may_vanish() {
        let v = MultFuncSpec::dirichlet(6, 1).prime_values(7).unwrap();
        assert_eq!(v[0], (2, Complex64::new(0.0, 0.0)));
        assert_eq!(v[1].1, Complex64::new(0.0, 0.0));
    }
}
