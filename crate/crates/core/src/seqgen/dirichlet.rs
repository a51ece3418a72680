//! Dirichlet characters by brute-force group tables.
//!
//! `(Z/q)^*` is split by CRT into cyclic factors: one per odd prime power
//! (generated by a primitive root), and for `2^e` the factors `<-1>` (e >= 2)
//! and `<5>` (e >= 3). A character index is read in mixed radix over the
//! factor orders, in that factor order; index 0 is the principal character.

use num_complex::Complex64;

use super::primes::{factorize, gcd};
use crate::error::{MulabError, Result};
use crate::phase::unit;

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletCharacter {
    modulus: u64,
    index: u64,
    /// `turns[r]` is the phase of χ(r) for r coprime to q, `None` otherwise.
    turns: Vec<Option<f64>>,
}

pub fn euler_phi(q: u64) -> u64 {
    factorize(q).iter().fold(q, |acc, &(p, _)| acc / p * (p - 1))
}

/// One cyclic factor: its order and, for each residue mod q, its discrete log.
struct Factor {
    order: u64,
    log: Vec<u64>,
}

fn multiplicative_order(g: u64, m: u64) -> u64 {
    let mut x = g % m;
    let mut k = 1;
    while x != 1 {
        x = x * g % m;
        k += 1;
    }
    k
}

fn cyclic_factor(q: u64, pe: u64, gen: u64, order: u64) -> Factor {
    // log of a residue mod pe, lifted to residues mod q
    let mut log_pe = vec![u64::MAX; pe as usize];
    let mut x = 1 % pe;
    for k in 0..order {
        log_pe[x as usize] = k;
        x = x * gen % pe;
    }
    let log = (0..q).map(|r| log_pe[(r % pe) as usize]).collect();
    Factor { order, log }
}

fn factors(q: u64) -> Vec<Factor> {
    let mut out = Vec::new();
    for (p, e) in factorize(q) {
        let pe = p.pow(e);
        if p == 2 {
            if e >= 2 {
                // <-1> component: log is 0 for r = 1 mod 4, 1 for r = 3 mod 4
                let log = (0..q).map(|r| if r % 4 == 3 { 1 } else { 0 }).collect();
                out.push(Factor { order: 2, log });
            }
            if e >= 3 {
                let order = pe / 4;
                // r = ±5^k mod 2^e; fold the sign into the <-1> factor above
                let mut log_pe = vec![u64::MAX; pe as usize];
                let mut x = 1u64;
                for k in 0..order {
                    log_pe[x as usize] = k;
                    log_pe[(pe - x) as usize] = k;
                    x = x * 5 % pe;
                }
                let log = (0..q).map(|r| log_pe[(r % pe) as usize]).collect();
                out.push(Factor { order, log });
            }
        } else {
            let phi = pe / p * (p - 1);
            let gen = (2..pe)
                .find(|&g| g % p != 0 && multiplicative_order(g, pe) == phi)
                .unwrap_or(1);
            out.push(cyclic_factor(q, pe, gen, phi));
        }
    }
    out
}

impl DirichletCharacter {
    pub fn new(modulus: u64, index: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(MulabError::InvalidArgument("modulus must be >= 1".into()));
        }
        let phi = euler_phi(modulus);
        if index >= phi {
            return Err(MulabError::BadCharacterIndex { modulus, index, phi });
        }
        let fs = factors(modulus);
        // mixed-radix digits of the index, first factor least significant
        let mut digits = Vec::with_capacity(fs.len());
        let mut rest = index;
        for f in &fs {
            digits.push(rest % f.order);
            rest /= f.order;
        }
        let turns = (0..modulus)
            .map(|r| {
                if gcd(r, modulus) != 1 {
                    return None;
                }
                let t = fs.iter().zip(&digits).fold(0.0, |acc, (f, &k)| {
                    let num = (k * f.log[r as usize]) % f.order;
                    acc + num as f64 / f.order as f64
                });
                Some(t - t.floor())
            })
            .collect();
        Ok(Self { modulus, index, turns })
    }

    /// All characters of the given modulus, in index order.
    pub fn all(modulus: u64) -> Result<Vec<Self>> {
        (0..euler_phi(modulus)).map(|i| Self::new(modulus, i)).collect()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_principal(&self) -> bool {
        self.index == 0
    }

    pub fn value(&self, n: u64) -> Complex64 {
        match self.turns[(n % self.modulus) as usize] {
            Some(t) => unit(t),
            None => Complex64::new(0.0, 0.0),
        }
    }
}
