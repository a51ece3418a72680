//! Segmented sieves for the Liouville and Möbius functions.
//!
//! Each segment tracks, per entry, the product of the small prime powers
//! found so far. Any remaining cofactor is a single prime above `sqrt(end)`,
//! so only primes up to `sqrt(end)` are ever sieved with.

use super::block::{Data, SequenceBlock};
use super::primes::{isqrt, primes_up_to};
use crate::error::{MulabError, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    /// Entries per segment; rounded up to a multiple of 64.
    pub segment_len: usize,
    /// Largest number of entries a single call may produce.
    pub max_entries: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self { segment_len: 1 << 18, max_entries: 1 << 33 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Liouville,
    Mobius,
}

pub fn sieve_liouville(start: u64, end: u64) -> Result<SequenceBlock> {
    sieve_liouville_with(start, end, &SieveConfig::default())
}

pub fn sieve_mobius(start: u64, end: u64) -> Result<SequenceBlock> {
    sieve_mobius_with(start, end, &SieveConfig::default())
}

pub fn sieve_liouville_with(start: u64, end: u64, cfg: &SieveConfig) -> Result<SequenceBlock> {
    run(start, end, cfg, Target::Liouville)
}

pub fn sieve_mobius_with(start: u64, end: u64, cfg: &SieveConfig) -> Result<SequenceBlock> {
    run(start, end, cfg, Target::Mobius)
}

fn validate(start: u64, end: u64, cfg: &SieveConfig) -> Result<()> {
    if start < 1 || start >= end {
        return Err(MulabError::InvalidRange { start, end });
    }
    if end - start > cfg.max_entries {
        return Err(MulabError::RangeTooLarge { end, budget: cfg.max_entries });
    }
    Ok(())
}

fn run(start: u64, end: u64, cfg: &SieveConfig, target: Target) -> Result<SequenceBlock> {
    validate(start, end, cfg)?;
    let primes = primes_up_to(isqrt(end - 1));
    let seg = cfg.segment_len.max(64).div_ceil(64) * 64;
    let total = (end - start) as usize;
    let parts = par::map_chunks(total, seg, |r| {
        let lo = start + r.start as u64;
        let hi = start + r.end as u64;
        match target {
            Target::Liouville => liouville_segment(lo, hi, &primes),
            Target::Mobius => mobius_segment(lo, hi, &primes),
        }
    });
    let words: Vec<u64> = parts.into_iter().flatten().collect();
    let data = match target {
        Target::Liouville => Data::Sign(words),
        Target::Mobius => Data::Trit(words),
    };
    Ok(SequenceBlock::from_parts(start, total, data))
}

#[inline]
fn first_multiple(lo: u64, m: u64) -> u64 {
    lo.div_ceil(m) * m
}

/// Packed sign words for `[lo, hi)`: bit set where λ(n) = -1.
fn liouville_segment(lo: u64, hi: u64, primes: &[u64]) -> Vec<u64> {
    let len = (hi - lo) as usize;
    let mut prod = vec![1u64; len];
    let mut parity = vec![0u8; len];
    for &p in primes {
        if p * p > hi - 1 {
            break;
        }
        let mut pk = p;
        loop {
            let mut i = (first_multiple(lo, pk) - lo) as usize;
            let step = pk as usize;
            while i < len {
                parity[i] ^= 1;
                prod[i] *= p;
                i += step;
            }
            match pk.checked_mul(p) {
                Some(next) if next < hi => pk = next,
                _ => break,
            }
        }
    }
    let mut words = vec![0u64; len.div_ceil(64)];
    for i in 0..len {
        let n = lo + i as u64;
        let odd = parity[i] ^ u8::from(prod[i] != n);
        words[i / 64] |= (odd as u64) << (i % 64);
    }
    words
}

/// Packed trit words for `[lo, hi)`.
fn mobius_segment(lo: u64, hi: u64, primes: &[u64]) -> Vec<u64> {
    let len = (hi - lo) as usize;
    let mut prod = vec![1u64; len];
    let mut mu = vec![1i8; len];
    for &p in primes {
        if p * p > hi - 1 {
            break;
        }
        let step = p as usize;
        let mut i = (first_multiple(lo, p) - lo) as usize;
        while i < len {
            mu[i] = -mu[i];
            prod[i] *= p;
            i += step;
        }
        let sq = p * p;
        let step = sq as usize;
        let mut i = (first_multiple(lo, sq) - lo) as usize;
        while i < len {
            mu[i] = 0;
            i += step;
        }
    }
    let mut words = vec![0u64; len.div_ceil(32)];
    for i in 0..len {
        let n = lo + i as u64;
        let mut v = mu[i];
        if v != 0 && prod[i] != n {
            v = -v;
        }
        let code = match v {
            1 => 0b01u64,
            -1 => 0b11,
            _ => 0b00,
        };
        words[i / 32] |= code << (2 * (i % 32));
    }
    words
}
