use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MulabError, Result};
use crate::scalar::Dense;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Storage {
    /// One bit per entry; a set bit means -1.
    Sign1Bit,
    /// Two bits per entry: 00 = 0, 01 = +1, 11 = -1.
    Trit2Bit,
    ComplexPair,
}

impl Storage {
    pub fn tag(self) -> u8 {
        match self {
            Storage::Sign1Bit => 0,
            Storage::Trit2Bit => 1,
            Storage::ComplexPair => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Storage::Sign1Bit),
            1 => Some(Storage::Trit2Bit),
            2 => Some(Storage::ComplexPair),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Data {
    Sign(Vec<u64>),
    Trit(Vec<u64>),
    Complex(Vec<Complex64>),
}

/// Values `a(n)` for `n` in `[start, start + len)`.
///
/// Packed words are zero beyond `len`, so equality is bit-level equality.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBlock {
    start: u64,
    len: usize,
    pub(crate) data: Data,
}

const TRIT_ZERO: u64 = 0b00;
const TRIT_PLUS: u64 = 0b01;
const TRIT_MINUS: u64 = 0b11;

impl SequenceBlock {
    pub(crate) fn from_parts(start: u64, len: usize, data: Data) -> Self {
        Self { start, len, data }
    }

    pub fn from_signs(start: u64, values: &[i8]) -> Result<Self> {
        let mut words = vec![0u64; values.len().div_ceil(64)];
        for (i, &v) in values.iter().enumerate() {
            match v {
                1 => {}
                -1 => words[i / 64] |= 1 << (i % 64),
                _ => return Err(MulabError::NonsignValues { index: start + i as u64 }),
            }
        }
        Ok(Self { start, len: values.len(), data: Data::Sign(words) })
    }

    pub fn from_trits(start: u64, values: &[i8]) -> Result<Self> {
        let mut words = vec![0u64; values.len().div_ceil(32)];
        for (i, &v) in values.iter().enumerate() {
            let code = match v {
                0 => TRIT_ZERO,
                1 => TRIT_PLUS,
                -1 => TRIT_MINUS,
                _ => {
                    return Err(MulabError::InvalidArgument(format!(
                        "trit value {v} at index {}",
                        start + i as u64
                    )))
                }
            };
            words[i / 32] |= code << (2 * (i % 32));
        }
        Ok(Self { start, len: values.len(), data: Data::Trit(words) })
    }

    pub fn from_complex(start: u64, values: Vec<Complex64>) -> Self {
        Self { start, len: values.len(), data: Data::Complex(values) }
    }

    /// Pick the most compact storage that represents `values` exactly.
    pub fn from_values_compact(start: u64, values: Vec<Complex64>) -> Self {
        let is_int = |z: &Complex64| z.im == 0.0 && (z.re == 1.0 || z.re == -1.0 || z.re == 0.0);
        if values.iter().all(is_int) {
            let ints: Vec<i8> = values.iter().map(|z| z.re as i8).collect();
            if ints.iter().all(|&v| v != 0) {
                return Self::from_signs(start, &ints).expect("checked sign values");
            }
            return Self::from_trits(start, &ints).expect("checked trit values");
        }
        Self::from_complex(start, values)
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn end(&self) -> u64 {
        self.start + self.len as u64
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn storage(&self) -> Storage {
        match self.data {
            Data::Sign(_) => Storage::Sign1Bit,
            Data::Trit(_) => Storage::Trit2Bit,
            Data::Complex(_) => Storage::ComplexPair,
        }
    }

    pub fn is_sign(&self) -> bool {
        matches!(self.data, Data::Sign(_))
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.start && n < self.end()
    }

    /// Error unless every index in `[lo, hi]` lies in the block.
    pub fn require(&self, lo: u64, hi: u64) -> Result<()> {
        for needed in [lo, hi] {
            if !self.contains(needed) {
                return Err(MulabError::CoverageGap { needed, start: self.start, end: self.end() });
            }
        }
        Ok(())
    }

    #[inline]
    fn offset(&self, n: u64) -> usize {
        debug_assert!(self.contains(n), "index {n} outside block");
        (n - self.start) as usize
    }

    /// Integer value at `n` for sign and trit storage.
    #[inline]
    pub fn get_int(&self, n: u64) -> Option<i8> {
        let i = self.offset(n);
        match &self.data {
            Data::Sign(w) => Some(if (w[i / 64] >> (i % 64)) & 1 == 1 { -1 } else { 1 }),
            Data::Trit(w) => Some(match (w[i / 32] >> (2 * (i % 32))) & 0b11 {
                TRIT_PLUS => 1,
                TRIT_MINUS => -1,
                _ => 0,
            }),
            Data::Complex(_) => None,
        }
    }

    #[inline]
    pub fn get(&self, n: u64) -> Complex64 {
        match &self.data {
            Data::Complex(v) => v[self.offset(n)],
            _ => Complex64::new(self.get_int(n).unwrap() as f64, 0.0),
        }
    }

    /// Unpacked values for `n` in `[lo, hi)`.
    pub fn dense(&self, lo: u64, hi: u64) -> Result<Dense> {
        if hi < lo {
            return Err(MulabError::InvalidRange { start: lo, end: hi });
        }
        if hi > lo {
            self.require(lo, hi - 1)?;
        }
        let a = (lo - self.start) as usize;
        let b = (hi - self.start) as usize;
        Ok(match &self.data {
            Data::Complex(v) => Dense::Complex(v[a..b].to_vec()),
            _ => Dense::Int((lo..hi).map(|n| self.get_int(n).unwrap()).collect()),
        })
    }

    pub fn dense_all(&self) -> Dense {
        self.dense(self.start, self.end()).expect("full range is covered")
    }

    pub fn values(&self) -> Vec<Complex64> {
        (self.start..self.end()).map(|n| self.get(n)).collect()
    }

    /// Max absolute value (the sup norm over the block).
    pub fn sup_norm(&self) -> f64 {
        match &self.data {
            Data::Complex(v) => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
            Data::Sign(_) => {
                if self.len > 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Data::Trit(_) => {
                if (self.start..self.end()).any(|n| self.get_int(n) != Some(0)) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Raw packed words for sign storage.
    pub(crate) fn sign_words(&self) -> Option<&[u64]> {
        match &self.data {
            Data::Sign(w) => Some(w),
            _ => None,
        }
    }

    /// Join blocks over consecutive ranges.
    pub fn concat(blocks: &[SequenceBlock]) -> Result<SequenceBlock> {
        let first = blocks.first().ok_or_else(|| MulabError::InvalidArgument("no blocks".into()))?;
        let storage = first.storage();
        let mut expect = first.start;
        for b in blocks {
            if b.start != expect || b.storage() != storage {
                return Err(MulabError::InvalidArgument(
                    "blocks must be contiguous and share storage".into(),
                ));
            }
            expect = b.end();
        }
        let start = first.start;
        Ok(match storage {
            Storage::ComplexPair => SequenceBlock::from_complex(
                start,
                blocks.iter().flat_map(|b| b.values()).collect(),
            ),
            Storage::Sign1Bit | Storage::Trit2Bit => {
                let ints: Vec<i8> = blocks
                    .iter()
                    .flat_map(|b| (b.start..b.end()).map(move |n| b.get_int(n).unwrap()))
                    .collect();
                if storage == Storage::Sign1Bit {
                    SequenceBlock::from_signs(start, &ints)?
                } else {
                    SequenceBlock::from_trits(start, &ints)?
                }
            }
        })
    }

    /// Packed payload bytes (little-endian bit order within each byte).
    pub fn payload_bytes(&self) -> Vec<u8> {
        match &self.data {
            Data::Sign(w) => pack_words(w, self.len.div_ceil(8)),
            Data::Trit(w) => pack_words(w, self.len.div_ceil(4)),
            Data::Complex(v) => v
                .iter()
                .flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes()))
                .collect(),
        }
    }

    pub fn from_payload(start: u64, len: usize, storage: Storage, bytes: &[u8]) -> Result<Self> {
        let need = match storage {
            Storage::Sign1Bit => len.div_ceil(8),
            Storage::Trit2Bit => len.div_ceil(4),
            Storage::ComplexPair => len * 16,
        };
        if bytes.len() != need {
            return Err(MulabError::Cache(format!(
                "payload has {} bytes, expected {need}",
                bytes.len()
            )));
        }
        let data = match storage {
            Storage::Sign1Bit => Data::Sign(unpack_words(bytes, len.div_ceil(64), len, 1)),
            Storage::Trit2Bit => {
                let w = unpack_words(bytes, len.div_ceil(32), len, 2);
                for (i, word) in w.iter().enumerate() {
                    for j in 0..32 {
                        if (word >> (2 * j)) & 0b11 == 0b10 {
                            return Err(MulabError::Cache(format!(
                                "invalid trit code at entry {}",
                                i * 32 + j
                            )));
                        }
                    }
                }
                Data::Trit(w)
            }
            Storage::ComplexPair => Data::Complex(
                bytes
                    .chunks_exact(16)
                    .map(|c| {
                        let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                        let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                        Complex64::new(re, im)
                    })
                    .collect(),
            ),
        };
        Ok(Self { start, len, data })
    }
}

fn pack_words(words: &[u64], nbytes: usize) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).take(nbytes).collect()
}

fn unpack_words(bytes: &[u8], nwords: usize, len: usize, bits: usize) -> Vec<u64> {
    let mut words = vec![0u64; nwords];
    for (i, chunk) in bytes.chunks(8).enumerate() {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        words[i] = u64::from_le_bytes(buf);
    }
    // clear padding so equality stays bit-exact
    let used = len * bits;
    if used % 64 != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (used % 64)) - 1;
        }
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_roundtrip() {
        let v = [1, -1, -1, 1, -1, 1, -1, -1];
        let b = SequenceBlock::from_signs(1, &v).unwrap();
        assert_eq!(b.storage(), Storage::Sign1Bit);
        let got: Vec<i8> = (1..9).map(|n| b.get_int(n).unwrap()).collect();
        assert_eq!(got, v);
    }

    #[test]
    fn trit_rejects_bad_code_and_roundtrips() {
        let v = [1, 0, -1, 0, 0, 1];
        let b = SequenceBlock::from_trits(5, &v).unwrap();
        assert_eq!(b.get_int(7), Some(-1));
        let bytes = b.payload_bytes();
        assert_eq!(SequenceBlock::from_payload(5, 6, Storage::Trit2Bit, &bytes).unwrap(), b);
        assert!(SequenceBlock::from_payload(5, 6, Storage::Trit2Bit, &[0b10, 0]).is_err());
    }

    #[test]
    fn sign_values_reject_zero() {
        assert!(matches!(
            SequenceBlock::from_signs(3, &[1, 0]),
            Err(MulabError::NonsignValues { index: 4 })
        ));
    }

    #[test]
    fn compact_storage_selection() {
        let c = |r| Complex64::new(r, 0.0);
        assert_eq!(SequenceBlock::from_values_compact(1, vec![c(1.0), c(-1.0)]).storage(), Storage::Sign1Bit);
        assert_eq!(SequenceBlock::from_values_compact(1, vec![c(1.0), c(0.0)]).storage(), Storage::Trit2Bit);
        assert_eq!(
            SequenceBlock::from_values_compact(1, vec![Complex64::new(0.0, 1.0)]).storage(),
            Storage::ComplexPair
        );
    }

    #[test]
    fn coverage_errors() {
        let b = SequenceBlock::from_signs(10, &[1; 5]).unwrap();
        assert!(b.require(10, 14).is_ok());
        assert!(matches!(b.require(10, 15), Err(MulabError::CoverageGap { needed: 15, .. })));
        assert!(b.dense(9, 12).is_err());
    }
}
