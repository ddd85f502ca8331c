//! Shortened BCH code over GF(2^7) for the multi-bit codecs.
//!
//! Defaults: n = 127, t = 5 (k = 92), shortened by 36 to a 56-bit data /
//! 91-bit codeword, padded with 9 zero bits to a 100-bit payload. The decoder
//! runs syndromes, Berlekamp-Massey and Chien search, and fails hard beyond
//! the correction capacity — that sharp failure edge is the point of the code.
//!
//! Field: GF(2^7) with primitive polynomial x^7 + x^3 + 1 (0x89).

use serde::{Deserialize, Serialize};
use thiserror::Error;

const M: usize = 7;
const N: usize = 127;
const PRIM_POLY: u16 = 0x89;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EccError {
    #[error("unsupported t={0}; expected 1..=10")]
    BadT(usize),
    #[error("shorten={0} leaves no data bits (k={1})")]
    BadShorten(usize, usize),
    #[error("data length {0} does not match code data length {1}")]
    DataLength(usize, usize),
    #[error("received length {0} does not match padded codeword length {1}")]
    ReceivedLength(usize, usize),
    #[error("payload unrecoverable: more errors than the correction capacity")]
    DecodeFailure,
}

/// 100-bit (by default) coded payload; trailing pad bits are zero at encode
/// time and ignored by the decoder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codeword {
    pub bits: Vec<u8>,
}

struct Gf {
    exp: [u8; 256],
    log: [u8; 128],
}

impl Gf {
    fn new() -> Self {
        let mut exp = [0u8; 256];
        let mut log = [0u8; 128];
        let mut x = 1u16;
        for i in 0..(N * 2) {
            exp[i % 256] = x as u8;
            if i < N {
                log[x as usize] = i as u8;
            }
            x <<= 1;
            if x & (1 << M) != 0 {
                x ^= PRIM_POLY;
            }
        }
        // exp is periodic with period N; fill the wrap region explicitly
        for i in 0..256 {
            let mut y = 1u16;
            for _ in 0..(i % N) {
                y <<= 1;
                if y & (1 << M) != 0 {
                    y ^= PRIM_POLY;
                }
            }
            exp[i] = y as u8;
        }
        Self { exp, log }
    }

    #[inline]
    fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] as usize + self.log[b as usize] as usize) % N]
        }
    }

    #[inline]
    fn inv(&self, a: u8) -> u8 {
        debug_assert!(a != 0);
        self.exp[(N - self.log[a as usize] as usize) % N]
    }

    #[inline]
    fn pow_alpha(&self, e: usize) -> u8 {
        self.exp[e % N]
    }
}

/// BCH code configuration plus derived tables.
pub struct BchCode {
    pub t: usize,
    pub shorten: usize,
    pub pad: usize,
    /// Message length of the full (unshortened) code.
    pub k: usize,
    /// Generator polynomial bits, g[0] = coefficient of x^0.
    generator: Vec<u8>,
    gf: Gf,
}

impl Default for BchCode {
    fn default() -> Self {
        Self::new(5, 36, 9).expect("default parameters are valid")
    }
}

impl BchCode {
    pub fn new(t: usize, shorten: usize, pad: usize) -> Result<Self, EccError> {
        if !(1..=10).contains(&t) {
            return Err(EccError::BadT(t));
        }
        let gf = Gf::new();
        let generator = generator_poly(&gf, t);
        let k = N - (generator.len() - 1);
        if shorten >= k {
            return Err(EccError::BadShorten(shorten, k));
        }
        Ok(Self { t, shorten, pad, k, generator, gf })
    }

    /// Data bits accepted by `encode`.
    pub fn data_len(&self) -> usize {
        self.k - self.shorten
    }

    /// Transmitted codeword bits (before padding).
    pub fn coded_len(&self) -> usize {
        N - self.shorten
    }

    /// Padded payload length as embedded by codecs.
    pub fn padded_len(&self) -> usize {
        self.coded_len() + self.pad
    }

    /// Raw bit accuracy below which decoding is expected to fail:
    /// 1 - t / coded_len.
    pub fn failure_ba_threshold(&self) -> f64 {
        1.0 - self.t as f64 / self.coded_len() as f64
    }

    /// Systematic encode: data bits appear verbatim, parity appended, pad
    /// zeros after that.
    pub fn encode(&self, data: &[u8]) -> Result<Codeword, EccError> {
        if data.len() != self.data_len() {
            return Err(EccError::DataLength(data.len(), self.data_len()));
        }
        let parity = self.parity_of(data);
        let mut bits = Vec::with_capacity(self.padded_len());
        bits.extend_from_slice(data);
        bits.extend_from_slice(&parity);
        bits.resize(self.padded_len(), 0);
        Ok(Codeword { bits })
    }

    /// Remainder of msg(x) * x^(n-k) divided by g(x), as n-k parity bits.
    /// The message is the shortened prefix of zeros followed by `data`;
    /// data[0] is the highest-degree message coefficient.
    fn parity_of(&self, data: &[u8]) -> Vec<u8> {
        let deg_g = self.generator.len() - 1;
        let mut reg = vec![0u8; deg_g];
        for &bit in data {
            let feedback = bit ^ reg[deg_g - 1];
            for i in (1..deg_g).rev() {
                reg[i] = reg[i - 1] ^ (feedback & self.generator[i]);
            }
            reg[0] = feedback & self.generator[0];
        }
        // reg[deg_g-1] is the highest-degree remainder coefficient; emit in
        // transmitted order (descending degree).
        reg.iter().rev().copied().collect()
    }

    /// Decode a received padded codeword. Returns the data bits and the
    /// number of corrected errors, or `DecodeFailure` when more than `t`
    /// errors are present.
    pub fn decode(&self, received: &Codeword) -> Result<(Vec<u8>, usize), EccError> {
        if received.bits.len() != self.padded_len() {
            return Err(EccError::ReceivedLength(received.bits.len(), self.padded_len()));
        }
        let gf = &self.gf;
        // Reconstruct the full-length word: full[idx] is the coefficient of
        // x^(N-1-idx); the first `shorten` message positions are zero.
        let mut full = vec![0u8; N];
        full[self.shorten..N].copy_from_slice(&received.bits[..self.coded_len()]);

        // Syndromes S_j = r(alpha^j), j = 1..2t.
        let mut syndromes = vec![0u8; 2 * self.t];
        let mut any = false;
        for (j, s) in syndromes.iter_mut().enumerate() {
            let mut acc = 0u8;
            for (idx, &bit) in full.iter().enumerate() {
                if bit == 1 {
                    acc ^= gf.pow_alpha((j + 1) * (N - 1 - idx));
                }
            }
            *s = acc;
            any |= acc != 0;
        }
        if !any {
            return Ok((full[self.shorten..self.k].to_vec(), 0));
        }

        // Berlekamp-Massey for the error locator sigma(x).
        let mut sigma = vec![0u8; 2 * self.t + 2];
        let mut prev = vec![0u8; 2 * self.t + 2];
        sigma[0] = 1;
        prev[0] = 1;
        let mut l = 0usize;
        let mut m_gap = 1usize;
        let mut b = 1u8;
        for n_iter in 0..(2 * self.t) {
            let mut d = syndromes[n_iter];
            for i in 1..=l {
                d ^= gf.mul(sigma[i], syndromes[n_iter - i]);
            }
            if d == 0 {
                m_gap += 1;
            } else if 2 * l <= n_iter {
                let temp = sigma.clone();
                let coef = gf.mul(d, gf.inv(b));
                for i in 0..(sigma.len() - m_gap) {
                    sigma[i + m_gap] ^= gf.mul(coef, prev[i]);
                }
                l = n_iter + 1 - l;
                prev = temp;
                b = d;
                m_gap = 1;
            } else {
                let coef = gf.mul(d, gf.inv(b));
                for i in 0..(sigma.len() - m_gap) {
                    sigma[i + m_gap] ^= gf.mul(coef, prev[i]);
                }
                m_gap += 1;
            }
        }
        if l > self.t {
            return Err(EccError::DecodeFailure);
        }

        // Chien search over valid (transmitted) positions only.
        let mut error_indices = Vec::new();
        for pow in 0..N {
            // candidate error at power `pow` <=> sigma(alpha^-pow) == 0
            let mut acc = 0u8;
            for (i, &c) in sigma.iter().enumerate().take(l + 1) {
                if c != 0 {
                    acc ^= gf.mul(c, gf.pow_alpha((i * (N - pow)) % N));
                }
            }
            if acc == 0 {
                let idx = N - 1 - pow;
                if idx < self.shorten {
                    // errors cannot occur in the shortened region
                    return Err(EccError::DecodeFailure);
                }
                error_indices.push(idx);
            }
        }
        if error_indices.len() != l {
            return Err(EccError::DecodeFailure);
        }
        for &idx in &error_indices {
            full[idx] ^= 1;
        }

        // Corrected word must be a codeword; beyond-capacity patterns that
        // slip through BM are rejected here.
        for j in 1..=(2 * self.t) {
            let mut acc = 0u8;
            for (idx, &bit) in full.iter().enumerate() {
                if bit == 1 {
                    acc ^= gf.pow_alpha(j * (N - 1 - idx));
                }
            }
            if acc != 0 {
                return Err(EccError::DecodeFailure);
            }
        }
        Ok((full[self.shorten..self.k].to_vec(), l))
    }
}

/// Generator polynomial: product of the distinct minimal polynomials of
/// alpha^1 .. alpha^2t. Coefficient vector with g[0] = x^0 term.
fn generator_poly(gf: &Gf, t: usize) -> Vec<u8> {
    let mut covered = [false; N];
    let mut g = vec![1u8]; // polynomial "1"
    for e in 1..=(2 * t) {
        if covered[e] {
            continue;
        }
        // conjugacy class of alpha^e
        let mut class = Vec::new();
        let mut c = e;
        loop {
            class.push(c);
            covered[c] = true;
            c = (c * 2) % N;
            if c == e {
                break;
            }
        }
        // minimal polynomial = prod (x - alpha^c) over the class, computed in
        // GF(2^7); coefficients land in GF(2).
        let mut min_poly = vec![1u8];
        for &c in &class {
            let root = gf.pow_alpha(c);
            let mut next = vec![0u8; min_poly.len() + 1];
            for (i, &coef) in min_poly.iter().enumerate() {
                next[i + 1] ^= coef;
                next[i] ^= gf.mul(coef, root);
            }
            min_poly = next;
        }
        debug_assert!(min_poly.iter().all(|&c| c <= 1), "minimal poly not binary");
        // multiply g by min_poly over GF(2)
        let mut next = vec![0u8; g.len() + min_poly.len() - 1];
        for (i, &a) in g.iter().enumerate() {
            if a == 1 {
                for (j, &b) in min_poly.iter().enumerate() {
                    next[i + j] ^= b;
                }
            }
        }
        g = next;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::WatermarkKey;

    #[test]
    fn default_dimensions() {
        let code = BchCode::default();
        assert_eq!(code.k, 92);
        assert_eq!(code.data_len(), 56);
        assert_eq!(code.coded_len(), 91);
        assert_eq!(code.padded_len(), 100);
        assert!((code.failure_ba_threshold() - (1.0 - 5.0 / 91.0)).abs() < 1e-12);
    }

    /// Independent check of the generator: evaluate g at alpha^1..alpha^10
    /// using direct carry-less polynomial arithmetic (no shared tables).
    #[test]
    fn generator_has_required_roots() {
        fn gf_mul_direct(mut a: u16, mut b: u16) -> u16 {
            let mut acc = 0u16;
            while b != 0 {
                if b & 1 != 0 {
                    acc ^= a;
                }
                a <<= 1;
                if a & 0x80 != 0 {
                    a ^= PRIM_POLY;
                }
                b >>= 1;
            }
            acc
        }
        let code = BchCode::default();
        assert_eq!(code.generator.len() - 1, 35);
        for e in 1..=10usize {
            // alpha^e by repeated multiplication
            let mut root = 1u16;
            for _ in 0..e {
                root = gf_mul_direct(root, 2);
            }
            // evaluate g(root) by Horner from the top coefficient
            let mut acc = 0u16;
            for &c in code.generator.iter().rev() {
                acc = gf_mul_direct(acc, root) ^ c as u16;
            }
            assert_eq!(acc, 0, "alpha^{e} is not a root");
        }
    }

    #[test]
    fn zero_data_encodes_to_zero() {
        let code = BchCode::default();
        let cw = code.encode(&vec![0u8; 56]).unwrap();
        assert!(cw.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn encoding_is_linear() {
        let code = BchCode::default();
        let k1 = WatermarkKey::from_u64(1, "ecc");
        let k2 = WatermarkKey::from_u64(2, "ecc");
        let d1: Vec<u8> =
            crate::key::random_payload(&k1, 56).unwrap().bits().to_vec();
        let d2: Vec<u8> =
            crate::key::random_payload(&k2, 56).unwrap().bits().to_vec();
        let dx: Vec<u8> = d1.iter().zip(&d2).map(|(a, b)| a ^ b).collect();
        let c1 = code.encode(&d1).unwrap();
        let c2 = code.encode(&d2).unwrap();
        let cx = code.encode(&dx).unwrap();
        let xor: Vec<u8> = c1.bits.iter().zip(&c2.bits).map(|(a, b)| a ^ b).collect();
        assert_eq!(xor, cx.bits);
    }

    #[test]
    fn wrong_lengths_error() {
        let code = BchCode::default();
        assert_eq!(code.encode(&[0u8; 10]), Err(EccError::DataLength(10, 56)));
        let short = Codeword { bits: vec![0u8; 91] };
        assert!(matches!(code.decode(&short), Err(EccError::ReceivedLength(91, 100))));
    }

    #[test]
    fn clean_roundtrip() {
        let code = BchCode::default();
        let data: Vec<u8> =
            crate::key::random_payload(&WatermarkKey::from_u64(3, "ecc"), 56)
                .unwrap()
                .bits()
                .to_vec();
        let cw = code.encode(&data).unwrap();
        let (decoded, fixed) = code.decode(&cw).unwrap();
        assert_eq!(decoded, data);
        assert_eq!(fixed, 0);
    }
}
