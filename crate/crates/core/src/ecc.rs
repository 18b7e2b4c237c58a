//! Systematic Reed–Solomon code over GF(2^m) used to protect randomness
//! exchanges. With `4·guard + 1` parity symbols the minimum symbol distance is
//! `4·guard + 2`, so any `2·guard` bit flips (touching at most `2·guard`
//! symbols) are corrected.

use crate::bits::{push_uint, to_uint};
use crate::error::{param, Error, Result};
use crate::gf2m::GfTables;

#[derive(Clone, Debug)]
pub struct EccConfig {
    msg_len: usize,
    guard: usize,
    m: u32,
    data_symbols: usize,
    parity_symbols: usize,
    tables: GfTables,
    /// Generator polynomial, highest degree first, monic.
    generator: Vec<u32>,
}

impl EccConfig {
    pub fn new(msg_len: usize, guard: usize) -> Result<Self> {
        if msg_len == 0 {
            return Err(param("ECC message length must be positive"));
        }
        let parity_symbols = 4 * guard + 1;
        let m = (2u32..=20)
            .find(|&m| (1usize << m) > msg_len.div_ceil(m as usize) + parity_symbols)
            .ok_or_else(|| param(format!("no symbol size up to 20 bits fits a {msg_len}-bit message")))?;
        let tables = GfTables::new(m)?;
        let mut generator = vec![1u32];
        for i in 1..=parity_symbols {
            // Multiply by (x + α^i).
            let root = tables.alpha_pow(i);
            let mut next = vec![0u32; generator.len() + 1];
            for (j, &g) in generator.iter().enumerate() {
                next[j] ^= g;
                next[j + 1] ^= tables.mul(g, root);
            }
            generator = next;
        }
        Ok(EccConfig {
            msg_len,
            guard,
            m,
            data_symbols: msg_len.div_ceil(m as usize),
            parity_symbols,
            tables,
            generator,
        })
    }

    pub fn msg_len(&self) -> usize {
        self.msg_len
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    pub fn symbol_bits(&self) -> u32 {
        self.m
    }

    pub fn block_len(&self) -> usize {
        (self.data_symbols + self.parity_symbols) * self.m as usize
    }

    /// Guaranteed number of correctable bit flips.
    pub fn radius(&self) -> usize {
        2 * self.guard
    }

    /// Whether block_len ≤ 3·(ℓ + guard·m).
    pub fn within_rate_bound(&self) -> bool {
        self.block_len() <= 3 * (self.msg_len + self.guard * self.m as usize)
    }

    fn symbols_of(&self, bits: &[bool]) -> Vec<u32> {
        let m = self.m as usize;
        (0..self.data_symbols)
            .map(|s| {
                let mut v = 0u32;
                for i in s * m..(s + 1) * m {
                    v = (v << 1) | bits.get(i).copied().unwrap_or(false) as u32;
                }
                v
            })
            .collect()
    }

    fn bits_of(&self, symbols: &[u32]) -> Vec<bool> {
        let mut out = Vec::with_capacity(symbols.len() * self.m as usize);
        for &s in symbols {
            push_uint(&mut out, s as u64, self.m);
        }
        out
    }

    pub fn encode(&self, msg: &[bool]) -> Result<Vec<bool>> {
        if msg.len() != self.msg_len {
            return Err(Error::LengthMismatch { expected: self.msg_len, actual: msg.len() });
        }
        let data = self.symbols_of(msg);
        // Long division of data·x^p by the generator; the remainder is parity.
        let mut rem = vec![0u32; self.parity_symbols];
        for &d in &data {
            let factor = d ^ rem[0];
            rem.rotate_left(1);
            *rem.last_mut().unwrap() = 0;
            if factor != 0 {
                for (r, &g) in rem.iter_mut().zip(&self.generator[1..]) {
                    *r ^= self.tables.mul(g, factor);
                }
            }
        }
        let mut codeword = data;
        codeword.extend(rem);
        Ok(self.bits_of(&codeword))
    }

    /// Corrects up to `radius()` flips; beyond that returns a best-effort
    /// message of the right length.
    pub fn decode(&self, received: &[bool]) -> Result<Vec<bool>> {
        if received.len() != self.block_len() {
            return Err(Error::LengthMismatch { expected: self.block_len(), actual: received.len() });
        }
        let m = self.m as usize;
        let mut word: Vec<u32> = received.chunks(m).map(|c| to_uint(c) as u32).collect();
        self.correct(&mut word);
        let mut bits = self.bits_of(&word[..self.data_symbols]);
        bits.truncate(self.msg_len);
        Ok(bits)
    }

    fn correct(&self, word: &mut [u32]) {
        let t = &self.tables;
        let n = word.len();
        let p = self.parity_symbols;
        let syndromes: Vec<u32> = (1..=p)
            .map(|j| {
                let x = t.alpha_pow(j);
                word.iter().fold(0u32, |acc, &c| t.mul(acc, x) ^ c)
            })
            .collect();
        if syndromes.iter().all(|&s| s == 0) {
            return;
        }
        let locator = berlekamp_massey(t, &syndromes);
        let errors = locator.len() - 1;
        if 2 * errors > p {
            return;
        }
        // Chien search: position i holds the coefficient of x^{n-1-i}.
        let order = t.order();
        let mut positions = Vec::with_capacity(errors);
        for i in 0..n {
            let e = n - 1 - i;
            let x_inv = t.alpha_pow(order - e % order);
            if eval_low_first(t, &locator, x_inv) == 0 {
                positions.push(i);
            }
        }
        if positions.len() != errors {
            return;
        }
        // Forney with first consecutive root α¹: Y = Ω(X⁻¹)/Λ′(X⁻¹).
        let mut omega = vec![0u32; p];
        for (i, &s) in syndromes.iter().enumerate() {
            for (j, &l) in locator.iter().enumerate() {
                if i + j < p {
                    omega[i + j] ^= t.mul(s, l);
                }
            }
        }
        let derivative: Vec<u32> = locator
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| if k % 2 == 1 { c } else { 0 })
            .collect();
        let mut fixed = word.to_vec();
        for &i in &positions {
            let e = n - 1 - i;
            let x_inv = t.alpha_pow(order - e % order);
            let denom = eval_low_first(t, &derivative, x_inv);
            if denom == 0 {
                return;
            }
            fixed[i] ^= t.div(eval_low_first(t, &omega, x_inv), denom);
        }
        word.copy_from_slice(&fixed);
    }
}

fn eval_low_first(t: &GfTables, poly: &[u32], x: u32) -> u32 {
    poly.iter().rev().fold(0u32, |acc, &c| t.mul(acc, x) ^ c)
}

/// Error-locator polynomial (lowest degree first, Λ(0) = 1) for syndromes S₁..S_p.
fn berlekamp_massey(t: &GfTables, s: &[u32]) -> Vec<u32> {
    let mut c = vec![1u32];
    let mut b = vec![1u32];
    let mut len = 0usize;
    let mut shift = 1usize;
    let mut last = 1u32;
    for n in 0..s.len() {
        let mut d = s[n];
        for i in 1..=len.min(c.len() - 1) {
            d ^= t.mul(c[i], s[n - i]);
        }
        if d == 0 {
            shift += 1;
            continue;
        }
        let coef = t.div(d, last);
        let mut next = c.clone();
        if next.len() < b.len() + shift {
            next.resize(b.len() + shift, 0);
        }
        for (i, &bi) in b.iter().enumerate() {
            next[i + shift] ^= t.mul(coef, bi);
        }
        if 2 * len <= n {
            len = n + 1 - len;
            b = c;
            last = d;
            shift = 1;
        } else {
            shift += 1;
        }
        c = next;
    }
    c.truncate(len + 1);
    c.resize(len + 1, 0);
    c
}

pub fn ecc_encode(msg: &[bool], cfg: &EccConfig) -> Result<Vec<bool>> {
    cfg.encode(msg)
}

pub fn ecc_decode(received: &[bool], cfg: &EccConfig) -> Result<Vec<bool>> {
    cfg.decode(received)
}

/// Deterministic encoder vectors: each line is
/// `msg_len guard message_hex codeword_hex`.
pub fn golden_vectors() -> Vec<String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xecc);
    [(16, 1), (36, 2), (64, 3), (130, 12)]
        .into_iter()
        .map(|(len, guard)| {
            let cfg = EccConfig::new(len, guard).expect("fixed sizes are valid");
            let msg: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
            let word = cfg.encode(&msg).expect("message length matches");
            format!("{len} {guard} {} {}", crate::bits::to_hex(&msg), crate::bits::to_hex(&word))
        })
        .collect()
}
