//! Seeded hash families and the small-bias seed extender.
//!
//! [`PolyHash`] evaluates the padded input as a polynomial over GF(2^o):
//! the input is length-prefixed (32 bits), zero-padded to `t` bits, cut into
//! o-bit chunks c₀..c_{n-1}, and hashed to Σ cᵢ·α^{i+1} + β. Two distinct
//! inputs collide for at most n of the 2^o choices of α.
//!
//! [`BiasExtender`] stretches a seed (α, β) ∈ GF(2^m)² into a δ-biased
//! string whose bit i is the inner product ⟨α^i, β⟩ over GF(2).

use crate::bits::{push_uint, to_uint};
use crate::error::{param, Error, Result};
use crate::gf2m::Gf2m;
use crate::protocol::TranscriptChunk;

const LENGTH_PREFIX_BITS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashParams {
    /// Maximum payload length in bits.
    pub t: usize,
    /// Output length in bits.
    pub o: u32,
    /// Seed length in bits (always 2o).
    pub sd: usize,
}

impl HashParams {
    pub fn new(t: usize, o: u32) -> Result<Self> {
        if t == 0 || !(2..=64).contains(&o) {
            return Err(param(format!("hash parameters t={t}, o={o} unsupported")));
        }
        if t >= 1 << LENGTH_PREFIX_BITS {
            return Err(param("hash input length must fit the 32-bit prefix"));
        }
        Ok(HashParams { t, o, sd: 2 * o as usize })
    }

    /// Number of o-bit chunks in an encoded input.
    pub fn chunk_count(&self) -> usize {
        (self.t + LENGTH_PREFIX_BITS).div_ceil(self.o as usize)
    }

    /// Worst-case collision probability for two distinct inputs.
    pub fn collision_bound(&self) -> f64 {
        self.chunk_count() as f64 * (-(self.o as f64)).exp2()
    }
}

/// A hash seed split into its two field elements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Seed {
    pub alpha: u64,
    pub beta: u64,
}

impl Seed {
    /// Splits `2w` bits into (α, β), each `w` bits, most significant first.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if !bits.len().is_multiple_of(2) || bits.len() > 128 || bits.is_empty() {
            return Err(param(format!("seed of {} bits cannot be split into two field elements", bits.len())));
        }
        let (a, b) = bits.split_at(bits.len() / 2);
        Ok(Seed { alpha: to_uint(a), beta: to_uint(b) })
    }

    pub fn to_bits(self, width: u32) -> Vec<bool> {
        let mut out = Vec::with_capacity(2 * width as usize);
        push_uint(&mut out, self.alpha, width);
        push_uint(&mut out, self.beta, width);
        out
    }
}

/// Polynomial-evaluation hash family with fixed parameters.
#[derive(Clone, Debug)]
pub struct PolyHash {
    params: HashParams,
    field: Gf2m,
}

impl PolyHash {
    pub fn new(params: HashParams) -> Result<Self> {
        Ok(PolyHash { params, field: Gf2m::new(params.o)? })
    }

    pub fn params(&self) -> &HashParams {
        &self.params
    }

    pub fn hash(&self, x: &[bool], seed: Seed) -> Result<u64> {
        if x.len() > self.params.t {
            return Err(Error::InputTooLong { len: x.len(), max: self.params.t });
        }
        let o = self.params.o as usize;
        let mut prefix = Vec::with_capacity(LENGTH_PREFIX_BITS);
        push_uint(&mut prefix, x.len() as u64, LENGTH_PREFIX_BITS as u32);
        let encoded_len = self.params.chunk_count() * o;
        let bit_at = |i: usize| -> bool {
            if i < LENGTH_PREFIX_BITS {
                prefix[i]
            } else {
                x.get(i - LENGTH_PREFIX_BITS).copied().unwrap_or(false)
            }
        };
        let alpha = seed.alpha & self.field.mask();
        // Horner from the last chunk: acc = (acc + c_i)·α yields Σ c_i α^{i+1}.
        let mut acc = 0u64;
        for chunk_start in (0..encoded_len).step_by(o).rev() {
            let mut c = 0u64;
            for i in chunk_start..chunk_start + o {
                c = (c << 1) | bit_at(i) as u64;
            }
            acc = self.field.mul(acc ^ c, alpha);
        }
        Ok(acc ^ (seed.beta & self.field.mask()))
    }
}

/// One-shot convenience wrapper over [`PolyHash`].
pub fn pairwise_hash(x: &[bool], seed: &[bool], params: &HashParams) -> Result<u64> {
    if seed.len() != params.sd {
        return Err(Error::LengthMismatch { expected: params.sd, actual: seed.len() });
    }
    PolyHash::new(*params)?.hash(x, Seed::from_bits(seed)?)
}

/// Seekable δ-biased generator over GF(2^m).
#[derive(Clone, Debug)]
pub struct BiasExtender {
    target_len: u64,
    delta_log2: u32,
    field: Gf2m,
}

impl BiasExtender {
    /// Output of `target_len` bits with bias at most 2^{-delta_log2}; the field
    /// degree is m = ⌈log₂(ℓ/δ)⌉ + 1.
    pub fn new(target_len: u64, delta_log2: u32) -> Result<Self> {
        if target_len == 0 {
            return Err(param("extender target length must be positive"));
        }
        let m = crate::bits::ceil_log2(target_len) + delta_log2 + 1;
        if m > 64 {
            return Err(param(format!("extender needs GF(2^{m}); at most 64 supported")));
        }
        Ok(BiasExtender { target_len, delta_log2, field: Gf2m::new(m.max(2))? })
    }

    pub fn target_len(&self) -> u64 {
        self.target_len
    }

    pub fn field_degree(&self) -> u32 {
        self.field.degree()
    }

    /// Seed length ℓ′ = 2m.
    pub fn seed_len(&self) -> usize {
        2 * self.field.degree() as usize
    }

    /// Upper bound on the bias: (ℓ − 1)/2^m.
    pub fn bias_bound(&self) -> f64 {
        (self.target_len.saturating_sub(1)) as f64 / (self.field.degree() as f64).exp2()
    }

    pub fn delta(&self) -> f64 {
        (-(self.delta_log2 as f64)).exp2()
    }

    pub fn bit(&self, seed: Seed, index: u64) -> Result<bool> {
        if index >= self.target_len {
            return Err(Error::IndexOutOfRange { index, len: self.target_len });
        }
        let power = self.field.pow(seed.alpha, index);
        Ok((power & seed.beta & self.field.mask()).count_ones() & 1 == 1)
    }

    /// Bits `start..start+len`: one exponentiation, then repeated multiplication.
    pub fn range(&self, seed: Seed, start: u64, len: u64) -> Result<Vec<bool>> {
        let end = start.checked_add(len).filter(|&e| e <= self.target_len);
        if end.is_none() {
            return Err(Error::IndexOutOfRange { index: start.saturating_add(len), len: self.target_len });
        }
        let alpha = seed.alpha & self.field.mask();
        let beta = seed.beta & self.field.mask();
        let mut power = self.field.pow(alpha, start);
        let mut out = Vec::with_capacity(len as usize);
        for _ in 0..len {
            out.push((power & beta).count_ones() & 1 == 1);
            power = self.field.mul(power, alpha);
        }
        Ok(out)
    }

    pub fn extend_all(&self, seed: Seed) -> Vec<bool> {
        self.range(seed, 0, self.target_len).expect("full range is in bounds")
    }
}

pub fn extend_bit(seed: &[bool], index: u64, cfg: &BiasExtender) -> Result<bool> {
    check_extender_seed(seed, cfg)?;
    cfg.bit(Seed::from_bits(seed)?, index)
}

pub fn extend_all(seed: &[bool], cfg: &BiasExtender) -> Result<Vec<bool>> {
    check_extender_seed(seed, cfg)?;
    Ok(cfg.extend_all(Seed::from_bits(seed)?))
}

fn check_extender_seed(seed: &[bool], cfg: &BiasExtender) -> Result<()> {
    if seed.len() != cfg.seed_len() {
        return Err(Error::LengthMismatch { expected: cfg.seed_len(), actual: seed.len() });
    }
    Ok(())
}

/// The chained hash stored in a mega-state together with the seed it was
/// computed under. Both are present or both absent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChainLink {
    pub hash: u64,
    pub seed: Seed,
}

/// Bit widths of the fixed-width fields inside hashed payloads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldWidths {
    /// State identifiers.
    pub state: u32,
    /// Iteration numbers, depths and counters.
    pub counter: u32,
    /// Number of transcript chunks in a block.
    pub chunk_count: u32,
    /// Transcript chunk length r.
    pub chunk_bits: usize,
    /// Big-hash output o₃ (half the big seed).
    pub big_hash: u32,
}

impl FieldWidths {
    /// Length of a big-hash payload holding `chunks` transcript chunks.
    pub fn payload_bits(&self, chunks: usize) -> usize {
        let link = 1 + 3 * self.big_hash as usize;
        link + self.chunk_count as usize + chunks * (self.chunk_bits + self.counter as usize) + self.counter as usize
    }
}

/// Serialises (prev_hash, prev_seed, T, iter). The tag bit and count field
/// make the encoding injective.
pub fn encode_payload<'a>(
    out: &mut Vec<bool>,
    link: Option<&ChainLink>,
    chunks: impl ExactSizeIterator<Item = &'a TranscriptChunk>,
    iter: u64,
    w: &FieldWidths,
) {
    match link {
        Some(l) => {
            out.push(true);
            push_uint(out, l.hash, w.big_hash);
            push_uint(out, l.seed.alpha, w.big_hash);
            push_uint(out, l.seed.beta, w.big_hash);
        }
        None => {
            out.push(false);
            out.extend(std::iter::repeat_n(false, 3 * w.big_hash as usize));
        }
    }
    push_uint(out, chunks.len() as u64, w.chunk_count);
    for c in chunks {
        debug_assert_eq!(c.bits.len(), w.chunk_bits);
        out.extend_from_slice(&c.bits);
        push_uint(out, c.iteration, w.counter);
    }
    push_uint(out, iter, w.counter);
}

/// The three hash families of one run: h₁ and h₂ compose the small hash,
/// h₃ is the big hash.
#[derive(Clone, Debug)]
pub struct HashSuite {
    pub h1: PolyHash,
    pub h2: PolyHash,
    pub h3: PolyHash,
}

impl HashSuite {
    pub fn new(p1: HashParams, o2: u32, p3: HashParams) -> Result<Self> {
        let p2 = HashParams::new(p1.o as usize, o2)?;
        Ok(HashSuite { h1: PolyHash::new(p1)?, h2: PolyHash::new(p2)?, h3: PolyHash::new(p3)? })
    }

    /// h^s(x) = h₂(h₁(x, block chunk), iteration seed).
    pub fn small_hash(&self, x: &[bool], r_iter: Seed, block_chunk: Seed) -> Result<u64> {
        let inner = self.h1.hash(x, block_chunk)?;
        let mut bits = Vec::with_capacity(self.h1.params.o as usize);
        push_uint(&mut bits, inner, self.h1.params.o);
        self.h2.hash(&bits, r_iter)
    }

    pub fn big_hash(&self, payload: &[bool], seed: Seed) -> Result<u64> {
        self.h3.hash(payload, seed)
    }

    /// Small-hash collision bound for distinct inputs under uniform seeds.
    pub fn small_collision_bound(&self) -> f64 {
        self.h1.params.collision_bound() + self.h2.params.collision_bound()
    }
}

/// Deterministic golden vectors for cross-implementation checks: each line is
/// `t o input_bits input_hex seed_hex output_hex`.
pub fn golden_vectors() -> Vec<String> {
    use crate::bits::{from_uint, to_hex};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut lines = Vec::new();
    for &(t, o) in &[(8usize, 4u32), (64, 16), (100, 12), (296, 14), (512, 48), (1024, 64)] {
        let h = PolyHash::new(HashParams::new(t, o).unwrap()).unwrap();
        for case in 0..4 {
            let len = match case {
                0 => 0,
                1 => t,
                _ => rng.gen_range(1..=t),
            };
            let x: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
            let mask = if o == 64 { u64::MAX } else { (1u64 << o) - 1 };
            let seed = Seed { alpha: rng.gen::<u64>() & mask, beta: rng.gen::<u64>() & mask };
            let out = h.hash(&x, seed).unwrap();
            lines.push(format!(
                "{t} {o} {len} {} {} {}",
                if x.is_empty() { "-".to_string() } else { to_hex(&x) },
                to_hex(&seed.to_bits(o)),
                to_hex(&from_uint(out, o))
            ));
        }
    }
    lines
}
