//! Run parameters: user-facing knobs ([`ParamSpec`]) and everything derived
//! from them ([`RunConfig`]).

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::{ceil_log2, width_for};
use crate::ecc::EccConfig;
use crate::error::{param, Error, Result};
use crate::hash::{BiasExtender, FieldWidths, HashParams, HashSuite};

/// How a vote for candidate i is matched against the counterpart's hashes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteRule {
    /// State and chained-hash hashes may match any counterpart candidate j′,
    /// but the depth hash is compared at the same index i.
    Literal,
    /// All three hashes must match the same counterpart candidate j′.
    #[default]
    MatchedIndex,
}

/// User-facing parameters. Every field has a default; `epsilon`, `depth`
/// and `states` describe the instance, the rest are protocol constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub epsilon: f64,
    pub depth: u64,
    /// Upper bound on the number of protocol states (sizes state fields).
    pub states: u64,
    /// Slack multiplier in I_total = ⌈d/r⌉ + ⌈c_i·ε·d⌉.
    pub c_i: f64,
    /// Output length o₂ of the outer small hash.
    pub c_hash: u32,
    /// Big-hash output o₃ = c_b·⌈log₂ d⌉.
    pub c_b: u32,
    /// Extender bias δ = 2^{-c_delta·I_block}.
    pub c_delta: u32,
    /// Overrides r_c = max(2, ⌈log₂log₂(1/ε)⌉).
    pub r_c: Option<u32>,
    pub vote_threshold: f64,
    pub mp3_enabled: bool,
    pub vote_rule: VoteRule,
    /// Reset k, E and the votes after a successful jump.
    pub reset_status_on_jump: bool,
    /// Clear Rew when the error-count reset fires.
    pub rew_reset_on_error: bool,
    /// Offer the root as MP3 while still at depth 0.
    pub root_candidate: bool,
    pub seed: u64,
}

impl Default for ParamSpec {
    fn default() -> Self {
        ParamSpec {
            epsilon: 0.01,
            depth: 4096,
            states: 1 << 14,
            c_i: 4.0,
            c_hash: 12,
            c_b: 4,
            c_delta: 2,
            r_c: None,
            vote_threshold: 0.4,
            mp3_enabled: true,
            vote_rule: VoteRule::MatchedIndex,
            reset_status_on_jump: true,
            rew_reset_on_error: false,
            root_candidate: true,
            seed: 0,
        }
    }
}

impl ParamSpec {
    pub fn new(epsilon: f64, depth: u64) -> Self {
        ParamSpec { epsilon, depth, ..Default::default() }
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ParamSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected key = value, got {line:?}")))?;
            spec.set(key.trim(), value.trim()).map_err(|e| perr(e.to_string()))?;
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| param(format!("{key}: cannot parse {v:?}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "on" | "1" | "yes" => Ok(true),
                "false" | "off" | "0" | "no" => Ok(false),
                _ => Err(param(format!("{key}: expected on/off, got {v:?}"))),
            }
        }
        match key {
            "epsilon" => self.epsilon = num(key, value)?,
            "depth" => self.depth = num(key, value)?,
            "states" => self.states = num(key, value)?,
            "c_i" => self.c_i = num(key, value)?,
            "c_hash" => self.c_hash = num(key, value)?,
            "c_b" => self.c_b = num(key, value)?,
            "c_delta" => self.c_delta = num(key, value)?,
            "r_c" => self.r_c = Some(num(key, value)?),
            "vote_threshold" => self.vote_threshold = num(key, value)?,
            "mp3_enabled" => self.mp3_enabled = flag(key, value)?,
            "vote_rule" => {
                self.vote_rule = match value {
                    "literal" => VoteRule::Literal,
                    "matched" => VoteRule::MatchedIndex,
                    _ => return Err(param(format!("vote_rule: expected literal or matched, got {value:?}"))),
                }
            }
            "reset_status_on_jump" => self.reset_status_on_jump = flag(key, value)?,
            "rew_reset_on_error" => self.rew_reset_on_error = flag(key, value)?,
            "root_candidate" => self.root_candidate = flag(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(param(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }
}

/// Encoders and hash families shared by both parties of a run.
#[derive(Debug)]
pub struct Codecs {
    pub hashes: HashSuite,
    pub extender: BiasExtender,
    /// Protects the extender seed sent at the start of each block.
    pub block_seed_ecc: EccConfig,
    /// Protects each half of the big-hash seed.
    pub big_seed_ecc: EccConfig,
}

/// Fully derived parameters of a run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: ParamSpec,
    pub r_c: u32,
    /// Rounds simulated per iteration.
    pub r: usize,
    pub i_block: u64,
    pub i_total: u64,
    pub b_total: u64,
    pub o1: u32,
    pub o2: u32,
    pub o3: u32,
    pub sd1: usize,
    pub sd2: usize,
    pub sd3: usize,
    pub t1: usize,
    pub t3: usize,
    pub widths: FieldWidths,
    pub codecs: Arc<Codecs>,
}

/// ⌈x⌉ robust to representation error just above an integer.
fn ceil_tol(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as u64
    } else {
        x.ceil() as u64
    }
}

pub fn derive_params(spec: &ParamSpec) -> Result<RunConfig> {
    let eps = spec.epsilon;
    if !(eps > 0.0 && eps < 0.125) {
        return Err(param(format!("epsilon must lie in (0, 1/8), got {eps}")));
    }
    if spec.depth < 16 {
        return Err(param(format!("depth must be at least 16, got {}", spec.depth)));
    }
    if spec.states < spec.depth + 1 {
        return Err(param("states must be at least depth + 1"));
    }
    if spec.c_i < 0.0 || spec.c_hash < 2 || spec.c_b == 0 || !(0.0..=1.0).contains(&spec.vote_threshold) {
        return Err(param("constants out of range"));
    }
    let d = spec.depth;
    let log_inv_eps = ceil_tol((1.0 / eps).log2());
    let r_c = spec.r_c.unwrap_or_else(|| ceil_tol((1.0 / eps).log2().log2()).max(2) as u32);
    let r = ceil_tol((r_c as f64 / eps).sqrt()) as usize;
    let i_block = ceil_log2(d) as u64;
    let i_total = d.div_ceil(r as u64) + ceil_tol(spec.c_i * eps * d as f64);
    let b_total = i_total.div_ceil(i_block);
    let iterations = b_total * i_block;

    let o1 = (2 * log_inv_eps) as u32;
    let o2 = spec.c_hash;
    let o3 = spec.c_b * i_block as u32;
    if o1 > 64 || o2 > 64 || o3 > 64 {
        return Err(param(format!("hash outputs o1={o1}, o2={o2}, o3={o3} exceed 64 bits")));
    }
    let widths = FieldWidths {
        state: width_for(spec.states - 1),
        counter: width_for(iterations),
        chunk_count: width_for(i_block),
        chunk_bits: r,
        big_hash: o3,
    };
    let log_d = i_block as usize;
    let t1 = ceil_log2(spec.states) as usize + 2 * r * log_d + 2 * log_d * log_d + 64;
    let largest_payload = widths.payload_bits(i_block as usize);
    let small_input = 1 + largest_payload.max(widths.state as usize).max(widths.counter as usize);
    if small_input > t1 {
        return Err(param(format!("small-hash input of {small_input} bits exceeds t1 = {t1}")));
    }
    let t3 = largest_payload + 64;

    let p1 = HashParams::new(t1, o1)?;
    let p3 = HashParams::new(t3, o3)?;
    let hashes = HashSuite::new(p1, o2, p3)?;
    let extender = BiasExtender::new(p1.sd as u64 * i_block, spec.c_delta * i_block as u32)?;
    let block_seed_ecc = EccConfig::new(extender.seed_len(), i_block as usize)?;
    let big_seed_ecc = EccConfig::new(o3 as usize, i_block as usize)?;
    for ecc in [&block_seed_ecc, &big_seed_ecc] {
        if !ecc.within_rate_bound() {
            return Err(param(format!(
                "code for {}-bit messages has block length {} above 3(l + I_block m)",
                ecc.msg_len(),
                ecc.block_len()
            )));
        }
    }
    Ok(RunConfig {
        spec: spec.clone(),
        r_c,
        r,
        i_block,
        i_total,
        b_total,
        o1,
        o2,
        o3,
        sd1: p1.sd,
        sd2: 2 * o2 as usize,
        sd3: p3.sd,
        t1,
        t3,
        widths,
        codecs: Arc::new(Codecs { hashes, extender, block_seed_ecc, big_seed_ecc }),
    })
}

impl RunConfig {
    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    pub fn depth(&self) -> u64 {
        self.spec.depth
    }

    /// Iterations actually executed: B_total full blocks.
    pub fn iterations(&self) -> u64 {
        self.b_total * self.i_block
    }

    /// Iterations of correct simulation needed to finish the protocol.
    pub fn needed_iterations(&self) -> u64 {
        self.spec.depth.div_ceil(self.r as u64)
    }

    pub fn summary(&self) -> ConfigSummary {
        ConfigSummary {
            epsilon: self.spec.epsilon,
            depth: self.spec.depth,
            states: self.spec.states,
            r_c: self.r_c,
            r: self.r,
            i_block: self.i_block,
            i_total: self.i_total,
            b_total: self.b_total,
            o1: self.o1,
            o2: self.o2,
            o3: self.o3,
            t1: self.t1,
            t3: self.t3,
            extender_seed_bits: self.codecs.extender.seed_len(),
            total_rounds: crate::schedule::Schedule::new(self).total_rounds(),
            mp3_enabled: self.spec.mp3_enabled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub epsilon: f64,
    pub depth: u64,
    pub states: u64,
    pub r_c: u32,
    pub r: usize,
    pub i_block: u64,
    pub i_total: u64,
    pub b_total: u64,
    pub o1: u32,
    pub o2: u32,
    pub o3: u32,
    pub t1: usize,
    pub t3: usize,
    pub extender_seed_bits: usize,
    pub total_rounds: u64,
    pub mp3_enabled: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameters() {
        let cfg = derive_params(&ParamSpec::new(0.01, 4096)).unwrap();
        assert_eq!((cfg.r_c, cfg.r, cfg.i_block), (3, 18, 12));
        // ⌈4096/18⌉ + ⌈4·0.01·4096⌉ = 228 + 164
        assert_eq!(cfg.i_total, 392);
        assert_eq!(cfg.b_total, 33);
        assert_eq!((cfg.o1, cfg.o2, cfg.o3), (14, 12, 48));
        assert_eq!(cfg.sd1, 28);
        assert_eq!(cfg.codecs.extender.target_len(), 336);
        // δ = 2^-24 at I_block = 12: ℓ′ ≤ 2(⌈log₂(ℓ·d²)⌉ + 1)
        let bound = 2 * ((336f64 * 4096f64 * 4096f64).log2().ceil() as usize + 1);
        assert!(cfg.codecs.extender.seed_len() <= bound);
    }

    #[test]
    fn range_checks() {
        assert!(derive_params(&ParamSpec::new(0.25, 16)).is_err());
        assert!(derive_params(&ParamSpec::new(0.0, 4096)).is_err());
        assert!(derive_params(&ParamSpec::new(0.01, 15)).is_err());
        assert!(derive_params(&ParamSpec::new(0.1, 16)).is_ok());
    }

    #[test]
    fn deterministic() {
        let a = derive_params(&ParamSpec::new(0.005, 8192)).unwrap();
        let b = derive_params(&ParamSpec::new(0.005, 8192)).unwrap();
        assert_eq!(a.summary(), b.summary());
    }

    #[test]
    fn config_text() {
        let spec = ParamSpec::parse("# sweep point\nepsilon = 0.02\ndepth=1024\nmp3_enabled = off\nseed = 9\n").unwrap();
        assert_eq!(spec.epsilon, 0.02);
        assert_eq!(spec.depth, 1024);
        assert!(!spec.mp3_enabled);
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.c_b, 4);
        assert!(matches!(ParamSpec::parse("epsilon 0.1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ParamSpec::parse("\nbogus = 1"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn sweep_grid_is_constructible() {
        for eps in [0.1, 0.05, 0.02, 0.01, 0.005, 0.002] {
            for d in [16u64, 256, 1024, 4096, 8192, 1 << 14] {
                let spec = ParamSpec { epsilon: eps, depth: d, states: (1 << 15).max(d + 1), ..Default::default() };
                derive_params(&spec).unwrap_or_else(|e| panic!("eps={eps} d={d}: {e}"));
            }
        }
    }
}
