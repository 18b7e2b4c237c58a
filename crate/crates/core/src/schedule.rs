//! The fixed round schedule shared by both parties. Apart from ownership of
//! simulation rounds, who transmits in which round depends only on the
//! configuration, so the parties stay aligned whatever the adversary does.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::protocol::Party;

/// Number of small-hash values each party sends per iteration: k, v, the
/// mega-state chain hash, and (v, chain, depth) for three candidates.
pub const HASH_VALUES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    /// Error-protected extender seed for the block's small hashes.
    BlockSeed,
    /// Raw per-iteration seed for the outer small hash.
    IterSeed,
    /// One small-hash value; `index` follows [`HashSlot`] order.
    Hash { index: u8 },
    /// `r` rounds of the original protocol (or dummy zeros).
    Simulation,
    /// Error-protected first half of the big-hash seed.
    BigSeedFirst,
    /// Error-protected second half of the big-hash seed.
    BigSeedSecond,
}

/// Meaning of each of the [`HASH_VALUES`] hash slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HashSlot {
    Counter,
    State,
    Chain,
    CandidateState(usize),
    CandidateChain(usize),
    CandidateDepth(usize),
}

impl HashSlot {
    pub fn from_index(i: usize) -> HashSlot {
        match i {
            0 => HashSlot::Counter,
            1 => HashSlot::State,
            2 => HashSlot::Chain,
            _ => {
                let c = (i - 3) / 3;
                match (i - 3) % 3 {
                    0 => HashSlot::CandidateState(c),
                    1 => HashSlot::CandidateChain(c),
                    _ => HashSlot::CandidateDepth(c),
                }
            }
        }
    }

    pub fn index(self) -> usize {
        match self {
            HashSlot::Counter => 0,
            HashSlot::State => 1,
            HashSlot::Chain => 2,
            HashSlot::CandidateState(c) => 3 + 3 * c,
            HashSlot::CandidateChain(c) => 4 + 3 * c,
            HashSlot::CandidateDepth(c) => 5 + 3 * c,
        }
    }
}

/// One contiguous run of rounds with a single designated sender.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// `None` for simulation rounds, where the protocol state decides.
    pub sender: Option<Party>,
    pub len: usize,
    /// 1-based block number.
    pub block: u64,
    /// 1-based global iteration, when inside one.
    pub iteration: Option<u64>,
    /// Index of this segment's first round in the whole run.
    pub first_round: u64,
}

#[derive(Clone, Debug)]
pub struct Schedule {
    blocks: u64,
    i_block: u64,
    block_seed_len: usize,
    iter_seed_len: usize,
    hash_len: usize,
    r: usize,
    big_seed_len: usize,
}

impl Schedule {
    pub fn new(cfg: &RunConfig) -> Self {
        Schedule {
            blocks: cfg.b_total,
            i_block: cfg.i_block,
            block_seed_len: cfg.codecs.block_seed_ecc.block_len(),
            iter_seed_len: cfg.sd2,
            hash_len: cfg.o2 as usize,
            r: cfg.r,
            big_seed_len: cfg.codecs.big_seed_ecc.block_len(),
        }
    }

    pub fn iteration_rounds(&self) -> u64 {
        (self.iter_seed_len + 2 * HASH_VALUES * self.hash_len + self.r) as u64
    }

    pub fn block_rounds(&self) -> u64 {
        (self.block_seed_len + 2 * self.big_seed_len) as u64 + self.i_block * self.iteration_rounds()
    }

    pub fn total_rounds(&self) -> u64 {
        self.blocks * self.block_rounds()
    }

    /// All segments of the run in order.
    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let mut out = Vec::new();
        let mut round = 0u64;
        let mut push = |kind, sender, len: usize, block, iteration| {
            out.push(Segment { kind, sender, len, block, iteration, first_round: round });
            round += len as u64;
        };
        for block in 1..=self.blocks {
            push(SegmentKind::BlockSeed, Some(Party::A), self.block_seed_len, block, None);
            for i in 1..=self.i_block {
                let it = Some((block - 1) * self.i_block + i);
                push(SegmentKind::IterSeed, Some(Party::A), self.iter_seed_len, block, it);
                for index in 0..HASH_VALUES as u8 {
                    push(SegmentKind::Hash { index }, Some(Party::A), self.hash_len, block, it);
                    push(SegmentKind::Hash { index }, Some(Party::B), self.hash_len, block, it);
                }
                push(SegmentKind::Simulation, None, self.r, block, it);
            }
            push(SegmentKind::BigSeedFirst, Some(Party::A), self.big_seed_len, block, None);
            push(SegmentKind::BigSeedSecond, Some(Party::B), self.big_seed_len, block, None);
        }
        out.into_iter()
    }
}
