//! One party of the robust protocol.
//!
//! The run is a sequence of blocks. Each block opens with an error-protected
//! extender seed and closes with the big-hash phase, which chains a hash of
//! every checkpoint simulated during the block. Each iteration inside a block
//! exchanges twelve small hashes (verification), then either simulates `r`
//! rounds of the original protocol or sends dummy zeros (computation), then
//! decides whether to reset its counters or rewind to a meeting point
//! (transition).
//!
//! [`PartyState`] exposes each step as a method so the lockstep driver in
//! [`crate::trial`] and the channel-based [`run_party`] share the logic.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::{push_uint, ceil_log2};
use crate::channel::RoundAction;
use crate::config::{RunConfig, VoteRule};
use crate::error::{Error, Result};
use crate::hash::{encode_payload, ChainLink, Seed};
use crate::meeting::{transition_candidates, MegaState, MemoryStore};
use crate::protocol::{Party, ProtocolDag, StateId, TranscriptChunk};
use crate::schedule::{HashSlot, Schedule, SegmentKind, HASH_VALUES};

/// A block-transcript chunk together with the depth it leads to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TEntry {
    pub depth: u64,
    pub chunk: TranscriptChunk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Jump {
    pub from: u64,
    pub to: u64,
    /// Candidate index 0..3 (MP1..MP3).
    pub candidate: usize,
}

/// What happened to one party during the current iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IterationEvents {
    pub iteration: u64,
    pub counter_mismatch: bool,
    pub state_match: bool,
    pub chain_match: bool,
    pub vote_increments: [bool; 3],
    /// The chunk simulated this iteration, if any.
    pub simulated: Option<TranscriptChunk>,
    /// Votes were zeroed at some point after verification.
    pub votes_reset: bool,
    pub error_reset: bool,
    pub jump: Option<Jump>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartyStats {
    pub simulated_iterations: u64,
    pub dummy_iterations: u64,
    pub jumps: u64,
    pub error_resets: u64,
    pub max_rewind: u64,
    pub peak_memory_bits: u64,
}

#[derive(Clone, Debug)]
pub struct PartyState {
    cfg: RunConfig,
    dag: Arc<ProtocolDag>,
    role: Party,
    rng: ChaCha8Rng,
    k: u64,
    e: u64,
    votes: [u64; 3],
    j: u32,
    rew: bool,
    cur: MegaState,
    t: Vec<TEntry>,
    store: MemoryStore,
    i_current: u64,
    i_cnt: u64,
    block: u64,
    block_seed: Option<Seed>,
    r_iter: Option<Seed>,
    big_seed: [Option<u64>; 2],
    mps: [Option<u64>; 3],
    candidates: [Option<MegaState>; 3],
    own: [u64; HASH_VALUES],
    theirs: [u64; HASH_VALUES],
    simulating: bool,
    sim_at: StateId,
    sim_bits: Vec<bool>,
    events: IterationEvents,
    stats: PartyStats,
    last_big_hashes: Vec<(Vec<bool>, u64)>,
}

impl PartyState {
    pub fn new(cfg: &RunConfig, dag: Arc<ProtocolDag>, role: Party, rng_seed: u64) -> Result<Self> {
        if dag.depth() as u64 > cfg.depth() {
            return Err(Error::Parameter(format!(
                "protocol depth {} exceeds configured depth {}",
                dag.depth(),
                cfg.depth()
            )));
        }
        if dag.state_count() as u64 > cfg.spec.states {
            return Err(Error::Parameter(format!(
                "protocol has {} states but the configuration allows {}",
                dag.state_count(),
                cfg.spec.states
            )));
        }
        let root = MegaState::root(dag.root());
        let mut p = PartyState {
            cfg: cfg.clone(),
            role,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            k: 0,
            e: 0,
            votes: [0; 3],
            j: 0,
            rew: false,
            cur: root,
            t: Vec::new(),
            store: MemoryStore::with_root(root),
            i_current: 0,
            i_cnt: 0,
            block: 0,
            block_seed: None,
            r_iter: None,
            big_seed: [None; 2],
            mps: [None; 3],
            candidates: [None; 3],
            own: [0; HASH_VALUES],
            theirs: [0; HASH_VALUES],
            simulating: false,
            sim_at: dag.root(),
            sim_bits: Vec::new(),
            events: IterationEvents::default(),
            stats: PartyStats::default(),
            last_big_hashes: Vec::new(),
            dag,
        };
        p.stats.peak_memory_bits = measure_memory_bits(&p, cfg);
        Ok(p)
    }

    pub fn role(&self) -> Party {
        self.role
    }
    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }
    pub fn k(&self) -> u64 {
        self.k
    }
    pub fn errors(&self) -> u64 {
        self.e
    }
    pub fn votes(&self) -> [u64; 3] {
        self.votes
    }
    pub fn scale(&self) -> u32 {
        self.j
    }
    pub fn rewinding(&self) -> bool {
        self.rew
    }
    pub fn current(&self) -> &MegaState {
        &self.cur
    }
    pub fn depth(&self) -> u64 {
        self.cur.depth
    }
    pub fn store(&self) -> &MemoryStore {
        &self.store
    }
    pub fn block_transcript(&self) -> &[TEntry] {
        &self.t
    }
    pub fn iteration(&self) -> u64 {
        self.i_current
    }
    pub fn block(&self) -> u64 {
        self.block
    }
    pub fn meeting_points(&self) -> [Option<u64>; 3] {
        self.mps
    }
    pub fn candidates(&self) -> &[Option<MegaState>; 3] {
        &self.candidates
    }
    pub fn outgoing_hashes(&self) -> &[u64; HASH_VALUES] {
        &self.own
    }
    pub fn incoming_hashes(&self) -> &[u64; HASH_VALUES] {
        &self.theirs
    }
    pub fn iteration_seed(&self) -> Option<Seed> {
        self.r_iter
    }
    pub fn block_seed(&self) -> Option<Seed> {
        self.block_seed
    }
    pub fn big_seed(&self) -> [Option<u64>; 2] {
        self.big_seed
    }
    pub fn events(&self) -> &IterationEvents {
        &self.events
    }
    pub fn stats(&self) -> &PartyStats {
        &self.stats
    }
    pub fn is_simulating(&self) -> bool {
        self.simulating
    }

    /// Chunks of `T` at depth ≤ `depth`.
    pub fn t_upto(&self, depth: u64) -> impl ExactSizeIterator<Item = &TranscriptChunk> + '_ {
        let n = self.t.partition_point(|e| e.depth <= depth);
        self.t[..n].iter().map(|e| &e.chunk)
    }

    fn random_bits(&mut self, n: usize) -> Vec<bool> {
        (0..n).map(|_| self.rng.gen()).collect()
    }

    // ---- block start -------------------------------------------------------

    /// Opens a block. The sender of the extender seed (A) returns the encoded
    /// seed to transmit.
    pub fn start_block(&mut self) -> Option<Vec<bool>> {
        self.block += 1;
        self.i_cnt = 0;
        self.t.clear();
        self.block_seed = None;
        self.big_seed = [None; 2];
        if self.role != Party::A {
            return None;
        }
        let codecs = self.cfg.codecs.clone();
        let seed = self.random_bits(codecs.extender.seed_len());
        self.block_seed = Some(Seed::from_bits(&seed).expect("even-length seed"));
        Some(codecs.block_seed_ecc.encode(&seed).expect("seed length matches code"))
    }

    pub fn receive_block_seed(&mut self, heard: &[Option<bool>]) {
        let word: Vec<bool> = heard.iter().map(|b| b.unwrap_or(false)).collect();
        let seed = self.cfg.codecs.block_seed_ecc.decode(&word).expect("schedule length matches code");
        self.block_seed = Some(Seed::from_bits(&seed).expect("even-length seed"));
    }

    // ---- iteration start ---------------------------------------------------

    /// Advances the counters and picks this iteration's meeting points. The
    /// sender of the iteration seed (A) returns the seed bits.
    pub fn begin_iteration(&mut self) -> Option<Vec<bool>> {
        self.i_current += 1;
        self.i_cnt += 1;
        self.k += 1;
        self.j = 63 - self.k.leading_zeros();
        self.events = IterationEvents { iteration: self.i_current, ..Default::default() };
        let mut mps = transition_candidates(self.j, self.cur.depth);
        if self.cur.depth == 0 && self.cfg.spec.root_candidate {
            // M_0 is empty, so without this a party still at the root could
            // never agree on a rewind with a partner one step ahead.
            mps[2] = Some(0);
        }
        if !self.cfg.spec.mp3_enabled {
            mps[2] = None;
        }
        self.mps = mps;
        self.candidates = mps.map(|p| p.and_then(|q| self.store.get(q).copied()));
        self.r_iter = None;
        if self.role != Party::A {
            return None;
        }
        let bits = self.random_bits(self.cfg.sd2);
        self.r_iter = Some(Seed::from_bits(&bits).expect("even-length seed"));
        Some(bits)
    }

    pub fn receive_iteration_seed(&mut self, heard: &[Option<bool>]) {
        let bits: Vec<bool> = heard.iter().map(|b| b.unwrap_or(false)).collect();
        self.r_iter = Some(Seed::from_bits(&bits).expect("even-length seed"));
    }

    // ---- verification ------------------------------------------------------

    fn tagged_uint(value: Option<u64>, width: u32) -> Vec<bool> {
        let mut out = Vec::with_capacity(1 + width as usize);
        out.push(value.is_some());
        push_uint(&mut out, value.unwrap_or(0), width);
        out
    }

    fn chain_input(&self, ms: Option<&MegaState>) -> Vec<bool> {
        let w = &self.cfg.widths;
        let mut out = vec![ms.is_some()];
        match ms {
            Some(ms) => encode_payload(&mut out, ms.link.as_ref(), self.t_upto(ms.depth), ms.iter, w),
            None => out.resize(1 + w.payload_bits(0), false),
        }
        out
    }

    /// The twelve small-hash inputs, in slot order.
    pub fn hash_inputs(&self) -> Vec<Vec<bool>> {
        let w = &self.cfg.widths;
        (0..HASH_VALUES)
            .map(|i| match HashSlot::from_index(i) {
                HashSlot::Counter => Self::tagged_uint(Some(self.k), w.counter),
                HashSlot::State => Self::tagged_uint(Some(self.cur.v.0 as u64), w.state),
                HashSlot::Chain => self.chain_input(Some(&self.cur)),
                HashSlot::CandidateState(c) => {
                    Self::tagged_uint(self.candidates[c].map(|q| q.v.0 as u64), w.state)
                }
                HashSlot::CandidateChain(c) => self.chain_input(self.candidates[c].as_ref()),
                HashSlot::CandidateDepth(c) => Self::tagged_uint(self.candidates[c].map(|q| q.depth), w.counter),
            })
            .collect()
    }

    /// Seed chunk of the extended block randomness for the current iteration.
    pub fn block_chunk_seed(&self) -> Seed {
        let sd1 = self.cfg.sd1 as u64;
        let ext = &self.cfg.codecs.extender;
        let seed = self.block_seed.expect("block seed exchanged before hashing");
        let bits = ext.range(seed, (self.i_cnt - 1) * sd1, sd1).expect("chunk inside extended string");
        Seed::from_bits(&bits).expect("even-length seed")
    }

    /// Computes this iteration's outgoing hash values.
    pub fn compute_hashes(&mut self) -> [u64; HASH_VALUES] {
        let r_iter = self.r_iter.expect("iteration seed exchanged before hashing");
        let chunk = self.block_chunk_seed();
        let hashes = &self.cfg.codecs.hashes;
        let inputs = self.hash_inputs();
        for (slot, x) in inputs.iter().enumerate() {
            self.own[slot] = hashes.small_hash(x, r_iter, chunk).expect("inputs sized within t1");
        }
        self.own
    }

    /// Bits sent for hash slot `index`.
    pub fn hash_bits(&self, index: usize) -> Vec<bool> {
        crate::bits::from_uint(self.own[index], self.cfg.o2)
    }

    pub fn receive_hash(&mut self, index: usize, heard: &[Option<bool>]) {
        let bits: Vec<bool> = heard.iter().map(|b| b.unwrap_or(false)).collect();
        self.theirs[index] = crate::bits::to_uint(&bits);
    }

    /// Applies the verification outcome: a counter mismatch raises E, and
    /// otherwise each candidate whose hashes match one of the counterpart's
    /// gains a vote.
    pub fn conclude_verification(&mut self) {
        let (own, theirs) = (&self.own, &self.theirs);
        self.events.state_match = own[1] == theirs[1];
        self.events.chain_match = own[2] == theirs[2];
        if own[0] != theirs[0] {
            self.e += 1;
            self.events.counter_mismatch = true;
            return;
        }
        let slot = |s: HashSlot| s.index();
        for i in 0..3 {
            let matched = (0..3).any(|jj| {
                let depth_index = match self.cfg.spec.vote_rule {
                    VoteRule::Literal => i,
                    VoteRule::MatchedIndex => jj,
                };
                own[slot(HashSlot::CandidateState(i))] == theirs[slot(HashSlot::CandidateState(jj))]
                    && own[slot(HashSlot::CandidateChain(i))] == theirs[slot(HashSlot::CandidateChain(jj))]
                    && own[slot(HashSlot::CandidateDepth(i))] == theirs[slot(HashSlot::CandidateDepth(depth_index))]
            });
            if matched {
                self.votes[i] += 1;
                self.events.vote_increments[i] = true;
            }
        }
    }

    // ---- computation -------------------------------------------------------

    /// Decides between simulating and dummy rounds for this iteration.
    pub fn plan_computation(&mut self) {
        self.simulating = self.k == 1
            && self.e == 0
            && !self.rew
            && self.events.state_match
            && self.events.chain_match;
        self.sim_at = self.cur.v;
        self.sim_bits.clear();
    }

    /// This party's action in the next simulation round.
    pub fn sim_action(&self) -> RoundAction {
        if !self.simulating {
            return RoundAction::Transmit(false);
        }
        match self.dag.own_move(self.role, self.sim_at) {
            Some(bit) => RoundAction::Transmit(bit),
            None => RoundAction::Listen,
        }
    }

    pub fn sim_observe(&mut self, action: RoundAction, heard: Option<bool>) {
        if !self.simulating {
            return;
        }
        let bit = match action {
            RoundAction::Transmit(bit) => bit,
            RoundAction::Listen => heard.unwrap_or(false),
        };
        self.sim_bits.push(bit);
        self.sim_at = self.dag.step(self.sim_at, bit);
    }

    pub fn finish_computation(&mut self) {
        if !self.simulating {
            self.rew = true;
            self.stats.dummy_iterations += 1;
            return;
        }
        debug_assert_eq!(self.sim_bits.len(), self.cfg.r);
        let chunk = TranscriptChunk { bits: std::mem::take(&mut self.sim_bits), iteration: self.i_current };
        let depth = self.cur.depth + 1;
        self.t.push(TEntry { depth, chunk: chunk.clone() });
        self.cur = MegaState { v: self.sim_at, depth, link: self.cur.link, iter: self.i_current };
        self.store.maintain(&self.cur, true);
        self.reset_status();
        self.events.simulated = Some(chunk);
        self.stats.simulated_iterations += 1;
    }

    fn reset_status(&mut self) {
        self.k = 0;
        self.e = 0;
        self.reset_votes();
    }

    fn reset_votes(&mut self) {
        self.votes = [0; 3];
        self.events.votes_reset = true;
    }

    // ---- transition --------------------------------------------------------

    pub fn transition(&mut self) {
        if 2 * self.e >= self.k {
            if self.k > 0 {
                self.events.error_reset = true;
                self.stats.error_resets += 1;
                if self.cfg.spec.rew_reset_on_error {
                    self.rew = false;
                }
            }
            self.reset_status();
        } else if self.k == (2u64 << self.j) - 1 {
            if self.k > 1 {
                let threshold = self.cfg.spec.vote_threshold * (1u64 << self.j) as f64;
                let order: &[usize] = if self.cfg.spec.mp3_enabled { &[2, 1, 0] } else { &[1, 0] };
                for &i in order {
                    let Some(target) = self.mps[i] else { continue };
                    if self.votes[i] as f64 >= threshold && self.store.contains(target) {
                        self.jump_to(target, i);
                        break;
                    }
                }
            }
            self.reset_votes();
        }
        self.stats.peak_memory_bits = self.stats.peak_memory_bits.max(measure_memory_bits(self, &self.cfg));
    }

    fn jump_to(&mut self, target: u64, candidate: usize) {
        let from = self.cur.depth;
        self.cur = *self.store.get(target).expect("jump target is stored");
        let keep = self.t.partition_point(|e| e.depth <= target);
        self.t.truncate(keep);
        self.store.maintain(&self.cur, false);
        self.rew = false;
        if self.cfg.spec.reset_status_on_jump {
            self.k = 0;
            self.e = 0;
        }
        self.events.jump = Some(Jump { from, to: target, candidate });
        self.stats.jumps += 1;
        self.stats.max_rewind = self.stats.max_rewind.max(from - target);
    }

    // ---- big hash ----------------------------------------------------------

    /// The sender of big-seed half `half` returns the encoded half.
    pub fn big_seed_outgoing(&mut self, half: usize) -> Option<Vec<bool>> {
        let sender = if half == 0 { Party::A } else { Party::B };
        if self.role != sender {
            return None;
        }
        let o3 = self.cfg.o3;
        let bits = self.random_bits(o3 as usize);
        self.big_seed[half] = Some(crate::bits::to_uint(&bits));
        Some(self.cfg.codecs.big_seed_ecc.encode(&bits).expect("half length matches code"))
    }

    pub fn receive_big_seed(&mut self, half: usize, heard: &[Option<bool>]) {
        let word: Vec<bool> = heard.iter().map(|b| b.unwrap_or(false)).collect();
        let bits = self.cfg.codecs.big_seed_ecc.decode(&word).expect("schedule length matches code");
        self.big_seed[half] = Some(crate::bits::to_uint(&bits));
    }

    /// Chains the big hash into every checkpoint simulated in this block and
    /// clears the block transcript.
    pub fn big_hash_phase(&mut self) {
        let seed = Seed {
            alpha: self.big_seed[0].expect("first half exchanged"),
            beta: self.big_seed[1].expect("second half exchanged"),
        };
        let first = (self.block - 1) * self.cfg.i_block + 1;
        let last = self.block * self.cfg.i_block;
        let w = self.cfg.widths;
        let hashes = &self.cfg.codecs.hashes;
        let mut updates = Vec::new();
        let mut records = Vec::new();
        for ms in self.store.values().filter(|ms| (first..=last).contains(&ms.iter)) {
            let mut payload = Vec::with_capacity(self.cfg.t3);
            encode_payload(&mut payload, ms.link.as_ref(), self.t_upto(ms.depth), ms.iter, &w);
            let hash = hashes.big_hash(&payload, seed).expect("payload sized within t3");
            updates.push((ms.depth, ChainLink { hash, seed }));
            records.push((payload, hash));
        }
        self.last_big_hashes = records;
        let mut updates = updates.into_iter().peekable();
        for ms in self.store.values_mut() {
            if updates.peek().map(|u| u.0) == Some(ms.depth) {
                ms.link = Some(updates.next().unwrap().1);
            }
        }
        self.cur = *self.store.get(self.cur.depth).expect("current checkpoint is stored");
        self.t.clear();
        self.big_seed = [None; 2];
        self.block_seed = None;
        self.stats.peak_memory_bits = self.stats.peak_memory_bits.max(measure_memory_bits(self, &self.cfg));
    }

    /// Payloads and outputs of the most recent big-hash phase.
    pub fn last_big_hashes(&self) -> &[(Vec<bool>, u64)] {
        &self.last_big_hashes
    }

    /// Peak of [`measure_memory_bits`] observed at iteration and block ends.
    pub fn peak_memory_bits(&self) -> u64 {
        self.stats.peak_memory_bits
    }
}

/// Bits of working memory, counted from the formula: ⌈log₂ d⌉ per point of M;
/// ⌈log₂ s⌉ + o₃ + sd₃ + 2⌈log₂ d⌉ per stored mega-state and for the current
/// one; r + ⌈log₂ d⌉ per chunk of T; eight counters (k, E, three votes, j,
/// I_current, I_cnt) of ⌈log₂ d⌉ + 1 bits plus the Rew flag; the extender seed
/// and whichever per-iteration or big-hash seeds are held. The protocol DAG
/// is shared read-only data and not counted.
pub fn measure_memory_bits(state: &PartyState, cfg: &RunConfig) -> u64 {
    let log_d = ceil_log2(cfg.depth()) as u64;
    let log_s = ceil_log2(cfg.spec.states) as u64;
    let mega = log_s + cfg.o3 as u64 + cfg.sd3 as u64 + 2 * log_d;
    let points = state.store.len() as u64;
    let transcript = state.t.len() as u64 * (cfg.r as u64 + log_d);
    let counters = 8 * (log_d + 1) + 1;
    let extender = cfg.codecs.extender.seed_len() as u64;
    let iter_seed = if state.r_iter.is_some() { cfg.sd2 as u64 } else { 0 };
    let big = state.big_seed.iter().flatten().count() as u64 * cfg.o3 as u64;
    points * log_d + (points + 1) * mega + transcript + counters + extender + iter_seed + big
}

/// Per-round access to the channel for a single party.
pub trait RoundIo {
    /// Performs one round and returns what this party heard.
    fn round(&mut self, action: RoundAction) -> Result<Option<bool>>;
}

fn send_bits(io: &mut dyn RoundIo, bits: &[bool]) -> Result<()> {
    for &b in bits {
        io.round(RoundAction::Transmit(b))?;
    }
    Ok(())
}

fn listen(io: &mut dyn RoundIo, n: usize) -> Result<Vec<Option<bool>>> {
    (0..n).map(|_| io.round(RoundAction::Listen)).collect()
}

/// Runs the whole schedule for one party over `io`.
pub fn run_party(
    cfg: &RunConfig,
    dag: Arc<ProtocolDag>,
    io: &mut dyn RoundIo,
    role: Party,
    rng_seed: u64,
) -> Result<PartyState> {
    let mut p = PartyState::new(cfg, dag, role, rng_seed)?;
    let schedule = Schedule::new(cfg);
    let desync = |what: &str, seg: &crate::schedule::Segment| {
        Error::ScheduleDesync(format!("{what} at round {} ({:?})", seg.first_round, seg.kind))
    };
    for seg in schedule.segments() {
        let sending = seg.sender == Some(role);
        match seg.kind {
            SegmentKind::BlockSeed => match p.start_block() {
                Some(bits) if sending && bits.len() == seg.len => send_bits(io, &bits)?,
                None if !sending => {
                    let heard = listen(io, seg.len)?;
                    p.receive_block_seed(&heard);
                }
                _ => return Err(desync("block seed", &seg)),
            },
            SegmentKind::IterSeed => match p.begin_iteration() {
                Some(bits) if sending && bits.len() == seg.len => send_bits(io, &bits)?,
                None if !sending => {
                    let heard = listen(io, seg.len)?;
                    p.receive_iteration_seed(&heard);
                }
                _ => return Err(desync("iteration seed", &seg)),
            },
            SegmentKind::Hash { index } => {
                let index = index as usize;
                if index == 0 && seg.sender == Some(Party::A) {
                    p.compute_hashes();
                }
                if sending {
                    send_bits(io, &p.hash_bits(index))?;
                } else {
                    let heard = listen(io, seg.len)?;
                    p.receive_hash(index, &heard);
                }
                if index == HASH_VALUES - 1 && seg.sender == Some(Party::B) {
                    p.conclude_verification();
                }
            }
            SegmentKind::Simulation => {
                p.plan_computation();
                for _ in 0..seg.len {
                    let action = p.sim_action();
                    let heard = io.round(action)?;
                    p.sim_observe(action, heard);
                }
                p.finish_computation();
                p.transition();
            }
            SegmentKind::BigSeedFirst | SegmentKind::BigSeedSecond => {
                let half = (seg.kind == SegmentKind::BigSeedSecond) as usize;
                match p.big_seed_outgoing(half) {
                    Some(bits) if sending && bits.len() == seg.len => send_bits(io, &bits)?,
                    None if !sending => {
                        let heard = listen(io, seg.len)?;
                        p.receive_big_seed(half, &heard);
                    }
                    _ => return Err(desync("big seed", &seg)),
                }
                if half == 1 {
                    p.big_hash_phase();
                }
            }
        }
    }
    Ok(p)
}
