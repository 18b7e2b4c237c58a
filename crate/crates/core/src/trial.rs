//! Lockstep driver: both parties, the channel, the adversary and the ghost
//! in one thread, round by round.

use std::sync::Arc;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adversary::{Adversary, AdversarySpec, Intel, RoundView};
use crate::channel::{deliver_round, Budget, RoundAction, RoundRecord};
use crate::config::RunConfig;
use crate::error::Result;
use crate::ghost::{GhostConstants, GhostState};
use crate::party::PartyState;
use crate::protocol::{noiseless_run, Party, ProtocolDag};
use crate::schedule::{Schedule, Segment, SegmentKind, HASH_VALUES};

/// Metrics of one trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    pub success: bool,
    pub total_rounds: u64,
    pub overhead: f64,
    pub peak_memory_bits_a: u64,
    pub peak_memory_bits_b: u64,
    pub jumps: u64,
    pub error_resets: u64,
    pub dangerous_iterations: u64,
    pub small_collisions: u64,
    pub big_collisions: u64,
    pub budget_spent: u64,
    pub budget_limit: u64,
    pub suppressed_flips: u64,
    pub max_rewind: u64,
    pub correct_path: u64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrialOptions {
    /// Keep a per-round channel record.
    pub trace: bool,
    pub ghost_constants: GhostConstants,
    /// Overrides the ⌊ε·N⌋ budget.
    pub budget_limit: Option<u64>,
}

/// Everything a trial produced.
pub struct TrialOutcome {
    pub result: TrialResult,
    pub parties: [PartyState; 2],
    pub ghost: GhostState,
    pub budget: Budget,
    pub channel: Vec<RoundRecord>,
}

/// Independent seeds for A, B and the adversary derived from one trial seed.
pub fn derive_seeds(seed: u64) -> [u64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [rng.next_u64(), rng.next_u64(), rng.next_u64()]
}

struct Lockstep {
    parties: [PartyState; 2],
    ghost: GhostState,
    adversary: Box<dyn Adversary>,
    intel: bool,
    budget: Budget,
    round: u64,
    trace: Option<Vec<RoundRecord>>,
    /// A flip landed since the last iteration was recorded.
    flipped: bool,
    big_collisions: u64,
}

impl Lockstep {
    fn round(&mut self, segment: &Segment, offset: usize, actions: [RoundAction; 2]) -> [Option<bool>; 2] {
        let view = RoundView {
            round: self.round,
            segment: *segment,
            offset,
            actions,
            remaining: self.budget.remaining(),
            intel: self
                .intel
                .then_some(Intel { parties: [&self.parties[0], &self.parties[1]], ghost: &self.ghost }),
        };
        let spent = self.budget.spent;
        let (a, b) = deliver_round(actions[0], actions[1], self.adversary.as_mut(), &mut self.budget, &view);
        if self.budget.spent > spent {
            self.flipped = true;
        }
        if let Some(trace) = &mut self.trace {
            trace.push(RoundRecord {
                round: self.round,
                a: actions[0],
                b: actions[1],
                delivered_a: a,
                delivered_b: b,
                spent: self.budget.spent,
            });
        }
        self.round += 1;
        [a, b]
    }

    /// Sends `bits` from `sender`; returns what the other party heard.
    fn transfer(&mut self, segment: &Segment, sender: Party, bits: &[bool]) -> Vec<Option<bool>> {
        debug_assert_eq!(bits.len(), segment.len);
        let receiver = sender.other();
        let mut heard = Vec::with_capacity(bits.len());
        for (offset, &bit) in bits.iter().enumerate() {
            let mut actions = [RoundAction::Listen; 2];
            actions[sender.index()] = RoundAction::Transmit(bit);
            heard.push(self.round(segment, offset, actions)[receiver.index()]);
        }
        heard
    }

    fn pair(&self) -> [&PartyState; 2] {
        [&self.parties[0], &self.parties[1]]
    }

    fn run(&mut self, schedule: &Schedule) {
        let mut block_seeds_differ = false;
        for seg in schedule.segments() {
            match seg.kind {
                SegmentKind::BlockSeed => {
                    let bits = self.parties[0].start_block().expect("A sends the block seed");
                    self.parties[1].start_block();
                    let heard = self.transfer(&seg, Party::A, &bits);
                    self.parties[1].receive_block_seed(&heard);
                    block_seeds_differ = self.parties[0].block_seed() != self.parties[1].block_seed();
                }
                SegmentKind::IterSeed => {
                    let bits = self.parties[0].begin_iteration().expect("A sends the iteration seed");
                    self.parties[1].begin_iteration();
                    let heard = self.transfer(&seg, Party::A, &bits);
                    self.parties[1].receive_iteration_seed(&heard);
                }
                SegmentKind::Hash { index } => {
                    let index = index as usize;
                    let sender = seg.sender.expect("hash segments have a sender");
                    if index == 0 && sender == Party::A {
                        self.parties[0].compute_hashes();
                        self.parties[1].compute_hashes();
                    }
                    let bits = self.parties[sender.index()].hash_bits(index);
                    let heard = self.transfer(&seg, sender, &bits);
                    self.parties[sender.other().index()].receive_hash(index, &heard);
                    if index == HASH_VALUES - 1 && sender == Party::B {
                        self.parties[0].conclude_verification();
                        self.parties[1].conclude_verification();
                        let pair = [&self.parties[0], &self.parties[1]];
                        self.ghost.on_verification(pair);
                    }
                }
                SegmentKind::Simulation => {
                    for p in &mut self.parties {
                        p.plan_computation();
                    }
                    for offset in 0..seg.len {
                        let actions = [self.parties[0].sim_action(), self.parties[1].sim_action()];
                        let heard = self.round(&seg, offset, actions);
                        for (p, (act, h)) in self.parties.iter_mut().zip(actions.into_iter().zip(heard)) {
                            p.sim_observe(act, h);
                        }
                    }
                    for p in &mut self.parties {
                        p.finish_computation();
                        p.transition();
                    }
                    let randomness_differs =
                        block_seeds_differ || self.parties[0].iteration_seed() != self.parties[1].iteration_seed();
                    let corrupted = self.flipped || randomness_differs;
                    self.flipped = false;
                    let pair = [&self.parties[0], &self.parties[1]];
                    self.ghost.end_iteration(pair, corrupted);
                }
                SegmentKind::BigSeedFirst | SegmentKind::BigSeedSecond => {
                    let half = (seg.kind == SegmentKind::BigSeedSecond) as usize;
                    let sender = seg.sender.expect("seed segments have a sender");
                    let bits = self.parties[sender.index()].big_seed_outgoing(half).expect("sender owns this half");
                    let heard = self.transfer(&seg, sender, &bits);
                    self.parties[sender.other().index()].receive_big_seed(half, &heard);
                    if half == 1 {
                        let phi_before = self.ghost.before_big_hash(self.pair());
                        let seeds_agree = self.parties[0].big_seed() == self.parties[1].big_seed();
                        for p in &mut self.parties {
                            p.big_hash_phase();
                        }
                        if seeds_agree {
                            self.big_collisions += big_hash_collisions(self.pair());
                        }
                        let pair = [&self.parties[0], &self.parties[1]];
                        self.ghost.after_big_hash(pair, phi_before);
                    }
                }
            }
        }
    }
}

/// Distinct payloads with equal big-hash outputs under a shared seed.
fn big_hash_collisions(parties: [&PartyState; 2]) -> u64 {
    let all: Vec<&(Vec<bool>, u64)> = parties.iter().flat_map(|p| p.last_big_hashes()).collect();
    let mut n = 0;
    for (i, x) in all.iter().enumerate() {
        for y in &all[i + 1..] {
            if x.1 == y.1 && x.0 != y.0 {
                n += 1;
            }
        }
    }
    n
}

/// Runs one trial.
pub fn run_trial(
    cfg: &RunConfig,
    dag: Arc<ProtocolDag>,
    adversary: &AdversarySpec,
    trial: u64,
    seed: u64,
    opts: &TrialOptions,
) -> Result<TrialOutcome> {
    let start = Instant::now();
    let [seed_a, seed_b, seed_adv] = derive_seeds(seed);
    let schedule = Schedule::new(cfg);
    let total_rounds = schedule.total_rounds();
    let mut budget = Budget::new(cfg.epsilon(), total_rounds);
    if let Some(limit) = opts.budget_limit {
        budget.limit = limit;
    }
    let mut run = Lockstep {
        parties: [
            PartyState::new(cfg, dag.clone(), Party::A, seed_a)?,
            PartyState::new(cfg, dag.clone(), Party::B, seed_b)?,
        ],
        ghost: GhostState::new(opts.ghost_constants)?,
        adversary: adversary.build(cfg.epsilon(), seed_adv),
        intel: adversary.needs_intel(),
        budget,
        round: 0,
        trace: opts.trace.then(Vec::new),
        flipped: false,
        big_collisions: 0,
    };
    run.run(&schedule);
    debug_assert_eq!(run.round, total_rounds);

    let oracle = noiseless_run(&dag);
    let correct = run.ghost.ell_plus();
    let transcript: Vec<bool> =
        run.ghost.path(0)[..correct as usize].iter().flat_map(|c| c.bits.iter().copied()).collect();
    let success = correct >= cfg.needed_iterations()
        && transcript.len() >= oracle.len()
        && transcript[..oracle.len()] == oracle[..];
    let [a, b] = &run.parties;
    let result = TrialResult {
        trial,
        seed,
        success,
        total_rounds,
        overhead: total_rounds as f64 / cfg.depth() as f64 - 1.0,
        peak_memory_bits_a: a.peak_memory_bits(),
        peak_memory_bits_b: b.peak_memory_bits(),
        jumps: a.stats().jumps + b.stats().jumps,
        error_resets: a.stats().error_resets + b.stats().error_resets,
        dangerous_iterations: run.ghost.dangerous_iterations(),
        small_collisions: run.ghost.total_collisions(),
        big_collisions: run.big_collisions,
        budget_spent: run.budget.spent,
        budget_limit: run.budget.limit,
        suppressed_flips: run.budget.suppressed,
        max_rewind: a.stats().max_rewind.max(b.stats().max_rewind),
        correct_path: correct,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(TrialOutcome {
        result,
        budget: run.budget,
        channel: run.trace.take().unwrap_or_default(),
        ghost: run.ghost,
        parties: run.parties,
    })
}
