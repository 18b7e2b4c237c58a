//! Adversary strategies for the speak-or-listen channel.
//!
//! A strategy is asked once per round that has exactly one transmitter
//! whether to flip the bit ([`Adversary::corrupt`]), and once per round with
//! no transmitter what each listener should hear ([`Adversary::inject`]).
//! The channel enforces the budget; strategies only decide.
//!
//! Scripted strategies read [`Intel`]: both parties' full state and the
//! ghost. They plan each iteration when its first hash value goes on the
//! wire, at which point both parties have computed their hashes.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::RoundAction;
use crate::error::{param, Error, Result};
use crate::ghost::GhostState;
use crate::party::PartyState;
use crate::protocol::Party;
use crate::schedule::{HashSlot, Segment, SegmentKind, HASH_VALUES};

/// Everything the omniscient adversary may look at.
#[derive(Clone, Copy)]
pub struct Intel<'a> {
    pub parties: [&'a PartyState; 2],
    pub ghost: &'a GhostState,
}

/// The adversary's view of the round being delivered.
#[derive(Clone, Copy)]
pub struct RoundView<'a> {
    pub round: u64,
    pub segment: Segment,
    /// Position of this round inside its segment.
    pub offset: usize,
    pub actions: [RoundAction; 2],
    pub remaining: u64,
    pub intel: Option<Intel<'a>>,
}

impl RoundView<'_> {
    /// The transmitting party when exactly one party transmits.
    pub fn sole_sender(&self) -> Option<Party> {
        match self.actions {
            [RoundAction::Transmit(_), RoundAction::Listen] => Some(Party::A),
            [RoundAction::Listen, RoundAction::Transmit(_)] => Some(Party::B),
            _ => None,
        }
    }

    fn sent_bit(&self, sender: Party) -> Option<bool> {
        match self.actions[sender.index()] {
            RoundAction::Transmit(bit) => Some(bit),
            RoundAction::Listen => None,
        }
    }

    fn starts_iteration_plan(&self) -> bool {
        self.segment.kind == SegmentKind::Hash { index: 0 } && self.segment.sender == Some(Party::A) && self.offset == 0
    }
}

pub trait Adversary: Send {
    fn name(&self) -> &str;

    /// Whether to flip the bit transmitted in this round.
    fn corrupt(&mut self, view: &RoundView<'_>) -> bool;

    /// What A and B hear when neither transmits.
    fn inject(&mut self, _view: &RoundView<'_>) -> (bool, bool) {
        (false, false)
    }
}

/// Parsed adversary description, e.g. `random_flip:0.01` or `figure1:16:8`.
#[derive(Clone, Debug, PartialEq)]
pub enum AdversarySpec {
    NoiseFree,
    /// Flip probability; `None` means the run's ε.
    RandomFlip(Option<f64>),
    Burst { start: u64, len: u64 },
    Figure1(Figure1Params),
    Sneaky(SneakyParams),
    GreedyDesync,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Figure1Params {
    /// Iterations Alice is driven ahead while Bob is held back.
    pub dive: u64,
    /// Small desynchronisations after the deep one.
    pub kicks: u32,
    /// Correct-path depth (in iterations) before the attack starts.
    pub start: u64,
}

impl Default for Figure1Params {
    fn default() -> Self {
        Figure1Params { dive: 16, kicks: 8, start: 48 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SneakyParams {
    /// Scale w of the meeting point the final jump lands on.
    pub scale: u32,
    pub attacks: u32,
    pub start: u64,
}

impl Default for SneakyParams {
    fn default() -> Self {
        SneakyParams { scale: 4, attacks: 3, start: 32 }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::NoiseFree => write!(f, "noise_free"),
            AdversarySpec::RandomFlip(None) => write!(f, "random_flip"),
            AdversarySpec::RandomFlip(Some(p)) => write!(f, "random_flip:{p}"),
            AdversarySpec::Burst { start, len } => write!(f, "burst:{start}:{len}"),
            AdversarySpec::Figure1(p) => write!(f, "figure1:{}:{}:{}", p.dive, p.kicks, p.start),
            AdversarySpec::Sneaky(p) => write!(f, "sneaky:{}:{}:{}", p.scale, p.attacks, p.start),
            AdversarySpec::GreedyDesync => write!(f, "greedy_desync"),
        }
    }
}

impl FromStr for AdversarySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        fn arg<T: FromStr>(args: &[&str], i: usize, default: T) -> Result<T> {
            match args.get(i) {
                None => Ok(default),
                Some(v) => v.parse().map_err(|_| param(format!("bad adversary argument {v:?}"))),
            }
        }
        let max_args = |n: usize| {
            if args.len() > n {
                Err(param(format!("adversary {name} takes at most {n} arguments")))
            } else {
                Ok(())
            }
        };
        let spec = match name {
            "noise_free" | "none" => {
                max_args(0)?;
                AdversarySpec::NoiseFree
            }
            "random_flip" => {
                max_args(1)?;
                let p = args.first().map(|v| v.parse::<f64>()).transpose().map_err(|_| param("bad flip probability"))?;
                if p.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                    return Err(param("flip probability must lie in [0, 1]"));
                }
                AdversarySpec::RandomFlip(p)
            }
            "burst" => {
                max_args(2)?;
                if args.len() != 2 {
                    return Err(param("burst needs start and length: burst:START:LEN"));
                }
                AdversarySpec::Burst { start: arg(&args, 0, 0)?, len: arg(&args, 1, 0)? }
            }
            "figure1" | "figure1_attack" => {
                max_args(3)?;
                let d = Figure1Params::default();
                AdversarySpec::Figure1(Figure1Params {
                    dive: arg(&args, 0, d.dive)?,
                    kicks: arg(&args, 1, d.kicks)?,
                    start: arg(&args, 2, d.start)?,
                })
            }
            "sneaky" | "sneaky_attack" => {
                max_args(3)?;
                let d = SneakyParams::default();
                let p = SneakyParams {
                    scale: arg(&args, 0, d.scale)?,
                    attacks: arg(&args, 1, d.attacks)?,
                    start: arg(&args, 2, d.start)?,
                };
                if !(2..=20).contains(&p.scale) {
                    return Err(param("sneaky scale must lie in 2..=20"));
                }
                AdversarySpec::Sneaky(p)
            }
            "greedy_desync" => {
                max_args(0)?;
                AdversarySpec::GreedyDesync
            }
            _ => return Err(param(format!("unknown adversary {name:?}"))),
        };
        Ok(spec)
    }
}

impl AdversarySpec {
    pub fn build(&self, epsilon: f64, seed: u64) -> Box<dyn Adversary> {
        match *self {
            AdversarySpec::NoiseFree => Box::new(NoiseFree),
            AdversarySpec::RandomFlip(p) => Box::new(RandomFlip::new(p.unwrap_or(epsilon), seed)),
            AdversarySpec::Burst { start, len } => Box::new(Burst { start, len }),
            AdversarySpec::Figure1(p) => Box::new(Figure1::new(p)),
            AdversarySpec::Sneaky(p) => Box::new(Sneaky::new(p)),
            AdversarySpec::GreedyDesync => Box::new(GreedyDesync::default()),
        }
    }

    /// Scripted strategies need the ghost and party states each round.
    pub fn needs_intel(&self) -> bool {
        matches!(self, AdversarySpec::Figure1(_) | AdversarySpec::Sneaky(_) | AdversarySpec::GreedyDesync)
    }
}

pub struct NoiseFree;

impl Adversary for NoiseFree {
    fn name(&self) -> &str {
        "noise_free"
    }
    fn corrupt(&mut self, _: &RoundView<'_>) -> bool {
        false
    }
}

pub struct RandomFlip {
    p: f64,
    rng: ChaCha8Rng,
}

impl RandomFlip {
    pub fn new(p: f64, seed: u64) -> Self {
        RandomFlip { p, rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f11b) }
    }
}

impl Adversary for RandomFlip {
    fn name(&self) -> &str {
        "random_flip"
    }
    fn corrupt(&mut self, view: &RoundView<'_>) -> bool {
        view.remaining > 0 && self.rng.gen_bool(self.p)
    }
}

/// Flips every transmitted bit in rounds `start..start + len`.
pub struct Burst {
    pub start: u64,
    pub len: u64,
}

impl Adversary for Burst {
    fn name(&self) -> &str {
        "burst"
    }
    fn corrupt(&mut self, view: &RoundView<'_>) -> bool {
        view.remaining > 0 && (self.start..self.start.saturating_add(self.len)).contains(&view.round)
    }
}

/// What the scripted strategies want delivered during one iteration.
#[derive(Clone, Debug, Default)]
struct Plan {
    /// `targets[receiver][slot]`: value the receiver should hear.
    targets: [[Option<u64>; HASH_VALUES]; 2],
    flip_simulation_bit: bool,
}

impl Plan {
    fn forge(&mut self, receiver: Party, slot: HashSlot, value: u64) {
        self.targets[receiver.index()][slot.index()] = Some(value);
    }

    /// Makes `receiver` hear a counter hash that differs from the sender's.
    fn stall(&mut self, receiver: Party, intel: &Intel<'_>) {
        let sent = intel.parties[receiver.other().index()].outgoing_hashes()[0];
        self.forge(receiver, HashSlot::Counter, sent ^ 1);
    }

    /// Makes `receiver` hear its own state and chain hashes.
    fn fake_agreement(&mut self, receiver: Party, intel: &Intel<'_>) {
        let own = intel.parties[receiver.index()].outgoing_hashes();
        self.forge(receiver, HashSlot::State, own[HashSlot::State.index()]);
        self.forge(receiver, HashSlot::Chain, own[HashSlot::Chain.index()]);
    }

    fn corrupt(&mut self, view: &RoundView<'_>) -> bool {
        let Some(sender) = view.sole_sender() else { return false };
        match view.segment.kind {
            SegmentKind::Hash { index } if view.segment.sender == Some(sender) => {
                let receiver = sender.other();
                let Some(target) = self.targets[receiver.index()][index as usize] else { return false };
                let width = view.segment.len;
                let want = (target >> (width - 1 - view.offset)) & 1 == 1;
                view.sent_bit(sender) != Some(want)
            }
            SegmentKind::Simulation if self.flip_simulation_bit => {
                self.flip_simulation_bit = false;
                true
            }
            _ => false,
        }
    }
}

fn in_sync_at_rest(intel: &Intel<'_>) -> bool {
    let [a, b] = intel.parties;
    intel.ghost.in_sync() && a.k() == 1 && b.k() == 1 && !a.rewinding() && !b.rewinding()
}

/// Holds Bob back with a counter-hash flip whenever the parties are in sync.
#[derive(Default)]
pub struct GreedyDesync {
    plan: Plan,
}

impl Adversary for GreedyDesync {
    fn name(&self) -> &str {
        "greedy_desync"
    }
    fn corrupt(&mut self, view: &RoundView<'_>) -> bool {
        if view.starts_iteration_plan() {
            self.plan = Plan::default();
            if let Some(intel) = &view.intel {
                if intel.ghost.in_sync() && view.remaining > 0 {
                    self.plan.stall(Party::B, intel);
                }
            }
        }
        self.plan.corrupt(view)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum F1Phase {
    Wait,
    Dive { left: u64 },
    Resolve { kicks_done: u32 },
    Step { kicks_done: u32, from: u64 },
    Done,
}

/// The spotty-memory attack: drive Alice ahead of Bob long enough that
/// she forgets the checkpoints near their split, let them resolve, then
/// repeatedly cause one-iteration splits right after each resolution.
pub struct Figure1 {
    params: Figure1Params,
    phase: F1Phase,
    plan: Plan,
}

impl Figure1 {
    pub fn new(params: Figure1Params) -> Self {
        Figure1 { params, phase: F1Phase::Wait, plan: Plan::default() }
    }

    fn estimated_cost(&self) -> u64 {
        14 * self.params.dive + self.params.kicks as u64
    }

    fn plan_iteration(&mut self, intel: &Intel<'_>, remaining: u64) {
        let ghost = intel.ghost;
        let alice = intel.parties[0];
        self.phase = match self.phase {
            F1Phase::Wait if ghost.ell_plus() >= self.params.start && in_sync_at_rest(intel) => {
                if remaining < self.estimated_cost() {
                    log::info!("figure1: budget {remaining} below estimated cost, standing down");
                    F1Phase::Done
                } else {
                    self.plan.stall(Party::B, intel);
                    F1Phase::Dive { left: self.params.dive - 1 }
                }
            }
            F1Phase::Dive { left } if left > 0 => {
                self.plan.stall(Party::B, intel);
                self.plan.fake_agreement(Party::A, intel);
                F1Phase::Dive { left: left - 1 }
            }
            F1Phase::Dive { .. } => F1Phase::Resolve { kicks_done: 0 },
            F1Phase::Resolve { kicks_done } if ghost.in_sync() => {
                if kicks_done >= self.params.kicks {
                    F1Phase::Done
                } else {
                    F1Phase::Step { kicks_done, from: alice.depth() }
                }
            }
            F1Phase::Step { kicks_done, from } if ghost.in_sync() && alice.depth() > from => {
                self.plan.stall(Party::B, intel);
                F1Phase::Resolve { kicks_done: kicks_done + 1 }
            }
            other => other,
        };
    }
}

impl Adversary for Figure1 {
    fn name(&self) -> &str {
        "figure1"
    }
    fn corrupt(&mut self, view: &RoundView<'_>) -> bool {
        if view.starts_iteration_plan() {
            self.plan = Plan::default();
            if let Some(intel) = &view.intel {
                self.plan_iteration(intel, view.remaining);
            }
        }
        self.plan.corrupt(view)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SneakyPhase {
    Wait,
    Dive { p_hat: u64 },
    Resolve { p_hat: u64 },
    /// Counter value k both parties show during the trick iterations.
    Trick { p_hat: u64, k: u64 },
    Finish,
    Done,
}

/// The sneaky attack against a scale-w meeting point p: split the parties
/// at p̂ = p + 2^w, hold Bob just below p̂ + 1 while Alice dives to
/// c_q = p̂ + 2^{w-1}, let them resolve at p̂, then forge Bob's votes so
/// he alone rewinds two iterations to a point Alice has forgotten. Their
/// only common checkpoint is then p, 2^w below p̂.
pub struct Sneaky {
    params: SneakyParams,
    phase: SneakyPhase,
    plan: Plan,
    completed: u32,
}

impl Sneaky {
    pub fn new(params: SneakyParams) -> Self {
        Sneaky { params, phase: SneakyPhase::Wait, plan: Plan::default(), completed: 0 }
    }

    fn estimated_cost(&self) -> u64 {
        14 * (1u64 << (self.params.scale - 1)) + 40
    }

    fn plan_iteration(&mut self, intel: &Intel<'_>, remaining: u64) {
        let w = self.params.scale;
        let ghost = intel.ghost;
        let [alice, bob] = intel.parties;
        let half = 1u64 << (w - 1);
        self.phase = match self.phase {
            SneakyPhase::Wait => {
                let depth = alice.depth();
                let aligned = depth % (1 << w) == 0 && depth >= 1 << (w + 1);
                if ghost.ell_plus() >= self.params.start && aligned && in_sync_at_rest(intel) {
                    if remaining < self.estimated_cost() {
                        log::info!("sneaky: budget {remaining} below estimated cost, standing down");
                        SneakyPhase::Done
                    } else {
                        self.plan.flip_simulation_bit = true;
                        SneakyPhase::Dive { p_hat: depth }
                    }
                } else {
                    SneakyPhase::Wait
                }
            }
            SneakyPhase::Dive { p_hat } => {
                if alice.depth() >= p_hat + half {
                    SneakyPhase::Resolve { p_hat }
                } else if ghost.in_sync() {
                    log::info!("sneaky: split at {p_hat} did not take, standing down");
                    SneakyPhase::Done
                } else {
                    self.plan.stall(Party::B, intel);
                    self.plan.fake_agreement(Party::A, intel);
                    SneakyPhase::Dive { p_hat }
                }
            }
            SneakyPhase::Resolve { p_hat } if ghost.in_sync() => {
                if alice.depth() != p_hat || !in_sync_at_rest(intel) {
                    log::info!("sneaky: resolved at {} instead of {p_hat}, standing down", alice.depth());
                    SneakyPhase::Done
                } else {
                    // Both see a state mismatch, so neither simulates and
                    // both start counting towards a vote.
                    self.plan.forge(Party::A, HashSlot::State, bob.outgoing_hashes()[1] ^ 1);
                    self.plan.forge(Party::B, HashSlot::State, alice.outgoing_hashes()[1] ^ 1);
                    SneakyPhase::Trick { p_hat, k: 1 }
                }
            }
            SneakyPhase::Trick { p_hat, k } if (1..3).contains(&k) => {
                let k = k + 1;
                if alice.k() != k || bob.k() != k {
                    log::info!("sneaky: counters drifted during the trick, standing down");
                    SneakyPhase::Done
                } else {
                    // Bob's MP3 (p̂ itself) must not collect a vote.
                    let mp3 = HashSlot::CandidateState(2);
                    self.plan.forge(Party::B, mp3, alice.outgoing_hashes()[mp3.index()] ^ 1);
                    if k == 3 {
                        if bob.candidates()[1].is_none() {
                            log::info!("sneaky: Bob no longer remembers {}, standing down", p_hat.saturating_sub(2));
                            self.phase = SneakyPhase::Done;
                            return;
                        }
                        let own = bob.outgoing_hashes();
                        for slot in [HashSlot::CandidateState(1), HashSlot::CandidateChain(1), HashSlot::CandidateDepth(1)] {
                            self.plan.forge(Party::B, slot, own[slot.index()]);
                        }
                        SneakyPhase::Finish
                    } else {
                        SneakyPhase::Trick { p_hat, k }
                    }
                }
            }
            SneakyPhase::Finish if ghost.in_sync() => {
                self.completed += 1;
                if self.completed < self.params.attacks {
                    SneakyPhase::Wait
                } else {
                    SneakyPhase::Done
                }
            }
            other => other,
        };
    }
}

impl Adversary for Sneaky {
    fn name(&self) -> &str {
        "sneaky"
    }
    fn corrupt(&mut self, view: &RoundView<'_>) -> bool {
        if view.starts_iteration_plan() {
            self.plan = Plan::default();
            if let Some(intel) = &view.intel {
                self.plan_iteration(intel, view.remaining);
            }
        }
        self.plan.corrupt(view)
    }
}
