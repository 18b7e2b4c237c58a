//! Omniscient bookkeeping for analysing a run.
//!
//! The ghost sees both parties in full. It tracks each party's simulated
//! path (chunks with the iteration that produced them), the divergent point,
//! the out-of-sync depth ℓ⁻ and its running maximum L⁻ over a bad spell,
//! the bad-vote counts, and the potential Φ. Parties never read it; scripted
//! adversaries may.

use std::io::Write;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{param, Result};
use crate::meeting::MegaState;
use crate::party::{Jump, PartyState};
use crate::protocol::TranscriptChunk;
use crate::schedule::{HashSlot, HASH_VALUES};

/// Constants of the potential function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GhostConstants {
    pub c_star: u32,
    pub c1: i64,
    pub c2: i64,
    pub c3: i64,
    pub c4: i64,
    pub c5: i64,
    pub c6: i64,
}

impl Default for GhostConstants {
    fn default() -> Self {
        GhostConstants { c_star: 3, c1: 1, c2: 32, c3: 64, c4: 7000, c5: 8000, c6: 9000 }
    }
}

impl GhostConstants {
    /// Checks the inequalities the progress argument relies on.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (2 * self.c1 >= 1, "C1 >= 0.5"),
            (6 * self.c4 >= 400 * (1 + self.c2 + self.c3), "C4 >= 4(1 + C2 + C3)/0.06"),
            (self.c2 >= (1i64 << (self.c_star + 2)) * self.c1, "C2 >= 2^(c*+2) C1"),
            (self.c6 > 16 * self.c1, "C6 > 16 C1"),
            (
                self.c1 < self.c2 && self.c2 < self.c3 && self.c3 < self.c4 && self.c4 < self.c5 && self.c5 < self.c6,
                "C1 < C2 < ... < C6",
            ),
            (self.c_star >= 3, "c* >= 3"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, what)) => Err(param(format!("potential constants violate {what}"))),
            None => Ok(()),
        }
    }
}

/// Inputs of Φ besides the ghost's own quantities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhiInputs {
    pub ell_plus: u64,
    pub ell_minus: u64,
    pub l_minus: u64,
    pub k: [u64; 2],
    pub e: [u64; 2],
    pub bvc: [u64; 2],
}

/// Evaluates Φ exactly; the branch depends on whether k_A = k_B.
pub fn phi(c: &GhostConstants, x: &PhiInputs) -> Ratio<i64> {
    let i = |v: u64| Ratio::from_integer(v as i64);
    let k_ab = i(x.k[0] + x.k[1]);
    let e_ab = i(x.e[0] + x.e[1]);
    let bvc_ab = i(x.bvc[0] + x.bvc[1]);
    let base = i(x.ell_plus) - i(x.ell_minus) * c.c3 - i(x.l_minus) * c.c2;
    if x.k[0] == x.k[1] {
        base + k_ab * c.c1 - e_ab * c.c5 - bvc_ab * (2 * c.c6)
    } else {
        base - k_ab * Ratio::new(9 * c.c4, 10) + e_ab * c.c4 - bvc_ab * c.c6
    }
}

/// One iteration of ghost history.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub ell_plus: u64,
    pub ell_minus: u64,
    pub l_minus: u64,
    pub b: Option<u64>,
    /// Counters as seen during verification (after the increment).
    pub k_during: [u64; 2],
    pub k: [u64; 2],
    pub e: [u64; 2],
    pub bvc: [u64; 2],
    pub phi: Ratio<i64>,
    pub dangerous: bool,
    pub corrupted: bool,
    pub collisions: u32,
    pub depth: [u64; 2],
    pub jumps: [Option<Jump>; 2],
    pub scale: [u32; 2],
    /// Remembered points at the end of the iteration.
    pub memory: [Vec<u64>; 2],
}

/// Potential immediately before and after one big-hash phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockRecord {
    pub block: u64,
    pub phi_before: Ratio<i64>,
    pub phi_after: Ratio<i64>,
    pub links_agree: bool,
}

/// A detected sneaky attack: the party that dove, its target and scale,
/// and the two windows as sorted iteration lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SneakyWindow {
    pub diver: usize,
    pub target: u64,
    pub scale: u32,
    pub jump_iteration: u64,
    pub diving: Vec<u64>,
    pub voting: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct GhostState {
    consts: GhostConstants,
    paths: [Vec<TranscriptChunk>; 2],
    b: Option<u64>,
    ell_plus: u64,
    ell_minus_each: [u64; 2],
    l_minus: u64,
    bvc: [u64; 2],
    k_during: [u64; 2],
    dangerous: bool,
    collisions: u32,
    bvc_grew: bool,
    history: Vec<IterationRecord>,
    blocks: Vec<BlockRecord>,
    total_collisions: u64,
    dangerous_collisions: u64,
    bvc_without_cause: u64,
}

impl GhostState {
    pub fn new(consts: GhostConstants) -> Result<Self> {
        consts.validate()?;
        Ok(GhostState {
            consts,
            paths: [Vec::new(), Vec::new()],
            b: None,
            ell_plus: 0,
            ell_minus_each: [0; 2],
            l_minus: 0,
            bvc: [0; 2],
            k_during: [0; 2],
            dangerous: false,
            collisions: 0,
            bvc_grew: false,
            history: Vec::new(),
            blocks: Vec::new(),
            total_collisions: 0,
            dangerous_collisions: 0,
            bvc_without_cause: 0,
        })
    }

    pub fn constants(&self) -> &GhostConstants {
        &self.consts
    }
    pub fn path(&self, party: usize) -> &[TranscriptChunk] {
        &self.paths[party]
    }
    pub fn divergent_point(&self) -> Option<u64> {
        self.b
    }
    pub fn ell_plus(&self) -> u64 {
        self.ell_plus
    }
    pub fn ell_minus(&self) -> u64 {
        self.ell_minus_each[0] + self.ell_minus_each[1]
    }
    pub fn ell_minus_each(&self) -> [u64; 2] {
        self.ell_minus_each
    }
    pub fn l_minus(&self) -> u64 {
        self.l_minus
    }
    pub fn bvc(&self) -> [u64; 2] {
        self.bvc
    }
    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }
    pub fn blocks(&self) -> &[BlockRecord] {
        &self.blocks
    }
    pub fn total_collisions(&self) -> u64 {
        self.total_collisions
    }
    pub fn dangerous_collisions(&self) -> u64 {
        self.dangerous_collisions
    }
    pub fn dangerous_iterations(&self) -> u64 {
        self.history.iter().filter(|r| r.dangerous).count() as u64
    }
    pub fn corrupted_iterations(&self) -> u64 {
        self.history.iter().filter(|r| r.corrupted).count() as u64
    }
    /// BVC increments in iterations without corruption or collision.
    pub fn unexplained_bvc(&self) -> u64 {
        self.bvc_without_cause
    }
    /// True when the parties' paths and checkpoints fully agree.
    pub fn in_sync(&self) -> bool {
        self.b.is_none()
    }

    fn phi_inputs(&self, parties: [&PartyState; 2]) -> PhiInputs {
        PhiInputs {
            ell_plus: self.ell_plus,
            ell_minus: self.ell_minus(),
            l_minus: self.l_minus,
            k: [parties[0].k(), parties[1].k()],
            e: [parties[0].errors(), parties[1].errors()],
            bvc: self.bvc,
        }
    }

    pub fn phi(&self, parties: [&PartyState; 2]) -> Ratio<i64> {
        phi(&self.consts, &self.phi_inputs(parties))
    }

    /// Records the verification step: bad votes, collisions and whether the
    /// iteration is dangerous. Call after both parties concluded verification.
    pub fn on_verification(&mut self, parties: [&PartyState; 2]) {
        let k = [parties[0].k(), parties[1].k()];
        self.k_during = k;
        self.dangerous = self.ell_minus() > 0 || k[0] > 1 || k[1] > 1;
        self.bvc_grew = false;
        let inputs = [parties[0].hash_inputs(), parties[1].hash_inputs()];
        let hashes = [parties[0].outgoing_hashes(), parties[1].outgoing_hashes()];
        self.collisions = count_collisions(&inputs, hashes);
        self.total_collisions += self.collisions as u64;
        if self.dangerous {
            self.dangerous_collisions += self.collisions as u64;
        }
        for x in 0..2 {
            let me = parties[x];
            if me.events().counter_mismatch {
                continue;
            }
            let theirs = parties[1 - x].candidates();
            for (i, q) in me.candidates().iter().enumerate() {
                let member = is_member(me, q, parties[1 - x], theirs);
                if member != me.events().vote_increments[i] {
                    self.bvc[x] += 1;
                    self.bvc_grew = true;
                }
            }
        }
    }

    /// Applies the iteration's path changes and records the iteration.
    /// `corrupted` reports a flip in this iteration's rounds or disagreeing
    /// randomness.
    pub fn end_iteration(&mut self, parties: [&PartyState; 2], corrupted: bool) {
        for (x, p) in parties.iter().enumerate() {
            let ev = p.events();
            if let Some(chunk) = &ev.simulated {
                self.paths[x].push(chunk.clone());
            }
            if let Some(jump) = ev.jump {
                self.paths[x].truncate(jump.to as usize);
            }
            debug_assert_eq!(self.paths[x].len() as u64, p.depth(), "ghost path out of step");
            if ev.votes_reset {
                self.bvc[x] = 0;
            }
        }
        if self.bvc_grew && !corrupted && self.collisions == 0 {
            self.bvc_without_cause += 1;
        }
        self.recompute(parties);
        let iteration = parties[0].iteration();
        self.history.push(IterationRecord {
            iteration,
            ell_plus: self.ell_plus,
            ell_minus: self.ell_minus(),
            l_minus: self.l_minus,
            b: self.b,
            k_during: self.k_during,
            k: [parties[0].k(), parties[1].k()],
            e: [parties[0].errors(), parties[1].errors()],
            bvc: self.bvc,
            phi: self.phi(parties),
            dangerous: self.dangerous,
            corrupted,
            collisions: self.collisions,
            depth: [parties[0].depth(), parties[1].depth()],
            jumps: [parties[0].events().jump, parties[1].events().jump],
            scale: [parties[0].scale(), parties[1].scale()],
            memory: [parties[0].store().points().collect(), parties[1].store().points().collect()],
        });
        self.collisions = 0;
        self.bvc_grew = false;
    }

    /// Call just before the big-hash phase to capture Φ.
    pub fn before_big_hash(&self, parties: [&PartyState; 2]) -> Ratio<i64> {
        self.phi(parties)
    }

    /// Recomputes after the big-hash phase updated the chained hashes.
    pub fn after_big_hash(&mut self, parties: [&PartyState; 2], phi_before: Ratio<i64>) {
        self.recompute(parties);
        let links_agree = parties[0].current().link == parties[1].current().link;
        self.blocks.push(BlockRecord {
            block: parties[0].block(),
            phi_before,
            phi_after: self.phi(parties),
            links_agree,
        });
    }

    fn recompute(&mut self, parties: [&PartyState; 2]) {
        let (pa, pb) = (&self.paths[0], &self.paths[1]);
        let mut prefix = pa.iter().zip(pb).take_while(|(x, y)| x == y).count() as u64;
        let (la, lb) = (pa.len() as u64, pb.len() as u64);
        for q in parties[0].store().points().filter(|&q| q <= prefix) {
            if let (Some(x), Some(y)) = (parties[0].store().get(q), parties[1].store().get(q)) {
                if x != y {
                    prefix = prefix.min(q.saturating_sub(1));
                    break;
                }
            }
        }
        self.b = if prefix == la && prefix == lb { None } else { Some(prefix) };
        self.ell_plus = prefix;
        self.ell_minus_each = [la - prefix, lb - prefix];
        let ell_minus = self.ell_minus();
        self.l_minus = if ell_minus == 0 { 0 } else { self.l_minus.max(ell_minus) };
    }

    /// Shape check Φ(I) ≤ ℓ⁺(I) + c·(corrupted iterations + dangerous
    /// collisions so far) over the whole history. Returns the first failing
    /// iteration.
    pub fn check_upper_bound(&self, c_upper: i64) -> Option<u64> {
        let mut q = 0i64;
        let mut hc = 0i64;
        for r in &self.history {
            q += r.corrupted as i64;
            if r.dangerous {
                hc += r.collisions as i64;
            }
            if r.phi > Ratio::from_integer(r.ell_plus as i64 + c_upper * (q + hc)) {
                return Some(r.iteration);
            }
        }
        None
    }

    /// Writes the per-iteration trace as CSV.
    pub fn write_trace<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "I", "ell_plus", "ell_minus", "L_minus", "b", "k_A", "k_B", "E_A", "E_B", "BVC_AB", "phi", "dangerous",
            "corrupted",
        ])?;
        for r in &self.history {
            w.write_record([
                r.iteration.to_string(),
                r.ell_plus.to_string(),
                r.ell_minus.to_string(),
                r.l_minus.to_string(),
                r.b.map_or_else(|| "-".to_string(), |b| b.to_string()),
                r.k[0].to_string(),
                r.k[1].to_string(),
                r.e[0].to_string(),
                r.e[1].to_string(),
                (r.bvc[0] + r.bvc[1]).to_string(),
                r.phi.to_string(),
                (r.dangerous as u8).to_string(),
                (r.corrupted as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Finds completed sneaky attacks in the history.
    pub fn detect_sneaky_windows(&self) -> Vec<SneakyWindow> {
        detect_sneaky_windows(&self.history, self.consts.c_star)
    }
}

fn candidate_inputs(inputs: &[Vec<bool>], c: usize) -> [&Vec<bool>; 3] {
    [
        &inputs[HashSlot::CandidateState(c).index()],
        &inputs[HashSlot::CandidateChain(c).index()],
        &inputs[HashSlot::CandidateDepth(c).index()],
    ]
}

fn candidate_hashes(h: &[u64; HASH_VALUES], c: usize) -> [u64; 3] {
    [
        h[HashSlot::CandidateState(c).index()],
        h[HashSlot::CandidateChain(c).index()],
        h[HashSlot::CandidateDepth(c).index()],
    ]
}

/// Pairs of distinct hash inputs with equal hash values: the three scalar
/// slots index by index, and every candidate triple of A against every
/// candidate triple of B.
fn count_collisions(inputs: &[Vec<Vec<bool>>; 2], hashes: [&[u64; HASH_VALUES]; 2]) -> u32 {
    let mut n = 0;
    for s in 0..3 {
        if inputs[0][s] != inputs[1][s] && hashes[0][s] == hashes[1][s] {
            n += 1;
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            if candidate_inputs(&inputs[0], i) != candidate_inputs(&inputs[1], j)
                && candidate_hashes(hashes[0], i) == candidate_hashes(hashes[1], j)
            {
                n += 1;
            }
        }
    }
    n
}

/// Whether candidate `q` of `me` equals one of the counterpart's candidates,
/// comparing everything the candidate hashes cover: the mega-state and the
/// part of the block transcript its chained hash includes.
fn is_member(me: &PartyState, q: &Option<MegaState>, other: &PartyState, theirs: &[Option<MegaState>; 3]) -> bool {
    theirs.iter().any(|t| match (q, t) {
        (None, None) => true,
        (Some(x), Some(y)) => x == y && me.t_upto(x.depth).eq(other.t_upto(y.depth)),
        _ => false,
    })
}

/// Simplified check of the sneaky-attack timeline on recorded history.
///
/// A candidate is a jump by the diving party X to p at iteration t_jump,
/// made while ℓ⁻ > 0 and with equal counters k during verification. With w
/// the scale of that jump (or one above it), the timeline needs X's last
/// visit to c_q = p + 2^{w-1} + 2^w, X's last visit to p̂ = p + 2^w before
/// that, a later resolution at p̂ ending the bad spell, then a jump by the
/// other party Y to some b ≥ p̂ − 2^{w-c*} that stays the divergent point,
/// with Y shallower than p̂ + 2^{w-c*} from t_p̂ until that jump and
/// q = p + 2^{w-1} forgotten by X just before t_jump.
pub fn detect_sneaky_windows(history: &[IterationRecord], c_star: u32) -> Vec<SneakyWindow> {
    let mut found = Vec::new();
    for (dagger, rec) in history.iter().enumerate().skip(1) {
        let before = &history[dagger - 1];
        if before.ell_minus == 0 || rec.k_during[0] != rec.k_during[1] {
            continue;
        }
        for x in 0..2 {
            let Some(jump) = rec.jumps[x] else { continue };
            let y = 1 - x;
            let k = rec.k_during[x];
            let j = rec.scale[x];
            for w in [j, j + 1] {
                if w < c_star || k > 2u64 << w {
                    continue;
                }
                if let Some(win) = match_timeline(history, dagger, x, y, jump.to, w, c_star) {
                    found.push(win);
                    break;
                }
            }
        }
    }
    found
}

fn match_timeline(
    h: &[IterationRecord],
    dagger: usize,
    x: usize,
    y: usize,
    p: u64,
    w: u32,
    c_star: u32,
) -> Option<SneakyWindow> {
    let p_hat = p + (1 << w);
    let q = p + (1 << (w - 1));
    let c_q = q + (1 << w);
    let slack = 1u64 << (w - c_star);
    let before = &h[dagger - 1];
    if before.memory[x].contains(&q) || before.depth[y] >= p_hat + (1 << (w - 2)) {
        return None;
    }
    let t_cq = (0..dagger).rev().find(|&t| h[t].depth[x] == c_q)?;
    let t_phat = (0..t_cq).rev().find(|&t| h[t].depth[x] == p_hat)?;
    let t_qhat = (t_cq + 1..dagger).find(|&t| h[t].ell_minus == 0)?;
    if h[t_qhat].depth != [p_hat, p_hat] || h[t_qhat].jumps.iter().all(Option::is_none) {
        return None;
    }
    let t_b = (t_qhat + 1..dagger).find(|&t| h[t].jumps[y].is_some())?;
    let b = h[t_b].jumps[y]?.to;
    if b + slack < p_hat || (t_b..dagger).any(|t| h[t].b != Some(b)) {
        return None;
    }
    if (t_phat..t_b).any(|t| h[t].depth[y] >= p_hat + slack) {
        return None;
    }
    let mut diving = Vec::new();
    for ell in p_hat + 1..=c_q {
        let last = (t_phat..=t_cq).rev().find(|&t| h[t].depth[x] == ell)?;
        if h[last].ell_minus > 0 {
            diving.push(h[last].iteration);
        }
    }
    diving.sort_unstable();
    let k = h[dagger].k_during[x];
    let end = h[dagger].iteration;
    let voting = (end + 1 - k..=end).collect();
    Some(SneakyWindow { diver: x, target: p, scale: w, jump_iteration: end, diving, voting })
}

/// True when no two windows across all attacks share an iteration.
pub fn windows_disjoint(windows: &[SneakyWindow]) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    windows.iter().all(|w| w.diving.iter().chain(&w.voting).all(|i| seen.insert(*i)))
}
