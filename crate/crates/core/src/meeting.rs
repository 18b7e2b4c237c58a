//! Meeting points and the bounded checkpoint memory.
//!
//! For a depth a, the meeting-point set is M_a = {⌊a⌋_{2^j} − 2^j ≥ 0 : j ≥ 0}:
//! the checkpoints a party at depth a keeps, spaced geometrically backwards.
//! A party only ever stores mega-states at points of M_a plus a itself.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{param, Result};
use crate::hash::ChainLink;
use crate::protocol::StateId;

/// Stability reported for point 0, which every power of two divides.
pub const INFINITELY_STABLE: u32 = u32::MAX;

/// ⌊x⌋_y: the largest multiple of y not exceeding x.
pub fn floor_mult(x: u64, y: u64) -> Result<u64> {
    if y == 0 {
        return Err(param("floor_mult by zero"));
    }
    Ok(x - x % y)
}

/// ⌊a⌋_{2^j} − 2^j, or `None` when negative or 2^j overflows.
fn scale_point(a: u64, j: u32) -> Option<u64> {
    if j >= 64 {
        return None;
    }
    let step = 1u64 << j;
    (a - a % step).checked_sub(step)
}

/// The meeting points of depth `a`, by direct enumeration of the definition.
pub fn mp_set(a: u64) -> BTreeSet<u64> {
    (0..64).filter_map(|j| scale_point(a, j)).collect()
}

pub fn in_mp_set(p: u64, a: u64) -> bool {
    (0..64).any(|j| scale_point(a, j) == Some(p))
}

/// Largest j with 2^j | p.
pub fn j_stable(p: u64) -> u32 {
    if p == 0 {
        INFINITELY_STABLE
    } else {
        p.trailing_zeros()
    }
}

/// The three jump candidates at scale j for a party at depth ℓ:
/// MP1 = ⌊ℓ⌋_{2^{j+1}} − 2^{j+1}, MP2 = ⌊ℓ⌋_{2^j} − 2^j, and MP3 = the deepest
/// point of M_ℓ divisible by 2^j.
pub fn transition_candidates(j: u32, ell: u64) -> [Option<u64>; 3] {
    let mp1 = scale_point(ell, j.saturating_add(1));
    let mp2 = scale_point(ell, j);
    let mp3 = (0..64)
        .filter_map(|i| scale_point(ell, i))
        .find(|&p| j >= 64 && p == 0 || j < 64 && p % (1u64 << j) == 0);
    [mp1, mp2, mp3]
}

/// A checkpoint a party can rewind to. The block transcript it refers to is
/// the party's shared `T`, restricted to chunks at depth ≤ `depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MegaState {
    pub v: StateId,
    /// Depth in iterations; the protocol state sits at round depth·r.
    pub depth: u64,
    pub link: Option<ChainLink>,
    /// Iteration in which this checkpoint was simulated (0 for the root).
    pub iter: u64,
}

impl MegaState {
    pub fn root(v: StateId) -> Self {
        MegaState { v, depth: 0, link: None, iter: 0 }
    }
}

/// The remembered points M together with their mega-states.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MemoryStore {
    mega: BTreeMap<u64, MegaState>,
}

impl MemoryStore {
    pub fn with_root(root: MegaState) -> Self {
        let mut mega = BTreeMap::new();
        mega.insert(root.depth, root);
        MemoryStore { mega }
    }

    pub fn points(&self) -> impl Iterator<Item = u64> + '_ {
        self.mega.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.mega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mega.is_empty()
    }

    pub fn contains(&self, q: u64) -> bool {
        self.mega.contains_key(&q)
    }

    pub fn get(&self, q: u64) -> Option<&MegaState> {
        self.mega.get(&q)
    }

    pub fn values(&self) -> impl Iterator<Item = &MegaState> {
        self.mega.values()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut MegaState> {
        self.mega.values_mut()
    }

    /// M ← (M ∩ M_a) ∪ {a} with a = p.depth, inserting p when `add`.
    pub fn maintain(&mut self, p: &MegaState, add: bool) {
        let a = p.depth;
        self.mega.retain(|&q, _| q == a || in_mp_set(q, a));
        if add {
            self.mega.insert(a, *p);
        }
        debug_assert!(self.mega.contains_key(&a), "maintained point {a} has no mega-state");
    }
}

pub fn maintain_avmps(p: &MegaState, store: &mut MemoryStore, add: bool) {
    store.maintain(p, add);
}

/// The cardinality bound on M asserted by the memory tests.
pub fn cardinality_bound(depth: u64) -> usize {
    2 * crate::bits::ceil_log2(depth + 2) as usize + 2
}

/// Self-checks of the meeting-point structure, used by the `selftest` verb.
pub mod checks {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// p ∈ M_a ⇔ p < a < p + 2^{j+1} for j-stable p > 0 (and a ≥ 1 for
    /// p = 0), for all p, a ≤ `max`. Returns the number of pairs checked.
    pub fn membership(max: u64) -> std::result::Result<u64, String> {
        for a in 0..=max {
            let set = mp_set(a);
            for p in 0..=max {
                let expect = if p == 0 { a >= 1 } else { a > p && a - p < 2u64 << j_stable(p) };
                if set.contains(&p) != expect {
                    return Err(format!("membership of {p} in M_{a}"));
                }
            }
        }
        Ok((max + 1) * (max + 1))
    }

    /// For ℓ_B ≤ ℓ_A with ℓ_A − ℓ_B ≤ 2^{j-3}, MP1 of A at scale j equals MP1
    /// or MP2 of B.
    pub fn common_point(max_ell: u64, max_j: u32) -> std::result::Result<u64, String> {
        let mut n = 0;
        for j in 3..=max_j {
            for lb in 0..=max_ell {
                for la in lb..=(lb + (1 << (j - 3))).min(max_ell) {
                    let a = transition_candidates(j, la);
                    let b = transition_candidates(j, lb);
                    if a[0] != b[0] && a[0] != b[1] {
                        return Err(format!("j={j} la={la} lb={lb}: {a:?} vs {b:?}"));
                    }
                    n += 1;
                }
            }
        }
        Ok(n)
    }

    /// Random walks of unit steps and jumps to remembered points. At every
    /// step, a j-stable point p ≤ depth that was visited is forgotten exactly
    /// when the depth reached p + 2^{j+1} since the last visit to p.
    pub fn forgetting_walks(walks: usize, len: usize, seed: u64) -> std::result::Result<u64, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        for w in 0..walks {
            let mut store = MemoryStore::with_root(MegaState::root(StateId(0)));
            let mut depth = 0u64;
            // Highest depth since the last visit, per visited depth.
            let mut peak_since: Vec<u64> = vec![0];
            for _ in 0..len {
                let back: Vec<u64> = store.points().filter(|&q| q < depth).collect();
                if back.is_empty() || rng.gen_bool(0.8) {
                    depth += 1;
                    let ms = MegaState { v: StateId(depth as u32), depth, link: None, iter: depth };
                    store.maintain(&ms, true);
                } else {
                    depth = back[rng.gen_range(0..back.len())];
                    let ms = *store.get(depth).expect("jump target is remembered");
                    store.maintain(&ms, false);
                }
                peak_since.resize(peak_since.len().max(depth as usize + 1), 0);
                peak_since[depth as usize] = depth;
                for seen in peak_since[..depth as usize].iter_mut() {
                    *seen = (*seen).max(depth);
                }
                for p in 1..=depth {
                    let forgotten = !store.contains(p);
                    let expect = peak_since[p as usize] - p >= 2u64 << j_stable(p);
                    if forgotten != expect {
                        return Err(format!("walk {w}: point {p} at depth {depth}, forgotten={forgotten}"));
                    }
                    checked += 1;
                }
            }
        }
        Ok(checked)
    }
}
