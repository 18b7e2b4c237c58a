//! The original interactive protocol, modelled as a pebble game on a rooted
//! layered DAG. Each non-terminal state is owned by one party, who moves the
//! pebble along the edge labelled by its transition bit; the listener follows
//! the bit it receives. Both parties have read-only access to the whole DAG.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Party::A => 0,
            Party::B => 1,
        }
    }
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Party::A => "A",
            Party::B => "B",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateNode {
    pub owner: Party,
    pub depth: u32,
    /// Successors for bit 0 and bit 1; `None` for terminals.
    pub children: Option<[StateId; 2]>,
    /// The owner's transition bit. Meaningless on terminals.
    pub tbit: bool,
}

/// A validated protocol DAG. All terminals sit at depth `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolDag {
    nodes: Vec<StateNode>,
    root: StateId,
    depth: u32,
}

/// The `r` bits exchanged in one simulation iteration, tagged with the
/// global iteration number in which they were produced.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TranscriptChunk {
    pub bits: Vec<bool>,
    pub iteration: u64,
}

/// Who owns the states of a generated DAG.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Ownership {
    /// Random owners, with every window of four consecutive layers containing
    /// states of both parties.
    #[default]
    Mixed,
    /// Every state belongs to one party.
    Single(Party),
}

impl ProtocolDag {
    pub fn new(nodes: Vec<StateNode>, root: StateId) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDag(m));
        let n = nodes.len();
        if n == 0 {
            return bad("no states".into());
        }
        if root.0 as usize >= n {
            return bad(format!("root {} out of range", root.0));
        }
        if nodes[root.0 as usize].depth != 0 {
            return bad("root must have depth 0".into());
        }
        let mut depth = 0;
        for (i, node) in nodes.iter().enumerate() {
            if node.depth == 0 && i != root.0 as usize {
                return bad(format!("state {i} has depth 0 but is not the root"));
            }
            if let Some(ch) = node.children {
                for c in ch {
                    let Some(child) = nodes.get(c.0 as usize) else {
                        return bad(format!("state {i} points to missing state {}", c.0));
                    };
                    if child.depth != node.depth + 1 {
                        return bad(format!("edge {i} -> {} does not increase depth by one", c.0));
                    }
                }
            } else {
                depth = depth.max(node.depth);
            }
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.children.is_none() && node.depth != depth {
                return bad(format!("terminal {i} at depth {} but protocol depth is {depth}", node.depth));
            }
            if node.children.is_some() && node.depth >= depth {
                return bad(format!("state {i} at depth {} has children past the terminals", node.depth));
            }
        }
        Ok(ProtocolDag { nodes, root, depth })
    }

    pub fn root(&self) -> StateId {
        self.root
    }

    /// Number of rounds of the noiseless protocol.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn state_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: StateId) -> &StateNode {
        &self.nodes[id.0 as usize]
    }

    pub fn nodes(&self) -> &[StateNode] {
        &self.nodes
    }

    pub fn is_terminal(&self, id: StateId) -> bool {
        self.node(id).children.is_none()
    }

    /// The party that speaks at `id`. Terminals are padded with rounds in
    /// which A sends a dummy 0.
    pub fn speaker(&self, id: StateId) -> Party {
        let node = self.node(id);
        if node.children.is_none() {
            Party::A
        } else {
            node.owner
        }
    }

    /// The bit the speaker sends at `id` (0 when padding).
    pub fn transition(&self, id: StateId) -> bool {
        let node = self.node(id);
        node.children.is_some() && node.tbit
    }

    /// Successor after a round carrying `bit`; terminals stay put.
    pub fn step(&self, id: StateId, bit: bool) -> StateId {
        match self.node(id).children {
            Some(ch) => ch[bit as usize],
            None => id,
        }
    }

    /// `Some(bit)` when `me` speaks at `id`, `None` when it listens.
    pub fn own_move(&self, me: Party, id: StateId) -> Option<bool> {
        (self.speaker(id) == me).then(|| self.transition(id))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "d={} s={} root={}", self.depth, self.nodes.len(), self.root.0);
        for (i, node) in self.nodes.iter().enumerate() {
            let (c0, c1) = match node.children {
                Some([a, b]) => (a.0.to_string(), b.0.to_string()),
                None => ("-".to_string(), "-".to_string()),
            };
            let _ = writeln!(out, "{i} {} {} {c0} {c1} {}", node.owner, node.depth, node.tbit as u8);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
        let mut d = None;
        let mut s = None;
        let mut root = None;
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| perr(hline, "expected key=value"))?;
            let value: u64 = value.parse().map_err(|_| perr(hline, "non-numeric header value"))?;
            match key {
                "d" => d = Some(value),
                "s" => s = Some(value),
                "root" => root = Some(value),
                _ => return Err(perr(hline, "unknown header key")),
            }
        }
        let (d, s, root) = match (d, s, root) {
            (Some(d), Some(s), Some(r)) => (d, s as usize, r as u32),
            _ => return Err(perr(hline, "header needs d, s and root")),
        };
        let mut slots: Vec<Option<StateNode>> = vec![None; s];
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(perr(ln, "expected: id owner depth child0 child1 tbit"));
            }
            let num = |x: &str| x.parse::<u32>().map_err(|_| perr(ln, "bad number"));
            let id = num(f[0])? as usize;
            let owner = match f[1] {
                "A" => Party::A,
                "B" => Party::B,
                _ => return Err(perr(ln, "owner must be A or B")),
            };
            let depth = num(f[2])?;
            let children = match (f[3], f[4]) {
                ("-", "-") => None,
                (a, b) => Some([StateId(num(a)?), StateId(num(b)?)]),
            };
            let tbit = match f[5] {
                "0" | "-" => false,
                "1" => true,
                _ => return Err(perr(ln, "tbit must be 0 or 1")),
            };
            let slot = slots.get_mut(id).ok_or_else(|| perr(ln, "state id exceeds s"))?;
            if slot.is_some() {
                return Err(perr(ln, "duplicate state id"));
            }
            *slot = Some(StateNode { owner, depth, children, tbit });
        }
        let nodes = slots
            .into_iter()
            .enumerate()
            .map(|(i, n)| n.ok_or_else(|| Error::InvalidDag(format!("state {i} missing"))))
            .collect::<Result<Vec<_>>>()?;
        let dag = ProtocolDag::new(nodes, StateId(root))?;
        if dag.depth as u64 != d {
            return Err(Error::InvalidDag(format!("header says d={d} but terminals are at {}", dag.depth)));
        }
        Ok(dag)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Generates a random layered DAG with exactly `state_budget` states.
pub fn build_random_dag(depth: u32, state_budget: usize, rng_seed: u64) -> Result<ProtocolDag> {
    build_random_dag_with(depth, state_budget, rng_seed, Ownership::Mixed)
}

pub fn build_random_dag_with(
    depth: u32,
    state_budget: usize,
    rng_seed: u64,
    ownership: Ownership,
) -> Result<ProtocolDag> {
    if depth < 1 {
        return Err(param("random DAG depth must be at least 1"));
    }
    if state_budget < depth as usize + 1 {
        return Err(param(format!(
            "state budget {state_budget} cannot realise depth {depth} (need at least {})",
            depth as usize + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let layers = depth as usize + 1;
    let mut sizes = vec![1usize; layers];
    for _ in 0..state_budget - layers {
        sizes[rng.gen_range(1..layers)] += 1;
    }
    let mut offsets = Vec::with_capacity(layers);
    let mut acc = 0usize;
    for &sz in &sizes {
        offsets.push(acc);
        acc += sz;
    }
    let mut nodes = Vec::with_capacity(state_budget);
    for layer in 0..layers {
        for _ in 0..sizes[layer] {
            let owner = match ownership {
                Ownership::Single(p) => p,
                Ownership::Mixed => match layer % 4 {
                    1 => Party::A,
                    3 => Party::B,
                    _ if rng.gen::<bool>() => Party::A,
                    _ => Party::B,
                },
            };
            let children = (layer + 1 < layers).then(|| {
                let (base, n) = (offsets[layer + 1], sizes[layer + 1]);
                let c0 = rng.gen_range(0..n);
                let c1 = if n >= 2 {
                    (c0 + rng.gen_range(1..n)) % n
                } else {
                    c0
                };
                [StateId((base + c0) as u32), StateId((base + c1) as u32)]
            });
            let tbit = children.is_some() && rng.gen::<bool>();
            nodes.push(StateNode { owner, depth: layer as u32, children, tbit });
        }
    }
    ProtocolDag::new(nodes, StateId(0))
}

/// The transcript of the noiseless execution.
pub fn noiseless_run(dag: &ProtocolDag) -> Vec<bool> {
    let mut out = Vec::with_capacity(dag.depth() as usize);
    let mut at = dag.root();
    while !dag.is_terminal(at) {
        let bit = dag.transition(at);
        out.push(bit);
        at = dag.step(at, bit);
    }
    out
}

/// Per-round channel access used by [`simulate_rounds`].
pub trait RoundHook {
    fn send(&mut self, bit: bool) -> Result<()>;
    fn receive(&mut self) -> Result<bool>;
}

/// Runs `r` rounds of the protocol for party `me` starting at `start`.
/// Returns the bits sent or received and the final state.
pub fn simulate_rounds(
    dag: &ProtocolDag,
    me: Party,
    start: StateId,
    r: usize,
    io: &mut dyn RoundHook,
) -> Result<(Vec<bool>, StateId)> {
    let mut at = start;
    let mut bits = Vec::with_capacity(r);
    for _ in 0..r {
        let bit = match dag.own_move(me, at) {
            Some(bit) => {
                io.send(bit)?;
                bit
            }
            None => io.receive()?,
        };
        bits.push(bit);
        at = dag.step(at, bit);
    }
    Ok((bits, at))
}
