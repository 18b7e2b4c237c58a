//! Speak-or-listen channel with a budgeted adversary.
//!
//! In each round each party either transmits one bit or listens. If exactly
//! one transmits, the listener hears that bit unless the adversary pays one
//! unit of budget to flip it. If both transmit, nobody hears anything. If
//! both listen, the adversary chooses what each hears for free.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adversary::{Adversary, RoundView};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundAction {
    Transmit(bool),
    Listen,
}

impl RoundAction {
    pub fn is_transmit(self) -> bool {
        matches!(self, RoundAction::Transmit(_))
    }

    fn code(self) -> &'static str {
        match self {
            RoundAction::Transmit(false) => "T0",
            RoundAction::Transmit(true) => "T1",
            RoundAction::Listen => "L",
        }
    }
}

/// The adversary's corruption allowance: ⌊ε·N⌋ flips over N rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub total_rounds: u64,
    pub limit: u64,
    pub spent: u64,
    /// Flip attempts refused because the budget was exhausted.
    pub suppressed: u64,
}

impl Budget {
    pub fn new(epsilon: f64, total_rounds: u64) -> Self {
        let limit = (epsilon * total_rounds as f64 + 1e-9).floor() as u64;
        Budget { total_rounds, limit, spent: 0, suppressed: 0 }
    }

    pub fn with_limit(total_rounds: u64, limit: u64) -> Self {
        Budget { total_rounds, limit, spent: 0, suppressed: 0 }
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.spent
    }
}

/// Delivers one round. Returns what A and B hear (`None` when nothing).
pub fn deliver_round(
    a: RoundAction,
    b: RoundAction,
    adv: &mut dyn Adversary,
    budget: &mut Budget,
    view: &RoundView<'_>,
) -> (Option<bool>, Option<bool>) {
    match (a, b) {
        (RoundAction::Transmit(_), RoundAction::Transmit(_)) => (None, None),
        (RoundAction::Listen, RoundAction::Listen) => {
            let (x, y) = adv.inject(view);
            (Some(x), Some(y))
        }
        (RoundAction::Transmit(bit), RoundAction::Listen) => (None, Some(flip_if(bit, adv, budget, view))),
        (RoundAction::Listen, RoundAction::Transmit(bit)) => (Some(flip_if(bit, adv, budget, view)), None),
    }
}

fn flip_if(bit: bool, adv: &mut dyn Adversary, budget: &mut Budget, view: &RoundView<'_>) -> bool {
    if !adv.corrupt(view) {
        return bit;
    }
    if budget.spent < budget.limit {
        budget.spent += 1;
        !bit
    } else {
        budget.suppressed += 1;
        if budget.suppressed == 1 {
            log::warn!("adversary {} attempted to flip beyond its budget of {}", adv.name(), budget.limit);
        }
        bit
    }
}

/// One row of the optional per-round channel trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    pub a: RoundAction,
    pub b: RoundAction,
    pub delivered_a: Option<bool>,
    pub delivered_b: Option<bool>,
    pub spent: u64,
}

/// Writes `round, a_action, b_action, delivered_a, delivered_b, spent` CSV.
pub struct ChannelLog<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> ChannelLog<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut out = csv::Writer::from_writer(out);
        out.write_record(["round", "a_action", "b_action", "delivered_a", "delivered_b", "spent"])?;
        Ok(ChannelLog { out })
    }

    pub fn record(&mut self, r: &RoundRecord) -> Result<()> {
        let bit = |x: Option<bool>| match x {
            Some(true) => "1",
            Some(false) => "0",
            None => "-",
        };
        self.out.write_record([
            r.round.to_string().as_str(),
            r.a.code(),
            r.b.code(),
            bit(r.delivered_a),
            bit(r.delivered_b),
            r.spent.to_string().as_str(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Re-checks budget conservation from a channel trace: the recorded spend
/// never decreases, rises only in exactly-one-transmits rounds, rises by at
/// most one per round and stays within `limit`.
pub fn audit_trace(records: &[RoundRecord], limit: u64) -> std::result::Result<(), String> {
    let mut prev = 0;
    for r in records {
        let eligible = r.a.is_transmit() != r.b.is_transmit();
        if r.spent < prev || r.spent > prev + 1 || (!eligible && r.spent != prev) || r.spent > limit {
            return Err(format!("round {}: spend {} after {prev}", r.round, r.spent));
        }
        if r.spent == prev + 1 {
            let (sent, heard) = match (r.a, r.b) {
                (RoundAction::Transmit(x), RoundAction::Listen) => (x, r.delivered_b),
                (RoundAction::Listen, RoundAction::Transmit(x)) => (x, r.delivered_a),
                _ => unreachable!("eligibility checked above"),
            };
            if heard != Some(!sent) {
                return Err(format!("round {}: charged but not flipped", r.round));
            }
        }
        prev = r.spent;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{tests::dummy_view, Adversary};

    struct Always {
        flip: bool,
        set: (bool, bool),
    }

    impl Adversary for Always {
        fn name(&self) -> &str {
            "always"
        }
        fn corrupt(&mut self, _: &RoundView<'_>) -> bool {
            self.flip
        }
        fn inject(&mut self, _: &RoundView<'_>) -> (bool, bool) {
            self.set
        }
    }

    #[test]
    fn collision_delivers_nothing() {
        let mut adv = Always { flip: true, set: (true, true) };
        let mut budget = Budget::with_limit(100, 5);
        let view = dummy_view();
        let out = deliver_round(RoundAction::Transmit(true), RoundAction::Transmit(false), &mut adv, &mut budget, &view);
        assert_eq!(out, (None, None));
        assert_eq!(budget.spent, 0);
    }

    #[test]
    fn silence_is_free_for_the_adversary() {
        let mut adv = Always { flip: true, set: (true, true) };
        let mut budget = Budget::with_limit(100, 5);
        let view = dummy_view();
        let out = deliver_round(RoundAction::Listen, RoundAction::Listen, &mut adv, &mut budget, &view);
        assert_eq!(out, (Some(true), Some(true)));
        assert_eq!(budget.spent, 0);
    }

    #[test]
    fn flip_costs_one_and_is_capped() {
        let mut adv = Always { flip: true, set: (false, false) };
        let mut budget = Budget::with_limit(100, 1);
        let view = dummy_view();
        let out = deliver_round(RoundAction::Transmit(false), RoundAction::Listen, &mut adv, &mut budget, &view);
        assert_eq!(out, (None, Some(true)));
        assert_eq!(budget.spent, 1);
        let out = deliver_round(RoundAction::Listen, RoundAction::Transmit(false), &mut adv, &mut budget, &view);
        assert_eq!(out, (Some(false), None));
        assert_eq!((budget.spent, budget.suppressed), (1, 1));
    }

    #[test]
    fn budget_limit_is_floor() {
        assert_eq!(Budget::new(0.01, 1999).limit, 19);
        assert_eq!(Budget::new(0.01, 2000).limit, 20);
    }

    #[test]
    fn log_format() {
        let mut buf = Vec::new();
        let mut log = ChannelLog::new(&mut buf).unwrap();
        log.record(&RoundRecord {
            round: 0,
            a: RoundAction::Transmit(true),
            b: RoundAction::Listen,
            delivered_a: None,
            delivered_b: Some(false),
            spent: 1,
        })
        .unwrap();
        log.finish().unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "round,a_action,b_action,delivered_a,delivered_b,spent\n0,T1,L,-,0,1\n"
        );
    }
}
