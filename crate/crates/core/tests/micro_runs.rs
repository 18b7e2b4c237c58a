//! Small scripted runs checked against the ghost's view of both parties.

use std::sync::Arc;

use noisy_dialog::adversary::AdversarySpec;
use noisy_dialog::config::{derive_params, ParamSpec, RunConfig};
use noisy_dialog::ghost::{GhostState, IterationRecord};
use noisy_dialog::protocol::build_random_dag;
use noisy_dialog::schedule::{Schedule, SegmentKind};
use noisy_dialog::trial::{run_trial, TrialOptions, TrialOutcome};

fn first_round_of(cfg: &RunConfig, kind: SegmentKind, iteration: u64) -> u64 {
    Schedule::new(cfg)
        .segments()
        .find(|s| s.kind == kind && s.iteration == Some(iteration))
        .map(|s| s.first_round)
        .unwrap()
}

fn run(spec: &ParamSpec, adversary: AdversarySpec, seed: u64) -> TrialOutcome {
    let cfg = derive_params(spec).unwrap();
    let dag = Arc::new(build_random_dag(spec.depth as u32, 2 * spec.depth as usize, seed).unwrap());
    run_trial(&cfg, dag, &adversary, 0, seed, &TrialOptions::default()).unwrap()
}

/// Flips the first bit of the given segment in `iteration`.
fn flip_first_bit(spec: &ParamSpec, kind: SegmentKind, iteration: u64, seed: u64) -> TrialOutcome {
    let cfg = derive_params(spec).unwrap();
    let start = first_round_of(&cfg, kind, iteration);
    run(spec, AdversarySpec::Burst { start, len: 1 }, seed)
}

fn record(ghost: &GhostState, iteration: u64) -> &IterationRecord {
    &ghost.history()[iteration as usize - 1]
}

#[test]
fn clean_iterations_advance_the_agreed_prefix() {
    let out = run(&ParamSpec::new(0.01, 256), AdversarySpec::NoiseFree, 3);
    for (i, rec) in out.ghost.history().iter().enumerate() {
        assert_eq!(rec.ell_plus, i as u64 + 1, "iteration {}", rec.iteration);
        assert_eq!((rec.ell_minus, rec.l_minus, rec.bvc), (0, 0, [0, 0]));
        assert_eq!(rec.b, None);
    }
    assert!(out.ghost.detect_sneaky_windows().is_empty());
}

#[test]
fn one_flipped_bit_opens_and_closes_a_bad_spell() {
    let spec = ParamSpec::new(0.01, 1024);
    let out = flip_first_bit(&spec, SegmentKind::Simulation, 30, 11);
    let before = record(&out.ghost, 29);
    let hit = record(&out.ghost, 30);
    assert_eq!((before.ell_minus, before.depth), (0, [29, 29]));
    // Both parties simulated, but each holds a different chunk 30.
    assert_eq!(hit.depth, [30, 30]);
    assert_eq!(hit.b, Some(29));
    assert_eq!(hit.ell_plus, 29);
    assert_eq!(hit.ell_minus, 2);
    assert!(hit.corrupted);

    let end = out.ghost.history()[30..].iter().find(|r| r.ell_minus == 0).expect("bad spell ends");
    assert_eq!(end.l_minus, 0);
    assert_eq!(end.depth, [end.ell_plus, end.ell_plus]);
    assert!(end.jumps.iter().any(Option::is_some), "the spell ends with a rewind");
    assert!(out.result.success);
}

#[test]
fn root_candidate_lets_parties_recover_from_a_first_iteration_split() {
    // Alice's first state hash reaches Bob corrupted, so only Alice
    // simulates iteration 1 and Bob stays at the root.
    let state_hash = SegmentKind::Hash { index: 1 };
    let mut spec = ParamSpec::new(0.01, 1024);
    let with_root = flip_first_bit(&spec, state_hash, 1, 5);
    assert_eq!(with_root.ghost.history()[0].depth, [1, 0]);
    assert!(with_root.result.success);
    assert!(with_root.ghost.history().iter().skip(8).all(|r| r.ell_minus == 0));

    // Without a candidate at depth 0 the party left at the root never finds
    // a common meeting point, and the run stalls for good.
    spec.root_candidate = false;
    let without = flip_first_bit(&spec, state_hash, 1, 5);
    assert!(!without.result.success);
    assert!(without.ghost.history().iter().all(|r| r.ell_minus > 0 && r.ell_plus == 0));
}

#[test]
fn sneaky_windows_have_the_dive_length_and_never_overlap() {
    for scale in [4u32, 5] {
        let adversary = format!("sneaky:{scale}:2:32").parse().unwrap();
        let out = run(&ParamSpec::new(0.01, 4096), adversary, 1);
        let windows = out.ghost.detect_sneaky_windows();
        assert_eq!(windows.len(), 2, "scale {scale}");
        for w in &windows {
            assert_eq!(w.scale, scale);
            assert_eq!(w.diving.len(), 1 << (scale - 1));
            assert!(w.voting.len() as u64 <= 2 << scale);
        }
        let mut all: Vec<u64> = windows.iter().flat_map(|w| w.diving.iter().chain(&w.voting).copied()).collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n, "windows overlap at scale {scale}");
        if scale == 4 {
            assert!(out.result.success);
        } else {
            // Two scale-5 attacks cost more iterations than the schedule's
            // slack: the run ends in agreement, just short of the end.
            let last = out.ghost.history().last().unwrap();
            assert_eq!(last.ell_minus, 0);
            assert!(!out.result.success);
        }
    }
}

#[test]
fn ghost_quantities_stay_consistent_under_attack() {
    for adversary in ["figure1", "greedy_desync", "burst:5000:400"] {
        let out = run(&ParamSpec::new(0.01, 1024), adversary.parse().unwrap(), 2);
        let history = out.ghost.history();
        for b in out.ghost.blocks() {
            assert_eq!(b.phi_before, b.phi_after, "{adversary}: block {}", b.block);
        }
        // ℓ⁻ is the gap between the two paths beyond the agreed prefix.
        for r in history {
            assert_eq!(r.ell_minus, r.depth[0] + r.depth[1] - 2 * r.ell_plus, "{adversary}: iteration {}", r.iteration);
            assert!(r.l_minus >= r.ell_minus);
        }
    }
}
