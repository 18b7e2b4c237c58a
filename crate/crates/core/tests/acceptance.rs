//! Acceptance criteria. Each test prints one `criterion N [PASS|FAIL]` line
//! with the measured value and its pinned tolerance, then asserts it.
//!
//! Expected values are recomputed here from first principles (protocol walks,
//! interval characterisations, the Φ formula, binomial tails) rather than by
//! calling the library's own helpers.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use noisy_dialog::adversary::AdversarySpec;
use noisy_dialog::config::{derive_params, ParamSpec, RunConfig};
use noisy_dialog::ecc::EccConfig;
use noisy_dialog::ghost::IterationRecord;
use noisy_dialog::harness::{attack_experiment, run_outcomes, run_trials, BatchSpec, DagSource};
use noisy_dialog::hash::Seed;
use noisy_dialog::meeting::{mp_set, transition_candidates, MegaState, MemoryStore};
use noisy_dialog::protocol::{build_random_dag, ProtocolDag, StateId};
use noisy_dialog::trial::{run_trial, TrialOptions, TrialResult};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn batch(epsilon: f64, depth: u64, adversary: &str, trials: u64) -> BatchSpec {
    BatchSpec::new(ParamSpec::new(epsilon, depth), adversary.parse::<AdversarySpec>().unwrap(), trials)
}

fn successes(results: &[TrialResult]) -> usize {
    results.iter().filter(|r| r.success).count()
}

/// The noiseless transcript, walking the DAG node by node.
fn oracle_transcript(dag: &ProtocolDag) -> Vec<bool> {
    let mut out = Vec::new();
    let mut at = dag.root();
    while let Some(children) = dag.node(at).children {
        let bit = dag.node(at).tbit;
        out.push(bit);
        at = children[bit as usize];
    }
    out
}

#[test]
fn noiseless_runs_reproduce_the_protocol() {
    let start = Instant::now();
    let (mut ok, mut total) = (0, 0);
    for depth in [256u64, 1024, 4096] {
        let cfg = derive_params(&ParamSpec::new(0.01, depth)).unwrap();
        for trial in 0..50u64 {
            let seed = 1000 * depth + trial;
            let dag = Arc::new(build_random_dag(depth as u32, 1 << 14, seed).unwrap());
            let expect = oracle_transcript(&dag);
            let out = run_trial(&cfg, dag, &AdversarySpec::NoiseFree, trial, seed, &TrialOptions::default()).unwrap();
            let agree = (0..2).all(|party| {
                let bits: Vec<bool> = out.ghost.path(party).iter().flat_map(|c| c.bits.iter().copied()).collect();
                bits.len() >= expect.len() && bits[..expect.len()] == expect[..]
            });
            ok += (out.result.success && agree && out.result.budget_spent == 0) as u32;
            total += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = ok == total && elapsed <= Duration::from_secs(60);
    report(1, "noiseless correctness", pass, format!("{ok}/{total} match the DAG walk (need all), {elapsed:.1?} (limit 60 s)"));
    assert!(pass);
}

#[test]
fn random_noise_is_survived() {
    let start = Instant::now();
    let results = run_trials(&batch(0.005, 4096, "random_flip", 100)).unwrap();
    let elapsed = start.elapsed();
    let ok = successes(&results);
    let spent: u64 = results.iter().map(|r| r.budget_spent).sum();
    let pass = ok >= 95 && elapsed <= Duration::from_secs(300);
    report(
        2,
        "robustness under random noise",
        pass,
        format!("{ok}/100 successes (need >= 95), mean flips {:.0}, {elapsed:.1?} (limit 300 s)", spent as f64 / 100.0),
    );
    assert!(pass);
}

/// Rounds the schedule needs, counted from the derived parameters:
/// per iteration the seed, 24 hash values and r simulation rounds; per block
/// the encoded extender seed and both encoded big-hash seed halves.
fn expected_rounds(cfg: &RunConfig) -> u64 {
    let iteration = cfg.sd2 + 24 * cfg.o2 as usize + cfg.r;
    let block = cfg.codecs.block_seed_ecc.block_len() + 2 * cfg.codecs.big_seed_ecc.block_len();
    cfg.b_total * (block as u64 + cfg.i_block * iteration as u64)
}

/// Rounds a binary code with the same redundancy count would have saved:
/// the Reed-Solomon code spends m-bit symbols where bits would do.
fn ecc_excess(cfg: &RunConfig) -> u64 {
    let excess = |e: &EccConfig| {
        let parity = 4 * e.guard() + 1;
        (e.block_len() - (e.msg_len() + parity)) as u64
    };
    cfg.b_total * (excess(&cfg.codecs.block_seed_ecc) + 2 * excess(&cfg.codecs.big_seed_ecc))
}

#[test]
fn overhead_falls_with_epsilon() {
    let depth = 8192u64;
    let mut rows = Vec::new();
    let mut rounds_ok = true;
    for eps in [0.02, 0.01, 0.005, 0.002] {
        let spec = batch(eps, depth, "random_flip", 20);
        let cfg = derive_params(&spec.params).unwrap();
        let results = run_trials(&spec).unwrap();
        rounds_ok &= results.iter().all(|r| r.total_rounds == expected_rounds(&cfg));
        let mean = results.iter().map(|r| r.total_rounds as f64 / depth as f64 - 1.0).sum::<f64>() / results.len() as f64;
        let adjusted = mean - ecc_excess(&cfg) as f64 / depth as f64;
        let bound = 6.0 * (eps * (1.0 / eps).log2().log2()).sqrt();
        rows.push((eps, mean, adjusted, bound));
    }
    let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1 * 1.10);
    let bounded = rows.iter().all(|&(_, _, adjusted, bound)| adjusted <= bound);
    let pass = rounds_ok && monotone && bounded;
    let table: Vec<String> = rows
        .iter()
        .map(|(e, m, a, b)| format!("eps={e}: {m:.2} (ecc-adjusted {a:.2}, bound {b:.3})"))
        .collect();
    report(
        3,
        "rate trend",
        pass,
        format!(
            "{}; nonincreasing within 10%: {monotone}; within bound: {bounded}; rounds match schedule: {rounds_ok}",
            table.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn memory_grows_like_log_s_log_d() {
    let eps: f64 = 0.01;
    let mut normalized = Vec::new();
    for log_d in [10u32, 12, 14] {
        let depth = 1u64 << log_d;
        // States must cover the depth, so s = 2^12 only where d allows it.
        let states = (1u64 << 12).max(depth + 1);
        let mut params = ParamSpec::new(eps, depth);
        params.states = states;
        let mut spec = BatchSpec::new(params, "random_flip".parse().unwrap(), 4);
        spec.dag = DagSource::Random { states: states as usize };
        let peak = run_trials(&spec)
            .unwrap()
            .iter()
            .map(|r| r.peak_memory_bits_a.max(r.peak_memory_bits_b))
            .max()
            .unwrap();
        let scale = (states as f64).log2() * log_d as f64 + ((1.0 / eps).log2().log2() / eps).sqrt() * log_d as f64;
        normalized.push((depth, states, peak, peak as f64 / scale));
    }
    let max = normalized.iter().map(|n| n.3).fold(f64::MIN, f64::max);
    let min = normalized.iter().map(|n| n.3).fold(f64::MAX, f64::min);
    let pass = max / min <= 2.0;
    let rows: Vec<String> = normalized.iter().map(|(d, s, p, n)| format!("d={d} s={s}: {p} bits ({n:.2})")).collect();
    report(4, "memory scaling", pass, format!("{}; max/min {:.2} (limit 2.0)", rows.join(", "), max / min));
    assert!(pass);
}

#[test]
fn seed_code_corrects_two_flips_per_iteration() {
    let cfg = derive_params(&ParamSpec::new(0.01, 4096)).unwrap();
    let flips = 2 * cfg.i_block as usize;
    let ecc = EccConfig::new(cfg.sd1 * cfg.i_block as usize, cfg.i_block as usize).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = 0;
    for _ in 0..10_000 {
        let msg: Vec<bool> = (0..ecc.msg_len()).map(|_| rng.gen()).collect();
        let mut word = ecc.encode(&msg).unwrap();
        for pos in rand::seq::index::sample(&mut rng, word.len(), flips) {
            word[pos] = !word[pos];
        }
        if ecc.decode(&word).ok().as_deref() != Some(&msg[..]) {
            failures += 1;
        }
    }
    let pass = failures == 0;
    report(
        5,
        "ECC radius",
        pass,
        format!("{failures} failures in 10000 words of {} bits with {flips} flips (tolerance 0)", ecc.block_len()),
    );
    assert!(pass);
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.gen()).collect()
}

#[test]
fn hash_collisions_stay_within_bounds() {
    let cfg = derive_params(&ParamSpec::new(0.01, 4096)).unwrap();
    let hashes = &cfg.codecs.hashes;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws = 100_000u32;
    let mut collisions = 0u32;
    for _ in 0..draws {
        let x = random_bits(&mut rng, cfg.t1);
        let mut y = random_bits(&mut rng, cfg.t1);
        if x == y {
            y[0] = !y[0];
        }
        let inner = Seed::from_bits(&random_bits(&mut rng, cfg.sd1)).unwrap();
        let outer = Seed::from_bits(&random_bits(&mut rng, cfg.sd2)).unwrap();
        if hashes.small_hash(&x, outer, inner).unwrap() == hashes.small_hash(&y, outer, inner).unwrap() {
            collisions += 1;
        }
    }
    let rate = collisions as f64 / draws as f64;
    let bound = cfg.t1.div_ceil(cfg.o1 as usize) as f64 * (-(cfg.o1 as f64)).exp2() + (-(cfg.o2 as f64)).exp2();
    let small_ok = rate <= 2.0 * bound;

    let results = run_trials(&batch(0.01, 4096, "random_flip", 10)).unwrap();
    let big: u64 = results.iter().map(|r| r.big_collisions).sum();
    let pass = small_ok && big == 0;
    report(
        6,
        "hash bounds",
        pass,
        format!(
            "small-hash collision rate {rate:.2e} (limit {:.2e}); big-hash collisions in 10 runs: {big} (tolerance 0)",
            2.0 * bound
        ),
    );
    assert!(pass);
}

/// p is remembered at depth a exactly for the 2^{j+1} − 1 depths after it,
/// where j is the largest power of two dividing p. The root stays forever.
fn remembered_at(p: u64, a: u64) -> bool {
    if p == 0 {
        return a >= 1;
    }
    let span = 2u64 << p.trailing_zeros();
    a > p && a < p + span
}

fn stable_point_count(max: u64) -> u64 {
    let mut violations = 0;
    for a in 0..=max {
        let set = mp_set(a);
        violations += (0..=max).filter(|&p| set.contains(&p) != remembered_at(p, a)).count() as u64;
    }
    violations
}

/// Scale-j meeting point ⌊a⌋_{2^j} − 2^j, by plain arithmetic.
fn scale_point(a: u64, j: u32) -> Option<u64> {
    let step = 1u64 << j;
    (a / step * step).checked_sub(step)
}

fn common_point_violations(max_ell: u64, max_j: u32) -> u64 {
    let mut violations = 0;
    for j in 3..=max_j {
        for lb in 0..=max_ell {
            for la in lb..=(lb + (1 << (j - 3))).min(max_ell) {
                let [a1, _, _] = transition_candidates(j, la);
                let [b1, b2, _] = transition_candidates(j, lb);
                let expect = scale_point(la, j + 1);
                if a1 != expect || (expect.is_some() && expect != b1 && expect != b2) {
                    violations += 1;
                }
            }
        }
    }
    violations
}

/// Random walks on the memory with a sequential oracle: a visited point p
/// is forgotten exactly once the walk has climbed 2^{j+1} above it since its
/// last visit.
fn forgetting_violations(walks: u64) -> u64 {
    let mut violations = 0;
    for w in 0..walks {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + w);
        let mut store = MemoryStore::with_root(MegaState::root(StateId(0)));
        let mut depth = 0u64;
        let mut highest_since_visit = vec![0u64];
        for _ in 0..200 {
            let below: Vec<u64> = store.points().filter(|&q| q < depth).collect();
            if below.is_empty() || rng.gen_bool(0.75) {
                depth += 1;
                let ms = MegaState { v: StateId(depth as u32), depth, link: None, iter: depth };
                store.maintain(&ms, true);
            } else {
                depth = below[rng.gen_range(0..below.len())];
                let ms = *store.get(depth).unwrap();
                store.maintain(&ms, false);
            }
            if highest_since_visit.len() <= depth as usize {
                highest_since_visit.resize(depth as usize + 1, 0);
            }
            highest_since_visit[depth as usize] = depth;
            for seen in highest_since_visit[..depth as usize].iter_mut() {
                *seen = (*seen).max(depth);
            }
            for p in 1..=depth {
                let span = 2u64 << p.trailing_zeros();
                let expect_kept = highest_since_visit[p as usize] < p + span;
                violations += (store.contains(p) != expect_kept) as u64;
            }
            violations += (!store.contains(0)) as u64;
        }
    }
    violations
}

#[test]
fn meeting_point_properties_hold() {
    let start = Instant::now();
    let membership = stable_point_count(1 << 12);
    let common = common_point_violations(1 << 10, 8);
    let forgetting = forgetting_violations(1000);
    let elapsed = start.elapsed();
    let pass = membership + common + forgetting == 0 && elapsed <= Duration::from_secs(60);
    report(
        7,
        "meeting-point suite",
        pass,
        format!(
            "violations: membership {membership}, common point {common}, forgetting {forgetting} (tolerance 0), {elapsed:.1?} (limit 60 s)"
        ),
    );
    assert!(pass);
}

/// Φ from its definition with C1..C6 = 1, 32, 64, 7000, 8000, 9000.
fn oracle_phi(r: &IterationRecord) -> Ratio<i64> {
    let n = |v: u64| Ratio::from_integer(v as i64);
    let (k, e, bvc) = (n(r.k[0] + r.k[1]), n(r.e[0] + r.e[1]), n(r.bvc[0] + r.bvc[1]));
    let base = n(r.ell_plus) - n(r.ell_minus) * 64 - n(r.l_minus) * 32;
    if r.k[0] == r.k[1] {
        base + k - e * 8000 - bvc * 18000
    } else {
        base - k * Ratio::new(63000, 10) + e * 7000 - bvc * 9000
    }
}

#[test]
fn potential_rises_on_clean_runs() {
    let spec = batch(0.01, 1024, "noise_free", 20);
    let outcomes = run_outcomes(&spec, |_| true).unwrap();
    let (mut steps, mut bad_steps, mut formula_mismatch, mut blocks, mut bad_blocks) = (0, 0, 0, 0, 0);
    for (_, outcome) in &outcomes {
        let ghost = &outcome.as_ref().unwrap().ghost;
        let mut prev = Ratio::from_integer(0);
        for rec in ghost.history() {
            formula_mismatch += (oracle_phi(rec) != rec.phi) as u32;
            bad_steps += (oracle_phi(rec) - prev < Ratio::from_integer(1)) as u32;
            prev = oracle_phi(rec);
            steps += 1;
        }
        for b in ghost.blocks() {
            bad_blocks += (b.phi_before != b.phi_after) as u32;
            blocks += 1;
        }
    }
    let pass = steps > 0 && bad_steps + formula_mismatch + bad_blocks == 0;
    report(
        8,
        "potential instrumentation",
        pass,
        format!(
            "{bad_steps}/{steps} iterations with ΔΦ < 1, {bad_blocks}/{blocks} big-hash phases changing Φ, {formula_mismatch} Φ values off the formula (tolerance 0)"
        ),
    );
    assert!(pass);
}

/// P(X ≥ k) for X ~ Binomial(n, 1/2), summed in log space.
fn upper_tail(k: u64, n: u64) -> f64 {
    let ln_choose = |i: u64| -> f64 { (1..=i).map(|t| ((n - i + t) as f64 / t as f64).ln()).sum() };
    (k..=n).map(|i| (ln_choose(i) - n as f64 * std::f64::consts::LN_2).exp()).sum()
}

#[test]
fn third_meeting_point_blunts_figure_one() {
    let (_, [on, off]) = attack_experiment(&batch(0.01, 4096, "figure1", 50)).unwrap();
    let (s_on, s_off) = (successes(&on), successes(&off));
    let off_larger = on.iter().zip(&off).filter(|(a, b)| b.max_rewind > a.max_rewind).count() as u64;
    let on_larger = on.iter().zip(&off).filter(|(a, b)| a.max_rewind > b.max_rewind).count() as u64;
    let p = if off_larger + on_larger == 0 { 1.0 } else { upper_tail(off_larger, off_larger + on_larger) };
    let pass = s_on > s_off && p < 0.05;
    report(
        9,
        "MP3 ablation",
        pass,
        format!(
            "success on {s_on}/50 vs off {s_off}/50 (need on > off); off rewinds further in {off_larger} pairs, on in {on_larger}, sign test p = {p:.2e} (need < 0.05)"
        ),
    );
    assert!(pass);
}

#[test]
fn sneaky_attacks_fail_and_windows_stay_apart() {
    let outcomes = run_outcomes(&batch(0.01, 4096, "sneaky", 50), |_| true).unwrap();
    let ok = outcomes.iter().filter(|(r, _)| r.success).count();
    let (mut attacked_runs, mut windows, mut overlapping) = (0, 0, 0);
    for (_, outcome) in &outcomes {
        let found = outcome.as_ref().unwrap().ghost.detect_sneaky_windows();
        if found.is_empty() {
            continue;
        }
        attacked_runs += 1;
        windows += found.len();
        let mut seen = BTreeSet::new();
        let clash = found.iter().flat_map(|w| w.diving.iter().chain(&w.voting)).any(|&i| !seen.insert(i));
        overlapping += clash as u32;
    }
    let pass = ok >= 45 && overlapping == 0 && attacked_runs > 0;
    report(
        10,
        "sneaky-attack resilience",
        pass,
        format!(
            "{ok}/50 successes (need >= 45); {windows} windows over {attacked_runs} attacked runs, {overlapping} runs with overlapping windows (tolerance 0)"
        ),
    );
    assert!(pass);
}
