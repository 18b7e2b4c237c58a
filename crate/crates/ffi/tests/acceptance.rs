//! Acceptance checks for the C interface. Each test prints one
//! `ffi criterion N [PASS|FAIL]` line and then asserts it.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use noisy_dialog::config::ParamSpec;
use noisy_dialog::harness::{run_trials, BatchSpec};
use noisy_dialog_ffi::*;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!("ffi criterion {n} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        nd_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

struct Config(*mut NdConfig);

impl Config {
    fn new(epsilon: f64, depth: u64) -> Config {
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { nd_config_new(epsilon, depth, &mut p) }, NdStatus::Ok);
        Config(p)
    }

    fn set(&self, key: &str, value: &str) -> NdStatus {
        let (k, v) = (CString::new(key).unwrap(), CString::new(value).unwrap());
        unsafe { nd_config_set(self.0, k.as_ptr(), v.as_ptr()) }
    }

    fn run(&self, adversary: &str, trials: u64, seed: u64) -> Result<Vec<NdTrialSummary>, NdStatus> {
        let adv = CString::new(adversary).unwrap();
        let mut results = ptr::null_mut();
        let status = unsafe { nd_run(self.0, adv.as_ptr(), trials, seed, &mut results) };
        if status != NdStatus::Ok {
            return Err(status);
        }
        let n = unsafe { nd_results_len(results) };
        let rows = (0..n)
            .map(|i| {
                let mut row = NdTrialSummary::default();
                assert_eq!(unsafe { nd_results_get(results, i, &mut row) }, NdStatus::Ok);
                row
            })
            .collect();
        unsafe { nd_results_free(results) };
        Ok(rows)
    }
}

impl Drop for Config {
    fn drop(&mut self) {
        unsafe { nd_config_free(self.0) };
    }
}

#[test]
fn header_declares_the_interface_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/noisy_dialog.h")).unwrap();
    let lib = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = lib
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    let missing: Vec<&&str> = exported.iter().filter(|f| !header.contains(&format!("{f}("))).collect();

    let probe = tempfile::Builder::new().suffix(".c").tempfile().unwrap();
    std::fs::write(
        probe.path(),
        "#include \"noisy_dialog.h\"\n\
         int main(void) {\n\
           NdConfig *cfg = NULL;\n\
           if (nd_config_new(0.01, 256, &cfg) != ND_STATUS_OK) return 1;\n\
           NdResults *res = NULL;\n\
           NdStatus st = nd_run(cfg, \"noise_free\", 1, 0, &res);\n\
           NdTrialSummary row;\n\
           if (st == ND_STATUS_OK) st = nd_results_get(res, 0, &row);\n\
           char msg[64];\n\
           (void)nd_last_error_message(msg, sizeof msg);\n\
           nd_results_free(res);\n\
           nd_config_free(cfg);\n\
           return st == ND_STATUS_OK && row.success ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let compiled = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(probe.path())
        .output();
    let (compiles, note) = match compiled {
        Ok(o) if o.status.success() => (true, "compiles as C99".to_string()),
        Ok(o) => (false, String::from_utf8_lossy(&o.stderr).into_owned()),
        Err(e) => (false, format!("cannot run {cc}: {e}")),
    };
    let pass = missing.is_empty() && !exported.is_empty() && compiles;
    report(
        1,
        "generated header",
        pass,
        format!("{} exported functions, missing from header: {missing:?}; {note}", exported.len()),
    );
    assert!(pass);
}

#[test]
fn runs_match_the_rust_api() {
    let config = Config::new(0.01, 1024);
    let via_c = config.run("random_flip:0.0005", 6, 40).unwrap();
    let again = config.run("random_flip:0.0005", 6, 40).unwrap();
    let clean = config.run("noise_free", 6, 40).unwrap();

    let mut spec = BatchSpec::new(ParamSpec::new(0.01, 1024), "random_flip:0.0005".parse().unwrap(), 6);
    spec.seed = 40;
    let direct = run_trials(&spec).unwrap();
    let parity = via_c.len() == direct.len()
        && via_c.iter().zip(&direct).all(|(c, r)| {
            c.seed == r.seed
                && c.success == r.success
                && c.total_rounds == r.total_rounds
                && c.budget_spent == r.budget_spent
                && c.max_rewind == r.max_rewind
                && c.peak_memory_bits == r.peak_memory_bits_a.max(r.peak_memory_bits_b)
        });
    let deterministic = via_c == again;
    let clean_ok = clean.iter().all(|r| r.success && r.budget_spent == 0);
    let pass = parity && deterministic && clean_ok;
    report(
        2,
        "runs through the C ABI",
        pass,
        format!("matches Rust API: {parity}; rerun identical: {deterministic}; noise-free all succeed: {clean_ok}"),
    );
    assert!(pass);
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut failures = Vec::new();
    let mut expect = |what: &str, got: NdStatus, want: NdStatus, needle: &str| {
        let msg = last_error();
        if got != want || !msg.contains(needle) {
            failures.push(format!("{what}: {got:?} {msg:?}"));
        }
    };

    let config = Config::new(0.5, 1024);
    expect("epsilon out of range", config.run("noise_free", 1, 0).unwrap_err(), NdStatus::InvalidArgument, "epsilon");
    let config = Config::new(0.01, 1024);
    expect("unknown key", config.set("colour", "blue"), NdStatus::InvalidArgument, "colour");
    expect("unknown adversary", config.run("gremlin", 1, 0).unwrap_err(), NdStatus::InvalidArgument, "gremlin");
    let status = unsafe { nd_run(ptr::null(), c"noise_free".as_ptr(), 1, 0, &mut ptr::null_mut()) };
    expect("null config", status, NdStatus::NullPointer, "config");
    let status = unsafe { nd_results_get(ptr::null(), 0, &mut NdTrialSummary::default()) };
    expect("null results", status, NdStatus::NullPointer, "results");

    let adv = CString::new("noise_free").unwrap();
    let mut results = ptr::null_mut();
    assert_eq!(unsafe { nd_run(config.0, adv.as_ptr(), 2, 0, &mut results) }, NdStatus::Ok);
    let status = unsafe { nd_results_get(results, 2, &mut NdTrialSummary::default()) };
    expect("index past the end", status, NdStatus::InvalidArgument, "out of range");
    let missing_dir = CString::new("/nonexistent-dir/out.csv").unwrap();
    let status = unsafe { nd_results_write_csv(results, missing_dir.as_ptr()) };
    expect("unwritable path", status, NdStatus::Io, "nonexistent-dir");
    unsafe { nd_results_free(results) };

    // A short buffer still gets a terminated prefix and the full length back.
    let mut tiny = [1 as c_char; 4];
    let needed = unsafe { nd_last_error_message(tiny.as_mut_ptr(), tiny.len()) };
    let truncated = tiny[3] == 0 && needed == last_error().len() + 1;

    let pass = failures.is_empty() && truncated;
    report(3, "error reporting", pass, format!("mismatches: {failures:?}; truncation safe: {truncated}"));
    assert!(pass);
}

#[test]
fn attack_comparison_through_the_c_abi() {
    let config = Config::new(0.01, 4096);
    let mut out = NdAttackSummary::default();
    let adv = CString::new("figure1").unwrap();
    let status = unsafe { nd_attack(config.0, adv.as_ptr(), 10, 0, &mut out) };
    let pass = status == NdStatus::Ok && out.success_rate_on > out.success_rate_off && out.sign_test_p < 0.05;
    report(
        4,
        "attack experiment",
        pass,
        format!(
            "status {status:?}, success on {:.2} vs off {:.2}, sign test p = {:.1e} (need on > off, p < 0.05)",
            out.success_rate_on, out.success_rate_off, out.sign_test_p
        ),
    );
    assert!(pass);
}
