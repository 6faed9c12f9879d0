//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any fails. Runs without the libtest harness so the lines always show.

use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use puritylab::channels::{depolarizing, identity_map, random_channel, trace_channel};
use puritylab::matlin::{ComplexMatrix, HermitianMatrix, NormParams, C64};
use puritylab::purity::{objective_and_gradient, purity, ratio, PurityConfig};
use puritylab::rng::{gaussian_matrix, random_psd, rng_from_seed};
use puritylab::semigroup::{check_hypercontractivity, lsc_product_bound, lsc_report, lsc_single};
use puritylab::verify::{run_suite, suite_config, BoundReport, ClaimId, Suite, Verdict};

const SEED: u64 = 20240917;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn np(q: f64, p: f64) -> NormParams {
    NormParams::new(q, p).unwrap()
}

/// Numerical route only: the analytic shortcut is disabled.
fn numeric_config(seed: u64) -> PurityConfig {
    PurityConfig { trust_analytic: false, ..PurityConfig::default() }.with_seed(seed)
}

fn count(reports: &[BoundReport], v: Verdict) -> usize {
    reports.iter().filter(|r| r.verdict == v).count()
}

fn max_gap(reports: &[BoundReport]) -> f64 {
    reports.iter().map(BoundReport::relative_gap).fold(0.0, f64::max)
}

static RECORD: Mutex<Vec<(Suite, usize, Vec<u8>)>> = Mutex::new(Vec::new());

fn suite(s: Suite, trials: usize) -> Vec<BoundReport> {
    let r = run_suite(s, trials, SEED, &suite_config(SEED)).unwrap_or_else(|e| panic!("suite {s:?}: {e}"));
    RECORD.lock().unwrap().push((s, trials, serde_json::to_vec(&r).unwrap()));
    r
}

fn c1() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_frob = 0.0f64;
    for d in [2usize, 3, 4] {
        let t = trace_channel(d);
        worst_frob = worst_frob.max((t.choi_frobenius() - (d as f64).sqrt()).abs());
        for p in [2.0, 3.0, 4.0] {
            let exact = (d as f64).powf(1.0 - 1.0 / p);
            for cfg in [PurityConfig::default(), numeric_config(SEED)] {
                let e = purity(&t, np(p, p), &cfg).unwrap();
                worst = worst.max((e.value - exact).abs());
            }
        }
    }
    outcome(
        worst <= 1e-6 && worst_frob <= 1e-12,
        format!("max |est - d^(1-1/p)| = {worst:.2e}, max |‖X_T‖₂ - √d| = {worst_frob:.2e}"),
    )
}

fn c2() -> Outcome {
    let mut worst = 0.0f64;
    for d in [2usize, 3] {
        for (q, p) in [(1.0, 2.0), (1.5, 3.0), (2.0, 4.0)] {
            for cfg in [PurityConfig::default(), numeric_config(SEED)] {
                let e = purity(&identity_map(d), np(q, p), &cfg).unwrap();
                worst = worst.max((e.value - 1.0).abs());
            }
        }
    }
    outcome(worst <= 1e-6, format!("max |est - 1| = {worst:.2e}"))
}

/// Independent oracle: sweep pure qubit states over a fine Bloch-sphere grid and
/// evaluate `‖Δ_λ(ψ)‖_2` from the 2×2 output directly.
fn depol_bloch_oracle(lambda: f64) -> f64 {
    let mut best = 0.0f64;
    let steps = 200;
    for i in 0..=steps {
        let theta = std::f64::consts::PI * i as f64 / steps as f64;
        for j in 0..8 {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / 8.0;
            let (a, b) = ((theta / 2.0).cos(), C64::from_polar((theta / 2.0).sin(), phi));
            // ρ = |ψ⟩⟨ψ|, Δ(ρ) = λρ + (1-λ) I/2
            let r00 = lambda * a * a + (1.0 - lambda) / 2.0;
            let r11 = lambda * b.norm_sqr() + (1.0 - lambda) / 2.0;
            let r01 = b.conj() * (lambda * a);
            let frob2 = r00 * r00 + r11 * r11 + 2.0 * r01.norm_sqr();
            best = best.max(frob2.sqrt());
        }
    }
    best
}

fn c3() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for lambda in [0.0f64, 0.3, 0.7, 1.0] {
        let closed = ((1.0 + lambda * lambda) / 2.0).sqrt();
        worst_oracle = worst_oracle.max((depol_bloch_oracle(lambda) - closed).abs());
        let e = purity(&depolarizing(2, lambda).unwrap(), np(1.0, 2.0), &numeric_config(SEED)).unwrap();
        worst = worst.max((e.value - closed).abs());
    }
    outcome(
        worst <= 1e-5 && worst_oracle <= 1e-9,
        format!("max |est - √((1+λ²)/2)| = {worst:.2e}, Bloch oracle deviation {worst_oracle:.2e}"),
    )
}

fn one_sided(name: &str, reports: &[BoundReport], expected: usize) -> Outcome {
    let v = count(reports, Verdict::Violated);
    let min_slack = reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    outcome(
        v == 0 && reports.len() == expected,
        format!("{name}: {} reports, {v} violated, min slack {min_slack:.3e}", reports.len()),
    )
}

fn c4() -> Outcome {
    let r = suite(Suite::Thm1, 50 * 5);
    let tol_ok = r.iter().all(|x| x.tolerance == 1e-6 && x.claim_id == ClaimId::Thm1);
    let o = one_sided("thm1", &r, 250);
    outcome(o.ok && tol_ok, o.detail)
}

fn c5() -> Outcome {
    let r = suite(Suite::Thm2, 50 * 3);
    let ok = r.iter().all(|x| x.params.is_some_and(|p| p.q() <= 2.0 && p.p() >= 2.0));
    let o = one_sided("thm2", &r, 150);
    outcome(o.ok && ok, o.detail)
}

fn equality(name: &str, reports: &[BoundReport], expected: usize, rel: f64) -> Outcome {
    let v = count(reports, Verdict::Violated);
    let inc = count(reports, Verdict::Inconclusive);
    let gap = max_gap(reports);
    outcome(
        v == 0 && gap <= rel && reports.len() == expected,
        format!("{name}: {} reports, {v} violated, {inc} inconclusive, max relative gap {gap:.2e}", reports.len()),
    )
}

fn c6() -> Outcome {
    equality("multiplicativity", &suite(Suite::Multiplicativity, 30 * 3), 90, 1e-4)
}

fn c7() -> Outcome {
    let eq = equality("thm3", &suite(Suite::Thm3, 60 * 4), 240, 1e-4);
    let dual = suite(Suite::AdjointDuality, 60 * 4);
    let worst = dual.iter().map(|r| (r.lhs - r.rhs).abs()).fold(0.0, f64::max);
    outcome(
        eq.ok && worst <= 1e-6 && dual.len() == 240,
        format!("{}; duality max |‖Ψ‖ - ‖Ψ*‖| = {worst:.2e}", eq.detail),
    )
}

fn c8() -> Outcome {
    equality("thm4", &suite(Suite::Thm4, 30 * 4), 120, 1e-4)
}

fn c9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (s, n) in [
        (Suite::Bk1, 1000),
        (Suite::LiebThirring, 1000),
        (Suite::AntinormSuper, 1000),
        (Suite::GenHann, 1000),
        (Suite::Psd2x2, 1000),
        (Suite::Pinching, 1000),
        (Suite::CqChain, 200),
        (Suite::HadamardColumn, 200),
    ] {
        let r = suite(s, n);
        let v = count(&r, Verdict::Violated);
        ok &= v == 0 && r.len() == n;
        parts.push(format!("{} {v}/{}", s.name(), r.len()));
    }
    outcome(ok, format!("violated: {}", parts.join(", ")))
}

fn c10() -> Outcome {
    let single = lsc_single(3).unwrap();
    let bound = lsc_product_bound(3).unwrap();
    let consts = (single - 0.961797).abs() <= 1e-5 && (bound - 0.233399).abs() <= 1e-5;
    let cfg = suite_config(SEED);
    let report = lsc_report(3, &cfg).unwrap();
    let knr_gap = max_gap(&report.multiplicativity_checks);
    let knr = report.sound && report.multiplicativity_checks.len() == 3 && knr_gap <= 1e-4;
    let hyper = check_hypercontractivity(0.5, 2.0, Some(5.0), 2, &cfg).unwrap();
    let hyper_ok = hyper.params.is_some_and(|p| p.p() == 5.0)
        && hyper.verdict != Verdict::Violated
        && hyper.relative_gap() <= 1e-4;
    outcome(
        consts && knr && hyper_ok,
        format!(
            "α₂ = {single:.6}, bound = {bound:.6}, KNR max gap {knr_gap:.2e}, hypercontractivity gap {:.2e}",
            hyper.relative_gap()
        ),
    )
}

fn random_hermitian(d: usize, rng: &mut puritylab::rng::Rng) -> HermitianMatrix {
    let g = gaussian_matrix(d, d, rng);
    HermitianMatrix::symmetrize(g.add(&g.adjoint()).scale_real(0.5)).unwrap()
}

fn c11() -> Outcome {
    let mut rng = rng_from_seed(SEED);
    let grid = [(1.0, 2.0), (1.5, 3.0), (2.0, 4.0), (3.0, 2.0), (1.2, 1.7)];
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (din, dout) = (2 + i % 2, 2 + (i / 2) % 2);
        let phi = random_channel(din, dout, 2, SEED + i as u64).unwrap();
        let (q, p) = grid[i % grid.len()];
        let params = np(q, p);
        // full-rank point so that A ± hH stays positive definite
        let a = HermitianMatrix::symmetrize(
            random_psd(din, din, &mut rng).as_matrix().add(&ComplexMatrix::identity(din).scale_real(0.1)),
        )
        .unwrap();
        let dir = random_hermitian(din, &mut rng);
        let (_, grad) = objective_and_gradient(&phi, params, &a).unwrap();
        let analytic = grad.as_matrix().matmul(dir.as_matrix()).trace().re;
        let h = 1e-5;
        let plus = HermitianMatrix::symmetrize(a.as_matrix().add(&dir.as_matrix().scale_real(h))).unwrap();
        let minus = HermitianMatrix::symmetrize(a.as_matrix().sub(&dir.as_matrix().scale_real(h))).unwrap();
        let fd = (ratio(&phi, &plus, params).unwrap() - ratio(&phi, &minus, params).unwrap()) / (2.0 * h);
        let scale = fd
            .abs()
            .max(analytic.abs())
            .max(1e-3 * grad.as_matrix().frobenius_norm() * dir.as_matrix().frobenius_norm());
        worst = worst.max((fd - analytic).abs() / scale);
    }
    outcome(worst <= 1e-5, format!("max relative error {worst:.2e} over 100 instances"))
}

/// Replays every suite run recorded so far and compares the JSON bytes.
fn c12() -> Outcome {
    let runs = RECORD.lock().unwrap().clone();
    let mut same = 0;
    let mut bytes = 0;
    for (s, n, first) in &runs {
        let second = serde_json::to_vec(&run_suite(*s, *n, SEED, &suite_config(SEED)).unwrap()).unwrap();
        bytes += second.len();
        same += usize::from(&second == first);
    }
    let lsc = |_: ()| serde_json::to_vec(&lsc_report(3, &suite_config(SEED)).unwrap().multiplicativity_checks).unwrap();
    let lsc_same = lsc(()) == lsc(());
    outcome(
        same == runs.len() && lsc_same && !runs.is_empty(),
        format!("{same}/{} suite runs byte-identical ({bytes} bytes), lsc identical = {lsc_same}", runs.len()),
    )
}

fn run(n: usize, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|e| outcome(false, format!("panicked: {:?}", e.downcast_ref::<String>())));
    let t = start.elapsed();
    let in_time = limit.is_none_or(|l| t <= l);
    let ok = o.ok && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
    println!("criterion {n:>2}: {} ({}) [{:.1}s{budget}]", if ok { "PASS" } else { "FAIL" }, o.detail, t.as_secs_f64());
    ok
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= run(1, Some(secs(10)), c1);
    ok &= run(2, Some(secs(10)), c2);
    ok &= run(3, Some(secs(10)), c3);
    ok &= run(4, Some(secs(300)), c4);
    ok &= run(5, Some(secs(180)), c5);
    ok &= run(6, Some(secs(180)), c6);
    ok &= run(7, Some(secs(300)), c7);
    ok &= run(8, Some(secs(300)), c8);
    ok &= run(9, Some(secs(180)), c9);
    ok &= run(10, Some(secs(120)), c10);
    ok &= run(11, Some(secs(60)), c11);
    ok &= run(12, None, c12);
    if ok {
        println!("acceptance: all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
