// Acceptance run: one line per criterion, nonzero exit if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use qrel_core::verify::{self, SuiteResult, VerifyConfig};
use qrel_core::Tolerance;

struct Line {
    id: usize,
    name: &'static str,
    ok: bool,
    detail: String,
    elapsed: Duration,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn suite_detail(s: &SuiteResult) -> String {
    let mut d = format!("cases={} failed={} worst={:.3e} (≤ {:.0e})", s.cases, s.failed, s.worst, s.threshold);
    if let Some(f) = s.failures.first() {
        d.push_str(&format!("; first: {f}"));
    }
    d
}

fn main() {
    let tol = Tolerance::default();
    let seed = 0;
    let mut lines = Vec::new();

    let (s, t) = timed(|| verify::classical_exhaustive(tol));
    let ok = s.passed() && s.worst <= 1e-12 && t < Duration::from_secs(10);
    lines.push(Line { id: 1, name: "classical exhaustive bijection (gap ≤ 1e-12, < 10 s)", ok, detail: suite_detail(&s), elapsed: t });

    let (s, t) = timed(|| verify::double_annihilator(200, seed, tol));
    let ok = s.passed() && s.cases >= 200 && s.worst <= 1e-9 && t < Duration::from_secs(60);
    lines.push(Line { id: 2, name: "double annihilator, 200 instances (gap ≤ 1e-9, < 60 s)", ok, detail: suite_detail(&s), elapsed: t });

    let (s, t) = timed(|| verify::intrinsic_consistency(50, 100, seed, tol, None));
    let min_pairs = s.notes.get("min_pairs_per_instance").copied().unwrap_or(0.0);
    let ok = s.passed() && s.cases == 50 && min_pairs >= 100.0;
    let detail = format!("{}; min pairs per instance {min_pairs}", suite_detail(&s));
    lines.push(Line { id: 3, name: "intrinsic consistency, 50 × ≥100 pairs (0 disagreements)", ok, detail, elapsed: t });

    let (s, t) = timed(|| verify::group_duality(20, seed, tol));
    let z2 = verify::z2_example_dimension(tol).ok();
    let ok = s.passed() && s.worst <= 1e-9 && z2 == Some(2);
    let detail = format!("{}; cyclic:2 example dim {z2:?}; theta ≤ {:.0e}", suite_detail(&s), verify::THETA_RESIDUAL);
    lines.push(Line { id: 4, name: "group duality on 5 groups × 20 ideals (gap ≤ 1e-9)", ok, detail, elapsed: t });

    let (s, t) = timed(|| verify::metric_recovery(50, seed, tol));
    let flags = verify::constructed_violations(tol).ok();
    let ok = s.passed() && flags == Some((true, true, true));
    let detail = format!("{}; violations detected (sym, sub, tri) = {flags:?}", suite_detail(&s));
    lines.push(Line { id: 5, name: "metric recovery, 50 metrics + constructed violations", ok, detail, elapsed: t });

    let (s, t) = timed(|| verify::markov_decay(tol));
    let ok = s.passed() && s.worst <= 1e-10;
    let notes: Vec<String> = s.notes.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
    let detail = format!("{}; kernel ≤ {:.0e}; {}", suite_detail(&s), verify::KERNEL_RESIDUAL, notes.join(" "));
    lines.push(Line { id: 6, name: "Markov + decay on cyclic:8, cyclic:16 (≤ 1e-10)", ok, detail, elapsed: t });

    let cfg = VerifyConfig { seed, ..VerifyConfig::default() };
    let (first, t) = timed(|| serde_json::to_string(&verify::run_all(&cfg)).unwrap());
    let second = serde_json::to_string(&verify::run_all(&cfg)).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&first).unwrap();
    let bin = |_: ()| Command::new(env!("CARGO_BIN_EXE_qrel")).args(["verify", "--seed", "0"]).output().unwrap();
    let (a, b) = (bin(()), bin(()));
    let cli_ok = a.status.success() && a.stdout == b.stdout;
    let ok = summary["passed"] == true && first == second && cli_ok && t < Duration::from_secs(120);
    let detail = format!(
        "failed={} cases={}; in-process identical={}; cli exit={:?} identical={}",
        summary["failed"],
        summary["cases"],
        first == second,
        a.status.code(),
        a.stdout == b.stdout
    );
    lines.push(Line { id: 7, name: "full verify, seed 0 (< 120 s, 0 failures, deterministic)", ok, detail, elapsed: t });

    let mut all = true;
    for l in &lines {
        all &= l.ok;
        println!(
            "[{}] {}. {} ({:.2} s): {}",
            if l.ok { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            l.elapsed.as_secs_f64(),
            l.detail
        );
    }
    println!("acceptance: {}/{} criteria pass", lines.iter().filter(|l| l.ok).count(), lines.len());
    if !all {
        std::process::exit(1);
    }
}
