//! One line per acceptance criterion on example-2d, 128² over [−8, 8]², seed 42.

use std::io::Write;

use ssq_core::harness::Status;
use ssq_core::{run_suite, EsetStructure, SuiteConfig};

struct Criterion {
    id: usize,
    title: &'static str,
    checks: &'static [&'static str],
    limit_s: f64,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "structure validation", checks: &["eset_validate"], limit_s: 1.0 },
    Criterion { id: 2, title: "symmetric-space axioms", checks: &["symmetric_space_axioms"], limit_s: 5.0 },
    Criterion { id: 3, title: "twisting map", checks: &["twist_roundtrip", "lemma_sinh", "twist_jacobian"], limit_s: 5.0 },
    Criterion {
        id: 4,
        title: "phase admissibility and nondegeneracy",
        checks: &["phase_admissibility", "phase_critical_gradient", "phase_hessian_blocks"],
        limit_s: 10.0,
    },
    Criterion { id: 5, title: "flat geometric associativity", checks: &["flat_barycenter"], limit_s: 10.0 },
    Criterion {
        id: 6,
        title: "transform stack",
        checks: &["fourier_roundtrip", "transform_inverse", "dilation_identity"],
        limit_s: 30.0,
    },
    Criterion { id: 7, title: "Weyl product", checks: &["weyl_fft_vs_quad", "weyl_idempotent"], limit_s: 300.0 },
    Criterion { id: 8, title: "path equivalence", checks: &["path_equivalence"], limit_s: 600.0 },
    Criterion { id: 9, title: "associativity", checks: &["associativity"], limit_s: 60.0 },
    Criterion { id: 10, title: "transvection invariance", checks: &["invariance"], limit_s: 120.0 },
    Criterion {
        id: 11,
        title: "semiclassical sweep",
        checks: &["classical_limit", "dirac_condition", "dirac_sign"],
        limit_s: 300.0,
    },
    Criterion {
        id: 12,
        title: "Hilbert-algebra layer",
        checks: &["trace_identity", "unitarity_e", "involution"],
        limit_s: 120.0,
    },
    Criterion { id: 13, title: "covariance truncation", checks: &["covariance_truncation"], limit_s: 60.0 },
];

#[test]
fn acceptance_criteria() {
    let e = EsetStructure::example_2d();
    let mut failures = Vec::new();
    for c in CRITERIA {
        let cfg = SuiteConfig::default().with_checks(c.checks);
        let report = run_suite(&e, &cfg).expect("suite runs");
        let seconds: f64 = report.checks.iter().map(|r| r.seconds).sum();
        let passed = report.checks.iter().all(|r| r.status == Status::Pass);
        let in_time = seconds < c.limit_s;
        let parts: Vec<String> = report
            .checks
            .iter()
            .map(|r| format!("{} {:.3e}/{:.0e}", r.name, r.residual, r.tolerance))
            .collect();
        let ok = passed && in_time;
        // straight to stderr so the lines survive output capture
        let _ = writeln!(
            std::io::stderr(),
            "criterion {:>2} {:<40} {}  [{}]  {:.2}s (limit {}s)",
            c.id,
            c.title,
            if ok { "PASS" } else { "FAIL" },
            parts.join(", "),
            seconds,
            c.limit_s
        );
        if !ok {
            failures.push(c.id);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
