use std::sync::Arc;

use fhl::bubbles::{kelvin, Family};
use fhl::constants::{applicable, closed_form, ConstantKind};
use fhl::diagnostics::{assemble, continuation, rate_law_subcritical};
use fhl::riesz::build_weights;
use fhl::spectral::build_basis;
use fhl::{Bubble, ContinuationReport, DomainSpec, Params, Regime, SolveOptions};
use proptest::prelude::*;

fn small_sweep() -> ContinuationReport {
    let p = Params::new(1, 0.3, 0.4, 0.4, Regime::SubcriticalHartree).unwrap();
    let d = DomainSpec::interval(0.0, 1.0, 256).unwrap();
    let basis = Arc::new(build_basis(&d, 64).unwrap());
    let w = build_weights(&d, p.mu).unwrap();
    continuation(&p, &basis, &w, &[0.4, 0.3, 0.2], &SolveOptions::default(), None).unwrap()
}

#[test]
fn persisted_report_replays_bit_for_bit() {
    let report = small_sweep();
    let json = serde_json::to_string(&report).unwrap();
    let back: ContinuationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    let again = assemble(back.params, back.domain, back.modes, back.strip_radius, back.records.clone()).unwrap();
    assert_eq!(again.derived, report.derived);
    assert_eq!(serde_json::to_string(&again).unwrap(), json);
}

#[test]
fn rate_law_positive_on_positive_fields() {
    let report = small_sweep();
    assert!(report.records.iter().all(|r| r.min_interior > 0.0));
    let law = rate_law_subcritical(&report, Some(0.7)).unwrap();
    assert!(law.lhs.iter().all(|(_, v)| *v > 0.0));
    assert!(law.rhs > 0.0);
}

#[test]
fn single_and_double_precision_constants_agree() {
    let p64 = Params::new(2, 0.45, 1.2, 0.0, Regime::FreeSpace).unwrap();
    let p32 = fhl::model::Params::<f32>::new(2, 0.45, 1.2, 0.0, Regime::FreeSpace).unwrap();
    let wide = applicable(&p64).unwrap();
    assert!(!wide.is_empty());
    for (kind, v) in wide {
        let narrow = closed_form(kind, &p32).unwrap() as f64;
        assert!(((narrow - v) / v).abs() < 1e-4, "{kind}: {narrow} vs {v}");
    }
    assert!((closed_form(ConstantKind::SigmaN, &p32).unwrap() - std::f32::consts::TAU).abs() < 1e-5);
}

proptest! {
    #[test]
    fn kelvin_is_an_involution(
        x in prop::collection::vec(-4.0f64..4.0, 2),
        c in prop::collection::vec(-1.0f64..1.0, 2),
        lambda in 0.2f64..5.0,
    ) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        prop_assume!(r2 > 1e-4);
        let p = Params::new(2, 0.5, 1.0, 0.0, Regime::FreeSpace).unwrap();
        let b = Bubble::new(Family::HartreeW, &c, lambda, p).unwrap();
        let once = kelvin(|y: &[f64]| b.eval(y), &p);
        let twice = kelvin(|y: &[f64]| once(y).unwrap(), &p);
        let v = twice(&x).unwrap();
        prop_assert!(((v - b.eval(&x)) / b.eval(&x)).abs() < 1e-12);
    }
}
