mod common;

use common::{oracle_force, oracle_period};
use furtouch::fit::{self, FitOptions, SyntheticSpec};
use furtouch::{ForceTrace, GrainSense};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rms_against(trace: &ForceTrace, k: f64, l: f64, h: f64, b: f64) -> f64 {
    let pts: Vec<(f64, f64)> = trace.contact_samples().collect();
    let sse: f64 = pts.iter().map(|(x, f)| (f - oracle_force(*x, k, l, h, b)).powi(2)).sum();
    (sse / pts.len() as f64).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn noiseless_round_trip(k in 1e-4f64..5e-4, hf in 0.1f64..0.5, b in 0.02f64..0.05) {
        let l = 0.05;
        let h = hf * l;
        let spec = SyntheticSpec { k, l, h, b, span: 3.0 * oracle_period(l, h, b), ..SyntheticSpec::default() };
        let trace = fit::synthesize(&spec).unwrap();
        let r = fit::fit_reverse(&trace, l, b, &FitOptions::default()).unwrap();
        prop_assert!(rms_against(&trace, r.k_hat, l, r.h_hat, b) < 1e-9);
        prop_assert!(((r.k_hat - k) / k).abs() < 1e-6);
    }

    #[test]
    fn fit_beats_true_parameters(seed in any::<u64>(), noise in 0.01f64..0.2) {
        let spec = SyntheticSpec { noise, seed, ..SyntheticSpec::default() };
        let trace = fit::synthesize(&spec).unwrap();
        let r = fit::fit_reverse(&trace, spec.l, spec.b, &FitOptions::default()).unwrap();
        let truth = rms_against(&trace, spec.k, spec.l, spec.h, spec.b);
        prop_assert!(r.residual_rms <= truth * (1.0 + 1e-12), "fit {} truth {truth}", r.residual_rms);
    }

    #[test]
    fn growth_fit_ignores_row_order(seed in any::<u64>(), noise in 0.0f64..0.2) {
        let spec = SyntheticSpec { direction: GrainSense::Along, f0: 0.06, noise, seed, ..SyntheticSpec::default() };
        let trace = fit::synthesize(&spec).unwrap();
        let mut shuffled = trace.clone();
        shuffled.samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let a = fit::fit_growth(&trace, spec.l).unwrap();
        let b = fit::fit_growth(&shuffled, spec.l).unwrap();
        prop_assert_eq!(a.f0_hat, b.f0_hat);
        prop_assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn period_estimate_scale_invariant(s in 0.01f64..100.0, seed in any::<u64>()) {
        let spec = SyntheticSpec { noise: 0.05, seed, ..SyntheticSpec::default() };
        let trace = fit::synthesize(&spec).unwrap();
        let mut scaled = trace.clone();
        for p in &mut scaled.samples {
            p.1 *= s;
        }
        let a = fit::estimate_period(&trace).unwrap();
        let b = fit::estimate_period(&scaled).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn period_estimate_near_truth() {
    let spec = SyntheticSpec::default();
    let p = fit::estimate_period(&fit::synthesize(&spec).unwrap()).unwrap();
    let truth = oracle_period(spec.l, spec.h, spec.b);
    assert!(((p - truth) / truth).abs() < 0.01, "{p} vs {truth}");
}

#[test]
fn flat_trace_has_no_period() {
    let samples = (0..500).map(|i| (i as f64 * 1e-3, 0.3)).collect();
    let trace = ForceTrace::new(samples, Some(GrainSense::Against));
    assert!(matches!(fit::estimate_period(&trace), Err(furtouch::Error::NoPeriodicity { .. })));
}

#[test]
fn short_trace_is_a_domain_error() {
    let spec = SyntheticSpec { span: 0.02, ..SyntheticSpec::default() };
    let trace = fit::synthesize(&spec).unwrap();
    assert!(matches!(
        fit::fit_reverse(&trace, spec.l, spec.b, &FitOptions::default()),
        Err(furtouch::Error::Domain(_))
    ));
}

#[test]
fn iteration_cap_reports_best_so_far() {
    let trace = fit::synthesize(&SyntheticSpec::default()).unwrap();
    let opts = FitOptions { max_iterations: 3, ..FitOptions::default() };
    match fit::fit_reverse(&trace, 0.05, 0.03, &opts) {
        Err(furtouch::Error::NotConverged { best_k, best_rms, .. }) => {
            assert!(best_k > 0.0 && best_rms.is_finite());
        }
        other => panic!("expected NotConverged, got {other:?}"),
    }
}

#[test]
fn csv_round_trip_preserves_fit() {
    let spec = SyntheticSpec { noise: 0.03, seed: 11, ..SyntheticSpec::default() };
    let trace = fit::synthesize(&spec).unwrap();
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let (back, _) = fit::parse_trace(std::str::from_utf8(&buf).unwrap(), std::path::Path::new("mem.csv")).unwrap();
    assert_eq!(back.samples, trace.samples);
    assert_eq!(back.direction, Some(GrainSense::Against));
}
