use std::f64::consts::{PI, TAU};

use furtouch::stm::{self, StmConfig};
use furtouch::{HapticCommand, StrokeDirection, Vec3};
use proptest::prelude::*;

fn freq() -> impl Strategy<Value = f64> {
    prop_oneof![Just(30.0), Just(50.0), Just(70.0)]
}

fn command(t: f64, frequency: f64, center: Vec3) -> HapticCommand {
    HapticCommand {
        t,
        intensity: 0.5,
        frequency,
        focal_center: center,
        direction: StrokeDirection::AgainstGrain,
        cycle_phase: 0.0,
    }
}

fn unit() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-1.0f64..1.0)
        .prop_map(Vec3::from)
        .prop_filter("non-degenerate", |v| v.norm() > 0.1)
        .prop_map(|v| v.normalize())
}

/// Commands every 1/90 s with random frequencies and drifting centers.
fn commands(n: usize, freqs: &[f64], drift: Vec3) -> Vec<HapticCommand> {
    (0..n)
        .map(|i| {
            let t = i as f64 / 90.0;
            command(t, freqs[i % freqs.len()], Vec3::new(0.0, 0.0, 0.2) + drift * t)
        })
        .collect()
}

proptest! {
    #[test]
    fn samples_lie_on_circle(
        freqs in prop::collection::vec(freq(), 1..6),
        normal in unit(),
        drift in prop::array::uniform3(-0.2f64..0.2),
        phase in 0.0f64..TAU,
    ) {
        let cfg = StmConfig { plane_normal: normal, ..StmConfig::default() };
        let cmds = commands(30, &freqs, Vec3::from(drift));
        let (tape, _) = stm::emit_all(&cmds, 30.0 / 90.0, &cfg, phase).unwrap();
        let r = 0.20 / (2.0 * PI);
        let mut c = 0;
        for s in &tape {
            while c + 1 < cmds.len() && cmds[c + 1].t <= s.t {
                c += 1;
            }
            let off = s.point - cmds[c].focal_center;
            prop_assert!((off.norm() - r).abs() < 1e-12);
            prop_assert!(off.dot(&normal).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_continuous_across_commands(freqs in prop::collection::vec(freq(), 1..6), phase in 0.0f64..TAU) {
        let cfg = StmConfig::default();
        let cmds = commands(45, &freqs, Vec3::zeros());
        let (tape, _) = stm::emit_all(&cmds, 0.5, &cfg, phase).unwrap();
        let c = Vec3::new(0.0, 0.0, 0.2);
        let bound = TAU * 70.0 / cfg.emission_rate + 1e-9;
        for w in tape.windows(2) {
            let a = (w[0].point - c).y.atan2((w[0].point - c).x);
            let b = (w[1].point - c).y.atan2((w[1].point - c).x);
            let step = (b - a).rem_euclid(TAU);
            prop_assert!(step > 0.0 && step <= bound, "step {step} bound {bound}");
        }
    }

    #[test]
    fn revolutions_per_second_match(f in freq(), t0 in 0.0f64..3.0, phase in 0.0f64..TAU) {
        let cfg = StmConfig::default();
        let cmd = command(t0, f, Vec3::new(0.01, -0.02, 0.2));
        let (tape, _) = stm::emit(&cmd, t0 + 1.0, &cfg, phase).unwrap();
        let c = cmd.focal_center;
        let mut total = 0.0;
        for w in tape.windows(2) {
            let a = (w[0].point - c).y.atan2((w[0].point - c).x);
            let b = (w[1].point - c).y.atan2((w[1].point - c).x);
            total += (b - a).rem_euclid(TAU);
        }
        let revs = total / TAU;
        prop_assert!((revs - f).abs() <= f / cfg.emission_rate + 1e-9, "revs {revs} f {f}");
    }

    #[test]
    fn sample_spacing_uniform(freqs in prop::collection::vec(freq(), 1..4)) {
        let cfg = StmConfig::default();
        let cmds = commands(20, &freqs, Vec3::zeros());
        let (tape, _) = stm::emit_all(&cmds, 20.0 / 90.0, &cfg, 0.0).unwrap();
        for w in tape.windows(2) {
            prop_assert!(((w[1].t - w[0].t) * cfg.emission_rate - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn rejects_undersampled_frequency() {
    let cfg = StmConfig { emission_rate: 100.0, ..StmConfig::default() };
    assert!(stm::emit(&command(0.0, 70.0, Vec3::zeros()), 0.1, &cfg, 0.0).is_err());
}
