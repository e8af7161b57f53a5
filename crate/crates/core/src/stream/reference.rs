//! Seed-pinned reference streams used by the method comparisons.
//!
//! Both were fixed before any comparison was run on them and are not tuned
//! to favour a method.

use super::{AccuracySchedule, ExpertProfile, StreamConfig};

pub const REFERENCE_SEED: u64 = 2008;

/// Five experts of graded reliability over 2000 steps; expert `e0` is
/// sign-inverted on `[400, 700)` and `e1` on `[1200, 1500)` (false-alarm
/// episodes). Balanced truth, noise `σ = 0.1`.
pub fn drift() -> StreamConfig {
    let accuracies = [0.95, 0.9, 0.85, 0.75, 0.6];
    let mut experts: Vec<ExpertProfile> = accuracies
        .iter()
        .enumerate()
        .map(|(i, &a)| ExpertProfile::constant(format!("e{i}"), a, 0.1))
        .collect();
    experts[0].flip_episodes = vec![(400, 700)];
    experts[1].flip_episodes = vec![(1200, 1500)];
    StreamConfig {
        experts,
        length: 2000,
        positive_rate: 0.5,
        seed: REFERENCE_SEED,
        drift_switch_steps: vec![400, 700, 1200, 1500],
        preset_id: "drift".into(),
    }
}

/// Five experts, 1000 steps. Until step 500 experts `e0..e2` are inverted,
/// so equal initial weights start on the wrong side; afterwards the
/// majority is right again and `e3`, `e4` degrade linearly to chance.
pub fn regime_switch() -> StreamConfig {
    let mut experts: Vec<ExpertProfile> = (0..5)
        .map(|i| ExpertProfile::constant(format!("e{i}"), 0.9, 0.05))
        .collect();
    for e in &mut experts[..3] {
        e.flip_episodes = vec![(0, 500)];
    }
    for e in &mut experts[3..] {
        e.accuracy_schedule = AccuracySchedule::PiecewiseLinear {
            knots: vec![(500, 0.9), (1000, 0.5)],
        };
    }
    StreamConfig {
        experts,
        length: 1000,
        positive_rate: 0.5,
        seed: REFERENCE_SEED,
        drift_switch_steps: vec![500],
        preset_id: "regime".into(),
    }
}

pub fn by_name(name: &str) -> Option<StreamConfig> {
    match name {
        "drift" => Some(drift()),
        "regime-switch" | "regime_switch" => Some(regime_switch()),
        _ => None,
    }
}
