use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use super::{FusionEvent, StreamConfig, StreamError};
use crate::fusion::{DecisionVector, OracleLabel};

/// Portable uniform/normal source on PCG-64.
#[derive(Debug, Clone)]
pub struct StreamRng(Pcg64);

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self(Pcg64::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller; always consumes two uniforms.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

pub fn generate_stream(cfg: &StreamConfig) -> Result<Vec<FusionEvent>, StreamError> {
    cfg.validate()?;
    let mut rng = StreamRng::new(cfg.seed);
    let mut events = Vec::with_capacity(cfg.length as usize);
    for step in 0..cfg.length {
        let truth = if rng.uniform() < cfg.positive_rate {
            OracleLabel::Present
        } else {
            OracleLabel::Absent
        };
        let y = truth.value();
        let decisions: Vec<f64> = cfg
            .experts
            .iter()
            .map(|expert| {
                let magnitude = rng.uniform_in(0.5, 1.0);
                let correct = rng.uniform() < expert.accuracy_schedule.at(step);
                let noise = rng.normal() * expert.confidence_noise;
                let mut sign = if correct { 1.0 } else { -1.0 };
                if expert.flipped_at(step) {
                    sign = -sign;
                }
                sign * y * magnitude + noise
            })
            .collect();
        let decisions = DecisionVector::new(decisions).expect("finite by construction");
        events.push(FusionEvent::new(&cfg.preset_id, step, decisions, Some(truth)));
    }
    Ok(events)
}
