//! Seeded synthetic corpus generator with a latent quality process.
//!
//! Each dialogue carries a hidden quality state q in 1..=5. Failure events
//! (timeout prompts, ASR rejections) push q down, runs of three successful
//! recognitions push it back up, and the emitted label follows q with
//! optional noise. Labels start at 5 and never jump by more than one step,
//! so the generated corpora satisfy the corpus labeling invariants while
//! carrying enough signal for a classifier to pick up.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{AsrStatus, Corpus, Dialogue, Exchange, ExtraSchema};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    SpecInvalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub dialogues: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability of a timeout prompt (no user response at all).
    pub p_timeout: f64,
    /// Probability of a system-only exchange without a timeout.
    pub p_no_input: f64,
    /// Probability that a user utterance is recognised completely,
    /// before quality coupling.
    pub p_success: f64,
    /// Probability that an incomplete recognition is rejected.
    pub p_reject: f64,
    /// Probability of a barge-in on user-active exchanges.
    pub p_barge: f64,
    /// How strongly the latent quality modulates the success probability
    /// (0 disables the coupling).
    pub coupling: f64,
    /// Probability that a failure event actually decrements q.
    pub decay_prob: f64,
    /// Probability of +-1 label noise (clamped to keep labels 1-Lipschitz).
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            dialogues: 200,
            min_len: 9,
            max_len: 25,
            p_timeout: 0.10,
            p_no_input: 0.08,
            p_success: 0.75,
            p_reject: 0.35,
            p_barge: 0.06,
            coupling: 0.25,
            decay_prob: 0.85,
            label_noise: 0.03,
            seed: 42,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.dialogues == 0 {
            return Err(SynthError::SpecInvalid("dialogue count must be > 0".into()));
        }
        if self.min_len < 1 || self.max_len < self.min_len {
            return Err(SynthError::SpecInvalid(
                "need 1 <= min_len <= max_len".into(),
            ));
        }
        for (name, p) in [
            ("p_timeout", self.p_timeout),
            ("p_no_input", self.p_no_input),
            ("p_success", self.p_success),
            ("p_reject", self.p_reject),
            ("p_barge", self.p_barge),
            ("decay_prob", self.decay_prob),
            ("label_noise", self.label_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::SpecInvalid(format!("{name} outside [0,1]")));
            }
        }
        Ok(())
    }
}

/// Mix a master seed with a dialogue index into an independent stream seed.
fn dialogue_seed(master: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn success_prob(spec: &GeneratorSpec, q: i32) -> f64 {
    (spec.p_success * (1.0 + spec.coupling * (q as f64 - 3.0) / 4.0)).clamp(0.0, 1.0)
}

fn generate_dialogue(spec: &GeneratorSpec, index: usize) -> Dialogue {
    let mut rng = ChaCha8Rng::seed_from_u64(dialogue_seed(spec.seed, index));
    let len = rng.gen_range(spec.min_len..=spec.max_len);

    let mut q: i32 = 5;
    let mut success_run = 0u32;
    let mut prev_label: i32 = 5;
    let mut exchanges = Vec::with_capacity(len);

    for k in 1..=len {
        let timeout = rng.gen_bool(spec.p_timeout);
        let mut barge = false;
        let mut rejection = false;
        let status;
        let confidence;

        if timeout {
            status = AsrStatus::None;
            confidence = None;
        } else if rng.gen_bool(spec.p_no_input) {
            status = AsrStatus::None;
            confidence = None;
            barge = rng.gen_bool(spec.p_barge);
        } else {
            barge = rng.gen_bool(spec.p_barge);
            if rng.gen_bool(success_prob(spec, q)) {
                status = AsrStatus::Complete;
                confidence = Some(quantized(
                    0.55 + 0.06 * q as f64 + rng.gen_range(-0.12..0.12),
                ));
            } else {
                status = AsrStatus::Incomplete;
                rejection = rng.gen_bool(spec.p_reject);
                confidence = Some(quantized(
                    0.15 + 0.05 * q as f64 + rng.gen_range(-0.1..0.1),
                ));
            }
        }

        // latent dynamics: at most one step down per exchange, one step up
        // after three consecutive successes
        if status == AsrStatus::Complete {
            success_run += 1;
            if success_run >= 3 {
                q = (q + 1).min(5);
                success_run = 0;
            }
        } else {
            success_run = 0;
        }
        if (timeout || rejection) && rng.gen_bool(spec.decay_prob) {
            q = (q - 1).max(1);
        }

        let label = if k == 1 {
            5
        } else {
            let mut l = q;
            if rng.gen_bool(spec.label_noise) {
                l += if rng.gen_bool(0.5) { 1 } else { -1 };
            }
            l.clamp(prev_label - 1, prev_label + 1).clamp(1, 5)
        };
        prev_label = label;

        exchanges.push(Exchange {
            index: k,
            asr_status: status,
            asr_confidence: confidence,
            timeout_prompt: timeout,
            asr_rejection: rejection,
            barge_in: barge,
            rater_labels: None,
            iq_label: Some(label as u8),
            extras_numeric: BTreeMap::new(),
            extras_boolean: BTreeMap::new(),
        });
    }

    Dialogue {
        id: format!("synth-{index:05}"),
        exchanges,
    }
}

/// Round to 3 decimal places so confidences survive a CSV round trip
/// bit-exactly.
fn quantized(v: f64) -> f64 {
    ((v.clamp(0.0, 1.0) * 1000.0).round() / 1000.0).clamp(0.0, 1.0)
}

/// Generate a labeled corpus. Fully deterministic given the spec;
/// per-dialogue streams are independent, so dialogue i does not depend on
/// how many dialogues precede it.
pub fn generate(spec: &GeneratorSpec) -> Result<Corpus, SynthError> {
    spec.validate()?;
    let dialogues = (0..spec.dialogues)
        .map(|i| generate_dialogue(spec, i))
        .collect();
    Ok(Corpus {
        dialogues,
        schema_extras: ExtraSchema::default(),
    })
}
