//! Traffic light recognition pipeline: confidence filtering, relevance
//! prediction, and temporal state validation over a sliding buffer.
//!
//! The validator scores each candidate state c over the buffer of the last N
//! per-frame states as W(c) = sum_k (N-k) * S(c) * [f_{n-k} = c], with k = 0
//! the newest frame, and picks the argmax. Ties are broken toward the more
//! safety-critical state (higher S); a buffer with no positive weight yields
//! no_detection.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::AssembledFrame;
use crate::types::{criticality, light_priority_rank, Detection, LightClass, LightState};

#[derive(Debug, Error, PartialEq)]
pub enum TlrError {
    #[error("out-of-order frame index {got} after {last}")]
    OutOfOrderFrame { last: u64, got: u64 },
}

/// Keeps detections at or above the confidence threshold, preserving order.
pub fn filter_confidence(
    dets: &[Detection<LightClass>],
    tau: f64,
) -> Vec<Detection<LightClass>> {
    dets.iter().filter(|d| d.confidence >= tau).copied().collect()
}

/// Majority vote over detected classes; plurality ties fall through to the
/// safety priority order (red > yellow > green > off). Empty input yields None.
pub fn predict_relevance(dets: &[Detection<LightClass>]) -> Option<LightClass> {
    if dets.is_empty() {
        return None;
    }
    let mut counts = [0usize; 4];
    for d in dets {
        counts[light_priority_rank(d.label) as usize] += 1;
    }
    let max = *counts.iter().max().unwrap();
    // counts are indexed by priority rank, so the first maximal entry is the
    // most safety-critical of the tied classes; ALL is in rank order
    let rank = counts.iter().position(|&c| c == max).unwrap();
    Some(LightClass::ALL[rank])
}

/// Bridges detection classes to the validator's candidate set:
/// a dark "off" light carries no instruction and maps to no_detection.
pub fn to_validation_state(c: Option<LightClass>) -> LightState {
    match c {
        Some(LightClass::Red) => LightState::Red,
        Some(LightClass::Yellow) => LightState::Yellow,
        Some(LightClass::Green) => LightState::Green,
        Some(LightClass::Off) | None => LightState::NoDetection,
    }
}

/// Per-candidate weights of one validation step, in a fixed field order for
/// canonical serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateWeights {
    pub red: u32,
    pub yellow: u32,
    pub green: u32,
    pub no_detection: u32,
}

impl StateWeights {
    pub fn get(&self, c: LightState) -> u32 {
        match c {
            LightState::Red => self.red,
            LightState::Yellow => self.yellow,
            LightState::Green => self.green,
            LightState::NoDetection => self.no_detection,
        }
    }
}

/// The single validated state for one frame, with scoring diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedLightState {
    pub state: LightState,
    pub weights: StateWeights,
    pub tie_broken: bool,
}

/// Sliding buffer of the last N per-frame states, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBuffer {
    capacity: usize,
    entries: VecDeque<LightState>,
}

impl StateBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer capacity must be positive");
        StateBuffer {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> impl Iterator<Item = LightState> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends the newest state, evicting the oldest past capacity.
    pub fn push(&mut self, state: LightState) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(state);
    }

    /// W(c) over the buffer. Missing warm-up slots contribute nothing, which
    /// is equivalent to pre-filling with no_detection (S = 0).
    pub fn weight(&self, c: LightState) -> u32 {
        let n = self.capacity as u32;
        let s = criticality(c);
        self.entries
            .iter()
            .rev() // newest first: k = 0..len
            .enumerate()
            .filter(|(_, f)| **f == c)
            .map(|(k, _)| (n - k as u32) * s)
            .sum()
    }

    /// Argmax of W over the candidate set. A buffer with no positive weight
    /// resolves to no_detection; positive ties resolve to the higher S(c).
    pub fn validate(&self) -> ValidatedLightState {
        let weights = StateWeights {
            red: self.weight(LightState::Red),
            yellow: self.weight(LightState::Yellow),
            green: self.weight(LightState::Green),
            no_detection: 0,
        };
        let max = weights.red.max(weights.yellow).max(weights.green);
        if max == 0 {
            return ValidatedLightState {
                state: LightState::NoDetection,
                weights,
                tie_broken: false,
            };
        }
        let tied: Vec<LightState> = [LightState::Red, LightState::Yellow, LightState::Green]
            .into_iter()
            .filter(|c| weights.get(*c) == max)
            .collect();
        let state = *tied
            .iter()
            .max_by_key(|c| criticality(**c))
            .expect("max > 0 implies a tied candidate");
        ValidatedLightState {
            state,
            weights,
            tie_broken: tied.len() > 1,
        }
    }
}

/// Ablation toggles and thresholds for the light pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TlrConfig {
    /// Confidence threshold tau.
    pub confidence_threshold: f64,
    /// Sliding buffer capacity N.
    pub buffer_size: usize,
    /// Relevance prediction toggle (ablation RP).
    pub enable_rp: bool,
    /// State validation toggle (ablation SV).
    pub enable_sv: bool,
}

impl Default for TlrConfig {
    fn default() -> Self {
        TlrConfig {
            confidence_threshold: 0.5,
            buffer_size: 3,
            enable_rp: true,
            enable_sv: true,
        }
    }
}

/// Per-stream light pipeline state. One logical stream, one writer.
#[derive(Debug, Clone)]
pub struct TlrPipeline {
    config: TlrConfig,
    buffer: StateBuffer,
    last_frame: Option<u64>,
}

impl TlrPipeline {
    pub fn new(config: TlrConfig) -> Self {
        let buffer = StateBuffer::new(config.buffer_size);
        TlrPipeline {
            config,
            buffer,
            last_frame: None,
        }
    }

    pub fn config(&self) -> &TlrConfig {
        &self.config
    }

    /// Full chain: confidence filter, relevance prediction, candidate-state
    /// mapping, buffer push, validation. RP and SV are individually
    /// bypassable; with SV off the buffer is not touched.
    pub fn process_frame(&mut self, frame: &AssembledFrame) -> Result<ValidatedLightState, TlrError> {
        if let Some(last) = self.last_frame {
            if frame.frame_index <= last {
                return Err(TlrError::OutOfOrderFrame {
                    last,
                    got: frame.frame_index,
                });
            }
        }
        self.last_frame = Some(frame.frame_index);

        let filtered = filter_confidence(&frame.lights, self.config.confidence_threshold);
        let per_frame = if self.config.enable_rp {
            predict_relevance(&filtered)
        } else {
            // RP bypass: highest-priority class among the filtered detections
            filtered
                .iter()
                .map(|d| d.label)
                .min_by_key(|c| light_priority_rank(*c))
        };
        let state = to_validation_state(per_frame);

        if self.config.enable_sv {
            self.buffer.push(state);
            Ok(self.buffer.validate())
        } else {
            // single-frame weights for diagnostics only
            let mut weights = StateWeights {
                red: 0,
                yellow: 0,
                green: 0,
                no_detection: 0,
            };
            let w = criticality(state) * self.config.buffer_size as u32;
            match state {
                LightState::Red => weights.red = w,
                LightState::Yellow => weights.yellow = w,
                LightState::Green => weights.green = w,
                LightState::NoDetection => {}
            }
            Ok(ValidatedLightState {
                state,
                weights,
                tie_broken: false,
            })
        }
    }
}
