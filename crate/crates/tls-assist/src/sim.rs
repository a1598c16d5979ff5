//! Synthetic route scenarios: ground-truth light phases and sign placements,
//! a 1-D pinhole projection of events into the front-center view, and a
//! seeded noise model that corrupts ground truth into detection streams.

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{DetectionRecord, FrameRecord, ViewRecords, SCHEMA_VERSION};
use crate::types::{round2, LightClass, SignClass};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("probability {name} = {value} outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("confusion matrix row for {0} does not sum to 1")]
    ConfusionRowSum(String),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// Route-length classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackClass {
    Tiny,
    Short,
    Long,
}

impl TrackClass {
    pub const ALL: [TrackClass; 3] = [TrackClass::Tiny, TrackClass::Short, TrackClass::Long];

    pub fn name(self) -> &'static str {
        match self {
            TrackClass::Tiny => "tiny",
            TrackClass::Short => "short",
            TrackClass::Long => "long",
        }
    }

    /// Route length bounds in meters (lower inclusive, upper exclusive).
    pub fn length_range(self) -> (f64, f64) {
        match self {
            TrackClass::Tiny => (60.0, 150.0),
            TrackClass::Short => (150.0, 500.0),
            TrackClass::Long => (500.0, 900.0),
        }
    }
}

/// Periodic red -> green -> yellow cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub red_s: f64,
    pub green_s: f64,
    pub yellow_s: f64,
    /// Phase offset into the cycle at t = 0.
    pub offset_s: f64,
}

impl PhaseSchedule {
    pub fn cycle(&self) -> f64 {
        self.red_s + self.green_s + self.yellow_s
    }

    pub fn light_at(&self, t: f64) -> LightClass {
        let phase = (t + self.offset_s).rem_euclid(self.cycle());
        if phase < self.red_s {
            LightClass::Red
        } else if phase < self.red_s + self.green_s {
            LightClass::Green
        } else {
            LightClass::Yellow
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Intersection { schedule: PhaseSchedule },
    Sign { class: SignClass },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Distance from the route start, meters.
    pub position: f64,
    pub kind: EventKind,
}

/// One generated route: geometry plus its ground-truth events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub track: TrackClass,
    pub route_length: f64,
    pub events: Vec<Event>,
    pub visibility_range: f64,
    pub seed: u64,
}

/// Scenario generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub visibility_range: f64,
    /// Mean spacing between intersections, meters.
    pub intersection_spacing: f64,
    /// Mean spacing between signs, meters.
    pub sign_spacing: f64,
    /// Minimum gap enforced between any two events, meters.
    pub min_event_gap: f64,
    /// Pinhole proportionality constant: box height = k / distance (px * m).
    pub projection_k: f64,
    pub tick_seconds: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            visibility_range: 40.0,
            intersection_spacing: 80.0,
            sign_spacing: 60.0,
            min_event_gap: 50.0,
            projection_k: 480.0,
            tick_seconds: 0.1,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("visibility_range", self.visibility_range),
            ("intersection_spacing", self.intersection_spacing),
            ("sign_spacing", self.sign_spacing),
            ("min_event_gap", self.min_event_gap),
            ("projection_k", self.projection_k),
            ("tick_seconds", self.tick_seconds),
        ] {
            if v <= 0.0 {
                return Err(SimError::NonPositive(name));
            }
        }
        Ok(())
    }
}

const SIGN_CHOICES: [SignClass; 5] = [
    SignClass::Stop,
    SignClass::Yield,
    SignClass::SpeedLimit30,
    SignClass::SpeedLimit60,
    SignClass::SpeedLimit90,
];

/// Deterministic scenario generation: same (track, seed, params) gives the
/// same scenario.
pub fn generate_scenario(track: TrackClass, seed: u64, params: &SimParams) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x5ce7a510));
    let (lo, hi) = track.length_range();
    let route_length = Uniform::new(lo, hi).sample(&mut rng);

    // candidate positions, jittered around the nominal spacing
    let mut candidates: Vec<(f64, bool)> = Vec::new(); // (position, is_intersection)
    let mut pos = params.intersection_spacing * 0.5;
    while pos < route_length - 5.0 {
        let jitter = rng.gen_range(-0.2..0.2) * params.intersection_spacing;
        let p = (pos + jitter).clamp(5.0, route_length - 5.0);
        candidates.push((p, true));
        pos += params.intersection_spacing;
    }
    let mut pos = params.sign_spacing * 0.7;
    while pos < route_length - 5.0 {
        let jitter = rng.gen_range(-0.2..0.2) * params.sign_spacing;
        let p = (pos + jitter).clamp(5.0, route_length - 5.0);
        candidates.push((p, false));
        pos += params.sign_spacing;
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // enforce the minimum event gap, keeping earlier events
    let mut events: Vec<Event> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (p, is_intersection) in candidates {
        if p - last < params.min_event_gap {
            continue;
        }
        last = p;
        let kind = if is_intersection {
            let red_s = rng.gen_range(8.0..12.0);
            let green_s = rng.gen_range(8.0..12.0);
            let yellow_s = rng.gen_range(2.0..3.0);
            let offset_s = rng.gen_range(0.0..(red_s + green_s + yellow_s));
            EventKind::Intersection {
                schedule: PhaseSchedule {
                    red_s,
                    green_s,
                    yellow_s,
                    offset_s,
                },
            }
        } else {
            EventKind::Sign {
                class: SIGN_CHOICES[rng.gen_range(0..SIGN_CHOICES.len())],
            }
        };
        events.push(Event { position: p, kind });
    }

    Scenario {
        track,
        route_length,
        events,
        visibility_range: params.visibility_range,
        seed,
    }
}

/// One ground-truth object as seen by the front-center camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtDetection {
    pub kind: GtKind,
    pub distance: f64,
    /// Box corners in front-center view coordinates (1280 x 720).
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub base_confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GtKind {
    Light(LightClass),
    Sign(SignClass),
}

const VIEW_W: f64 = 1280.0;
const VIEW_H: f64 = 720.0;

/// Projects every event within the forward visibility range into the
/// front-center view. Box height follows h = k / distance.
pub fn ground_truth_frame(
    scenario: &Scenario,
    params: &SimParams,
    ego_pos: f64,
    t: f64,
) -> Vec<GtDetection> {
    let mut out = Vec::new();
    for event in &scenario.events {
        let d = event.position - ego_pos;
        if d <= 0.0 || d > scenario.visibility_range {
            continue;
        }
        let h = (params.projection_k / d.max(1.0)).clamp(2.0, 400.0);
        let (kind, w, cx, cy): (GtKind, f64, f64, f64) = match &event.kind {
            EventKind::Intersection { schedule } => {
                let lateral = (event.position * 7.3).rem_euclid(60.0) - 30.0;
                (
                    GtKind::Light(schedule.light_at(t)),
                    (h * 0.4).max(1.0),
                    640.0 + lateral,
                    240.0,
                )
            }
            EventKind::Sign { class } => {
                let lateral = (event.position * 5.1).rem_euclid(40.0) - 20.0;
                (GtKind::Sign(*class), h.max(1.0), 980.0 + lateral, 420.0)
            }
        };
        let cx = cx.clamp(w / 2.0 + 1.0, VIEW_W - w / 2.0 - 1.0);
        let cy = cy.clamp(h / 2.0 + 1.0, VIEW_H - h / 2.0 - 1.0);
        let base_confidence = 0.95 - 0.15 * (d / scenario.visibility_range);
        out.push(GtDetection {
            kind,
            distance: d,
            x_min: cx - w / 2.0,
            y_min: cy - h / 2.0,
            x_max: cx + w / 2.0,
            y_max: cy + h / 2.0,
            base_confidence,
        });
    }
    out
}

/// Detection corruption parameters. All draws are made from a ChaCha stream
/// re-seeded per frame, so streams are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub dropout_prob: f64,
    pub misclass_prob: f64,
    pub confidence_jitter_sd: f64,
    pub duplicate_prob: f64,
    pub seed: u64,
    /// Row-stochastic confusion over light classes (row = true class, in
    /// red/yellow/green/off order), applied when a misclassification fires.
    pub light_confusion: [[f64; 4]; 4],
    /// Row-stochastic confusion over sign classes (stop/yield/30/60/90/off order).
    pub sign_confusion: [[f64; 6]; 6],
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            dropout_prob: 0.3,
            misclass_prob: 0.1,
            confidence_jitter_sd: 0.05,
            duplicate_prob: 0.05,
            seed: 0,
            // adjacent-state confusion carries 60% of the misclassification
            // mass where red/yellow are involved, the remainder is uniform
            light_confusion: [
                [0.0, 0.6, 0.2, 0.2], // red -> mostly yellow
                [0.6, 0.0, 0.2, 0.2], // yellow -> mostly red
                [1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0],
                [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0],
            ],
            sign_confusion: [
                [0.0, 0.2, 0.2, 0.2, 0.2, 0.2],
                [0.2, 0.0, 0.2, 0.2, 0.2, 0.2],
                [0.2, 0.2, 0.0, 0.2, 0.2, 0.2],
                [0.2, 0.2, 0.2, 0.0, 0.2, 0.2],
                [0.2, 0.2, 0.2, 0.2, 0.0, 0.2],
                [0.2, 0.2, 0.2, 0.2, 0.2, 0.0],
            ],
        }
    }
}

impl NoiseModel {
    /// Noiseless corruption is the identity on detection sets.
    pub fn none() -> Self {
        NoiseModel {
            dropout_prob: 0.0,
            misclass_prob: 0.0,
            confidence_jitter_sd: 0.0,
            duplicate_prob: 0.0,
            ..NoiseModel::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("dropout_prob", self.dropout_prob),
            ("misclass_prob", self.misclass_prob),
            ("duplicate_prob", self.duplicate_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::ProbabilityOutOfRange { name, value: v });
            }
        }
        if self.confidence_jitter_sd < 0.0 {
            return Err(SimError::NonPositive("confidence_jitter_sd"));
        }
        for (i, row) in self.light_confusion.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-6 || row.iter().any(|p| *p < 0.0) {
                return Err(SimError::ConfusionRowSum(format!("light row {i}")));
            }
        }
        for (i, row) in self.sign_confusion.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-6 || row.iter().any(|p| *p < 0.0) {
                return Err(SimError::ConfusionRowSum(format!("sign row {i}")));
            }
        }
        Ok(())
    }
}

fn sample_row<R: Rng, const N: usize>(rng: &mut R, row: &[f64; N]) -> usize {
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if draw < acc {
            return i;
        }
    }
    N - 1
}

const LIGHT_ORDER: [LightClass; 4] = [
    LightClass::Red,
    LightClass::Yellow,
    LightClass::Green,
    LightClass::Off,
];
const SIGN_ORDER: [SignClass; 6] = [
    SignClass::Stop,
    SignClass::Yield,
    SignClass::SpeedLimit30,
    SignClass::SpeedLimit60,
    SignClass::SpeedLimit90,
    SignClass::Off,
];

fn light_index(c: LightClass) -> usize {
    LIGHT_ORDER.iter().position(|x| *x == c).unwrap()
}

fn sign_index(c: SignClass) -> usize {
    SIGN_ORDER.iter().position(|x| *x == c).unwrap()
}

fn round4(v: f64) -> f64 {
    (v * 10_000.0).round() / 10_000.0
}

/// SplitMix64 step, used to derive independent seeds.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Corrupts one ground-truth frame into a wire record. Deterministic given
/// (noise model, frame_index); independent of any earlier frames.
pub fn corrupt(
    gt: &[GtDetection],
    nm: &NoiseModel,
    frame_index: u64,
    timestamp: f64,
) -> FrameRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(nm.seed, frame_index.wrapping_add(1)));
    let jitter = Normal::new(0.0, nm.confidence_jitter_sd.max(f64::MIN_POSITIVE)).unwrap();
    let mut dets: Vec<DetectionRecord> = Vec::with_capacity(gt.len());
    for g in gt {
        if nm.dropout_prob > 0.0 && rng.gen::<f64>() < nm.dropout_prob {
            continue;
        }
        let kind = if nm.misclass_prob > 0.0 && rng.gen::<f64>() < nm.misclass_prob {
            match g.kind {
                GtKind::Light(c) => {
                    GtKind::Light(LIGHT_ORDER[sample_row(&mut rng, &nm.light_confusion[light_index(c)])])
                }
                GtKind::Sign(c) => {
                    GtKind::Sign(SIGN_ORDER[sample_row(&mut rng, &nm.sign_confusion[sign_index(c)])])
                }
            }
        } else {
            g.kind
        };
        let confidence = if nm.confidence_jitter_sd > 0.0 {
            round4((g.base_confidence - jitter.sample(&mut rng).abs()).clamp(0.0, 1.0))
        } else {
            round4(g.base_confidence)
        };
        let bbox = [round2(g.x_min), round2(g.y_min), round2(g.x_max), round2(g.y_max)];
        let rec = match kind {
            GtKind::Light(class) => DetectionRecord::Light {
                class,
                confidence,
                bbox,
            },
            GtKind::Sign(class) => DetectionRecord::Sign {
                class,
                confidence,
                bbox,
            },
        };
        let duplicate = nm.duplicate_prob > 0.0 && rng.gen::<f64>() < nm.duplicate_prob;
        dets.push(rec);
        if duplicate {
            let shift_x = round2(rng.gen_range(1.0..4.0));
            let shift_y = round2(rng.gen_range(1.0..4.0));
            let dup_box = [
                round2((bbox[0] + shift_x).min(VIEW_W - 2.0)),
                round2((bbox[1] + shift_y).min(VIEW_H - 2.0)),
                round2((bbox[2] + shift_x).min(VIEW_W - 1.0)),
                round2((bbox[3] + shift_y).min(VIEW_H - 1.0)),
            ];
            let dup_conf = round4((confidence - 0.05).max(0.0));
            let dup = match kind {
                GtKind::Light(class) => DetectionRecord::Light {
                    class,
                    confidence: dup_conf,
                    bbox: dup_box,
                },
                GtKind::Sign(class) => DetectionRecord::Sign {
                    class,
                    confidence: dup_conf,
                    bbox: dup_box,
                },
            };
            dets.push(dup);
        }
    }
    FrameRecord {
        schema_version: SCHEMA_VERSION,
        frame_index,
        timestamp,
        stitch_ok: true,
        views: ViewRecords {
            front_left: None,
            front_center: dets,
            front_right: None,
        },
    }
}
