//! Traffic sign pipeline: class-scoped duplicate suppression, small-detection
//! filtering and fixed-priority selection of the single most relevant sign.

use serde::{Deserialize, Serialize};

use crate::assembly::AssembledFrame;
use crate::types::{sign_priority_rank, BoundingBox, Detection, SignClass};

/// The single sign reported for a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrioritizedSign {
    pub sign: SignClass,
    pub source_box: Option<BoundingBox>,
    pub rank: u8,
}

impl PrioritizedSign {
    pub fn none() -> Self {
        PrioritizedSign {
            sign: SignClass::Off,
            source_box: None,
            rank: sign_priority_rank(SignClass::Off),
        }
    }
}

/// Greedy same-class suppression: keep by descending confidence, drop a
/// detection when an already-kept detection of the same class overlaps it
/// with IoU >= `iou_thresh`. Output is sorted by confidence descending.
pub fn deduplicate(dets: &[Detection<SignClass>], iou_thresh: f64) -> Vec<Detection<SignClass>> {
    let mut sorted: Vec<Detection<SignClass>> = dets.to_vec();
    sorted.sort_by(|a, b| b.confidence.partial_cmp(&a.confidence).unwrap());
    let mut kept: Vec<Detection<SignClass>> = Vec::with_capacity(sorted.len());
    for d in sorted {
        let dup = kept
            .iter()
            .any(|k| k.label == d.label && k.bbox.iou(&d.bbox) >= iou_thresh);
        if !dup {
            kept.push(d);
        }
    }
    kept
}

/// Keeps detections whose box height is at least `min_height` pixels.
pub fn filter_small(dets: &[Detection<SignClass>], min_height: f64) -> Vec<Detection<SignClass>> {
    dets.iter()
        .filter(|d| d.bbox.height() >= min_height)
        .copied()
        .collect()
}

/// Selects the detection with the minimal priority rank; same-class ties go to
/// the larger box, then the higher confidence. Empty input reports `off`.
pub fn prioritize(dets: &[Detection<SignClass>]) -> PrioritizedSign {
    let best = dets.iter().min_by(|a, b| {
        sign_priority_rank(a.label)
            .cmp(&sign_priority_rank(b.label))
            .then(b.bbox.area().partial_cmp(&a.bbox.area()).unwrap())
            .then(b.confidence.partial_cmp(&a.confidence).unwrap())
    });
    match best {
        Some(d) => PrioritizedSign {
            sign: d.label,
            source_box: Some(d.bbox),
            rank: sign_priority_rank(d.label),
        },
        None => PrioritizedSign::none(),
    }
}

/// Thresholds and per-stage diagnostic toggles for the sign pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsrConfig {
    pub iou_threshold: f64,
    pub min_height: f64,
    pub enable_dedup: bool,
    pub enable_size_filter: bool,
}

impl Default for TsrConfig {
    fn default() -> Self {
        TsrConfig {
            iou_threshold: 0.5,
            min_height: 12.0,
            enable_dedup: true,
            enable_size_filter: true,
        }
    }
}

/// deduplicate -> filter_small -> prioritize. Stateless across frames.
pub fn process_frame(frame: &AssembledFrame, config: &TsrConfig) -> PrioritizedSign {
    let deduped = if config.enable_dedup {
        deduplicate(&frame.signs, config.iou_threshold)
    } else {
        frame.signs.clone()
    };
    let sized = if config.enable_size_filter {
        filter_small(&deduped, config.min_height)
    } else {
        deduped
    };
    prioritize(&sized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{FrameTag, ViewId};

    fn det(label: SignClass, conf: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> Detection<SignClass> {
        Detection::new(
            BoundingBox::new(x0, y0, x1, y1, FrameTag::Crop).unwrap(),
            label,
            conf,
            ViewId::FrontCenter,
        )
        .unwrap()
    }

    fn frame(signs: Vec<Detection<SignClass>>) -> AssembledFrame {
        AssembledFrame {
            frame_index: 0,
            timestamp: 0.0,
            lights: vec![],
            signs,
            degraded: false,
        }
    }

    #[test]
    fn dedup_removes_same_class_overlaps() {
        let dets = vec![
            det(SignClass::Stop, 0.9, 10.0, 10.0, 50.0, 50.0),
            det(SignClass::Stop, 0.8, 10.0, 10.0, 50.0, 50.0),
        ];
        let out = deduplicate(&dets, 0.5);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].confidence, 0.9);
    }

    #[test]
    fn dedup_is_class_scoped() {
        let dets = vec![
            det(SignClass::Stop, 0.9, 10.0, 10.0, 50.0, 50.0),
            det(SignClass::Yield, 0.8, 10.0, 10.0, 50.0, 50.0),
        ];
        assert_eq!(deduplicate(&dets, 0.5).len(), 2);
    }

    #[test]
    fn dedup_keeps_disjoint_boxes() {
        let dets = vec![
            det(SignClass::Stop, 0.9, 10.0, 10.0, 50.0, 50.0),
            det(SignClass::Stop, 0.8, 100.0, 100.0, 150.0, 150.0),
        ];
        assert_eq!(deduplicate(&dets, 0.5).len(), 2);
    }

    #[test]
    fn dedup_idempotent() {
        let dets = vec![
            det(SignClass::Stop, 0.9, 10.0, 10.0, 50.0, 50.0),
            det(SignClass::Stop, 0.8, 15.0, 12.0, 52.0, 48.0),
            det(SignClass::Yield, 0.7, 10.0, 10.0, 50.0, 50.0),
        ];
        let once = deduplicate(&dets, 0.5);
        let twice = deduplicate(&once, 0.5);
        assert_eq!(once, twice);
    }

    #[test]
    fn size_filter_by_height() {
        let dets = vec![
            det(SignClass::Stop, 0.9, 0.0, 0.0, 30.0, 30.0),
            det(SignClass::Stop, 0.9, 0.0, 0.0, 30.0, 8.0),
            det(SignClass::Stop, 0.9, 0.0, 0.0, 30.0, 12.0),
        ];
        let out = filter_small(&dets, 12.0);
        assert_eq!(out.len(), 2);
        assert_eq!(filter_small(&dets, 0.0).len(), 3);
        assert!(filter_small(&[], 12.0).is_empty());
    }

    #[test]
    fn prioritize_stop_beats_speed_limits() {
        let dets = vec![
            det(SignClass::SpeedLimit60, 0.9, 0.0, 0.0, 40.0, 40.0),
            det(SignClass::Stop, 0.7, 100.0, 0.0, 140.0, 40.0),
        ];
        assert_eq!(prioritize(&dets).sign, SignClass::Stop);
    }

    #[test]
    fn prioritize_lower_speed_limit_wins() {
        let dets = vec![
            det(SignClass::SpeedLimit30, 0.6, 0.0, 0.0, 40.0, 40.0),
            det(SignClass::SpeedLimit90, 0.95, 100.0, 0.0, 140.0, 40.0),
        ];
        assert_eq!(prioritize(&dets).sign, SignClass::SpeedLimit30);
    }

    #[test]
    fn prioritize_empty_is_off() {
        let p = prioritize(&[]);
        assert_eq!(p.sign, SignClass::Off);
        assert!(p.source_box.is_none());
        assert_eq!(p.rank, 5);
    }

    #[test]
    fn prioritize_same_class_largest_box_then_confidence() {
        let dets = vec![
            det(SignClass::Stop, 0.95, 0.0, 0.0, 20.0, 20.0),
            det(SignClass::Stop, 0.7, 100.0, 0.0, 160.0, 60.0),
        ];
        let p = prioritize(&dets);
        assert_eq!(p.source_box.unwrap().x_min, 100.0);
        let dets = vec![
            det(SignClass::Stop, 0.7, 0.0, 0.0, 20.0, 20.0),
            det(SignClass::Stop, 0.95, 100.0, 0.0, 120.0, 20.0),
        ];
        assert_eq!(prioritize(&dets).source_box.unwrap().x_min, 100.0);
    }

    #[test]
    fn process_frame_composed() {
        // duplicate small stop signs below min height vanish entirely
        let f = frame(vec![
            det(SignClass::Stop, 0.9, 10.0, 10.0, 20.0, 15.0),
            det(SignClass::Stop, 0.8, 10.0, 10.0, 20.0, 15.0),
        ]);
        assert_eq!(process_frame(&f, &TsrConfig::default()).sign, SignClass::Off);

        // one yield (h = 40) plus two overlapping speed-60s
        let f = frame(vec![
            det(SignClass::SpeedLimit60, 0.9, 100.0, 10.0, 140.0, 50.0),
            det(SignClass::SpeedLimit60, 0.8, 102.0, 10.0, 142.0, 50.0),
            det(SignClass::Yield, 0.7, 10.0, 10.0, 50.0, 50.0),
        ]);
        assert_eq!(process_frame(&f, &TsrConfig::default()).sign, SignClass::Yield);

        // single passthrough
        let f = frame(vec![det(SignClass::SpeedLimit90, 0.9, 10.0, 10.0, 50.0, 50.0)]);
        assert_eq!(process_frame(&f, &TsrConfig::default()).sign, SignClass::SpeedLimit90);
    }

    #[test]
    fn reported_rank_never_below_any_input() {
        let dets = vec![
            det(SignClass::SpeedLimit90, 0.9, 0.0, 0.0, 40.0, 40.0),
            det(SignClass::Yield, 0.5, 100.0, 0.0, 140.0, 40.0),
        ];
        let p = prioritize(&dets);
        assert!(dets.iter().all(|d| p.rank <= sign_priority_rank(d.label)));
    }
}
