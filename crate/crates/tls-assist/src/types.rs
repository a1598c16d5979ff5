//! Shared domain vocabulary: detection classes, bounding boxes and frame bundles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Traffic light detection classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightClass {
    Red,
    Yellow,
    Green,
    Off,
}

impl LightClass {
    pub const ALL: [LightClass; 4] = [
        LightClass::Red,
        LightClass::Yellow,
        LightClass::Green,
        LightClass::Off,
    ];
}

/// Traffic sign detection classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    Stop,
    Yield,
    SpeedLimit30,
    SpeedLimit60,
    SpeedLimit90,
    Off,
}

impl SignClass {
    pub const ALL: [SignClass; 6] = [
        SignClass::Stop,
        SignClass::Yield,
        SignClass::SpeedLimit30,
        SignClass::SpeedLimit60,
        SignClass::SpeedLimit90,
        SignClass::Off,
    ];

    /// Speed limit value in km/h, when the sign carries one.
    pub fn speed_limit_kmh(self) -> Option<u32> {
        match self {
            SignClass::SpeedLimit30 => Some(30),
            SignClass::SpeedLimit60 => Some(60),
            SignClass::SpeedLimit90 => Some(90),
            _ => None,
        }
    }
}

/// Candidate set of the temporal state validator. Distinct from [`LightClass`]:
/// a detected-but-dark `off` light maps to `no_detection` here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightState {
    Red,
    Yellow,
    Green,
    NoDetection,
}

impl LightState {
    pub const ALL: [LightState; 4] = [
        LightState::Red,
        LightState::Yellow,
        LightState::Green,
        LightState::NoDetection,
    ];
}

/// Camera views, left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewId {
    FrontLeft,
    FrontCenter,
    FrontRight,
}

impl ViewId {
    pub const ALL: [ViewId; 3] = [ViewId::FrontLeft, ViewId::FrontCenter, ViewId::FrontRight];
}

/// Relevance priority of a light class; lower rank = higher priority.
pub fn light_priority_rank(c: LightClass) -> u8 {
    match c {
        LightClass::Red => 0,
        LightClass::Yellow => 1,
        LightClass::Green => 2,
        LightClass::Off => 3,
    }
}

/// Driving-relevance priority of a sign class; lower rank = higher priority.
pub fn sign_priority_rank(s: SignClass) -> u8 {
    match s {
        SignClass::Stop => 0,
        SignClass::Yield => 1,
        SignClass::SpeedLimit30 => 2,
        SignClass::SpeedLimit60 => 3,
        SignClass::SpeedLimit90 => 4,
        SignClass::Off => 5,
    }
}

/// State criticality S(c) used by the temporal validator's weight formula.
pub fn criticality(c: LightState) -> u32 {
    match c {
        LightState::Red => 3,
        LightState::Green => 2,
        LightState::Yellow => 1,
        LightState::NoDetection => 0,
    }
}

/// Coordinate frame a bounding box lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameTag {
    View,
    Panorama,
    Crop,
}

#[derive(Debug, Error, PartialEq)]
pub enum TypeError {
    #[error("degenerate box: x_min {x_min} >= x_max {x_max} or y_min {y_min} >= y_max {y_max}")]
    DegenerateBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("negative box coordinate")]
    NegativeCoordinate,
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
}

/// Axis-aligned box in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub frame_tag: FrameTag,
}

impl BoundingBox {
    pub fn new(
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        frame_tag: FrameTag,
    ) -> Result<Self, TypeError> {
        if !(x_min < x_max && y_min < y_max) {
            return Err(TypeError::DegenerateBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        if x_min < 0.0 || y_min < 0.0 {
            return Err(TypeError::NegativeCoordinate);
        }
        Ok(BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
            frame_tag,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Shift by (dx, dy), retagging the coordinate frame.
    pub fn translated(&self, dx: f64, dy: f64, tag: FrameTag) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
            frame_tag: tag,
        }
    }

    /// Intersection area with another box (frame tags are not checked).
    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        w * h
    }

    /// Intersection over union with another box.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Round coordinates to 2 decimal places (the serialized form).
    pub fn rounded(&self) -> BoundingBox {
        BoundingBox {
            x_min: round2(self.x_min),
            y_min: round2(self.y_min),
            x_max: round2(self.x_max),
            y_max: round2(self.y_max),
            frame_tag: self.frame_tag,
        }
    }
}

pub(crate) fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// One detected object: box, class label and confidence, tagged with its source view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection<L> {
    pub bbox: BoundingBox,
    pub label: L,
    pub confidence: f64,
    pub view: ViewId,
}

impl<L> Detection<L> {
    pub fn new(bbox: BoundingBox, label: L, confidence: f64, view: ViewId) -> Result<Self, TypeError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(TypeError::ConfidenceOutOfRange(confidence));
        }
        Ok(Detection {
            bbox,
            label,
            confidence,
            view,
        })
    }
}

/// Detections of one view within a frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViewDetections {
    pub lights: Vec<Detection<LightClass>>,
    pub signs: Vec<Detection<SignClass>>,
}

/// All detections of one timestamp, one entry per camera view.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub frame_index: u64,
    pub timestamp: f64,
    pub front_left: Option<ViewDetections>,
    pub front_center: ViewDetections,
    pub front_right: Option<ViewDetections>,
    pub stitch_ok: bool,
}

impl FrameBundle {
    pub fn empty(frame_index: u64, timestamp: f64) -> Self {
        FrameBundle {
            frame_index,
            timestamp,
            front_left: None,
            front_center: ViewDetections::default(),
            front_right: None,
            stitch_ok: true,
        }
    }

    pub fn view(&self, id: ViewId) -> Option<&ViewDetections> {
        match id {
            ViewId::FrontLeft => self.front_left.as_ref(),
            ViewId::FrontCenter => Some(&self.front_center),
            ViewId::FrontRight => self.front_right.as_ref(),
        }
    }

    pub fn declared_views(&self) -> Vec<ViewId> {
        let mut out = Vec::with_capacity(3);
        if self.front_left.is_some() {
            out.push(ViewId::FrontLeft);
        }
        out.push(ViewId::FrontCenter);
        if self.front_right.is_some() {
            out.push(ViewId::FrontRight);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn light_priority_matches_safety_order() {
        assert_eq!(light_priority_rank(LightClass::Red), 0);
        assert_eq!(light_priority_rank(LightClass::Off), 3);
        assert!(light_priority_rank(LightClass::Yellow) < light_priority_rank(LightClass::Green));
    }

    #[test]
    fn sign_priority_matches_relevance_order() {
        assert_eq!(sign_priority_rank(SignClass::Stop), 0);
        assert_eq!(sign_priority_rank(SignClass::SpeedLimit90), 4);
        assert_eq!(sign_priority_rank(SignClass::Off), 5);
        let mut ranks: Vec<u8> = SignClass::ALL.iter().map(|s| sign_priority_rank(*s)).collect();
        ranks.sort_unstable();
        ranks.dedup();
        assert_eq!(ranks.len(), SignClass::ALL.len(), "rank must be a total order");
    }

    #[test]
    fn criticality_values() {
        assert_eq!(criticality(LightState::Red), 3);
        assert_eq!(criticality(LightState::Green), 2);
        assert_eq!(criticality(LightState::Yellow), 1);
        assert_eq!(criticality(LightState::NoDetection), 0);
        // injective over the candidate set
        let mut vals: Vec<u32> = LightState::ALL.iter().map(|c| criticality(*c)).collect();
        vals.sort_unstable();
        vals.dedup();
        assert_eq!(vals.len(), 4);
    }

    #[test]
    fn box_construction_rejects_degenerate() {
        assert!(BoundingBox::new(10.0, 10.0, 5.0, 20.0, FrameTag::View).is_err());
        assert!(BoundingBox::new(-1.0, 0.0, 5.0, 20.0, FrameTag::View).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 5.0, 20.0, FrameTag::View).is_ok());
    }

    #[test]
    fn detection_rejects_bad_confidence() {
        let b = BoundingBox::new(0.0, 0.0, 10.0, 10.0, FrameTag::View).unwrap();
        assert!(Detection::new(b, LightClass::Red, 1.2, ViewId::FrontCenter).is_err());
        assert!(Detection::new(b, LightClass::Red, 0.9, ViewId::FrontCenter).is_ok());
    }

    #[test]
    fn iou_of_identical_boxes_is_one() {
        let b = BoundingBox::new(0.0, 0.0, 10.0, 10.0, FrameTag::View).unwrap();
        assert!((b.iou(&b) - 1.0).abs() < 1e-12);
    }
}
