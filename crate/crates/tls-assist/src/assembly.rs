//! Multi-view frame assembly: view standardization, panoramic coordinate
//! composition, field-of-view crop and the front-center fallback.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{BoundingBox, Detection, FrameBundle, FrameTag, ViewId};

/// Fixed field-of-view crop dimensions.
pub const CROP_WIDTH: f64 = 1280.0;
pub const CROP_HEIGHT: f64 = 720.0;

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("front_center view missing; fallback impossible")]
    MissingFrontCenter,
    #[error("view {view:?} not declared in layout")]
    UndeclaredView { view: ViewId },
    #[error("detection box ({x_min},{y_min},{x_max},{y_max}) exceeds bounds of view {view:?}")]
    BoxOutOfViewBounds {
        view: ViewId,
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("crop rectangle exceeds panorama bounds")]
    CropOutOfBounds,
}

/// One camera slot in the panorama layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSlot {
    pub view: ViewId,
    pub width: f64,
    pub height: f64,
}

/// Horizontal non-overlapping concatenation of views, left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewLayout {
    slots: Vec<ViewSlot>,
}

impl ViewLayout {
    /// Builds a layout from slots ordered left to right. Requires front_center.
    pub fn new(slots: Vec<ViewSlot>) -> Result<Self, AssemblyError> {
        if !slots.iter().any(|s| s.view == ViewId::FrontCenter) {
            return Err(AssemblyError::MissingFrontCenter);
        }
        Ok(ViewLayout { slots })
    }

    /// Three identical views of `width` x `height`.
    pub fn three_view(width: f64, height: f64) -> Self {
        ViewLayout {
            slots: ViewId::ALL
                .iter()
                .map(|&view| ViewSlot {
                    view,
                    width,
                    height,
                })
                .collect(),
        }
    }

    /// Front-center only, at the fixed crop dimensions.
    pub fn single_view() -> Self {
        ViewLayout {
            slots: vec![ViewSlot {
                view: ViewId::FrontCenter,
                width: CROP_WIDTH,
                height: CROP_HEIGHT,
            }],
        }
    }

    pub fn slots(&self) -> &[ViewSlot] {
        &self.slots
    }

    pub fn slot(&self, view: ViewId) -> Option<&ViewSlot> {
        self.slots.iter().find(|s| s.view == view)
    }

    /// Horizontal offset of a view in panorama coordinates: cumulative width
    /// of the views to its left.
    pub fn offset(&self, view: ViewId) -> Option<f64> {
        let mut acc = 0.0;
        for slot in &self.slots {
            if slot.view == view {
                return Some(acc);
            }
            acc += slot.width;
        }
        None
    }

    pub fn panorama_width(&self) -> f64 {
        self.slots.iter().map(|s| s.width).sum()
    }

    pub fn panorama_height(&self) -> f64 {
        self.slots.iter().fold(0.0_f64, |acc, s| acc.max(s.height))
    }

    /// Crop anchor centering the fixed crop on the front_center view.
    pub fn centered_crop(&self) -> FovCrop {
        let slot = self.slot(ViewId::FrontCenter).expect("layout has front_center");
        let off = self.offset(ViewId::FrontCenter).expect("layout has front_center");
        let x = (off + slot.width / 2.0 - CROP_WIDTH / 2.0).max(0.0);
        FovCrop { anchor_x: x, anchor_y: 0.0 }
    }
}

/// 720x1280 crop window, positioned by its top-left anchor in panorama coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovCrop {
    pub anchor_x: f64,
    pub anchor_y: f64,
}

impl FovCrop {
    pub fn validate(&self, layout: &ViewLayout) -> Result<(), AssemblyError> {
        if self.anchor_x < 0.0
            || self.anchor_y < 0.0
            || self.anchor_x + CROP_WIDTH > layout.panorama_width() + 1e-9
            || self.anchor_y + CROP_HEIGHT > layout.panorama_height() + 1e-9
        {
            return Err(AssemblyError::CropOutOfBounds);
        }
        Ok(())
    }
}

/// Outcome of pre-assembly view validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ViewCheck {
    Ok,
    StitchFailure(String),
}

/// Detections of one frame in crop coordinates, ready for the recognition modules.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledFrame {
    pub frame_index: u64,
    pub timestamp: f64,
    pub lights: Vec<Detection<crate::types::LightClass>>,
    pub signs: Vec<Detection<crate::types::SignClass>>,
    /// True when the front-center fallback path was taken.
    pub degraded: bool,
}

/// Checks that the bundle's declared views match the layout and that stitching
/// is viable. A missing front_center view is a hard error; anything else
/// downgrades to a stitch failure handled by the fallback path.
pub fn validate_views(bundle: &FrameBundle, layout: &ViewLayout) -> Result<ViewCheck, AssemblyError> {
    // front_center presence is enforced by the FrameBundle type; layouts are
    // checked at construction. Declared views must exist in the layout with
    // matching dimensions.
    if !bundle.stitch_ok {
        return Ok(ViewCheck::StitchFailure("stitch_ok=false reported upstream".into()));
    }
    for view in bundle.declared_views() {
        let Some(slot) = layout.slot(view) else {
            return Ok(ViewCheck::StitchFailure(format!(
                "view {view:?} not declared in layout"
            )));
        };
        let dets = bundle.view(view).expect("declared view present");
        for d in dets.lights.iter().map(|d| &d.bbox).chain(dets.signs.iter().map(|d| &d.bbox)) {
            if d.x_max > slot.width + 1e-9 || d.y_max > slot.height + 1e-9 {
                return Ok(ViewCheck::StitchFailure(format!(
                    "detection box exceeds {view:?} dimensions {}x{}",
                    slot.width, slot.height
                )));
            }
        }
    }
    Ok(ViewCheck::Ok)
}

/// Translates a detection from its view frame into panorama coordinates.
/// Label, confidence, and box dimensions are preserved exactly.
pub fn remap_to_panorama<L: Copy>(
    d: &Detection<L>,
    layout: &ViewLayout,
) -> Result<Detection<L>, AssemblyError> {
    let slot = layout
        .slot(d.view)
        .ok_or(AssemblyError::UndeclaredView { view: d.view })?;
    if d.bbox.x_max > slot.width + 1e-9 || d.bbox.y_max > slot.height + 1e-9 {
        return Err(AssemblyError::BoxOutOfViewBounds {
            view: d.view,
            x_min: d.bbox.x_min,
            y_min: d.bbox.y_min,
            x_max: d.bbox.x_max,
            y_max: d.bbox.y_max,
        });
    }
    let off = layout.offset(d.view).expect("slot implies offset");
    let mut out = *d;
    out.bbox = d.bbox.translated(off, 0.0, FrameTag::Panorama);
    Ok(out)
}

fn crop_detection<L: Copy>(
    d: &Detection<L>,
    crop: &FovCrop,
    min_overlap: f64,
) -> Option<Detection<L>> {
    let crop_box = BoundingBox {
        x_min: crop.anchor_x,
        y_min: crop.anchor_y,
        x_max: crop.anchor_x + CROP_WIDTH,
        y_max: crop.anchor_y + CROP_HEIGHT,
        frame_tag: FrameTag::Panorama,
    };
    let inter = d.bbox.intersection_area(&crop_box);
    if d.bbox.area() <= 0.0 || inter / d.bbox.area() < min_overlap {
        return None;
    }
    let mut out = *d;
    out.bbox = BoundingBox {
        x_min: (d.bbox.x_min.max(crop_box.x_min) - crop.anchor_x).max(0.0),
        y_min: (d.bbox.y_min.max(crop_box.y_min) - crop.anchor_y).max(0.0),
        x_max: d.bbox.x_max.min(crop_box.x_max) - crop.anchor_x,
        y_max: d.bbox.y_max.min(crop_box.y_max) - crop.anchor_y,
        frame_tag: FrameTag::Crop,
    };
    Some(out)
}

/// Composes a frame bundle into a single 720x1280 crop frame. On stitch
/// failure the front-center view is passed through alone with `degraded` set.
pub fn assemble(
    bundle: &FrameBundle,
    layout: &ViewLayout,
    crop: &FovCrop,
    min_overlap: f64,
) -> Result<AssembledFrame, AssemblyError> {
    match validate_views(bundle, layout)? {
        ViewCheck::Ok => {
            let mut lights = Vec::new();
            let mut signs = Vec::new();
            for view in bundle.declared_views() {
                let dets = bundle.view(view).expect("declared view present");
                for d in &dets.lights {
                    let pano = remap_to_panorama(d, layout)?;
                    if let Some(c) = crop_detection(&pano, crop, min_overlap) {
                        lights.push(c);
                    }
                }
                for d in &dets.signs {
                    let pano = remap_to_panorama(d, layout)?;
                    if let Some(c) = crop_detection(&pano, crop, min_overlap) {
                        signs.push(c);
                    }
                }
            }
            Ok(AssembledFrame {
                frame_index: bundle.frame_index,
                timestamp: bundle.timestamp,
                lights,
                signs,
                degraded: false,
            })
        }
        ViewCheck::StitchFailure(_) => {
            // Fallback: front-center only, treated as a 720x1280 frame with an
            // identity crop so output invariants still hold.
            let identity = FovCrop { anchor_x: 0.0, anchor_y: 0.0 };
            let lights = bundle
                .front_center
                .lights
                .iter()
                .filter_map(|d| crop_detection(&retag(d), &identity, min_overlap))
                .collect();
            let signs = bundle
                .front_center
                .signs
                .iter()
                .filter_map(|d| crop_detection(&retag(d), &identity, min_overlap))
                .collect();
            Ok(AssembledFrame {
                frame_index: bundle.frame_index,
                timestamp: bundle.timestamp,
                lights,
                signs,
                degraded: true,
            })
        }
    }
}

fn retag<L: Copy>(d: &Detection<L>) -> Detection<L> {
    let mut out = *d;
    out.bbox.frame_tag = FrameTag::Panorama;
    out
}
