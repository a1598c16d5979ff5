//! Run configuration: one human-editable TOML document validated at load,
//! embedded verbatim into every output manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{FovCrop, ViewLayout, CROP_HEIGHT, CROP_WIDTH};
use crate::harness::{AgentPolicy, ScoringConfig};
use crate::message::MessageTemplates;
use crate::sim::{NoiseModel, SimParams};
use crate::tlr::TlrConfig;
use crate::tsr::TsrConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config value: {0}")]
    Value(String),
}

/// Frame-assembly configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblyConfig {
    /// Three-view panorama when true, front-center only otherwise.
    pub multi_view: bool,
    pub view_width: f64,
    pub view_height: f64,
    /// Crop anchor in panorama coordinates; None centers on front_center.
    pub crop_anchor_x: Option<f64>,
    pub crop_anchor_y: f64,
    /// Minimum intersection-over-detection-area for a box to survive the crop.
    pub min_overlap: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            multi_view: true,
            view_width: CROP_WIDTH,
            view_height: CROP_HEIGHT,
            crop_anchor_x: None,
            crop_anchor_y: 0.0,
            min_overlap: 0.5,
        }
    }
}

impl AssemblyConfig {
    pub fn layout(&self) -> ViewLayout {
        if self.multi_view {
            ViewLayout::three_view(self.view_width, self.view_height)
        } else {
            ViewLayout::single_view()
        }
    }

    pub fn crop(&self, layout: &ViewLayout) -> FovCrop {
        match self.crop_anchor_x {
            Some(x) => FovCrop {
                anchor_x: x,
                anchor_y: self.crop_anchor_y,
            },
            None => layout.centered_crop(),
        }
    }
}

/// Module-level toggles mirroring the TLR-only / TSR-only / combined variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModuleToggles {
    pub enable_tlr: bool,
    pub enable_tsr: bool,
}

impl Default for ModuleToggles {
    fn default() -> Self {
        ModuleToggles {
            enable_tlr: true,
            enable_tsr: true,
        }
    }
}

/// The complete, validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub assembly: AssemblyConfig,
    pub modules: ModuleToggles,
    pub tlr: TlrConfig,
    pub tsr: TsrConfig,
    pub templates: MessageTemplates,
    pub noise: NoiseModel,
    pub sim: SimParams,
    pub agent: AgentPolicy,
    pub scoring: ScoringConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let val = |msg: String| ConfigError::Value(msg);
        if !(0.0..=1.0).contains(&self.tlr.confidence_threshold) {
            return Err(val(format!(
                "tlr.confidence_threshold {} outside [0, 1]",
                self.tlr.confidence_threshold
            )));
        }
        if self.tlr.buffer_size == 0 {
            return Err(val("tlr.buffer_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.tsr.iou_threshold) {
            return Err(val(format!(
                "tsr.iou_threshold {} outside [0, 1]",
                self.tsr.iou_threshold
            )));
        }
        if self.tsr.min_height < 0.0 {
            return Err(val("tsr.min_height must be >= 0".into()));
        }
        if !(self.assembly.min_overlap > 0.0 && self.assembly.min_overlap <= 1.0) {
            return Err(val("assembly.min_overlap must be in (0, 1]".into()));
        }
        if self.assembly.view_width <= 0.0 || self.assembly.view_height <= 0.0 {
            return Err(val("assembly view dimensions must be positive".into()));
        }
        let layout = self.assembly.layout();
        self.assembly
            .crop(&layout)
            .validate(&layout)
            .map_err(|e| val(format!("assembly crop: {e}")))?;
        self.templates
            .validate()
            .map_err(|e| val(format!("templates: {e}")))?;
        self.noise.validate().map_err(|e| val(format!("noise: {e}")))?;
        self.sim.validate().map_err(|e| val(format!("sim: {e}")))?;
        self.agent.validate().map_err(|e| val(format!("agent: {e}")))?;
        self.scoring
            .validate()
            .map_err(|e| val(format!("scoring: {e}")))?;
        Ok(())
    }
}
