//! End-to-end per-frame pipeline: assembly -> traffic light recognition ->
//! traffic sign prioritization -> message composition.

use thiserror::Error;

use crate::assembly::{assemble, AssemblyError, FovCrop, ViewLayout};
use crate::config::RunConfig;
use crate::io::{NoticeDiagnostics, NoticeRecord};
use crate::message::{compose, MessageTemplates};
use crate::tlr::{StateWeights, TlrError, TlrPipeline, ValidatedLightState};
use crate::tsr::{self, PrioritizedSign, TsrConfig};
use crate::types::{FrameBundle, LightState};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Tlr(#[from] TlrError),
}

/// One logical stream's pipeline state. Construct fresh per stream.
#[derive(Debug, Clone)]
pub struct Pipeline {
    layout: ViewLayout,
    crop: FovCrop,
    min_overlap: f64,
    enable_tlr: bool,
    enable_tsr: bool,
    tlr: TlrPipeline,
    tsr_config: TsrConfig,
    templates: MessageTemplates,
}

impl Pipeline {
    pub fn new(cfg: &RunConfig) -> Self {
        let layout = cfg.assembly.layout();
        let crop = cfg.assembly.crop(&layout);
        Pipeline {
            layout,
            crop,
            min_overlap: cfg.assembly.min_overlap,
            enable_tlr: cfg.modules.enable_tlr,
            enable_tsr: cfg.modules.enable_tsr,
            tlr: TlrPipeline::new(cfg.tlr),
            tsr_config: cfg.tsr,
            templates: cfg.templates.clone(),
        }
    }

    /// Drives one frame bundle through the full chain and produces the notice
    /// record emitted downstream.
    pub fn process_bundle(&mut self, bundle: &FrameBundle) -> Result<NoticeRecord, PipelineError> {
        let frame = assemble(bundle, &self.layout, &self.crop, self.min_overlap)?;

        let light = if self.enable_tlr {
            self.tlr.process_frame(&frame)?
        } else {
            ValidatedLightState {
                state: LightState::NoDetection,
                weights: StateWeights {
                    red: 0,
                    yellow: 0,
                    green: 0,
                    no_detection: 0,
                },
                tie_broken: false,
            }
        };
        let sign = if self.enable_tsr {
            tsr::process_frame(&frame, &self.tsr_config)
        } else {
            PrioritizedSign::none()
        };

        let message = compose(&light, &sign, &self.templates, frame.frame_index);
        let suppressed = message.is_suppressed();
        Ok(NoticeRecord {
            frame_index: frame.frame_index,
            light_state: light.state,
            sign: sign.sign,
            message: message.text,
            suppressed,
            diagnostics: NoticeDiagnostics {
                weights: light.weights,
                tie_broken: light.tie_broken,
                degraded: frame.degraded,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BoundingBox, Detection, FrameTag, LightClass, SignClass, ViewId};

    fn bundle(index: u64, light: Option<LightClass>, sign: Option<SignClass>) -> FrameBundle {
        let mut b = FrameBundle::empty(index, index as f64 * 0.1);
        if let Some(c) = light {
            b.front_center.lights.push(
                Detection::new(
                    BoundingBox::new(600.0, 200.0, 620.0, 250.0, FrameTag::View).unwrap(),
                    c,
                    0.9,
                    ViewId::FrontCenter,
                )
                .unwrap(),
            );
        }
        if let Some(s) = sign {
            b.front_center.signs.push(
                Detection::new(
                    BoundingBox::new(900.0, 380.0, 960.0, 440.0, FrameTag::View).unwrap(),
                    s,
                    0.9,
                    ViewId::FrontCenter,
                )
                .unwrap(),
            );
        }
        b
    }

    #[test]
    fn full_chain_produces_concatenated_message() {
        let cfg = RunConfig::default();
        let mut p = Pipeline::new(&cfg);
        let mut last = None;
        for i in 0..3 {
            last = Some(
                p.process_bundle(&bundle(i, Some(LightClass::Red), Some(SignClass::SpeedLimit30)))
                    .unwrap(),
            );
        }
        let out = last.unwrap();
        assert_eq!(out.light_state, LightState::Red);
        assert_eq!(out.sign, SignClass::SpeedLimit30);
        assert_eq!(
            out.message,
            "Red light ahead, stop the vehicle! Limit speed to 30 km/h."
        );
        assert!(!out.suppressed);
    }

    #[test]
    fn empty_frame_is_suppressed() {
        let cfg = RunConfig::default();
        let mut p = Pipeline::new(&cfg);
        let out = p.process_bundle(&bundle(0, None, None)).unwrap();
        assert_eq!(out.light_state, LightState::NoDetection);
        assert_eq!(out.sign, SignClass::Off);
        assert_eq!(out.message, "");
        assert!(out.suppressed);
    }

    #[test]
    fn module_toggles_silence_their_half() {
        let mut cfg = RunConfig::default();
        cfg.modules.enable_tlr = false;
        let mut p = Pipeline::new(&cfg);
        let out = p
            .process_bundle(&bundle(0, Some(LightClass::Red), Some(SignClass::Stop)))
            .unwrap();
        assert_eq!(out.light_state, LightState::NoDetection);
        assert_eq!(out.sign, SignClass::Stop);
        assert!(!out.message.contains("light"));

        let mut cfg = RunConfig::default();
        cfg.modules.enable_tsr = false;
        let mut p = Pipeline::new(&cfg);
        let out = p
            .process_bundle(&bundle(0, Some(LightClass::Red), Some(SignClass::Stop)))
            .unwrap();
        assert_eq!(out.sign, SignClass::Off);
        assert_eq!(out.message, "Red light ahead, stop the vehicle!");
    }
}
