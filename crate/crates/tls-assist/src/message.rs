//! Notice message generation from fixed template dictionaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tlr::ValidatedLightState;
use crate::tsr::PrioritizedSign;
use crate::types::{LightState, SignClass};

pub const SPEED_PLACEHOLDER: &str = "{x}";

#[derive(Debug, Error, PartialEq)]
pub enum TemplateError {
    #[error("template '{0}' must not be empty")]
    Empty(&'static str),
    #[error("template '{0}' contains an unfilled placeholder")]
    UnexpectedPlaceholder(&'static str),
    #[error("speed limit template must contain the {SPEED_PLACEHOLDER} placeholder")]
    MissingPlaceholder,
}

/// Template dictionaries for light states and sign classes. The no-detection
/// entries are implicitly empty so that absent objects produce no message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MessageTemplates {
    pub red: String,
    pub yellow: String,
    pub green: String,
    pub stop: String,
    pub yield_sign: String,
    /// Parametric speed limit template; `{x}` is replaced by the limit value.
    pub speed_limit: String,
}

impl Default for MessageTemplates {
    fn default() -> Self {
        MessageTemplates {
            red: "Red light ahead, stop the vehicle!".to_string(),
            yellow: "Yellow light ahead, prepare to stop.".to_string(),
            green: "Green light ahead, continue driving.".to_string(),
            stop: "Stop sign ahead, stop the vehicle!".to_string(),
            yield_sign: "Yield sign ahead, give way to traffic.".to_string(),
            speed_limit: "Limit speed to {x} km/h.".to_string(),
        }
    }
}

impl MessageTemplates {
    /// Load-time totality check: every entry non-empty, placeholders only
    /// where they will be filled.
    pub fn validate(&self) -> Result<(), TemplateError> {
        let fixed: [(&'static str, &str); 5] = [
            ("red", &self.red),
            ("yellow", &self.yellow),
            ("green", &self.green),
            ("stop", &self.stop),
            ("yield_sign", &self.yield_sign),
        ];
        for (name, value) in fixed {
            if value.is_empty() {
                return Err(TemplateError::Empty(name));
            }
            if value.contains(SPEED_PLACEHOLDER) {
                return Err(TemplateError::UnexpectedPlaceholder(name));
            }
        }
        if self.speed_limit.is_empty() {
            return Err(TemplateError::Empty("speed_limit"));
        }
        if !self.speed_limit.contains(SPEED_PLACEHOLDER) {
            return Err(TemplateError::MissingPlaceholder);
        }
        Ok(())
    }
}

/// Template lookup for a validated light state; no_detection yields "".
pub fn light_message(state: LightState, t: &MessageTemplates) -> String {
    match state {
        LightState::Red => t.red.clone(),
        LightState::Yellow => t.yellow.clone(),
        LightState::Green => t.green.clone(),
        LightState::NoDetection => String::new(),
    }
}

/// Template lookup for a prioritized sign; speed limits substitute their
/// numeric value, `off` yields "".
pub fn sign_message(sign: SignClass, t: &MessageTemplates) -> String {
    match sign {
        SignClass::Stop => t.stop.clone(),
        SignClass::Yield => t.yield_sign.clone(),
        SignClass::SpeedLimit30 | SignClass::SpeedLimit60 | SignClass::SpeedLimit90 => {
            let kmh = sign.speed_limit_kmh().expect("speed class carries a value");
            t.speed_limit.replace(SPEED_PLACEHOLDER, &kmh.to_string())
        }
        SignClass::Off => String::new(),
    }
}

/// The concatenated instruction for one frame. Empty `text` means nothing is
/// injected downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct NoticeMessage {
    pub text: String,
    pub light_part: String,
    pub sign_part: String,
    pub frame_index: u64,
}

impl NoticeMessage {
    pub fn is_suppressed(&self) -> bool {
        self.text.is_empty()
    }
}

/// Light message first, then sign message, single space between non-empty
/// parts, no leading or trailing whitespace.
pub fn compose(
    light: &ValidatedLightState,
    sign: &PrioritizedSign,
    t: &MessageTemplates,
    frame_index: u64,
) -> NoticeMessage {
    let light_part = light_message(light.state, t);
    let sign_part = sign_message(sign.sign, t);
    let text = match (light_part.is_empty(), sign_part.is_empty()) {
        (true, true) => String::new(),
        (false, true) => light_part.clone(),
        (true, false) => sign_part.clone(),
        (false, false) => format!("{light_part} {sign_part}"),
    };
    NoticeMessage {
        text,
        light_part,
        sign_part,
        frame_index,
    }
}
