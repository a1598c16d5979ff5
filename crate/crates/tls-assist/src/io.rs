//! Wire format and streaming session: line-delimited JSON frame records in,
//! one notice record out per frame. External detectors in any ecosystem
//! attach by writing frame records to a file or a pipe, one per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::pipeline::Pipeline;
use crate::tlr::StateWeights;
use crate::types::{
    BoundingBox, Detection, FrameBundle, FrameTag, LightClass, LightState, SignClass, ViewDetections,
    ViewId,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Fraction of malformed frames above which a session aborts.
pub const MAX_ERROR_RATE: f64 = 0.10;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {path}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub path: String,
    pub message: String,
}

impl ParseError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError {
            line: 0,
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("input unreadable: {0}")]
    Io(#[from] std::io::Error),
    #[error("session aborted: {} of {} frames malformed, above the 10% threshold", summary.errors, summary.frames)]
    TooManyErrors { summary: SessionSummary },
}

/// One detection on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectionRecord {
    Light {
        class: LightClass,
        confidence: f64,
        #[serde(rename = "box")]
        bbox: [f64; 4],
    },
    Sign {
        class: SignClass,
        confidence: f64,
        #[serde(rename = "box")]
        bbox: [f64; 4],
    },
}

impl DetectionRecord {
    fn confidence(&self) -> f64 {
        match self {
            DetectionRecord::Light { confidence, .. } | DetectionRecord::Sign { confidence, .. } => {
                *confidence
            }
        }
    }

    fn bbox(&self) -> [f64; 4] {
        match self {
            DetectionRecord::Light { bbox, .. } | DetectionRecord::Sign { bbox, .. } => *bbox,
        }
    }
}

/// Per-view detection arrays; front_center is mandatory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ViewRecords {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_left: Option<Vec<DetectionRecord>>,
    pub front_center: Vec<DetectionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_right: Option<Vec<DetectionRecord>>,
}

/// One frame on the wire, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub schema_version: u32,
    pub frame_index: u64,
    pub timestamp: f64,
    pub stitch_ok: bool,
    pub views: ViewRecords,
}

impl FrameRecord {
    /// Converts a validated wire record into the in-process bundle.
    pub fn to_bundle(&self) -> FrameBundle {
        FrameBundle {
            frame_index: self.frame_index,
            timestamp: self.timestamp,
            front_left: self
                .views
                .front_left
                .as_ref()
                .map(|v| view_detections(v, ViewId::FrontLeft)),
            front_center: view_detections(&self.views.front_center, ViewId::FrontCenter),
            front_right: self
                .views
                .front_right
                .as_ref()
                .map(|v| view_detections(v, ViewId::FrontRight)),
            stitch_ok: self.stitch_ok,
        }
    }
}

fn view_detections(records: &[DetectionRecord], view: ViewId) -> ViewDetections {
    let mut out = ViewDetections::default();
    for r in records {
        let b = r.bbox();
        // validity was checked during parse
        let bbox = BoundingBox::new(b[0], b[1], b[2], b[3], FrameTag::View).expect("validated box");
        match r {
            DetectionRecord::Light { class, confidence, .. } => {
                out.lights
                    .push(Detection::new(bbox, *class, *confidence, view).expect("validated confidence"));
            }
            DetectionRecord::Sign { class, confidence, .. } => {
                out.signs
                    .push(Detection::new(bbox, *class, *confidence, view).expect("validated confidence"));
            }
        }
    }
    out
}

fn validate_detections(records: &[DetectionRecord], path: &str) -> Result<(), ParseError> {
    for (i, r) in records.iter().enumerate() {
        let c = r.confidence();
        if !(0.0..=1.0).contains(&c) {
            return Err(ParseError::at(
                format!("{path}[{i}].confidence"),
                format!("confidence {c} outside [0, 1]"),
            ));
        }
        let b = r.bbox();
        if !(b[0] < b[2] && b[1] < b[3]) || b[0] < 0.0 || b[1] < 0.0 {
            return Err(ParseError::at(
                format!("{path}[{i}].box"),
                format!("invalid box [{}, {}, {}, {}]", b[0], b[1], b[2], b[3]),
            ));
        }
    }
    Ok(())
}

/// Parses and validates one frame record line.
pub fn parse_frame(line: &str) -> Result<FrameRecord, ParseError> {
    let rec: FrameRecord =
        serde_json::from_str(line).map_err(|e| ParseError::at("$", e.to_string()))?;
    if rec.schema_version != SCHEMA_VERSION {
        return Err(ParseError::at(
            "schema_version",
            format!("unsupported version {}", rec.schema_version),
        ));
    }
    if !rec.timestamp.is_finite() || rec.timestamp < 0.0 {
        return Err(ParseError::at("timestamp", "must be a finite non-negative number"));
    }
    if let Some(v) = &rec.views.front_left {
        validate_detections(v, "views.front_left")?;
    }
    validate_detections(&rec.views.front_center, "views.front_center")?;
    if let Some(v) = &rec.views.front_right {
        validate_detections(v, "views.front_right")?;
    }
    Ok(rec)
}

/// Serializes a frame record as one canonical JSON line (no trailing newline).
pub fn emit_frame(rec: &FrameRecord) -> String {
    serde_json::to_string(rec).expect("frame record serializes")
}

/// Validation and degradation diagnostics attached to each notice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoticeDiagnostics {
    pub weights: StateWeights,
    pub tie_broken: bool,
    pub degraded: bool,
}

/// One pipeline output on the wire, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoticeRecord {
    pub frame_index: u64,
    pub light_state: LightState,
    pub sign: SignClass,
    pub message: String,
    pub suppressed: bool,
    pub diagnostics: NoticeDiagnostics,
}

/// Serializes a notice record; field order is fixed by the struct, so output
/// bytes are canonical.
pub fn emit_notice(rec: &NoticeRecord) -> String {
    serde_json::to_string(rec).expect("notice record serializes")
}

/// Parses one notice record line (the inverse of [`emit_notice`]).
pub fn parse_notice(line: &str) -> Result<NoticeRecord, ParseError> {
    serde_json::from_str(line).map_err(|e| ParseError::at("$", e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub frames: usize,
    pub errors: usize,
    pub suppressed: usize,
}

/// Reads frame records line by line, drives the full pipeline, writes one
/// notice per input frame. Malformed frames fail open (treated as empty) and
/// are counted; an error rate above [`MAX_ERROR_RATE`] fails the session.
pub fn stream_session<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    cfg: &RunConfig,
) -> Result<SessionSummary, SessionError> {
    let mut pipeline = Pipeline::new(cfg);
    let mut summary = SessionSummary {
        frames: 0,
        errors: 0,
        suppressed: 0,
    };
    // The pipeline consumes a strictly increasing internal sequence so that a
    // malformed or non-monotone wire frame can never wedge the stream; the
    // emitted notice reports the wire index (or a synthesized successor).
    let mut seq: u64 = 0;
    let mut last_valid: Option<u64> = None;
    let mut last_timestamp = 0.0_f64;

    for (line_no, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        summary.frames += 1;

        let parsed = parse_frame(&line)
            .map_err(|mut e| {
                e.line = line_no + 1;
                e
            })
            .and_then(|rec| match last_valid {
                Some(last) if rec.frame_index <= last => Err(ParseError {
                    line: line_no + 1,
                    path: "frame_index".into(),
                    message: format!("non-monotone frame_index {} after {}", rec.frame_index, last),
                }),
                _ => Ok(rec),
            });

        let (bundle, reported_index) = match parsed {
            Ok(rec) => {
                last_valid = Some(rec.frame_index);
                last_timestamp = rec.timestamp;
                let mut b = rec.to_bundle();
                let reported = b.frame_index;
                b.frame_index = seq;
                (b, reported)
            }
            Err(_) => {
                // fail open: a malformed frame carries no detections
                summary.errors += 1;
                (
                    FrameBundle::empty(seq, last_timestamp),
                    last_valid.map_or(0, |i| i + 1),
                )
            }
        };
        seq += 1;

        let mut notice = pipeline
            .process_bundle(&bundle)
            .expect("monotone stream cannot fail the pipeline");
        notice.frame_index = reported_index;
        if notice.suppressed {
            summary.suppressed += 1;
        }
        output.write_all(emit_notice(&notice).as_bytes())?;
        output.write_all(b"\n")?;
    }
    output.flush()?;

    if summary.frames > 0 && (summary.errors as f64) / (summary.frames as f64) > MAX_ERROR_RATE {
        return Err(SessionError::TooManyErrors { summary });
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_line(index: u64) -> String {
        format!(
            r#"{{"schema_version":1,"frame_index":{index},"timestamp":{},"stitch_ok":true,"views":{{"front_center":[]}}}}"#,
            index as f64 * 0.1
        )
    }

    #[test]
    fn parse_minimal_record() {
        let rec = parse_frame(&minimal_line(0)).unwrap();
        assert_eq!(rec.frame_index, 0);
        assert!(rec.views.front_center.is_empty());
        assert!(rec.views.front_left.is_none());
    }

    #[test]
    fn parse_rejects_out_of_range_confidence() {
        let line = r#"{"schema_version":1,"frame_index":0,"timestamp":0.0,"stitch_ok":true,"views":{"front_center":[{"kind":"light","class":"red","confidence":1.2,"box":[0,0,10,10]}]}}"#;
        let err = parse_frame(line).unwrap_err();
        assert_eq!(err.path, "views.front_center[0].confidence");
    }

    #[test]
    fn parse_rejects_unknown_class() {
        let line = r#"{"schema_version":1,"frame_index":0,"timestamp":0.0,"stitch_ok":true,"views":{"front_center":[{"kind":"light","class":"purple","confidence":0.9,"box":[0,0,10,10]}]}}"#;
        assert!(parse_frame(line).is_err());
    }

    #[test]
    fn parse_round_trips_detection_values() {
        let line = r#"{"schema_version":1,"frame_index":3,"timestamp":0.3,"stitch_ok":true,"views":{"front_center":[{"kind":"light","class":"red","confidence":0.9,"box":[100.0,50.0,120.0,90.0]}]}}"#;
        let rec = parse_frame(line).unwrap();
        let bundle = rec.to_bundle();
        let d = &bundle.front_center.lights[0];
        assert_eq!(d.label, LightClass::Red);
        assert_eq!(d.confidence, 0.9);
        assert_eq!(
            (d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max),
            (100.0, 50.0, 120.0, 90.0)
        );
        // frame round trip on the canonical form
        assert_eq!(parse_frame(&emit_frame(&rec)).unwrap(), rec);
    }

    #[test]
    fn notice_round_trip_is_exact() {
        let rec = NoticeRecord {
            frame_index: 42,
            light_state: LightState::Red,
            sign: SignClass::SpeedLimit60,
            message: "Red light ahead, stop the vehicle! Limit speed to 60 km/h.".into(),
            suppressed: false,
            diagnostics: NoticeDiagnostics {
                weights: StateWeights {
                    red: 9,
                    yellow: 0,
                    green: 6,
                    no_detection: 0,
                },
                tie_broken: false,
                degraded: false,
            },
        };
        let line = emit_notice(&rec);
        assert_eq!(parse_notice(&line).unwrap(), rec);
        // canonical: re-emission is byte-identical
        assert_eq!(emit_notice(&parse_notice(&line).unwrap()), line);
        // fixed key order for the weights map
        let red_pos = line.find("\"red\"").unwrap();
        let yellow_pos = line.find("\"yellow\"").unwrap();
        let green_pos = line.find("\"green\"").unwrap();
        let nd_pos = line.find("\"no_detection\"").unwrap();
        assert!(red_pos < yellow_pos && yellow_pos < green_pos && green_pos < nd_pos);
    }

    #[test]
    fn session_all_well_formed() {
        let input: String = (0..100).map(|i| minimal_line(i) + "\n").collect();
        let mut out = Vec::new();
        let s = stream_session(input.as_bytes(), &mut out, &RunConfig::default()).unwrap();
        assert_eq!(s.frames, 100);
        assert_eq!(s.errors, 0);
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 100);
    }

    #[test]
    fn session_fail_open_below_threshold() {
        let mut lines: Vec<String> = (0..100).map(minimal_line).collect();
        for i in [10, 20, 30, 40, 50] {
            lines[i] = "not json".to_string();
        }
        let input = lines.join("\n");
        let mut out = Vec::new();
        let s = stream_session(input.as_bytes(), &mut out, &RunConfig::default()).unwrap();
        assert_eq!(s.frames, 100);
        assert_eq!(s.errors, 5);
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 100);
    }

    #[test]
    fn session_aborts_above_threshold() {
        let mut lines: Vec<String> = (0..100).map(minimal_line).collect();
        for i in 0..20 {
            lines[i * 5] = "not json".to_string();
        }
        let input = lines.join("\n");
        let mut out = Vec::new();
        let err = stream_session(input.as_bytes(), &mut out, &RunConfig::default()).unwrap_err();
        match err {
            SessionError::TooManyErrors { summary } => {
                assert_eq!(summary.errors, 20);
                assert_eq!(summary.frames, 100);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn session_counts_non_monotone_as_error() {
        let mut lines: Vec<String> = (0..20).map(minimal_line).collect();
        lines.insert(6, minimal_line(5)); // repeats index 5
        let input = lines.join("\n");
        let mut out = Vec::new();
        let s = stream_session(input.as_bytes(), &mut out, &RunConfig::default()).unwrap();
        assert_eq!(s.frames, 21);
        assert_eq!(s.errors, 1);
    }
}
