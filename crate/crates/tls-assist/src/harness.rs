//! Closed-loop harness: a scripted message-following agent drives each
//! scenario, a ground-truth referee records infractions, and routes are
//! scored with route completion (RC), infraction score (IS) and driving
//! score (DS = RC * IS), averaged over routes and repetitions.

use std::collections::VecDeque;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::io::NoticeRecord;
use crate::pipeline::Pipeline;
use crate::sim::{
    corrupt, generate_scenario, ground_truth_frame, mix, EventKind, NoiseModel, Scenario, TrackClass,
};
use crate::types::{LightClass, LightState, SignClass};

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("coefficient {name} = {value} outside (0, 1]")]
    CoefficientOutOfRange { name: &'static str, value: f64 },
    #[error("reports have different shapes: {0}")]
    ShapeMismatch(String),
}

/// Deterministic scripted ego policy. It acts only on notice content,
/// never on ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentPolicy {
    /// Free-road speed, m/s.
    pub cruise_speed: f64,
    /// Ticks between receiving a notice and acting on it.
    pub reaction_latency_ticks: u32,
    /// How long the agent holds a full stop at a stop sign, seconds.
    pub stop_hold_seconds: f64,
    /// Per-tick probability of a simulated lateral fault terminating the
    /// route as a deviation. Zero by default.
    pub lateral_fault_prob: f64,
}

impl Default for AgentPolicy {
    fn default() -> Self {
        AgentPolicy {
            cruise_speed: 15.0,
            reaction_latency_ticks: 0,
            stop_hold_seconds: 2.0,
            lateral_fault_prob: 0.0,
        }
    }
}

impl AgentPolicy {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.cruise_speed <= 0.0 {
            return Err(HarnessError::NonPositive("cruise_speed"));
        }
        if self.stop_hold_seconds < 0.0 {
            return Err(HarnessError::NonPositive("stop_hold_seconds"));
        }
        if !(0.0..=1.0).contains(&self.lateral_fault_prob) {
            return Err(HarnessError::CoefficientOutOfRange {
                name: "lateral_fault_prob",
                value: self.lateral_fault_prob,
            });
        }
        Ok(())
    }
}

/// Penalty coefficients and referee thresholds. Route deviations and
/// timeouts terminate the episode (capping RC) instead of decaying IS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub red_light_coeff: f64,
    pub stop_sign_coeff: f64,
    pub speeding_coeff: f64,
    /// Whether speed-limit violations decay IS.
    pub count_speeding: bool,
    /// Fractional grace over the ground-truth limit before speeding counts.
    pub speed_grace_fraction: f64,
    /// Continuous over-limit time before one speeding infraction is logged.
    pub speed_grace_seconds: f64,
    /// A stop sign counts as served if the agent fully halted anywhere within
    /// this many meters before the sign.
    pub stop_zone_m: f64,
    pub timeout_base_s: f64,
    pub timeout_per_meter_s: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            red_light_coeff: 0.7,
            stop_sign_coeff: 0.8,
            speeding_coeff: 0.9,
            count_speeding: true,
            speed_grace_fraction: 0.1,
            speed_grace_seconds: 1.0,
            stop_zone_m: 50.0,
            timeout_base_s: 60.0,
            timeout_per_meter_s: 0.5,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        for (name, value) in [
            ("red_light_coeff", self.red_light_coeff),
            ("stop_sign_coeff", self.stop_sign_coeff),
            ("speeding_coeff", self.speeding_coeff),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(HarnessError::CoefficientOutOfRange { name, value });
            }
        }
        for (name, value) in [
            ("speed_grace_seconds", self.speed_grace_seconds),
            ("stop_zone_m", self.stop_zone_m),
            ("timeout_base_s", self.timeout_base_s),
            ("timeout_per_meter_s", self.timeout_per_meter_s),
        ] {
            if value <= 0.0 {
                return Err(HarnessError::NonPositive(name));
            }
        }
        Ok(())
    }
}

/// Infraction and termination counters for one route.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfractionLedger {
    pub red_light: u32,
    pub stop_sign: u32,
    pub speeding: u32,
    pub route_deviation: u32,
    pub timeout: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    RouteDeviation,
    Timeout,
}

/// Scores for one route. RC is a percentage, IS in (0, 1], DS on the same
/// 0-100 scale as RC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub route_completion: f64,
    pub infraction_score: f64,
    pub driving_score: f64,
    pub ledger: InfractionLedger,
    pub termination: Termination,
}

/// IS = product of coeff^count over infraction types; DS = RC * IS.
pub fn score(ledger: &InfractionLedger, rc: f64, cfg: &ScoringConfig) -> (f64, f64, f64) {
    let mut is = cfg.red_light_coeff.powi(ledger.red_light as i32)
        * cfg.stop_sign_coeff.powi(ledger.stop_sign as i32);
    if cfg.count_speeding {
        is *= cfg.speeding_coeff.powi(ledger.speeding as i32);
    }
    (rc, is, rc * is)
}

fn empty_notice() -> NoticeRecord {
    NoticeRecord {
        frame_index: 0,
        light_state: LightState::NoDetection,
        sign: SignClass::Off,
        message: String::new(),
        suppressed: true,
        diagnostics: crate::io::NoticeDiagnostics {
            weights: crate::tlr::StateWeights {
                red: 0,
                yellow: 0,
                green: 0,
                no_detection: 0,
            },
            tie_broken: false,
            degraded: false,
        },
    }
}

/// Runs one route in closed loop: per tick, ground truth is corrupted into a
/// frame record, driven through the full pipeline, and the resulting notice
/// steers the agent; the referee checks the agent against ground truth.
pub fn run_route(scenario: &Scenario, cfg: &RunConfig, noise_seed: u64) -> RouteReport {
    let noise = NoiseModel {
        seed: noise_seed,
        ..cfg.noise.clone()
    };
    let mut pipeline = Pipeline::new(cfg);
    let dt = cfg.sim.tick_seconds;
    let policy = cfg.agent;
    let scoring = cfg.scoring;
    let budget_ticks = ((scoring.timeout_base_s
        + scoring.timeout_per_meter_s * scenario.route_length)
        / dt)
        .ceil() as u64;

    let mut fault_rng = ChaCha8Rng::seed_from_u64(mix(noise_seed, 0xfau64));

    // agent state
    let mut active_limit: Option<f64> = None;
    let mut pending_limit: Option<f64> = None;
    let mut stop_served = false;
    let mut stop_hold_left = policy.stop_hold_seconds;
    let mut notice_queue: VecDeque<NoticeRecord> = VecDeque::new();
    for _ in 0..policy.reaction_latency_ticks {
        notice_queue.push_back(empty_notice());
    }

    // referee state
    let stop_signs: Vec<f64> = scenario
        .events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::Sign { class: SignClass::Stop } => Some(e.position),
            _ => None,
        })
        .collect();
    let mut stop_halted = vec![false; stop_signs.len()];
    let mut gt_limit: Option<f64> = None;
    let mut speed_streak = 0.0_f64;
    let mut speeding_active = false;

    let mut ledger = InfractionLedger::default();
    let mut pos = 0.0_f64;
    let mut t = 0.0_f64;
    let mut tick: u64 = 0;
    let termination;

    loop {
        if pos >= scenario.route_length {
            termination = Termination::Completed;
            break;
        }
        if tick >= budget_ticks {
            ledger.timeout = 1;
            termination = Termination::Timeout;
            break;
        }

        // perception
        let gt = ground_truth_frame(scenario, &cfg.sim, pos, t);
        let record = corrupt(&gt, &noise, tick, t);
        let notice = pipeline
            .process_bundle(&record.to_bundle())
            .expect("simulated streams are monotone");
        notice_queue.push_back(notice);
        let acted = notice_queue.pop_front().expect("queue is never empty");

        // agent step: structured notice content only. A lowered limit is
        // adopted on sight; a raised one only once the sign notice clears,
        // i.e. after the sign itself has been passed.
        if let Some(kmh) = acted.sign.speed_limit_kmh() {
            let limit = kmh as f64 / 3.6;
            match active_limit {
                Some(current) if limit > current => pending_limit = Some(limit),
                _ => {
                    active_limit = Some(limit);
                    pending_limit = None;
                }
            }
        } else if let Some(p) = pending_limit.take() {
            active_limit = Some(p);
        }
        if acted.sign != SignClass::Stop {
            stop_served = false;
            stop_hold_left = policy.stop_hold_seconds;
        }
        let mut speed = policy.cruise_speed;
        if let Some(limit) = active_limit {
            speed = speed.min(limit);
        }
        if acted.sign == SignClass::Stop && !stop_served {
            speed = 0.0;
            stop_hold_left -= dt;
            if stop_hold_left <= 0.0 {
                stop_served = true;
            }
        }
        if acted.light_state == LightState::Red {
            speed = 0.0;
        }

        // simulated lateral fault
        if policy.lateral_fault_prob > 0.0 && fault_rng.gen::<f64>() < policy.lateral_fault_prob {
            ledger.route_deviation = 1;
            termination = Termination::RouteDeviation;
            break;
        }

        // referee: speeding with grace, against the ground-truth limit
        if let Some(limit) = gt_limit {
            if speed > limit * (1.0 + scoring.speed_grace_fraction) {
                speed_streak += dt;
                if !speeding_active && speed_streak > scoring.speed_grace_seconds {
                    ledger.speeding += 1;
                    speeding_active = true;
                }
            } else {
                speed_streak = 0.0;
                speeding_active = false;
            }
        }

        // referee: full halts inside stop zones
        if speed < 0.01 {
            for (i, sign_pos) in stop_signs.iter().enumerate() {
                if pos > sign_pos - scoring.stop_zone_m && pos <= *sign_pos {
                    stop_halted[i] = true;
                }
            }
        }

        // movement and crossings
        let new_pos = pos + speed * dt;
        for event in &scenario.events {
            if event.position > pos && event.position <= new_pos {
                match &event.kind {
                    EventKind::Intersection { schedule } => {
                        if schedule.light_at(t) == LightClass::Red {
                            ledger.red_light += 1;
                        }
                    }
                    EventKind::Sign { class: SignClass::Stop } => {
                        let idx = stop_signs
                            .iter()
                            .position(|p| *p == event.position)
                            .expect("stop sign indexed");
                        if !stop_halted[idx] {
                            ledger.stop_sign += 1;
                        }
                    }
                    EventKind::Sign { class } => {
                        if let Some(kmh) = class.speed_limit_kmh() {
                            gt_limit = Some(kmh as f64 / 3.6);
                        }
                    }
                }
            }
        }

        pos = new_pos;
        t += dt;
        tick += 1;
    }

    let rc = (pos.min(scenario.route_length) / scenario.route_length * 100.0).clamp(0.0, 100.0);
    let (rc, is, ds) = score(&ledger, rc, &scoring);
    RouteReport {
        route_completion: rc,
        infraction_score: is,
        driving_score: ds,
        ledger,
        termination,
    }
}

/// One benchmark row: a labeled pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub config: RunConfig,
}

/// Table-III-shaped toggle matrix: detection only (D), +relevance prediction
/// (RP), +state validation (SV), and the full pipeline.
pub fn ablation_rows(base: &RunConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for (label, rp, sv) in [
        ("D+RP+SV", true, true),
        ("D+RP", true, false),
        ("D+SV", false, true),
        ("D", false, false),
    ] {
        let mut cfg = base.clone();
        cfg.modules.enable_tlr = true;
        cfg.modules.enable_tsr = true;
        cfg.tlr.enable_rp = rp;
        cfg.tlr.enable_sv = sv;
        rows.push(BenchRow {
            label: label.to_string(),
            config: cfg,
        });
    }
    rows
}

/// Table-II-shaped module matrix: no messages at all, lights only, signs
/// only, and the combined layer.
pub fn module_rows(base: &RunConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for (label, tlr, tsr) in [
        ("baseline", false, false),
        ("+TLR-only", true, false),
        ("+TSR-only", false, true),
        ("+TLS-Assist", true, true),
    ] {
        let mut cfg = base.clone();
        cfg.modules.enable_tlr = tlr;
        cfg.modules.enable_tsr = tsr;
        rows.push(BenchRow {
            label: label.to_string(),
            config: cfg,
        });
    }
    rows
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub ds: f64,
    pub rc: f64,
    pub is: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InfractionMeans {
    pub red_light: f64,
    pub stop_sign: f64,
    pub speeding: f64,
    pub route_deviation: f64,
    pub timeout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub track: TrackClass,
    pub routes: usize,
    pub metrics: MetricMeans,
    pub infractions: InfractionMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub label: String,
    pub tracks: Vec<TrackReport>,
    pub overall: MetricMeans,
    pub overall_infractions: InfractionMeans,
}

/// Benchmark reproduction metadata: everything needed to re-run the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub master_seed: u64,
    pub tracks: Vec<TrackClass>,
    pub routes_per_track: usize,
    pub repetitions: usize,
    pub row_labels: Vec<String>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub manifest: BenchManifest,
    pub rows: Vec<RowReport>,
}

/// Benchmark execution request.
#[derive(Debug, Clone)]
pub struct BenchRequest {
    pub rows: Vec<BenchRow>,
    pub tracks: Vec<TrackClass>,
    pub routes_per_track: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    pub jobs: usize,
}

fn scenario_seed(master: u64, track_idx: usize, route: usize) -> u64 {
    mix(master, ((track_idx as u64) << 32) | route as u64)
}

fn noise_seed(master: u64, track_idx: usize, route: usize, rep: usize) -> u64 {
    mix(
        master,
        0x4e0u64 ^ (((track_idx as u64) << 40) | ((route as u64) << 8) | rep as u64),
    )
}

fn mean<I: Iterator<Item = f64>>(iter: I) -> f64 {
    let (sum, n) = iter.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn metric_means(reports: &[&RouteReport]) -> MetricMeans {
    MetricMeans {
        ds: mean(reports.iter().map(|r| r.driving_score)),
        rc: mean(reports.iter().map(|r| r.route_completion)),
        is: mean(reports.iter().map(|r| r.infraction_score)),
    }
}

fn infraction_means(reports: &[&RouteReport]) -> InfractionMeans {
    InfractionMeans {
        red_light: mean(reports.iter().map(|r| r.ledger.red_light as f64)),
        stop_sign: mean(reports.iter().map(|r| r.ledger.stop_sign as f64)),
        speeding: mean(reports.iter().map(|r| r.ledger.speeding as f64)),
        route_deviation: mean(reports.iter().map(|r| r.ledger.route_deviation as f64)),
        timeout: mean(reports.iter().map(|r| r.ledger.timeout as f64)),
    }
}

/// Runs the cross product of rows x tracks x routes x repetitions. Scenarios
/// and noise seeds are shared across rows so configurations are compared on
/// identical worlds. Output is canonical regardless of the job count.
pub fn run_benchmark(req: &BenchRequest) -> BenchmarkReport {
    let base_cfg = req
        .rows
        .first()
        .map(|r| r.config.clone())
        .unwrap_or_default();

    // scenarios are shared by all rows and repetitions
    let scenarios: Vec<Vec<Scenario>> = req
        .tracks
        .iter()
        .enumerate()
        .map(|(t_idx, track)| {
            (0..req.routes_per_track)
                .map(|i| generate_scenario(*track, scenario_seed(req.master_seed, t_idx, i), &base_cfg.sim))
                .collect()
        })
        .collect();

    struct Task {
        row: usize,
        track: usize,
        route: usize,
        rep: usize,
    }
    let mut tasks = Vec::new();
    for row in 0..req.rows.len() {
        for track in 0..req.tracks.len() {
            for route in 0..req.routes_per_track {
                for rep in 0..req.repetitions {
                    tasks.push(Task {
                        row,
                        track,
                        route,
                        rep,
                    });
                }
            }
        }
    }

    let results: Vec<RouteReport> = {
        let slots: Mutex<Vec<Option<RouteReport>>> = Mutex::new(vec![None; tasks.len()]);
        let jobs = req.jobs.max(1);
        std::thread::scope(|scope| {
            for worker in 0..jobs {
                let tasks = &tasks;
                let rows = &req.rows;
                let scenarios = &scenarios;
                let slots = &slots;
                let master = req.master_seed;
                scope.spawn(move || {
                    for (idx, task) in tasks.iter().enumerate() {
                        if idx % jobs != worker {
                            continue;
                        }
                        let scenario = &scenarios[task.track][task.route];
                        let seed = noise_seed(master, task.track, task.route, task.rep);
                        let report = run_route(scenario, &rows[task.row].config, seed);
                        slots.lock().unwrap()[idx] = Some(report);
                    }
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("all tasks completed"))
            .collect()
    };

    let report_for = |row: usize, track: usize| -> Vec<&RouteReport> {
        tasks
            .iter()
            .zip(&results)
            .filter(|(t, _)| t.row == row && t.track == track)
            .map(|(_, r)| r)
            .collect()
    };

    let mut rows_out = Vec::new();
    for (row_idx, row) in req.rows.iter().enumerate() {
        let mut track_reports = Vec::new();
        let mut all: Vec<&RouteReport> = Vec::new();
        for (track_idx, track) in req.tracks.iter().enumerate() {
            let reports = report_for(row_idx, track_idx);
            track_reports.push(TrackReport {
                track: *track,
                routes: reports.len(),
                metrics: metric_means(&reports),
                infractions: infraction_means(&reports),
            });
            all.extend(reports);
        }
        rows_out.push(RowReport {
            label: row.label.clone(),
            tracks: track_reports,
            overall: metric_means(&all),
            overall_infractions: infraction_means(&all),
        });
    }

    BenchmarkReport {
        manifest: BenchManifest {
            master_seed: req.master_seed,
            tracks: req.tracks.clone(),
            routes_per_track: req.routes_per_track,
            repetitions: req.repetitions,
            row_labels: req.rows.iter().map(|r| r.label.clone()).collect(),
            config: base_cfg,
        },
        rows: rows_out,
    }
}

/// Relative change in percent; undefined for a zero baseline.
pub fn percent_change(baseline: f64, value: f64) -> Option<f64> {
    if baseline == 0.0 {
        None
    } else {
        Some((value - baseline) / baseline * 100.0)
    }
}

/// Formats a percent change in the infraction-table convention, e.g. "-13%".
pub fn format_percent(p: Option<f64>) -> String {
    match p {
        Some(p) => {
            let rounded = p.round();
            if rounded >= 0.0 {
                format!("+{rounded:.0}%")
            } else {
                format!("{rounded:.0}%")
            }
        }
        None => "n/a".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub metric: String,
    pub baseline: f64,
    pub value: f64,
    pub absolute: f64,
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDelta {
    pub label: String,
    pub deltas: Vec<Delta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub rows: Vec<RowDelta>,
}

fn delta(metric: &str, baseline: f64, value: f64) -> Delta {
    Delta {
        metric: metric.to_string(),
        baseline,
        value,
        absolute: value - baseline,
        percent: percent_change(baseline, value),
    }
}

/// Per-metric absolute and percent deltas between two same-shaped reports.
pub fn compare(a: &BenchmarkReport, b: &BenchmarkReport) -> Result<DeltaTable, HarnessError> {
    let labels_a: Vec<&str> = a.rows.iter().map(|r| r.label.as_str()).collect();
    let labels_b: Vec<&str> = b.rows.iter().map(|r| r.label.as_str()).collect();
    if labels_a != labels_b {
        return Err(HarnessError::ShapeMismatch(format!(
            "row labels {labels_a:?} vs {labels_b:?}"
        )));
    }
    if a.manifest.tracks != b.manifest.tracks {
        return Err(HarnessError::ShapeMismatch("track sets differ".into()));
    }
    let mut rows = Vec::new();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let deltas = vec![
            delta("ds", ra.overall.ds, rb.overall.ds),
            delta("rc", ra.overall.rc, rb.overall.rc),
            delta("is", ra.overall.is, rb.overall.is),
            delta("red_light", ra.overall_infractions.red_light, rb.overall_infractions.red_light),
            delta("stop_sign", ra.overall_infractions.stop_sign, rb.overall_infractions.stop_sign),
            delta("speeding", ra.overall_infractions.speeding, rb.overall_infractions.speeding),
            delta(
                "route_deviation",
                ra.overall_infractions.route_deviation,
                rb.overall_infractions.route_deviation,
            ),
            delta("timeout", ra.overall_infractions.timeout, rb.overall_infractions.timeout),
        ];
        rows.push(RowDelta {
            label: ra.label.clone(),
            deltas,
        });
    }
    Ok(DeltaTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_product_examples() {
        let cfg = ScoringConfig::default();
        let ledger = InfractionLedger::default();
        let (_, is, ds) = score(&ledger, 100.0, &cfg);
        assert_eq!(is, 1.0);
        assert_eq!(ds, 100.0);

        let ledger = InfractionLedger {
            red_light: 2,
            ..InfractionLedger::default()
        };
        let (_, is, _) = score(&ledger, 100.0, &cfg);
        assert!((is - 0.49).abs() < 1e-12);

        // RC = 50, IS = 0.8 -> DS = 40
        let ledger = InfractionLedger {
            stop_sign: 1,
            ..InfractionLedger::default()
        };
        let (_, is, ds) = score(&ledger, 50.0, &cfg);
        assert!((is - 0.8).abs() < 1e-12);
        assert!((ds - 40.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_compliant_route_is_clean() {
        let mut cfg = RunConfig::default();
        cfg.noise = NoiseModel::none();
        let scenario = generate_scenario(TrackClass::Tiny, 11, &cfg.sim);
        let report = run_route(&scenario, &cfg, 123);
        assert_eq!(report.ledger, InfractionLedger::default());
        assert_eq!(report.termination, Termination::Completed);
        assert_eq!(report.route_completion, 100.0);
        assert_eq!(report.infraction_score, 1.0);
        assert_eq!(report.driving_score, 100.0);
    }

    #[test]
    fn blind_agent_runs_red_phase_crossings() {
        // total dropout: the pipeline is blind and the agent never stops
        let mut cfg = RunConfig::default();
        cfg.noise.dropout_prob = 1.0;
        let scenario = generate_scenario(TrackClass::Short, 21, &cfg.sim);
        let report = run_route(&scenario, &cfg, 5);

        // oracle: at constant cruise speed the crossing time of each
        // intersection is position / v; count the red-phase ones
        let v = cfg.agent.cruise_speed;
        let dt = cfg.sim.tick_seconds;
        let mut expected = 0;
        for e in &scenario.events {
            if let EventKind::Intersection { schedule } = &e.kind {
                // the tick whose movement crosses the event
                let tick = (e.position / (v * dt)).ceil() as u64 - 1;
                if schedule.light_at(tick as f64 * dt) == LightClass::Red {
                    expected += 1;
                }
            }
        }
        assert_eq!(report.ledger.red_light, expected);
    }

    #[test]
    fn route_report_identity_holds() {
        let cfg = RunConfig::default();
        let scenario = generate_scenario(TrackClass::Short, 3, &cfg.sim);
        let r = run_route(&scenario, &cfg, 9);
        assert!((r.driving_score - r.route_completion * r.infraction_score).abs() < 1e-9);
        assert!(r.route_completion >= 0.0 && r.route_completion <= 100.0);
        assert!(r.infraction_score > 0.0 && r.infraction_score <= 1.0);
    }

    #[test]
    fn run_route_is_deterministic() {
        let cfg = RunConfig::default();
        let scenario = generate_scenario(TrackClass::Short, 3, &cfg.sim);
        assert_eq!(run_route(&scenario, &cfg, 9), run_route(&scenario, &cfg, 9));
    }

    #[test]
    fn benchmark_mean_and_shape() {
        let cfg = RunConfig::default();
        let req = BenchRequest {
            rows: ablation_rows(&cfg),
            tracks: vec![TrackClass::Tiny],
            routes_per_track: 2,
            repetitions: 3,
            master_seed: 7,
            jobs: 1,
        };
        let report = run_benchmark(&req);
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.rows[0].label, "D+RP+SV");
        assert_eq!(report.rows[3].label, "D");
        assert_eq!(report.rows[0].tracks[0].routes, 6); // 2 routes x 3 reps
    }

    #[test]
    fn benchmark_parallel_matches_serial() {
        let cfg = RunConfig::default();
        let mut req = BenchRequest {
            rows: module_rows(&cfg),
            tracks: vec![TrackClass::Tiny],
            routes_per_track: 2,
            repetitions: 1,
            master_seed: 3,
            jobs: 1,
        };
        let serial = run_benchmark(&req);
        req.jobs = 4;
        let parallel = run_benchmark(&req);
        assert_eq!(
            serde_json::to_string(&serial).unwrap(),
            serde_json::to_string(&parallel).unwrap()
        );
    }

    #[test]
    fn compare_matches_infraction_table_convention() {
        assert_eq!(format_percent(percent_change(5.86, 5.11)), "-13%");
        assert_eq!(format_percent(percent_change(3.23, 3.50)), "+8%");
        assert_eq!(format_percent(percent_change(1.0, 1.0)), "+0%");
        assert_eq!(format_percent(percent_change(0.0, 1.0)), "n/a");
    }

    #[test]
    fn compare_rejects_shape_mismatch() {
        let cfg = RunConfig::default();
        let req_a = BenchRequest {
            rows: ablation_rows(&cfg),
            tracks: vec![TrackClass::Tiny],
            routes_per_track: 1,
            repetitions: 1,
            master_seed: 1,
            jobs: 1,
        };
        let req_b = BenchRequest {
            rows: module_rows(&cfg),
            ..req_a.clone()
        };
        let a = run_benchmark(&req_a);
        let b = run_benchmark(&req_b);
        assert!(compare(&a, &b).is_err());
        let table = compare(&a, &a).unwrap();
        assert!(table.rows.iter().all(|r| r.deltas.iter().all(|d| d.absolute == 0.0)));
    }
}
