//! Seeded Monte Carlo of the delayed-choice protocol.
//!
//! Each photon is one trial: a random bit picks the open or closed
//! configuration, then the detector is sampled from the single-photon
//! detection probabilities of that configuration at the current phase.
//!
//! Seeding: trial `k` of a sweep uses `master_seed ^ splitmix64(k)` as the seed
//! of its own ChaCha8 stream, so any trial can be regenerated alone and the
//! record stream does not depend on how trials are scheduled across threads.
//! Each trial draws two 64-bit words: the top bit of the first is the
//! configuration bit, the top 53 bits of the second give a uniform `u` in
//! `[0, 1)` and the photon goes to D1 when `u < p(D1)`.
//!
//! Times are kept as integer picoseconds; nanosecond inputs are rounded to the
//! nearest picosecond, halves away from zero.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{elaborate, CircuitDescription, DslError, ElaborationConfig};
use crate::mode_algebra::{
    apply, detection_probs, mzi_closed_coeffs, mzi_open_transfer, AlgebraError, BeamSplitterSpec,
    Mode, OpticalState, PhasePair, TransferMatrix,
};

/// Vacuum speed of light in m/ns.
pub const SPEED_OF_LIGHT_M_PER_NS: f64 = 0.299_792_458;

/// Relative slack on `length / time_of_flight <= c`; the flight time is a rounded figure.
pub const TRANSIT_SLACK: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
    #[error("circuit unsuitable for the experiment: {0}")]
    Circuit(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Round nanoseconds to integer picoseconds.
pub fn ns_to_ps(ns: f64) -> i64 {
    (ns * 1000.0).round() as i64
}

pub fn ps_to_ns(ps: i64) -> f64 {
    ps as f64 / 1000.0
}

/// Geometry and timing of one photon's passage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TimelineRepr", into = "TimelineRepr")]
pub struct TimelineParams {
    length_m: f64,
    time_of_flight_ps: i64,
    electronic_delay_ps: i64,
    switch_duration_ps: i64,
    speed_of_light: f64,
}

#[derive(Serialize, Deserialize)]
struct TimelineRepr {
    interferometer_length_m: f64,
    time_of_flight_ns: f64,
    electronic_delay_ns: f64,
    switch_duration_ns: f64,
    speed_of_light_m_per_ns: f64,
}

impl TryFrom<TimelineRepr> for TimelineParams {
    type Error = ExperimentError;

    fn try_from(r: TimelineRepr) -> Result<Self, Self::Error> {
        TimelineParams::new(
            r.interferometer_length_m,
            r.time_of_flight_ns,
            r.electronic_delay_ns,
            r.switch_duration_ns,
        )?
        .with_speed_of_light(r.speed_of_light_m_per_ns)
    }
}

impl From<TimelineParams> for TimelineRepr {
    fn from(t: TimelineParams) -> Self {
        TimelineRepr {
            interferometer_length_m: t.length_m,
            time_of_flight_ns: t.time_of_flight_ns(),
            electronic_delay_ns: t.electronic_delay_ns(),
            switch_duration_ns: t.switch_duration_ns(),
            speed_of_light_m_per_ns: t.speed_of_light,
        }
    }
}

impl Default for TimelineParams {
    /// 48 m arm, 160 ns flight, 80 ns electronic delay, 40 ns switching.
    fn default() -> Self {
        TimelineParams::new(48.0, 160.0, 80.0, 40.0).expect("default timeline is valid")
    }
}

impl TimelineParams {
    pub fn new(
        length_m: f64,
        time_of_flight_ns: f64,
        electronic_delay_ns: f64,
        switch_duration_ns: f64,
    ) -> Result<Self, ExperimentError> {
        for (name, v) in [
            ("interferometer length", length_m),
            ("time of flight", time_of_flight_ns),
            ("electronic delay", electronic_delay_ns),
            ("switch duration", switch_duration_ns),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(ExperimentError::InvalidTimeline(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        let t = TimelineParams {
            length_m,
            time_of_flight_ps: ns_to_ps(time_of_flight_ns),
            electronic_delay_ps: ns_to_ps(electronic_delay_ns),
            switch_duration_ps: ns_to_ps(switch_duration_ns),
            speed_of_light: SPEED_OF_LIGHT_M_PER_NS,
        };
        t.check_transit()?;
        Ok(t)
    }

    pub fn with_speed_of_light(mut self, m_per_ns: f64) -> Result<Self, ExperimentError> {
        if !m_per_ns.is_finite() || m_per_ns <= 0.0 {
            return Err(ExperimentError::InvalidTimeline(format!(
                "speed of light must be positive, got {m_per_ns}"
            )));
        }
        self.speed_of_light = m_per_ns;
        self.check_transit()?;
        Ok(self)
    }

    fn check_transit(&self) -> Result<(), ExperimentError> {
        let limit = self.speed_of_light * (1.0 + TRANSIT_SLACK) * self.time_of_flight_ns();
        if self.length_m > limit {
            return Err(ExperimentError::InvalidTimeline(format!(
                "{} m cannot be crossed in {} ns",
                self.length_m,
                self.time_of_flight_ns()
            )));
        }
        Ok(())
    }

    pub fn interferometer_length_m(&self) -> f64 {
        self.length_m
    }

    pub fn time_of_flight_ps(&self) -> i64 {
        self.time_of_flight_ps
    }

    pub fn time_of_flight_ns(&self) -> f64 {
        ps_to_ns(self.time_of_flight_ps)
    }

    pub fn electronic_delay_ns(&self) -> f64 {
        ps_to_ns(self.electronic_delay_ps)
    }

    pub fn switch_duration_ns(&self) -> f64 {
        ps_to_ns(self.switch_duration_ps)
    }

    pub fn speed_of_light_m_per_ns(&self) -> f64 {
        self.speed_of_light
    }
}

/// Outcome of the causal-separation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacelikeReport {
    /// The photon's entry and the completed choice cannot be causally connected.
    pub spacelike: bool,
    /// Interferometer length minus the light travel distance during the choice.
    pub margin_m: f64,
    pub choice_complete_ps: i64,
    /// The choice is complete before the photon leaves the interferometer.
    pub in_flight: bool,
}

impl SpacelikeReport {
    pub fn choice_complete_time_ns(&self) -> f64 {
        ps_to_ns(self.choice_complete_ps)
    }
}

/// Compare the choice completion time with the light-travel time over the
/// interferometer length, both measured from the photon's entry.
pub fn spacelike_check(params: &TimelineParams) -> SpacelikeReport {
    let choice_ps = params.electronic_delay_ps + params.switch_duration_ps;
    let light_m = params.speed_of_light * ps_to_ns(choice_ps);
    SpacelikeReport {
        spacelike: params.length_m > light_m,
        margin_m: params.length_m - light_m,
        choice_complete_ps: choice_ps,
        in_flight: choice_ps < params.time_of_flight_ps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Closed,
    Open,
}

impl Configuration {
    /// Random bit 1 closes the interferometer, 0 opens it.
    pub fn from_bit(bit: u64) -> Self {
        if bit & 1 == 1 {
            Configuration::Closed
        } else {
            Configuration::Open
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Configuration::Closed => "closed",
            Configuration::Open => "open",
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigPolicy {
    FixedOpen,
    FixedClosed,
    /// Per-photon uniform random bit.
    #[serde(alias = "qrng-random")]
    Random,
}

impl FromStr for ConfigPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed-open" => Ok(ConfigPolicy::FixedOpen),
            "fixed-closed" => Ok(ConfigPolicy::FixedClosed),
            "random" | "qrng-random" => Ok(ConfigPolicy::Random),
            other => Err(format!(
                "unknown policy `{other}` (expected fixed-open, fixed-closed or random)"
            )),
        }
    }
}

/// One photon, as written to the event log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub config: Configuration,
    pub phase_index: u32,
    pub phase_setting: f64,
    pub detector: Detector,
    /// Nanoseconds after the photon entered.
    pub choice_complete_time: f64,
    pub spacelike: bool,
    pub rng_seed: u64,
}

/// Open and closed transfer matrices at one phase setting, with the photon
/// source and the two detector modes resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationPair {
    closed: TransferMatrix,
    open: TransferMatrix,
    closed_d1: f64,
    open_d1: f64,
}

fn d1_probability(
    matrix: &TransferMatrix,
    source: &Mode,
    detectors: [&Mode; 2],
) -> Result<f64, ExperimentError> {
    let idx = matrix
        .input_index(source)
        .ok_or_else(|| ExperimentError::Circuit(format!("source mode `{source}` is not an input")))?;
    let psi = OpticalState::single_photon(matrix.input_modes().to_vec(), idx)?;
    let probs = detection_probs(&apply(matrix, &psi)?)?;
    let mut out = [0.0; 2];
    for (k, d) in detectors.iter().enumerate() {
        let i = matrix.output_index(d).ok_or_else(|| {
            ExperimentError::Circuit(format!("detector mode `{d}` is not an output"))
        })?;
        out[k] = probs[i];
    }
    if (out[0] + out[1] - 1.0).abs() > 1e-9 {
        return Err(ExperimentError::Circuit(format!(
            "detectors collect only {} of the photon probability",
            out[0] + out[1]
        )));
    }
    Ok(out[0])
}

impl ConfigurationPair {
    pub fn new(
        closed: TransferMatrix,
        open: TransferMatrix,
        source: &Mode,
        closed_detectors: [&Mode; 2],
        open_detectors: [&Mode; 2],
    ) -> Result<Self, ExperimentError> {
        let closed_d1 = d1_probability(&closed, source, closed_detectors)?;
        let open_d1 = d1_probability(&open, source, open_detectors)?;
        Ok(ConfigurationPair {
            closed,
            open,
            closed_d1,
            open_d1,
        })
    }

    /// Built-in interferometer; detectors D1/D2 sit on `c1`/`c2` and `o1`/`o2`.
    pub fn mzi(spec: &BeamSplitterSpec, phases: &PhasePair) -> Self {
        let closed = mzi_closed_coeffs(spec, phases).transfer();
        let open = mzi_open_transfer(spec);
        let (b, c1, c2, o1, o2) = (
            Mode::from("b"),
            Mode::from("c1"),
            Mode::from("c2"),
            Mode::from("o1"),
            Mode::from("o2"),
        );
        Self::new(closed, open, &b, [&c1, &c2], [&o1, &o2])
            .expect("built-in interferometer has both detectors on its outputs")
    }

    pub fn matrix(&self, config: Configuration) -> &TransferMatrix {
        match config {
            Configuration::Closed => &self.closed,
            Configuration::Open => &self.open,
        }
    }

    /// Probability that the photon lands on D1 in `config`.
    pub fn d1_probability(&self, config: Configuration) -> f64 {
        match config {
            Configuration::Closed => self.closed_d1,
            Configuration::Open => self.open_d1,
        }
    }
}

/// Source of configuration pairs along a phase sweep.
pub trait PhaseModel: Sync {
    fn configurations(&self, phase: f64) -> Result<ConfigurationPair, ExperimentError>;
}

/// Built-in interferometer with `phi_e = phase`, `phi_f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinMzi {
    pub spec: BeamSplitterSpec,
}

impl PhaseModel for BuiltinMzi {
    fn configurations(&self, phase: f64) -> Result<ConfigurationPair, ExperimentError> {
        Ok(ConfigurationPair::mzi(&self.spec, &PhasePair::new(phase, 0.0)))
    }
}

/// A parsed circuit swept over one of its parameters.
///
/// Closed means every removable element on, open means all of them off. The
/// circuit must have exactly two outputs, bound to detectors `D1` and `D2`.
#[derive(Debug, Clone)]
pub struct CircuitModel {
    desc: CircuitDescription,
    fixed: ElaborationConfig,
    sweep_param: String,
    d1: Mode,
    d2: Mode,
}

impl CircuitModel {
    pub fn new(
        desc: CircuitDescription,
        fixed_params: &[(String, f64)],
        sweep_param: &str,
    ) -> Result<Self, ExperimentError> {
        if desc.param(sweep_param).is_none() {
            return Err(ExperimentError::Circuit(format!(
                "circuit has no parameter `{sweep_param}` to sweep"
            )));
        }
        if desc.removable_elements().is_empty() {
            return Err(ExperimentError::Circuit(
                "circuit has no removable element to switch".into(),
            ));
        }
        let d1 = desc
            .detector_mode("D1")
            .cloned()
            .ok_or_else(|| ExperimentError::Circuit("no detector named D1".into()))?;
        let d2 = desc
            .detector_mode("D2")
            .cloned()
            .ok_or_else(|| ExperimentError::Circuit("no detector named D2".into()))?;
        if desc.outputs().len() != 2 {
            return Err(ExperimentError::Circuit(format!(
                "expected 2 output modes, found {}",
                desc.outputs().len()
            )));
        }
        let mut fixed = ElaborationConfig::new();
        for (name, value) in fixed_params {
            if name == sweep_param {
                return Err(ExperimentError::Circuit(format!(
                    "`{name}` is swept and cannot also be fixed"
                )));
            }
            fixed = fixed.with_param(name, *value);
        }
        let model = CircuitModel {
            desc,
            fixed,
            sweep_param: sweep_param.to_owned(),
            d1,
            d2,
        };
        // surface binding errors before any trial runs
        model.configurations(0.0)?;
        Ok(model)
    }

    pub fn description(&self) -> &CircuitDescription {
        &self.desc
    }

    pub fn sweep_param(&self) -> &str {
        &self.sweep_param
    }

    fn config(&self, phase: f64, on: bool) -> ElaborationConfig {
        let mut cfg = self.fixed.clone().with_param(&self.sweep_param, phase);
        for name in self.desc.removable_elements() {
            cfg = cfg.with_removable(name, on);
        }
        cfg
    }
}

impl PhaseModel for CircuitModel {
    fn configurations(&self, phase: f64) -> Result<ConfigurationPair, ExperimentError> {
        let closed = elaborate(&self.desc, &self.config(phase, true))?;
        let open = elaborate(&self.desc, &self.config(phase, false))?;
        let dets = [&self.d1, &self.d2];
        ConfigurationPair::new(closed, open, self.desc.source_mode(), dets, dets)
    }
}

/// SplitMix64 finalizer over `x + golden gamma`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, trial_id: u64) -> u64 {
    master_seed ^ splitmix64(trial_id)
}

/// Everything a trial needs besides its id and seed.
#[derive(Debug, Clone, Copy)]
pub struct TrialContext<'a> {
    pub pair: &'a ConfigurationPair,
    pub phase_index: u32,
    pub phase: f64,
    pub policy: ConfigPolicy,
    pub timing: &'a SpacelikeReport,
}

pub fn run_trial(ctx: &TrialContext<'_>, trial_id: u64, master_seed: u64) -> TrialRecord {
    let seed = trial_seed(master_seed, trial_id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bit = rng.next_u64() >> 63;
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let config = match ctx.policy {
        ConfigPolicy::FixedOpen => Configuration::Open,
        ConfigPolicy::FixedClosed => Configuration::Closed,
        ConfigPolicy::Random => Configuration::from_bit(bit),
    };
    let detector = if u < ctx.pair.d1_probability(config) {
        Detector::D1
    } else {
        Detector::D2
    };
    TrialRecord {
        trial_id,
        config,
        phase_index: ctx.phase_index,
        phase_setting: ctx.phase,
        detector,
        choice_complete_time: ctx.timing.choice_complete_time_ns(),
        spacelike: ctx.timing.spacelike,
        rng_seed: seed,
    }
}

/// Phase grid, trials per point, configuration policy and master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub phase_start: f64,
    pub phase_stop: f64,
    pub steps: u32,
    pub trials_per_point: u64,
    pub policy: ConfigPolicy,
    pub master_seed: u64,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.steps < 1 {
            return Err(ExperimentError::InvalidPlan("steps ≥ 1".into()));
        }
        if self.trials_per_point < 1 {
            return Err(ExperimentError::InvalidPlan("trials ≥ 1".into()));
        }
        if !self.phase_start.is_finite() || !self.phase_stop.is_finite() {
            return Err(ExperimentError::InvalidPlan("phase bounds must be finite".into()));
        }
        if (self.steps as u64).checked_mul(self.trials_per_point).is_none() {
            return Err(ExperimentError::InvalidPlan("too many trials".into()));
        }
        Ok(())
    }

    /// `steps` evenly spaced phases from start to stop inclusive.
    pub fn phases(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.phase_start];
        }
        let span = self.phase_stop - self.phase_start;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.phase_start + span * i as f64 / last)
            .collect()
    }

    pub fn total_trials(&self) -> u64 {
        self.steps as u64 * self.trials_per_point
    }
}

/// Lazily generated record stream, one phase point at a time.
///
/// Trials inside a point run on the rayon pool and are merged in `trial_id`
/// order.
pub struct Sweep {
    plan: SweepPlan,
    phases: Vec<f64>,
    pairs: Vec<ConfigurationPair>,
    timing: SpacelikeReport,
    next_point: usize,
    chunk: std::vec::IntoIter<TrialRecord>,
}

impl Sweep {
    pub fn pairs(&self) -> &[ConfigurationPair] {
        &self.pairs
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn timing(&self) -> &SpacelikeReport {
        &self.timing
    }

    fn fill(&mut self) -> bool {
        if self.next_point >= self.phases.len() {
            return false;
        }
        let i = self.next_point;
        self.next_point += 1;
        let ctx = TrialContext {
            pair: &self.pairs[i],
            phase_index: i as u32,
            phase: self.phases[i],
            policy: self.plan.policy,
            timing: &self.timing,
        };
        let n = self.plan.trials_per_point;
        let base = i as u64 * n;
        let seed = self.plan.master_seed;
        let records: Vec<TrialRecord> = (0..n)
            .into_par_iter()
            .map(|k| run_trial(&ctx, base + k, seed))
            .collect();
        self.chunk = records.into_iter();
        true
    }
}

impl Iterator for Sweep {
    type Item = TrialRecord;

    fn next(&mut self) -> Option<TrialRecord> {
        loop {
            if let Some(r) = self.chunk.next() {
                return Some(r);
            }
            if !self.fill() {
                return None;
            }
        }
    }
}

/// Prepare a sweep; every phase point is elaborated before the first trial.
pub fn run_sweep(
    plan: &SweepPlan,
    model: &dyn PhaseModel,
    timeline: &TimelineParams,
) -> Result<Sweep, ExperimentError> {
    plan.validate()?;
    let phases = plan.phases();
    let pairs = phases
        .iter()
        .map(|&p| model.configurations(p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sweep {
        plan: *plan,
        phases,
        pairs,
        timing: spacelike_check(timeline),
        next_point: 0,
        chunk: Vec::new().into_iter(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_timeline_is_spacelike() {
        let r = spacelike_check(&TimelineParams::default());
        assert!(r.spacelike);
        assert!(r.in_flight);
        assert_eq!(r.choice_complete_ps, 120_000);
        assert_eq!(r.choice_complete_time_ns(), 120.0);
        // 48 - 0.299792458 * 120
        assert!((r.margin_m - 12.024_905_04).abs() < 1e-9);
    }

    #[test]
    fn late_choice_is_not_in_flight() {
        let t = TimelineParams::new(48.0, 160.0, 200.0, 40.0).unwrap();
        let r = spacelike_check(&t);
        assert!(!r.in_flight);
        assert!(!r.spacelike);
    }

    #[test]
    fn zero_length_is_timelike() {
        let t = TimelineParams::new(0.0, 160.0, 80.0, 40.0).unwrap();
        assert!(!spacelike_check(&t).spacelike);
        let t = TimelineParams::new(0.0, 160.0, 0.0, 0.0).unwrap();
        assert!(!spacelike_check(&t).spacelike);
    }

    #[test]
    fn timeline_validation() {
        assert!(TimelineParams::new(-1.0, 160.0, 80.0, 40.0).is_err());
        assert!(TimelineParams::new(48.0, 160.0, f64::NAN, 40.0).is_err());
        // far faster than light
        assert!(TimelineParams::new(480.0, 160.0, 80.0, 40.0).is_err());
        assert!(TimelineParams::default().with_speed_of_light(0.0).is_err());
    }

    #[test]
    fn picosecond_rounding() {
        assert_eq!(ns_to_ps(0.0005), 1);
        assert_eq!(ns_to_ps(0.0004), 0);
        assert_eq!(ns_to_ps(160.0), 160_000);
    }

    #[test]
    fn timeline_serde_round_trip() {
        let t = TimelineParams::new(48.0, 160.0, 80.5, 40.0).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"electronic_delay_ns\":80.5"));
        let back: TimelineParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        let bad = json.replace("80.5", "-3");
        assert!(serde_json::from_str::<TimelineParams>(&bad).is_err());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("random".parse::<ConfigPolicy>(), Ok(ConfigPolicy::Random));
        assert_eq!("qrng-random".parse::<ConfigPolicy>(), Ok(ConfigPolicy::Random));
        assert_eq!("fixed-open".parse::<ConfigPolicy>(), Ok(ConfigPolicy::FixedOpen));
        assert!("sometimes".parse::<ConfigPolicy>().is_err());
    }

    #[test]
    fn record_json_keys() {
        let pair = ConfigurationPair::mzi(&BeamSplitterSpec::balanced(), &PhasePair::default());
        let timing = spacelike_check(&TimelineParams::default());
        let ctx = TrialContext {
            pair: &pair,
            phase_index: 3,
            phase: 0.5,
            policy: ConfigPolicy::FixedOpen,
            timing: &timing,
        };
        let rec = run_trial(&ctx, 7, 42);
        let v: serde_json::Value = serde_json::to_value(rec).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            [
                "choice_complete_time",
                "config",
                "detector",
                "phase_index",
                "phase_setting",
                "rng_seed",
                "spacelike",
                "trial_id"
            ]
        );
        assert_eq!(v["config"], "open");
        assert_eq!(rec.rng_seed, 42 ^ splitmix64(7));
        assert_eq!(run_trial(&ctx, 7, 42), rec);
    }

    #[test]
    fn closed_balanced_zero_phase_always_hits_d2() {
        let pair = ConfigurationPair::mzi(&BeamSplitterSpec::balanced(), &PhasePair::default());
        let timing = spacelike_check(&TimelineParams::default());
        let ctx = TrialContext {
            pair: &pair,
            phase_index: 0,
            phase: 0.0,
            policy: ConfigPolicy::FixedClosed,
            timing: &timing,
        };
        for id in 0..2000 {
            assert_eq!(run_trial(&ctx, id, 99).detector, Detector::D2);
        }
    }

    #[test]
    fn sweep_shape_and_ids() {
        let plan = SweepPlan {
            phase_start: 0.0,
            phase_stop: 1.0,
            steps: 1,
            trials_per_point: 1,
            policy: ConfigPolicy::Random,
            master_seed: 5,
        };
        let model = BuiltinMzi {
            spec: BeamSplitterSpec::balanced(),
        };
        let records: Vec<_> = run_sweep(&plan, &model, &TimelineParams::default())
            .unwrap()
            .collect();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].trial_id, 0);

        let plan = SweepPlan {
            steps: 3,
            trials_per_point: 4,
            ..plan
        };
        let records: Vec<_> = run_sweep(&plan, &model, &TimelineParams::default())
            .unwrap()
            .collect();
        let ids: Vec<u64> = records.iter().map(|r| r.trial_id).collect();
        assert_eq!(ids, (0..12).collect::<Vec<_>>());
        assert_eq!(records[5].phase_index, 1);
        assert_eq!(records[5].phase_setting, 0.5);
    }

    #[test]
    fn invalid_plans() {
        let plan = SweepPlan {
            phase_start: 0.0,
            phase_stop: 1.0,
            steps: 0,
            trials_per_point: 1,
            policy: ConfigPolicy::Random,
            master_seed: 5,
        };
        assert!(plan.validate().is_err());
        let plan = SweepPlan {
            steps: 2,
            trials_per_point: 0,
            ..plan
        };
        assert_eq!(
            plan.validate(),
            Err(ExperimentError::InvalidPlan("trials ≥ 1".into()))
        );
    }

    #[test]
    fn circuit_model_matches_builtin() {
        let desc = crate::dsl::parse_circuit(crate::dsl::builtin::MZI_CLOSED).unwrap();
        let model = CircuitModel::new(desc, &[("reflectance".into(), 0.36)], "phi_e").unwrap();
        let builtin = BuiltinMzi {
            spec: BeamSplitterSpec::from_reflectance(0.36, 0.0).unwrap(),
        };
        for phase in [0.0, 0.4, 2.0, 3.5] {
            let a = model.configurations(phase).unwrap();
            let b = builtin.configurations(phase).unwrap();
            for c in [Configuration::Closed, Configuration::Open] {
                assert!((a.d1_probability(c) - b.d1_probability(c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circuit_model_rejects_unsuitable_circuits() {
        let bare = crate::dsl::parse_circuit(crate::dsl::builtin::BARE_BS).unwrap();
        assert!(CircuitModel::new(bare, &[], "phi_e").is_err());
        let desc = crate::dsl::parse_circuit(crate::dsl::builtin::MZI_CLOSED).unwrap();
        assert!(CircuitModel::new(desc.clone(), &[], "theta").is_err());
        assert!(CircuitModel::new(desc.clone(), &[("phi_e".into(), 1.0)], "phi_e").is_err());
        assert!(CircuitModel::new(desc, &[("reflectance".into(), 2.0)], "phi_e").is_err());
    }

    proptest! {
        #[test]
        fn spacelike_is_monotone_in_length(l1 in 0.0..100.0f64, dl in 0.0..100.0f64, delay in 0.0..300.0f64) {
            let a = TimelineParams::new(l1, 1000.0, delay, 40.0).unwrap();
            let b = TimelineParams::new(l1 + dl, 1000.0, delay, 40.0).unwrap();
            prop_assert!(!spacelike_check(&a).spacelike || spacelike_check(&b).spacelike);
        }
    }
}
