//! Event sorting and fringe statistics.
//!
//! Records are bucketed by (configuration, phase index). Per configuration the
//! detector-1 frequencies are fitted with `a + b cos(phi)` at the known phases;
//! the visibility is `(max - min) / (max + min)` of the fitted curve over the
//! sampled phases. Two chi-square tests are reported with binomial variances:
//! counts against the analytic model (no free parameters), and counts against
//! their own pooled frequency (flatness, `k - 1` degrees of freedom).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::experiment::{CircuitModel, Configuration, Detector, PhaseModel, TrialRecord};
use crate::mode_algebra::{closed_d1_fraction, BeamSplitterSpec};

/// Tests pass when their p-value exceeds this.
pub const P_VALUE_THRESHOLD: f64 = 0.01;
/// Allowed shortfall of the fitted closed visibility below the analytic one.
pub const VISIBILITY_TOLERANCE: f64 = 0.01;
/// Phase points needed for a fit.
pub const MIN_PHASE_POINTS: usize = 3;

pub const COUNTS_CSV_HEADER: &str = "config,phase_index,phase_rad,n_d1,n_d2,total,freq_d1,analytic_d1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("corrupt record{}{}: {reason}",
        .line.map(|l| format!(" on line {l}")).unwrap_or_default(),
        .trial_id.map(|t| format!(" (trial_id {t})")).unwrap_or_default())]
    CorruptRecord {
        line: Option<usize>,
        trial_id: Option<u64>,
        reason: String,
    },
    #[error("insufficient data: {points} phase point(s) for {config}, need at least {needed}")]
    InsufficientData {
        config: String,
        points: usize,
        needed: usize,
    },
}

/// Parse one event-log line into a record.
pub fn parse_record(line_no: usize, text: &str) -> Result<TrialRecord, AnalysisError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| AnalysisError::CorruptRecord {
            line: Some(line_no),
            trial_id: None,
            reason: e.to_string(),
        })?;
    let trial_id = value.get("trial_id").and_then(|v| v.as_u64());
    serde_json::from_value(value).map_err(|e| AnalysisError::CorruptRecord {
        line: Some(line_no),
        trial_id,
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointCounts {
    pub phase_rad: f64,
    pub n_d1: u64,
    pub n_d2: u64,
}

impl PointCounts {
    pub fn total(&self) -> u64 {
        self.n_d1 + self.n_d2
    }

    pub fn freq_d1(&self) -> f64 {
        self.n_d1 as f64 / self.total() as f64
    }
}

/// Detector counts per (configuration, phase index).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountsSummary {
    buckets: BTreeMap<(Configuration, u32), PointCounts>,
}

impl CountsSummary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn add(&mut self, record: &TrialRecord) -> Result<(), AnalysisError> {
        let counts = PointCounts {
            phase_rad: record.phase_setting,
            n_d1: u64::from(record.detector == Detector::D1),
            n_d2: u64::from(record.detector == Detector::D2),
        };
        self.insert(record.config, record.phase_index, counts, Some(record.trial_id))
    }

    fn insert(
        &mut self,
        config: Configuration,
        index: u32,
        counts: PointCounts,
        trial_id: Option<u64>,
    ) -> Result<(), AnalysisError> {
        let slot = self.buckets.entry((config, index)).or_insert(PointCounts {
            phase_rad: counts.phase_rad,
            n_d1: 0,
            n_d2: 0,
        });
        if slot.phase_rad.to_bits() != counts.phase_rad.to_bits() {
            return Err(AnalysisError::CorruptRecord {
                line: None,
                trial_id,
                reason: format!(
                    "phase index {index} carries phase {} but earlier records had {}",
                    counts.phase_rad, slot.phase_rad
                ),
            });
        }
        slot.n_d1 += counts.n_d1;
        slot.n_d2 += counts.n_d2;
        Ok(())
    }

    /// Fold another partial summary into this one.
    pub fn merge(&mut self, other: &CountsSummary) -> Result<(), AnalysisError> {
        for (&(config, index), &counts) in &other.buckets {
            self.insert(config, index, counts, None)?;
        }
        Ok(())
    }

    pub fn get(&self, config: Configuration, phase_index: u32) -> Option<&PointCounts> {
        self.buckets.get(&(config, phase_index))
    }

    /// Buckets ordered by configuration, then phase index.
    pub fn iter(&self) -> impl Iterator<Item = (Configuration, u32, &PointCounts)> {
        self.buckets.iter().map(|(&(c, i), p)| (c, i, p))
    }

    pub fn points(&self, config: Configuration) -> Vec<(u32, PointCounts)> {
        self.iter()
            .filter(|(c, _, _)| *c == config)
            .map(|(_, i, p)| (i, *p))
            .collect()
    }

    pub fn total_trials(&self) -> u64 {
        self.buckets.values().map(PointCounts::total).sum()
    }
}

/// Bucket every record exactly once.
pub fn sort_events<I>(records: I) -> Result<CountsSummary, AnalysisError>
where
    I: IntoIterator<Item = TrialRecord>,
{
    let mut summary = CountsSummary::new();
    for r in records {
        summary.add(&r)?;
    }
    Ok(summary)
}

/// Expected detector-1 fraction for a configuration at a phase.
pub trait AnalyticModel {
    fn d1_fraction(&self, config: Configuration, phase: f64) -> f64;
}

/// Shared-splitter interferometer with `phi = phase`.
impl AnalyticModel for BeamSplitterSpec {
    fn d1_fraction(&self, config: Configuration, phase: f64) -> f64 {
        match config {
            Configuration::Closed => closed_d1_fraction(self, phase),
            Configuration::Open => self.transmittance(),
        }
    }
}

/// Elaborates the circuit at each phase; NaN if elaboration fails.
impl AnalyticModel for CircuitModel {
    fn d1_fraction(&self, config: Configuration, phase: f64) -> f64 {
        self.configurations(phase)
            .map(|pair| pair.d1_probability(config))
            .unwrap_or(f64::NAN)
    }
}

impl<F: Fn(Configuration, f64) -> f64> AnalyticModel for F {
    fn d1_fraction(&self, config: Configuration, phase: f64) -> f64 {
        self(config, phase)
    }
}

/// Write the counts table, closed rows first.
pub fn write_counts_csv<W: Write>(
    out: &mut W,
    summary: &CountsSummary,
    model: &dyn AnalyticModel,
) -> io::Result<()> {
    writeln!(out, "{COUNTS_CSV_HEADER}")?;
    for (config, index, p) in summary.iter() {
        writeln!(
            out,
            "{config},{index},{},{},{},{},{},{}",
            p.phase_rad,
            p.n_d1,
            p.n_d2,
            p.total(),
            p.freq_d1(),
            model.d1_fraction(config, p.phase_rad)
        )?;
    }
    Ok(())
}

/// Least-squares `(offset, amplitude)` of `y = a + b cos(phi)`.
pub fn fit_cosine(phases: &[f64], values: &[f64]) -> (f64, f64) {
    let n = phases.len() as f64;
    let cos: Vec<f64> = phases.iter().map(|p| p.cos()).collect();
    let c_mean = cos.iter().sum::<f64>() / n;
    let y_mean = values.iter().sum::<f64>() / n;
    let sxx: f64 = cos.iter().map(|c| (c - c_mean).powi(2)).sum();
    if sxx < 1e-12 {
        return (y_mean, 0.0);
    }
    let sxy: f64 = cos
        .iter()
        .zip(values)
        .map(|(c, y)| (c - c_mean) * (y - y_mean))
        .sum();
    let b = sxy / sxx;
    (y_mean - b * c_mean, b)
}

/// `(max - min) / (max + min)`, clamped to `[0, 1]`.
pub fn visibility(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let sum = max + min;
    if sum.is_nan() || sum <= 0.0 {
        return 0.0;
    }
    ((max - min) / (max + min)).clamp(0.0, 1.0)
}

fn fitted_visibility(phases: &[f64], values: &[f64]) -> f64 {
    let (a, b) = fit_cosine(phases, values);
    let curve: Vec<f64> = phases.iter().map(|p| a + b * p.cos()).collect();
    visibility(&curve)
}

fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    if !stat.is_finite() {
        return 0.0;
    }
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .sf(stat)
}

/// Pearson statistic of `(n_d1, total)` pairs against fixed probabilities.
///
/// Points with zero binomial variance carry no information when the counts
/// agree; they are skipped and do not count towards the degrees of freedom.
pub fn chi_square_vs_model(points: &[(u64, u64, f64)]) -> (f64, usize, f64) {
    let mut stat = 0.0;
    let mut dof = 0;
    for &(n1, total, p) in points {
        let n = total as f64;
        let var = n * p * (1.0 - p);
        let dev = n1 as f64 - n * p;
        if var < 1e-12 {
            if dev.abs() >= 0.5 {
                stat = f64::INFINITY;
            }
            continue;
        }
        stat += dev * dev / var;
        dof += 1;
    }
    (stat, dof, chi_square_sf(stat, dof))
}

/// Pearson statistic of `(n_d1, total)` pairs against their pooled frequency.
pub fn chi_square_flatness(points: &[(u64, u64)]) -> (f64, usize, f64) {
    let n1: u64 = points.iter().map(|p| p.0).sum();
    let n: u64 = points.iter().map(|p| p.1).sum();
    let dof = points.len().saturating_sub(1);
    if n == 0 || n1 == 0 || n1 == n {
        return (0.0, dof, 1.0);
    }
    let pooled = n1 as f64 / n as f64;
    let stat: f64 = points
        .iter()
        .map(|&(k, t)| {
            let t = t as f64;
            let dev = k as f64 - t * pooled;
            dev * dev / (t * pooled * (1.0 - pooled))
        })
        .sum();
    (stat, dof, chi_square_sf(stat, dof))
}

/// Fringe statistics for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigFringe {
    pub config: Configuration,
    pub points: usize,
    /// From the fitted cosine.
    pub visibility: f64,
    /// From the raw frequency extremes.
    pub raw_visibility: f64,
    /// Fitted visibility of the analytic curve on the same grid.
    pub analytic_visibility: f64,
    pub fit_offset: f64,
    pub fit_amplitude: f64,
    pub chi_square: f64,
    pub chi_square_dof: usize,
    pub chi_square_p: f64,
    pub flatness_chi_square: f64,
    pub flatness_dof: usize,
    pub flatness_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeReport {
    pub closed: Option<ConfigFringe>,
    pub open: Option<ConfigFringe>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl FringeReport {
    pub fn get(&self, config: Configuration) -> Option<&ConfigFringe> {
        match config {
            Configuration::Closed => self.closed.as_ref(),
            Configuration::Open => self.open.as_ref(),
        }
    }

    /// Acceptance checks: every configuration fits its model; closed
    /// visibility reaches the analytic one; open counts are flat.
    pub fn verdicts(&self) -> Vec<Verdict> {
        let mut out = Vec::new();
        for f in [&self.closed, &self.open].into_iter().flatten() {
            out.push(Verdict {
                name: format!("{} chi-square vs model", f.config),
                passed: f.chi_square_p > P_VALUE_THRESHOLD,
                detail: format!(
                    "chi2 = {:.3} on {} dof, p = {:.4}",
                    f.chi_square, f.chi_square_dof, f.chi_square_p
                ),
            });
        }
        if let Some(c) = &self.closed {
            out.push(Verdict {
                name: "closed visibility".into(),
                passed: c.visibility >= c.analytic_visibility - VISIBILITY_TOLERANCE,
                detail: format!(
                    "fitted {:.5}, analytic {:.5}",
                    c.visibility, c.analytic_visibility
                ),
            });
        }
        if let Some(o) = &self.open {
            out.push(Verdict {
                name: "open flatness".into(),
                passed: o.flatness_p > P_VALUE_THRESHOLD,
                detail: format!(
                    "chi2 = {:.3} on {} dof, p = {:.4}",
                    o.flatness_chi_square, o.flatness_dof, o.flatness_p
                ),
            });
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.verdicts().iter().all(|v| v.passed)
    }
}

impl fmt::Display for FringeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in [&self.closed, &self.open].into_iter().flatten() {
            writeln!(
                f,
                "{:<6} points={} visibility={:.5} (raw {:.5}, analytic {:.5}) chi2={:.3}/{} p={:.4} flatness chi2={:.3}/{} p={:.4}",
                c.config,
                c.points,
                c.visibility,
                c.raw_visibility,
                c.analytic_visibility,
                c.chi_square,
                c.chi_square_dof,
                c.chi_square_p,
                c.flatness_chi_square,
                c.flatness_dof,
                c.flatness_p
            )?;
        }
        for v in self.verdicts() {
            writeln!(
                f,
                "[{}] {}: {}",
                if v.passed { "PASS" } else { "FAIL" },
                v.name,
                v.detail
            )?;
        }
        Ok(())
    }
}

/// Fringe report against the shared-splitter interferometer.
pub fn fringe_report(summary: &CountsSummary, spec: &BeamSplitterSpec) -> Result<FringeReport, AnalysisError> {
    fringe_report_with(summary, spec)
}

pub fn fringe_report_with(
    summary: &CountsSummary,
    model: &dyn AnalyticModel,
) -> Result<FringeReport, AnalysisError> {
    if summary.is_empty() {
        return Err(AnalysisError::InsufficientData {
            config: "any configuration".into(),
            points: 0,
            needed: MIN_PHASE_POINTS,
        });
    }
    let mut report = FringeReport {
        closed: None,
        open: None,
    };
    for config in [Configuration::Closed, Configuration::Open] {
        let pts = summary.points(config);
        if pts.is_empty() {
            continue;
        }
        if pts.len() < MIN_PHASE_POINTS {
            return Err(AnalysisError::InsufficientData {
                config: config.to_string(),
                points: pts.len(),
                needed: MIN_PHASE_POINTS,
            });
        }
        let phases: Vec<f64> = pts.iter().map(|(_, p)| p.phase_rad).collect();
        let freqs: Vec<f64> = pts.iter().map(|(_, p)| p.freq_d1()).collect();
        let analytic: Vec<f64> = phases.iter().map(|&ph| model.d1_fraction(config, ph)).collect();
        let (a, b) = fit_cosine(&phases, &freqs);
        let model_pts: Vec<(u64, u64, f64)> = pts
            .iter()
            .zip(&analytic)
            .map(|((_, p), &q)| (p.n_d1, p.total(), q))
            .collect();
        let (chi, chi_dof, chi_p) = chi_square_vs_model(&model_pts);
        let flat_pts: Vec<(u64, u64)> = pts.iter().map(|(_, p)| (p.n_d1, p.total())).collect();
        let (flat, flat_dof, flat_p) = chi_square_flatness(&flat_pts);
        let fringe = ConfigFringe {
            config,
            points: pts.len(),
            visibility: fitted_visibility(&phases, &freqs),
            raw_visibility: visibility(&freqs),
            analytic_visibility: fitted_visibility(&phases, &analytic),
            fit_offset: a,
            fit_amplitude: b,
            chi_square: chi,
            chi_square_dof: chi_dof,
            chi_square_p: chi_p,
            flatness_chi_square: flat,
            flatness_dof: flat_dof,
            flatness_p: flat_p,
        };
        match config {
            Configuration::Closed => report.closed = Some(fringe),
            Configuration::Open => report.open = Some(fringe),
        }
    }
    Ok(report)
}

/// One summary row per configuration.
pub fn write_report_csv<W: Write>(out: &mut W, report: &FringeReport) -> io::Result<()> {
    writeln!(
        out,
        "config,points,visibility,raw_visibility,analytic_visibility,chi_square,chi_square_dof,chi_square_p,flatness_chi_square,flatness_dof,flatness_p"
    )?;
    for c in [&report.closed, &report.open].into_iter().flatten() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.config,
            c.points,
            c.visibility,
            c.raw_visibility,
            c.analytic_visibility,
            c.chi_square,
            c.chi_square_dof,
            c.chi_square_p,
            c.flatness_chi_square,
            c.flatness_dof,
            c.flatness_p
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn rec(id: u64, config: Configuration, index: u32, detector: Detector) -> TrialRecord {
        TrialRecord {
            trial_id: id,
            config,
            phase_index: index,
            phase_setting: index as f64 * 0.5,
            detector,
            choice_complete_time: 120.0,
            spacelike: true,
            rng_seed: id,
        }
    }

    /// Counts equal to `total * p` exactly (when representable).
    fn analytic_summary(spec: &BeamSplitterSpec, total: u64, steps: u32) -> CountsSummary {
        let mut s = CountsSummary::new();
        for config in [Configuration::Closed, Configuration::Open] {
            for i in 0..steps {
                let phase = TAU * i as f64 / (steps - 1) as f64;
                let p = spec.d1_fraction(config, phase);
                let n1 = (p * total as f64).round() as u64;
                s.insert(
                    config,
                    i,
                    PointCounts {
                        phase_rad: phase,
                        n_d1: n1,
                        n_d2: total - n1,
                    },
                    None,
                )
                .unwrap();
            }
        }
        s
    }

    #[test]
    fn hand_counted_buckets() {
        use Configuration::*;
        use Detector::*;
        let records = [
            rec(0, Open, 0, D1),
            rec(1, Open, 0, D1),
            rec(2, Open, 0, D2),
            rec(3, Closed, 0, D1),
        ];
        let s = sort_events(records).unwrap();
        let open = s.get(Open, 0).unwrap();
        assert_eq!((open.n_d1, open.n_d2), (2, 1));
        let closed = s.get(Closed, 0).unwrap();
        assert_eq!((closed.n_d1, closed.n_d2), (1, 0));
        assert_eq!(s.total_trials(), 4);
    }

    #[test]
    fn empty_stream() {
        let s = sort_events(Vec::new()).unwrap();
        assert!(s.is_empty());
        assert!(matches!(
            fringe_report(&s, &BeamSplitterSpec::balanced()),
            Err(AnalysisError::InsufficientData { .. })
        ));
    }

    #[test]
    fn inconsistent_phase_is_corrupt() {
        let a = rec(0, Configuration::Open, 1, Detector::D1);
        let mut b = rec(9, Configuration::Open, 1, Detector::D1);
        b.phase_setting = 3.0;
        match sort_events([a, b]).unwrap_err() {
            AnalysisError::CorruptRecord { trial_id, .. } => assert_eq!(trial_id, Some(9)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_record_names_trial() {
        let good = r#"{"trial_id":4,"config":"closed","phase_index":0,"phase_setting":0.0,"detector":"D2","choice_complete_time":120.0,"spacelike":true,"rng_seed":1}"#;
        assert_eq!(parse_record(2, good).unwrap().trial_id, 4);
        let missing = r#"{"trial_id":17,"config":"closed","phase_index":0,"phase_setting":0.0,"choice_complete_time":120.0,"spacelike":true,"rng_seed":1}"#;
        match parse_record(3, missing).unwrap_err() {
            AnalysisError::CorruptRecord {
                line,
                trial_id,
                reason,
            } => {
                assert_eq!(line, Some(3));
                assert_eq!(trial_id, Some(17));
                assert!(reason.contains("detector"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_record(5, "{not json").is_err());
    }

    #[test]
    fn analytic_balanced_visibilities() {
        let spec = BeamSplitterSpec::balanced();
        let s = analytic_summary(&spec, 1 << 20, 17);
        let r = fringe_report(&s, &spec).unwrap();
        let closed = r.closed.unwrap();
        let open = r.open.unwrap();
        assert!((closed.visibility - 1.0).abs() < 1e-12);
        assert_eq!(closed.raw_visibility, 1.0);
        assert!((closed.analytic_visibility - 1.0).abs() < 1e-12);
        assert!(open.visibility.abs() < 1e-12);
        assert_eq!(open.raw_visibility, 0.0);
        assert_eq!(open.flatness_chi_square, 0.0);
    }

    #[test]
    fn analytic_unbalanced_visibility() {
        // 2|R|^2|T|^2 / (|R|^4 + |T|^4) at |R|^2 = 0.36
        let spec = BeamSplitterSpec::from_reflectance(0.36, 0.0).unwrap();
        let phases: Vec<f64> = (0..17).map(|i| TAU * i as f64 / 16.0).collect();
        let curve: Vec<f64> = phases.iter().map(|&p| closed_d1_fraction(&spec, p)).collect();
        let expected = 0.4608 / 0.5392;
        assert!((fitted_visibility(&phases, &curve) - expected).abs() < 1e-12);
        assert!((visibility(&curve) - expected).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_cosine() {
        let phases: Vec<f64> = (0..9).map(|i| PI * i as f64 / 4.0).collect();
        let ys: Vec<f64> = phases.iter().map(|p| 0.3 - 0.2 * p.cos()).collect();
        let (a, b) = fit_cosine(&phases, &ys);
        assert!((a - 0.3).abs() < 1e-14);
        assert!((b + 0.2).abs() < 1e-14);
        // degenerate grid: a single cosine value
        let (a, b) = fit_cosine(&[0.0, TAU, 2.0 * TAU], &[0.1, 0.2, 0.3]);
        assert!((a - 0.2).abs() < 1e-15);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn chi_square_known_values() {
        // one point, 60 of 100 against p = 0.5: (10^2)/25 = 4 on 1 dof
        let (stat, dof, p) = chi_square_vs_model(&[(60, 100, 0.5)]);
        assert!((stat - 4.0).abs() < 1e-12);
        assert_eq!(dof, 1);
        assert!((p - 0.045_500_263_896_358_4).abs() < 1e-9);
        // degenerate point that agrees is skipped, one that disagrees is fatal
        assert_eq!(chi_square_vs_model(&[(0, 100, 0.0)]), (0.0, 0, 1.0));
        let (stat, _, p) = chi_square_vs_model(&[(3, 100, 0.0)]);
        assert!(stat.is_infinite());
        assert_eq!(p, 0.0);
    }

    #[test]
    fn flatness_known_values() {
        // pooled 0.5; deviations +-10 on 100 trials each: 2 * 100/25 = 8 on 1 dof
        let (stat, dof, p) = chi_square_flatness(&[(60, 100), (40, 100)]);
        assert!((stat - 8.0).abs() < 1e-12);
        assert_eq!(dof, 1);
        assert!((p - 0.004_677_734_981_047_27).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let spec = BeamSplitterSpec::balanced();
        let s = analytic_summary(&spec, 1000, 2);
        assert!(matches!(
            fringe_report(&s, &spec),
            Err(AnalysisError::InsufficientData { points: 2, .. })
        ));
    }

    #[test]
    fn counts_csv_layout() {
        let spec = BeamSplitterSpec::balanced();
        let s = sort_events([
            rec(0, Configuration::Open, 0, Detector::D1),
            rec(1, Configuration::Closed, 0, Detector::D2),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&mut buf, &s, &spec).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "config,phase_index,phase_rad,n_d1,n_d2,total,freq_d1,analytic_d1\n\
             closed,0,0,0,1,1,0,0\n\
             open,0,0,1,0,1,1,0.5000000000000001\n"
        );
    }

    #[test]
    fn merge_matches_single_pass() {
        use Configuration::*;
        use Detector::*;
        let all = [
            rec(0, Open, 0, D1),
            rec(1, Closed, 1, D2),
            rec(2, Open, 0, D2),
            rec(3, Closed, 1, D1),
        ];
        let whole = sort_events(all).unwrap();
        let mut left = sort_events(all[..2].to_vec()).unwrap();
        left.merge(&sort_events(all[2..].to_vec()).unwrap()).unwrap();
        assert_eq!(left, whole);
    }
}
