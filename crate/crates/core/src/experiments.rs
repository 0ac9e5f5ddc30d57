//! Monte Carlo experiment harness and the detection report used by the CLI.
//!
//! An experiment expands its configuration into a list of cells, runs
//! `trials` seeded trials per cell and summarizes each cell. Trials run in
//! parallel; each owns a seed derived from `(seed, cell, trial)`, so the output
//! does not depend on the number of worker threads.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angles::pairwise_sum;
use crate::data::{DataMatrix, Label, Orientation, Partition};
use crate::detector::Detector;
use crate::error::{Result, RomaError};
use crate::subspace::{lre, recover_subspace, RankRule};
use crate::synth::{mix_seed, InlierModel, OutlierModel, SynthSpec};
use crate::threshold::ThresholdMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Run a detector on a matrix file.
    Detect,
    /// Fraction of trials where every outlier score exceeds the threshold.
    ValidateThreshold,
    /// Inlier recovery over subspace dimension and inlier count.
    PhaseInliers,
    /// Subspace recovery success over inlier and outlier counts.
    PhaseRecovery,
    /// Empirical failure rates of outlier identification and exact recovery.
    OipErp,
    /// Two-stage detection on clustered outliers and clustered inliers.
    Structured,
    /// Two-stage detection with a random mix of clustered and unstructured outliers.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    #[default]
    Roma,
    RomaN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Everything an experiment run needs. Grids that an experiment does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub r: usize,
    pub num_points: usize,
    pub gammas: Vec<f64>,
    /// `null` entries mean noiseless.
    pub snr_db: Vec<Option<f64>>,
    /// `r / n` grid for the inlier phase diagram.
    pub rank_ratios: Vec<f64>,
    pub n_inliers: Vec<usize>,
    pub n_outliers: Vec<usize>,
    pub mus: Vec<f64>,
    pub nu: f64,
    pub structured_fraction: f64,
    /// Replaces the outlier model of every trial.
    pub outlier_model: Option<OutlierModel>,
    /// A trial counts as recovered when its LRE is below this.
    pub lre_success: f64,
    pub mode: ThresholdMode,
    /// Detector stage; `None` picks the experiment's own.
    pub stage: Option<Stage>,
    pub rank_disambiguate: bool,
    pub rank: RankRule,
    pub trials: usize,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub orientation: Orientation,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

fn steps(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let k = ((stop - start) / step).round() as usize;
    (0..=k).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
}

impl ExperimentConfig {
    /// Defaults for each experiment, scaled to run on a desktop.
    pub fn defaults_for(experiment: ExperimentKind) -> Self {
        let mut c = Self {
            experiment,
            n: 100,
            r: 10,
            num_points: 1000,
            gammas: steps(0.05, 0.95, 0.1),
            snr_db: vec![Some(20.0)],
            rank_ratios: steps(0.05, 0.4, 0.05),
            n_inliers: vec![],
            n_outliers: vec![],
            mus: vec![],
            nu: 0.1,
            structured_fraction: 0.5,
            outlier_model: None,
            lre_success: -5.0,
            mode: ThresholdMode::Theoretical,
            stage: None,
            rank_disambiguate: false,
            rank: RankRule::default(),
            trials: 20,
            seed: 0,
            input: None,
            orientation: Orientation::PointsAsRows,
            out: None,
            format: OutputFormat::Csv,
        };
        match experiment {
            ExperimentKind::Detect => {
                c.trials = 1;
                c.format = OutputFormat::Json;
            }
            ExperimentKind::ValidateThreshold => c.trials = 200,
            ExperimentKind::OipErp => {
                c.snr_db = vec![Some(10.0), Some(20.0)];
                c.gammas = vec![0.15, 0.55, 0.95];
                c.trials = 1000;
            }
            ExperimentKind::PhaseInliers => {
                c.num_points = 2000;
                c.snr_db = vec![None];
                c.n_inliers = (0..10).map(|k| 100 + 200 * k).collect();
            }
            ExperimentKind::PhaseRecovery => {
                c.r = 20;
                c.snr_db = vec![None];
                c.n_inliers = vec![50, 100, 200, 400, 600, 800, 1000];
                c.n_outliers = (1..=10).map(|k| 100 * k).collect();
                c.trials = 100;
            }
            ExperimentKind::Structured => {
                c.n = 200;
                c.snr_db = vec![None];
                c.mus = vec![0.2, 0.5, 5.0];
                c.n_inliers = vec![900, 300];
                c.n_outliers = vec![100, 700];
            }
            ExperimentKind::Mixed => {
                c.n = 200;
                c.snr_db = vec![None];
                c.mus = vec![0.2];
                c.n_inliers = vec![400];
                c.n_outliers = (1..=8).map(|k| 100 * k).collect();
            }
        }
        c
    }

    /// Parses a JSON config; keys it omits take the defaults of its experiment.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let user: serde_json::Value = serde_json::from_str(s)?;
        Self::from_json_value(user, None)
    }

    /// As [`Self::from_json_str`]; `fallback` names the experiment when the JSON does not.
    pub fn from_json_value(user: serde_json::Value, fallback: Option<ExperimentKind>) -> Result<Self> {
        let serde_json::Value::Object(user) = user else {
            return Err(RomaError::Config("config must be a JSON object".into()));
        };
        let kind = match user.get("experiment") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => fallback.ok_or_else(|| RomaError::Config("config does not name an experiment".into()))?,
        };
        let mut merged = serde_json::to_value(Self::defaults_for(kind))?;
        let obj = merged.as_object_mut().expect("config serializes to an object");
        for (k, v) in user {
            if !obj.contains_key(&k) {
                return Err(RomaError::Config(format!("unknown config key `{k}`")));
            }
            obj.insert(k, v);
        }
        Ok(serde_json::from_value(merged)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn stage(&self) -> Stage {
        self.stage.unwrap_or(match self.experiment {
            ExperimentKind::Structured | ExperimentKind::Mixed => Stage::RomaN,
            _ => Stage::Roma,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(RomaError::Config(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(RomaError::Config(format!("{what} grid must be nonempty")))
            }
        };
        match self.experiment {
            ExperimentKind::Detect => {
                if self.input.is_none() {
                    return bad("detect needs an input file");
                }
            }
            ExperimentKind::ValidateThreshold | ExperimentKind::OipErp => {
                need(!self.gammas.is_empty(), "gamma")?;
                need(!self.snr_db.is_empty(), "snr")?;
            }
            ExperimentKind::PhaseInliers => {
                need(!self.rank_ratios.is_empty(), "r/n")?;
                need(!self.n_inliers.is_empty(), "N_I")?;
                if self.n_inliers.iter().any(|&k| k == 0 || k > self.num_points) {
                    return bad("each N_I must lie in 1..=N");
                }
            }
            ExperimentKind::PhaseRecovery => {
                need(!self.n_inliers.is_empty(), "N_I")?;
                need(!self.n_outliers.is_empty(), "N_O")?;
            }
            ExperimentKind::Structured => {
                need(!self.mus.is_empty(), "mu")?;
                need(!self.n_inliers.is_empty(), "N_I")?;
                if self.n_inliers.len() != self.n_outliers.len() {
                    return bad("structured pairs N_I with N_O; the two lists need equal length");
                }
            }
            ExperimentKind::Mixed => {
                need(!self.mus.is_empty(), "mu")?;
                need(!self.n_inliers.is_empty(), "N_I")?;
                need(!self.n_outliers.is_empty(), "N_O")?;
            }
        }
        if self.experiment != ExperimentKind::Detect && self.snr_db.is_empty() {
            return bad("snr grid must be nonempty (use null for noiseless)");
        }
        Ok(())
    }

    /// The cells this configuration expands to, in output order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.validate()?;
        let mut cells = Vec::new();
        let mut push = |n, r, n_inliers, n_outliers, snr_db, mu| {
            cells.push(Cell {
                index: cells.len(),
                n,
                r,
                n_inliers,
                n_outliers,
                snr_db,
                mu,
            })
        };
        let big_n = self.num_points;
        match self.experiment {
            ExperimentKind::Detect => {}
            ExperimentKind::ValidateThreshold | ExperimentKind::OipErp => {
                for &snr in &self.snr_db {
                    for &g in &self.gammas {
                        let n_out = (g * big_n as f64).round() as usize;
                        push(self.n, self.r, big_n - n_out.min(big_n), n_out, snr, None);
                    }
                }
            }
            ExperimentKind::PhaseInliers => {
                for &snr in &self.snr_db {
                    for &ni in &self.n_inliers {
                        for &ratio in &self.rank_ratios {
                            let r = ((ratio * self.n as f64).round() as usize).clamp(1, self.n);
                            push(self.n, r, ni, big_n - ni, snr, None);
                        }
                    }
                }
            }
            ExperimentKind::PhaseRecovery => {
                for &snr in &self.snr_db {
                    for &ni in &self.n_inliers {
                        for &no in &self.n_outliers {
                            push(self.n, self.r, ni, no, snr, None);
                        }
                    }
                }
            }
            ExperimentKind::Structured => {
                for &snr in &self.snr_db {
                    for &mu in &self.mus {
                        for (&ni, &no) in self.n_inliers.iter().zip(&self.n_outliers) {
                            push(self.n, self.r, ni, no, snr, Some(mu));
                        }
                    }
                }
            }
            ExperimentKind::Mixed => {
                for &snr in &self.snr_db {
                    for &mu in &self.mus {
                        for &ni in &self.n_inliers {
                            for &no in &self.n_outliers {
                                push(self.n, self.r, ni, no, snr, Some(mu));
                            }
                        }
                    }
                }
            }
        }
        Ok(cells)
    }

    /// Synthetic spec for one trial of `cell`.
    pub fn trial_spec(&self, cell: &Cell, seed: u64) -> SynthSpec {
        let mut spec = SynthSpec::with_counts(cell.n, cell.r, cell.n_inliers, cell.n_outliers, seed)
            .snr_db(cell.snr_db);
        match (self.experiment, cell.mu) {
            (ExperimentKind::Structured, Some(mu)) => {
                spec = spec
                    .outliers(OutlierModel::Clustered { mu, literal: false })
                    .inliers(InlierModel::Clustered { nu: self.nu, literal: false });
            }
            (ExperimentKind::Mixed, Some(mu)) => {
                spec = spec
                    .outliers(OutlierModel::Mixed {
                        mu,
                        structured_fraction: self.structured_fraction,
                    })
                    .inliers(InlierModel::Clustered { nu: self.nu, literal: false });
            }
            _ => {}
        }
        if let Some(model) = self.outlier_model {
            spec = spec.outliers(model);
        }
        spec
    }

    fn wants_lre(&self) -> bool {
        matches!(
            self.experiment,
            ExperimentKind::PhaseRecovery | ExperimentKind::Structured | ExperimentKind::Mixed
        )
    }
}

/// One grid point of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub r: usize,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub snr_db: Option<f64>,
    pub mu: Option<f64>,
}

impl Cell {
    pub fn num_points(&self) -> usize {
        self.n_inliers + self.n_outliers
    }

    pub fn gamma(&self) -> f64 {
        self.n_outliers as f64 / self.num_points() as f64
    }
}

/// Outcome of one trial. Counts are stored so the flags can be re-derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub r: usize,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub gamma: f64,
    pub snr_db: Option<f64>,
    pub mu: Option<f64>,
    pub zeta: f64,
    /// True inliers labelled inlier.
    pub inliers_kept: usize,
    /// True outliers labelled outlier.
    pub outliers_caught: usize,
    /// True outliers labelled inlier.
    pub false_inliers: usize,
    /// Every true outlier was flagged.
    pub oip_success: bool,
    /// The inlier estimate equals the true inlier set.
    pub erp_success: bool,
    pub inlier_recovery_pct: f64,
    pub min_outlier_q: Option<f64>,
    /// `min_outlier_q > zeta`; vacuously true without outliers.
    pub threshold_valid: bool,
    pub lre: Option<f64>,
    pub wall_ms: f64,
}

/// Counts of a partition against ground-truth labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub inliers_kept: usize,
    pub outliers_caught: usize,
}

impl Confusion {
    pub fn new(partition: &Partition, labels: &[Label]) -> Self {
        let n_inliers = labels.iter().filter(|&&l| l == Label::Inlier).count();
        let n_outliers = labels.iter().filter(|&&l| l == Label::Outlier).count();
        let inliers_kept = partition
            .inliers
            .iter()
            .filter(|&&i| labels[i] == Label::Inlier)
            .count();
        let outliers_caught = partition
            .outliers
            .iter()
            .filter(|&&i| labels[i] == Label::Outlier)
            .count();
        Self {
            n_inliers,
            n_outliers,
            inliers_kept,
            outliers_caught,
        }
    }

    pub fn false_inliers(&self) -> usize {
        self.n_outliers - self.outliers_caught
    }

    pub fn oip(&self) -> bool {
        self.outliers_caught == self.n_outliers
    }

    pub fn erp(&self) -> bool {
        self.inliers_kept == self.n_inliers && self.oip()
    }

    pub fn inlier_recovery_pct(&self) -> f64 {
        if self.n_inliers == 0 {
            100.0
        } else {
            100.0 * self.inliers_kept as f64 / self.n_inliers as f64
        }
    }
}

impl TrialRecord {
    /// Re-derives the flags and percentages from the stored counts.
    pub fn audit(&self) -> bool {
        let c = Confusion {
            n_inliers: self.n_inliers,
            n_outliers: self.n_outliers,
            inliers_kept: self.inliers_kept,
            outliers_caught: self.outliers_caught,
        };
        let valid = match self.min_outlier_q {
            Some(q) => q > self.zeta,
            None => self.n_outliers == 0,
        };
        self.inliers_kept <= self.n_inliers
            && self.outliers_caught <= self.n_outliers
            && self.false_inliers == c.false_inliers()
            && self.oip_success == c.oip()
            && self.erp_success == c.erp()
            && self.inlier_recovery_pct == c.inlier_recovery_pct()
            && self.threshold_valid == valid
    }
}

/// Per-cell aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub n: usize,
    pub r: usize,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub gamma: f64,
    pub snr_db: Option<f64>,
    pub mu: Option<f64>,
    pub trials: usize,
    pub oip_rate: f64,
    pub erp_rate: f64,
    pub alpha_oip: f64,
    pub alpha_erp: f64,
    pub threshold_valid_rate: f64,
    pub mean_inlier_recovery_pct: f64,
    pub mean_false_inliers: f64,
    pub mean_lre: Option<f64>,
    /// Fraction of trials with LRE below the configured success level.
    pub recovery_rate: Option<f64>,
}

impl CellSummary {
    fn from_trials(cell: &Cell, trials: &[TrialRecord], lre_success: f64) -> Self {
        let k = trials.len() as f64;
        let frac = |f: &dyn Fn(&TrialRecord) -> bool| trials.iter().filter(|t| f(t)).count() as f64 / k;
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
            let v: Vec<f64> = trials.iter().map(f).collect();
            pairwise_sum(&v) / k
        };
        let lres: Option<Vec<f64>> = trials.iter().map(|t| t.lre).collect();
        let oip_rate = frac(&|t| t.oip_success);
        let erp_rate = frac(&|t| t.erp_success);
        Self {
            cell: cell.index,
            n: cell.n,
            r: cell.r,
            n_inliers: cell.n_inliers,
            n_outliers: cell.n_outliers,
            gamma: cell.gamma(),
            snr_db: cell.snr_db,
            mu: cell.mu,
            trials: trials.len(),
            oip_rate,
            erp_rate,
            alpha_oip: 1.0 - oip_rate,
            alpha_erp: 1.0 - erp_rate,
            threshold_valid_rate: frac(&|t| t.threshold_valid),
            mean_inlier_recovery_pct: mean(&|t| t.inlier_recovery_pct),
            mean_false_inliers: mean(&|t| t.false_inliers as f64),
            mean_lre: lres.as_ref().map(|v| pairwise_sum(v) / k),
            recovery_rate: lres.map(|v| v.iter().filter(|&&l| l < lre_success).count() as f64 / k),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<CellSummary>,
}

impl ExperimentReport {
    /// Trial rows, a blank line, then the summary rows, each block with its own header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut block = csv::Writer::from_writer(Vec::new());
        for t in &self.trials {
            block.serialize(t)?;
        }
        w.write_all(&finish(block)?)?;
        w.write_all(b"\n")?;
        let mut block = csv::Writer::from_writer(Vec::new());
        for s in &self.summary {
            block.serialize(s)?;
        }
        w.write_all(&finish(block)?)?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn write(&self, format: OutputFormat, w: impl Write) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(w),
            OutputFormat::Json => self.write_json(w),
        }
    }

    pub fn summary_for(&self, cell: usize) -> Option<&CellSummary> {
        self.summary.iter().find(|s| s.cell == cell)
    }

    /// True when every trial passes [`TrialRecord::audit`].
    pub fn audit(&self) -> bool {
        self.trials.iter().all(TrialRecord::audit)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| RomaError::Io(std::io::Error::other(e.to_string())))
}

/// Runs one synthetic trial of `cell`.
pub fn run_trial(config: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<TrialRecord> {
    let seed = mix_seed(config.seed, cell.index as u64, trial as u64);
    let data = config.trial_spec(cell, seed).generate()?;
    let start = Instant::now();
    let detector = Detector::new(config.mode).with_rank_disambiguation(config.rank_disambiguate);
    let stage1 = match config.stage() {
        Stage::Roma => detector.roma(&data.matrix)?,
        Stage::RomaN => {
            let res = detector.roma_n(&data.matrix)?;
            let mut s = res.stage1;
            s.partition = res.partition;
            s
        }
    };
    let labels = data.labels();
    let confusion = Confusion::new(&stage1.partition, labels);
    let min_outlier_q = data
        .outlier_indices()
        .iter()
        .map(|&i| stage1.scores.q[i])
        .min_by(f64::total_cmp);
    let zeta = stage1.threshold.zeta;
    let lre_value = if config.wants_lre() {
        Some(if stage1.partition.inliers.is_empty() {
            0.0
        } else {
            let est = recover_subspace(&data.matrix, &stage1.partition.inliers, config.rank)?;
            lre(data.true_basis(), &est.basis)?
        })
    } else {
        None
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(TrialRecord {
        cell: cell.index,
        trial,
        seed,
        n: cell.n,
        r: cell.r,
        n_inliers: cell.n_inliers,
        n_outliers: cell.n_outliers,
        gamma: cell.gamma(),
        snr_db: cell.snr_db,
        mu: cell.mu,
        zeta,
        inliers_kept: confusion.inliers_kept,
        outliers_caught: confusion.outliers_caught,
        false_inliers: confusion.false_inliers(),
        oip_success: confusion.oip(),
        erp_success: confusion.erp(),
        inlier_recovery_pct: confusion.inlier_recovery_pct(),
        threshold_valid: min_outlier_q.is_none_or(|q| q > zeta),
        min_outlier_q,
        lre: lre_value,
        wall_ms,
    })
}

/// Runs every trial of every cell and summarizes.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.experiment == ExperimentKind::Detect {
        return Err(RomaError::Config(
            "detect is not a Monte Carlo experiment; use run_detect".into(),
        ));
    }
    let cells = config.cells()?;
    let jobs: Vec<(usize, usize)> = cells
        .iter()
        .flat_map(|c| (0..config.trials).map(move |t| (c.index, t)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(c, t)| run_trial(config, &cells[c], t))
        .collect::<Result<Vec<_>>>()?;
    let summary = cells
        .iter()
        .map(|c| {
            let rows = &trials[c.index * config.trials..(c.index + 1) * config.trials];
            CellSummary::from_trials(c, rows, config.lre_success)
        })
        .collect();
    Ok(ExperimentReport {
        config: config.clone(),
        trials,
        summary,
    })
}

/// Detector settings for [`run_detect`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    pub mode: ThresholdMode,
    pub stage: Stage,
    pub rank_disambiguate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondStageReport {
    pub inlier_head: usize,
    pub outlier_head: usize,
    /// Counts restricted to first-stage inliers, aligned with `first_stage_inliers`.
    pub survivor_na: Vec<usize>,
    pub first_stage_inliers: Vec<usize>,
    pub labels_swapped: bool,
}

/// JSON report written by the `detect` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub n: usize,
    pub num_points: usize,
    pub stage: Stage,
    pub mode: ThresholdMode,
    pub zeta: f64,
    pub c_n: f64,
    pub center: f64,
    pub inliers: Vec<usize>,
    pub outliers: Vec<usize>,
    pub q: Vec<f64>,
    pub na: Vec<usize>,
    pub second_stage: Option<SecondStageReport>,
    /// Shape `(n, r)` of the basis fitted to the inlier estimate.
    pub recovered_basis: Option<(usize, usize)>,
}

pub fn run_detect(m: &DataMatrix, opts: DetectOptions) -> Result<DetectReport> {
    let detector = Detector::new(opts.mode).with_rank_disambiguation(opts.rank_disambiguate);
    let (stage1, partition, second_stage) = match opts.stage {
        Stage::Roma => {
            let res = detector.roma(m)?;
            let p = res.partition.clone();
            (res, p, None)
        }
        Stage::RomaN => {
            let res = detector.roma_n(m)?;
            let second = SecondStageReport {
                inlier_head: res.inlier_head,
                outlier_head: res.outlier_head,
                survivor_na: res.survivor_na,
                first_stage_inliers: res.stage1.partition.inliers.clone(),
                labels_swapped: res.labels_swapped,
            };
            (res.stage1, res.partition, Some(second))
        }
    };
    let recovered_basis = if partition.inliers.is_empty() {
        None
    } else {
        let b = recover_subspace(m, &partition.inliers, RankRule::default())?;
        Some((b.basis.nrows(), b.rank()))
    };
    let t = stage1.threshold;
    Ok(DetectReport {
        n: m.ambient_dim(),
        num_points: m.num_points(),
        stage: opts.stage,
        mode: t.mode,
        zeta: t.zeta,
        c_n: t.c_n,
        center: t.center,
        inliers: partition.inliers,
        outliers: partition.outliers,
        q: stage1.scores.q,
        na: stage1.scores.na,
        second_stage,
        recovered_basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults_for(kind);
        c.trials = 2;
        c
    }

    #[test]
    fn config_merges_defaults() {
        let c = ExperimentConfig::from_json_str(r#"{"experiment":"oip-erp","trials":5}"#).unwrap();
        assert_eq!(c.trials, 5);
        assert_eq!(c.gammas, vec![0.15, 0.55, 0.95]);
        assert!(ExperimentConfig::from_json_str(r#"{"experiment":"oip-erp","bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"trials":5}"#).is_err());
        let mut c = small(ExperimentKind::ValidateThreshold);
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = small(ExperimentKind::Structured);
        c.n_outliers.pop();
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_grids() {
        let c = ExperimentConfig::defaults_for(ExperimentKind::ValidateThreshold);
        assert_eq!(c.gammas.len(), 10);
        assert_eq!(c.gammas[9], 0.95);
        let c = ExperimentConfig::defaults_for(ExperimentKind::PhaseRecovery);
        assert_eq!(c.cells().unwrap().len(), 70);
        let c = ExperimentConfig::defaults_for(ExperimentKind::Structured);
        assert_eq!(c.cells().unwrap().len(), 6);
        let c = ExperimentConfig::defaults_for(ExperimentKind::PhaseInliers);
        assert_eq!(c.n_inliers.last(), Some(&1900));
        assert_eq!(c.cells().unwrap().len(), 80);
    }

    #[test]
    fn gamma_zero_trial_is_vacuous() {
        let mut c = small(ExperimentKind::ValidateThreshold);
        c.gammas = vec![0.0];
        c.trials = 1;
        c.num_points = 200;
        let rep = run_experiment(&c).unwrap();
        assert!(rep.trials[0].threshold_valid);
        assert!(rep.trials[0].oip_success);
        assert_eq!(rep.summary[0].threshold_valid_rate, 1.0);
    }

    #[test]
    fn reports_are_reproducible_and_audited() {
        let mut c = small(ExperimentKind::PhaseRecovery);
        c.n_inliers = vec![60];
        c.n_outliers = vec![100, 200];
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert!(a.audit());
        for (x, y) in a.trials.iter().zip(&b.trials) {
            let (mut x, mut y) = (x.clone(), y.clone());
            x.wall_ms = 0.0;
            y.wall_ms = 0.0;
            assert_eq!(x, y);
        }
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let blocks: Vec<&str> = text.split("\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].lines().count(), 1 + 4);
        assert_eq!(blocks[1].trim_end().lines().count(), 1 + 2);
    }

    #[test]
    fn audit_catches_inconsistency() {
        let mut c = small(ExperimentKind::OipErp);
        c.gammas = vec![0.5];
        c.snr_db = vec![None];
        c.num_points = 200;
        c.trials = 1;
        let mut rep = run_experiment(&c).unwrap();
        assert!(rep.audit());
        rep.trials[0].oip_success = !rep.trials[0].oip_success;
        assert!(!rep.audit());
    }
}
