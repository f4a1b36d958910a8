//! Seeded Monte-Carlo studies of rank selection, their run configurations,
//! and deterministic report tables.
//!
//! A study is a grid of cells (a true state and a repetition count) times a
//! number of replicates. Every replicate derives its own seeds from the study
//! seed, so results do not depend on scheduling and an interrupted run can be
//! resumed from its partial-results file.

use std::collections::BTreeSet;
use std::fmt::{self, Display, Write as _};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::simulate_dataset;
use crate::error::{Error, Result};
use crate::fit::FitOptions;
use crate::linalg::{kron, CMatrix, C64};
use crate::pauli::Axis;
use crate::rng::sub_seed;
use crate::selection::{scan_ranks, ScanOptions};
use crate::states::{hs_distance_sq, random_state, DensityMatrix};
use crate::stats::kl_measurement;

/// Fully resolved parameters of one run as ordered `key = value` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    entries: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig { entries: vec![("command".into(), command.into())] }
    }

    /// Set `key`, replacing an earlier value in place.
    pub fn set(mut self, key: &str, value: impl Display) -> Self {
        let v = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.entries.push((key.into(), v)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Parse the output of [`to_text`](Self::to_text). Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("config line {}: missing '='", i + 1)))?;
            let k = k.trim();
            if k.is_empty() || entries.iter().any(|(e, _)| e == k) {
                return Err(Error::Parse(format!("config line {}: empty or repeated key '{k}'", i + 1)));
            }
            entries.push((k.to_string(), v.trim().to_string()));
        }
        if entries.first().map(|(k, _)| k.as_str()) != Some("command") {
            return Err(Error::Parse("config must start with 'command = …'".into()));
        }
        Ok(RunConfig { entries })
    }

    /// First 16 hex digits of the SHA-256 of [`to_text`](Self::to_text).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Options shared by both studies.
#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub replicates: usize,
    pub seed: u64,
    pub restarts: usize,
    pub stop_after_increases: usize,
}

impl StudyOptions {
    fn scan(&self, seed: u64, max_rank: Option<usize>) -> ScanOptions {
        ScanOptions {
            stop_after_increases: self.stop_after_increases,
            max_rank,
            fit: FitOptions { restarts: self.restarts, seed, ..FitOptions::default() },
        }
    }
}

/// Random states of given ranks on `k` qubits, `n` repetitions per setting.
#[derive(Debug, Clone)]
pub struct Study1Config {
    pub k: usize,
    pub n: u64,
    pub true_ranks: Vec<usize>,
    /// Redraw a true state until its smallest nonzero eigenvalue is at
    /// least this fraction of the largest.
    pub min_eigenvalue_ratio: f64,
    pub options: StudyOptions,
}

impl Default for Study1Config {
    fn default() -> Self {
        Study1Config {
            k: 4,
            n: 100,
            true_ranks: vec![1, 2, 3],
            min_eigenvalue_ratio: 0.02,
            options: StudyOptions { replicates: 20, seed: 0, restarts: 5, stop_after_increases: 2 },
        }
    }
}

impl Study1Config {
    pub fn run_config(&self) -> RunConfig {
        let o = &self.options;
        RunConfig::new("study1")
            .set("k", self.k)
            .set("n", self.n)
            .set("true_ranks", join(&self.true_ranks))
            .set("min_eigenvalue_ratio", self.min_eigenvalue_ratio)
            .set("replicates", o.replicates)
            .set("seed", o.seed)
            .set("restarts", o.restarts)
            .set("stop_after_increases", o.stop_after_increases)
    }

    /// The true state of rank `r`: the first draw from the rank's seed stream
    /// that meets `min_eigenvalue_ratio`.
    pub fn state(&self, r: usize) -> Result<DensityMatrix> {
        const MAX_DRAWS: u64 = 10_000;
        let stream = sub_seed(self.options.seed, 1_000_000 + r as u64);
        for draw in 0..MAX_DRAWS {
            let rho = random_state(self.k, r, sub_seed(stream, draw))?;
            let ev = rho.eigenvalues();
            if ev[r - 1] >= self.min_eigenvalue_ratio * ev[0] {
                return Ok(rho);
            }
        }
        Err(Error::Domain(format!(
            "no rank-{r} state with eigenvalue ratio ≥ {} in {MAX_DRAWS} draws",
            self.min_eigenvalue_ratio
        )))
    }
}

/// Fixed generic Bloch direction of the one-qubit study states.
pub const STUDY2_DIRECTION: [f64; 3] = [0.3, 0.5, 0.8];

/// One-qubit states with eigenvalues `(λ, 1 − λ)` at several repetition counts.
#[derive(Debug, Clone)]
pub struct Study2Config {
    pub n_values: Vec<u64>,
    /// Largest eigenvalue of each state.
    pub eigenvalues: Vec<f64>,
    pub direction: [f64; 3],
    pub options: StudyOptions,
}

impl Default for Study2Config {
    fn default() -> Self {
        Study2Config {
            n_values: vec![10, 50, 100, 250, 500],
            eigenvalues: vec![1.0, 0.95, 0.72],
            direction: STUDY2_DIRECTION,
            options: StudyOptions { replicates: 200, seed: 0, restarts: 5, stop_after_increases: 2 },
        }
    }
}

impl Study2Config {
    pub fn run_config(&self) -> RunConfig {
        let o = &self.options;
        RunConfig::new("study2")
            .set("n_values", join(&self.n_values))
            .set("eigenvalues", join(&self.eigenvalues))
            .set("direction", join(&self.direction))
            .set("replicates", o.replicates)
            .set("seed", o.seed)
            .set("restarts", o.restarts)
            .set("stop_after_increases", o.stop_after_increases)
    }

    /// State with eigenvalues `(λ, 1 − λ)` and eigenbasis along `direction`.
    pub fn state(&self, lambda: f64) -> Result<DensityMatrix> {
        let u = self.direction;
        let len = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if !(len.is_finite() && len > 0.0) || !(0.5..=1.0).contains(&lambda) {
            return Err(Error::Domain("study2 needs a nonzero direction and λ in [0.5, 1]".into()));
        }
        let s = (2.0 * lambda - 1.0) / len;
        DensityMatrix::from_bloch([u[0] * s, u[1] * s, u[2] * s])
    }
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// One (true state, repetition count) cell of a study grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub true_rank: usize,
    pub n: u64,
    pub eigenvalues: Vec<f64>,
}

/// Per-rank results within one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub rank: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// `‖ρ̂_r − ρ‖₂²`.
    pub mse: f64,
    pub converged: bool,
}

/// Results of one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub config_hash: String,
    pub cell: usize,
    pub replicate: usize,
    pub data_seed: u64,
    pub selected_aic: usize,
    pub selected_bic: usize,
    pub ranks: Vec<RankRecord>,
    /// Measurement KL divergence from the truth to the rank-1 fit.
    pub kl_rank1: f64,
}

impl ReplicateRecord {
    pub fn rank(&self, r: usize) -> Option<&RankRecord> {
        self.ranks.iter().find(|x| x.rank == r)
    }

    /// `Λ = 2(ℓ̂_hi − ℓ̂_lo)` when both ranks were fitted.
    pub fn llr(&self, hi: usize, lo: usize) -> Option<f64> {
        Some(2.0 * (self.rank(hi)?.loglik - self.rank(lo)?.loglik))
    }
}

/// A replicate that could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub cell: usize,
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Study1,
    Study2,
}

/// Per-replicate records of a study with the aggregate tables derived from them.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub config: RunConfig,
    pub seed: u64,
    pub cells: Vec<Cell>,
    /// Sorted by `(cell, replicate)`.
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<Failure>,
}

/// Rank-selection counts for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionCounts {
    pub replicates: usize,
    /// `aic[r-1]` = number of replicates where AIC selected rank `r`.
    pub aic: Vec<usize>,
    pub bic: Vec<usize>,
}

impl SelectionCounts {
    pub fn aic_correct(&self, r: usize) -> usize {
        self.aic.get(r - 1).copied().unwrap_or(0)
    }

    pub fn bic_correct(&self, r: usize) -> usize {
        self.bic.get(r - 1).copied().unwrap_or(0)
    }
}

impl StudyReport {
    pub fn cell_records(&self, cell: usize) -> impl Iterator<Item = &ReplicateRecord> {
        self.records.iter().filter(move |r| r.cell == cell)
    }

    fn max_rank_column(&self) -> usize {
        let sel = self.records.iter().map(|r| r.selected_aic.max(r.selected_bic));
        let truth = self.cells.iter().map(|c| c.true_rank + 1);
        sel.chain(truth).max().unwrap_or(1)
    }

    pub fn selection_counts(&self, cell: usize) -> SelectionCounts {
        let cols = self.max_rank_column();
        let mut c = SelectionCounts { replicates: 0, aic: vec![0; cols], bic: vec![0; cols] };
        for r in self.cell_records(cell) {
            c.replicates += 1;
            c.aic[r.selected_aic - 1] += 1;
            c.bic[r.selected_bic - 1] += 1;
        }
        c
    }

    /// `(mean, standard error, count)` of `‖ρ̂_r − ρ‖₂²` over a cell.
    pub fn mse(&self, cell: usize, rank: usize) -> Option<(f64, f64, usize)> {
        let v: Vec<f64> = self.cell_records(cell).filter_map(|r| r.rank(rank)).map(|x| x.mse).collect();
        if v.is_empty() {
            return None;
        }
        let m = v.len() as f64;
        let mean = v.iter().sum::<f64>() / m;
        let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
        Some((mean, (var / m).sqrt(), v.len()))
    }

    fn prefix(&self) -> String {
        format!("{},{}", self.seed, self.config.hash())
    }

    /// Long-format per-replicate table, one row per fitted rank.
    pub fn records_csv(&self) -> String {
        let mut s = String::from(
            "seed,config_hash,cell,true_rank,n,replicate,data_seed,rank,loglik,aic,bic,mse,converged,selected_aic,selected_bic,kl_rank1\n",
        );
        for r in &self.records {
            let c = &self.cells[r.cell];
            for x in &r.ranks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    self.prefix(),
                    c.label,
                    c.true_rank,
                    c.n,
                    r.replicate,
                    r.data_seed,
                    x.rank,
                    x.loglik,
                    x.aic,
                    x.bic,
                    x.mse,
                    x.converged,
                    r.selected_aic,
                    r.selected_bic,
                    r.kl_rank1
                );
            }
        }
        s
    }

    /// Counts of selected ranks per cell and criterion.
    pub fn selection_csv(&self) -> String {
        let cols = self.max_rank_column();
        let mut s = String::from("seed,config_hash,cell,true_rank,n,eigenvalues,criterion,replicates");
        for r in 1..=cols {
            let _ = write!(s, ",rank_{r}");
        }
        s.push_str(",correct_rate\n");
        for (i, c) in self.cells.iter().enumerate() {
            let counts = self.selection_counts(i);
            for (name, v) in [("AIC", &counts.aic), ("BIC", &counts.bic)] {
                let _ = write!(s, "{},{},{},{},{},{},{}", self.prefix(), c.label, c.true_rank, c.n, join(&c.eigenvalues).replace(',', ";"), name, counts.replicates);
                for x in v {
                    let _ = write!(s, ",{x}");
                }
                let rate = if counts.replicates > 0 { v[c.true_rank - 1] as f64 / counts.replicates as f64 } else { 0.0 };
                let _ = writeln!(s, ",{rate}");
            }
        }
        s
    }

    /// Plot-ready mean squared errors per cell and fitted rank.
    pub fn mse_csv(&self) -> String {
        let mut s = String::from("seed,config_hash,cell,true_rank,n,rank,replicates,mse_mean,mse_stderr\n");
        let ranks: BTreeSet<usize> = self.records.iter().flat_map(|r| r.ranks.iter().map(|x| x.rank)).collect();
        for (i, c) in self.cells.iter().enumerate() {
            for &r in &ranks {
                if let Some((m, se, cnt)) = self.mse(i, r) {
                    let _ = writeln!(s, "{},{},{},{},{r},{cnt},{m},{se}", self.prefix(), c.label, c.true_rank, c.n);
                }
            }
        }
        s
    }

    pub fn failures_text(&self) -> String {
        let mut s = String::from("cell,replicate,error\n");
        for f in &self.failures {
            let _ = writeln!(s, "{},{},{}", self.cells[f.cell].label, f.replicate, f.error.replace(['\n', ','], " "));
        }
        s
    }

    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let cols = self.max_rank_column();
        let _ = writeln!(s, "# seed {} config {}", self.seed, self.config.hash());
        let _ = write!(s, "{:<22} {:>4} {:>5} {:>4}", "cell", "crit", "reps", "true");
        for r in 1..=cols {
            let _ = write!(s, " {:>5}", format!("r={r}"));
        }
        s.push('\n');
        for (i, c) in self.cells.iter().enumerate() {
            let counts = self.selection_counts(i);
            for (name, v) in [("AIC", &counts.aic), ("BIC", &counts.bic)] {
                let _ = write!(s, "{:<22} {:>4} {:>5} {:>4}", c.label, name, counts.replicates, c.true_rank);
                for x in v {
                    let _ = write!(s, " {x:>5}");
                }
                s.push('\n');
            }
        }
        if !self.failures.is_empty() {
            let _ = writeln!(s, "# {} replicate(s) failed; see failures.csv", self.failures.len());
        }
        s
    }

    /// Write `config.txt`, `records.csv`, `selection.csv`, `mse.csv` and
    /// `failures.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.txt"), self.config.to_text())?;
        std::fs::write(dir.join("records.csv"), self.records_csv())?;
        std::fs::write(dir.join("selection.csv"), self.selection_csv())?;
        std::fs::write(dir.join("mse.csv"), self.mse_csv())?;
        std::fs::write(dir.join("failures.csv"), self.failures_text())?;
        Ok(())
    }
}

/// Name of the append-only partial-results file inside a study directory.
pub const PARTIAL_FILE: &str = "partial.jsonl";

fn load_partial(path: &Path, hash: &str) -> Result<Vec<ReplicateRecord>> {
    let f = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        // A torn final line from an interrupted write is skipped.
        if let Ok(rec) = serde_json::from_str::<ReplicateRecord>(&line) {
            if rec.config_hash == hash {
                out.push(rec);
            }
        }
    }
    Ok(out)
}

struct Job<'a> {
    config: &'a RunConfig,
    seed: u64,
    cells: Vec<Cell>,
    replicates: usize,
    resume_dir: Option<&'a Path>,
}

impl Job<'_> {
    fn run<F>(self, kind: StudyKind, unit: F) -> Result<StudyReport>
    where
        F: Fn(usize, usize, &str) -> Result<ReplicateRecord> + Sync,
    {
        let hash = self.config.hash();
        let partial: Option<PathBuf> = self.resume_dir.map(|d| d.join(PARTIAL_FILE));
        let mut done = Vec::new();
        if let Some(p) = &partial {
            std::fs::create_dir_all(p.parent().expect("file in a directory"))?;
            done = load_partial(p, &hash)?;
        }
        let finished: BTreeSet<(usize, usize)> = done.iter().map(|r| (r.cell, r.replicate)).collect();
        let todo: Vec<(usize, usize)> = (0..self.cells.len())
            .flat_map(|c| (0..self.replicates).map(move |r| (c, r)))
            .filter(|u| !finished.contains(u))
            .collect();
        let sink = match &partial {
            Some(p) => Some(Mutex::new(OpenOptions::new().create(true).append(true).open(p)?)),
            None => None,
        };
        let results: Vec<std::result::Result<ReplicateRecord, Failure>> = todo
            .par_iter()
            .map(|&(cell, replicate)| {
                let res = unit(cell, replicate, &hash).map_err(|e| Failure { cell, replicate, error: e.to_string() });
                if let (Ok(rec), Some(sink)) = (&res, &sink) {
                    let line = serde_json::to_string(rec).expect("serializable record");
                    let mut f = sink.lock().expect("partial file lock");
                    let _ = writeln!(f, "{line}");
                    let _ = f.flush();
                }
                res
            })
            .collect();
        let mut records = done;
        let mut failures = Vec::new();
        for r in results {
            match r {
                Ok(rec) => records.push(rec),
                Err(f) => failures.push(f),
            }
        }
        records.sort_by_key(|r| (r.cell, r.replicate));
        records.dedup_by_key(|r| (r.cell, r.replicate));
        failures.sort_by_key(|f| (f.cell, f.replicate));
        Ok(StudyReport { kind, config: self.config.clone(), seed: self.seed, cells: self.cells, records, failures })
    }
}

fn replicate_record(
    truth: &DensityMatrix,
    n: u64,
    data_seed: u64,
    scan: &ScanOptions,
    cell: usize,
    replicate: usize,
    hash: &str,
) -> Result<ReplicateRecord> {
    let data = simulate_dataset(truth, n, data_seed)?;
    let result = scan_ranks(&data, scan)?;
    if let Some(msg) = &result.failure {
        return Err(Error::FitFailed(msg.clone()));
    }
    let mut ranks = Vec::with_capacity(result.entries.len());
    for e in &result.entries {
        let rho = e.fit.state();
        ranks.push(RankRecord {
            rank: e.rank(),
            loglik: e.loglik(),
            aic: e.criteria.aic,
            bic: e.criteria.bic,
            mse: hs_distance_sq(rho.matrix(), truth.matrix())?,
            converged: e.fit.converged,
        });
    }
    let rank1 = result.fit(1).expect("rank 1 is always fitted");
    Ok(ReplicateRecord {
        config_hash: hash.to_string(),
        cell,
        replicate,
        data_seed,
        selected_aic: result.selected_rank_aic,
        selected_bic: result.selected_rank_bic,
        ranks,
        kl_rank1: kl_measurement(truth, &rank1.factor)?,
    })
}

/// Rank selection on random `k`-qubit states of each true rank.
///
/// With `resume_dir`, completed replicates are appended to
/// [`PARTIAL_FILE`] there and skipped on the next run with the same config.
pub fn run_study1(cfg: &Study1Config, resume_dir: Option<&Path>) -> Result<StudyReport> {
    let d = 1usize << cfg.k;
    if cfg.n == 0 || cfg.true_ranks.is_empty() || cfg.true_ranks.iter().any(|&r| r == 0 || r > d) {
        return Err(Error::Domain("study1 needs n ≥ 1 and true ranks in 1..=2^k".into()));
    }
    let config = cfg.run_config();
    let states: Vec<DensityMatrix> = cfg.true_ranks.iter().map(|&r| cfg.state(r)).collect::<Result<_>>()?;
    let cells = cfg
        .true_ranks
        .iter()
        .zip(&states)
        .map(|(&r, s)| Cell { label: format!("rank{r}"), true_rank: r, n: cfg.n, eigenvalues: top_eigenvalues(s, r) })
        .collect();
    let o = &cfg.options;
    let job = Job { config: &config, seed: o.seed, cells, replicates: o.replicates, resume_dir };
    job.run(StudyKind::Study1, |cell, rep, hash| {
        let stream = sub_seed(sub_seed(o.seed, cfg.true_ranks[cell] as u64), rep as u64);
        let data_seed = sub_seed(stream, 0);
        let scan = o.scan(sub_seed(stream, 1), None);
        replicate_record(&states[cell], cfg.n, data_seed, &scan, cell, rep, hash)
    })
}

fn top_eigenvalues(rho: &DensityMatrix, r: usize) -> Vec<f64> {
    rho.eigenvalues().into_iter().take(r).map(|x| (x * 1e6).round() / 1e6).collect()
}

/// Rank selection on one-qubit states over a grid of repetition counts.
pub fn run_study2(cfg: &Study2Config, resume_dir: Option<&Path>) -> Result<StudyReport> {
    if cfg.n_values.is_empty() || cfg.n_values.contains(&0) || cfg.eigenvalues.is_empty() {
        return Err(Error::Domain("study2 needs nonzero repetition counts and at least one state".into()));
    }
    let config = cfg.run_config();
    let states: Vec<DensityMatrix> = cfg.eigenvalues.iter().map(|&l| cfg.state(l)).collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (si, &l) in cfg.eigenvalues.iter().enumerate() {
        for &n in &cfg.n_values {
            let true_rank = if l >= 1.0 { 1 } else { 2 };
            cells.push(Cell { label: format!("state{}_n{n}", si + 1), true_rank, n, eigenvalues: vec![l, 1.0 - l] });
        }
    }
    let o = &cfg.options;
    let per_state = cfg.n_values.len();
    let job = Job { config: &config, seed: o.seed, cells, replicates: o.replicates, resume_dir };
    job.run(StudyKind::Study2, |cell, rep, hash| {
        let stream = sub_seed(sub_seed(o.seed, cell as u64), rep as u64);
        let data_seed = sub_seed(stream, 0);
        let scan = o.scan(sub_seed(stream, 1), Some(2));
        replicate_record(&states[cell / per_state], cfg.n_values[cell % per_state], data_seed, &scan, cell, rep, hash)
    })
}

/// `w·S + (1 − w)·σ` with `S = (I + XXXX + YYYY + ZZZZ)/16` the rank-4
/// four-qubit Smolin state and `σ` a random rank-`noise_rank` state.
pub fn smolin_mixture(weight: f64, noise_rank: usize, seed: u64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::Domain(format!("mixture weight {weight} outside [0, 1]")));
    }
    let word = |a: Axis| {
        let p = a.pauli();
        kron(&kron(&p, &p), &kron(&p, &p))
    };
    let smolin = (CMatrix::identity(16, 16) + word(Axis::X) + word(Axis::Y) + word(Axis::Z)) / C64::new(16.0, 0.0);
    let noise = random_state(4, noise_rank, seed)?;
    DensityMatrix::new(smolin * C64::new(weight, 0.0) + noise.matrix() * C64::new(1.0 - weight, 0.0))
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyKind::Study1 => "study1",
            StudyKind::Study2 => "study2",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_hash() {
        let c = RunConfig::new("fit").set("rank", 2).set("seed", 7).set("rank", 3);
        assert_eq!(c.get("rank"), Some("3"));
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 16);
        assert_ne!(c.clone().set("seed", 8).hash(), c.hash());
        assert!(RunConfig::parse("seed = 1\n").is_err());
        assert!(RunConfig::parse("command = x\na = 1\na = 2\n").is_err());
    }

    #[test]
    fn smolin_is_rank_four() {
        let s = smolin_mixture(1.0, 1, 0).unwrap();
        assert_eq!(s.numerical_rank(1e-10), 4);
        let m = smolin_mixture(0.9, 4, 3).unwrap();
        assert_eq!(m.numerical_rank(1e-10), 8);
    }

    #[test]
    fn study2_states() {
        let cfg = Study2Config::default();
        let s = cfg.state(0.95).unwrap();
        let ev = s.eigenvalues();
        assert!((ev[0] - 0.95).abs() < 1e-12 && (ev[1] - 0.05).abs() < 1e-12);
        assert_eq!(cfg.state(1.0).unwrap().numerical_rank(1e-10), 1);
    }

    fn small_study2() -> Study2Config {
        Study2Config {
            n_values: vec![20, 80],
            eigenvalues: vec![1.0, 0.8],
            options: StudyOptions { replicates: 6, seed: 5, restarts: 2, stop_after_increases: 2 },
            ..Default::default()
        }
    }

    #[test]
    fn counts_match_records_and_runs_repeat() {
        let cfg = small_study2();
        let a = run_study2(&cfg, None).unwrap();
        let b = run_study2(&cfg, None).unwrap();
        assert_eq!(a.records_csv(), b.records_csv());
        assert_eq!(a.selection_csv(), b.selection_csv());
        for i in 0..a.cells.len() {
            let c = a.selection_counts(i);
            assert_eq!(c.aic.iter().sum::<usize>(), cfg.options.replicates);
            let t = a.cells[i].true_rank;
            let bic_hits = a.cell_records(i).filter(|r| r.selected_bic == t).count();
            assert_eq!(c.bic_correct(t), bic_hits);
        }
    }

    #[test]
    fn resume_gives_identical_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_study2();
        let full = run_study2(&cfg, None).unwrap();
        // Simulate an interrupted run: keep only some of the partial lines.
        run_study2(&cfg, Some(dir.path())).unwrap();
        let p = dir.path().join(PARTIAL_FILE);
        let text = std::fs::read_to_string(&p).unwrap();
        let kept: Vec<&str> = text.lines().take(7).collect();
        std::fs::write(&p, kept.join("\n") + "\n{\"torn").unwrap();
        let resumed = run_study2(&cfg, Some(dir.path())).unwrap();
        assert_eq!(resumed.records_csv(), full.records_csv());
        assert_eq!(resumed.mse_csv(), full.mse_csv());
    }
}
