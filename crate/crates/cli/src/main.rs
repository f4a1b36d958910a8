//! `ranktomo` command-line interface.
//!
//! Every command prints its resolved run configuration as `key = value`
//! lines followed by one or more CSV tables whose rows start with the seed
//! and the configuration hash. Exit status is 0 on success, 2 for invalid
//! input and 3 for numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use ranktomo::fit::fit_rank;
use ranktomo::rng::sub_seed;
use ranktomo::selection::{information_criteria, model_dim, scan_ranks, ScanOptions};
use ranktomo::states::{random_state, QuantumState};
use ranktomo::stats::{bootstrap_pearson_from_fit, pearson_test, qmse_bound, BootstrapOptions};
use ranktomo::study::{run_study1, run_study2, RunConfig, Study1Config, Study2Config, StudyOptions, StudyReport};
use ranktomo::{load_dataset, save_dataset, simulate_dataset, Error, FitOptions, Result};

#[derive(Parser)]
#[command(name = "ranktomo", version, about = "Rank selection for multi-qubit Pauli tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Criterion {
    Aic,
    Bic,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random rank-r state and simulate Pauli-setting counts from it.
    Simulate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        rank: usize,
        /// Repetitions per setting.
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset (.json or .csv).
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum-likelihood fit at a fixed rank.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit increasing ranks and select one by AIC and/or BIC.
    Select {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        max_rank: Option<usize>,
        #[arg(long, value_enum, default_value_t = Criterion::Both)]
        criterion: Criterion,
        /// Stop after this many ranks without a new criterion minimum.
        #[arg(long, default_value_t = 2)]
        patience: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pearson goodness-of-fit test of the rank-r model.
    Test {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Parametric-bootstrap samples; 0 uses the χ² approximation.
        #[arg(long, default_value_t = 100)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quantum mean-squared-error bound for pure states.
    Bound {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: f64,
    },
    /// Rank selection on random states of several ranks.
    Study1 {
        #[arg(long, default_value_t = 20)]
        replicates: usize,
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        true_ranks: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        /// Directory for report tables and resumable partial results.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-qubit rank selection over a grid of repetition counts.
    Study2 {
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "10,50,100,250,500")]
        n_values: Vec<u64>,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A titled CSV table whose rows are prefixed with seed and config hash.
struct Table {
    title: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(title: &'static str, header: &[&'static str]) -> Self {
        Table { title, header: header.to_vec(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

struct Report {
    config: RunConfig,
    seed: String,
    tables: Vec<Table>,
    raw: Vec<(&'static str, String)>,
}

impl Report {
    fn new(config: RunConfig, seed: Option<u64>) -> Self {
        let seed = seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        Report { config, seed, tables: Vec::new(), raw: Vec::new() }
    }

    fn render(&self) -> String {
        let hash = self.config.hash();
        let mut s = String::from("[config]\n");
        s.push_str(&self.config.to_text());
        s.push_str(&format!("config_hash = {hash}\n"));
        for t in &self.tables {
            s.push_str(&format!("\n[{}]\nseed,config_hash,{}\n", t.title, t.header.join(",")));
            for r in &t.rows {
                s.push_str(&format!("{},{hash},{}\n", self.seed, r.join(",")));
            }
        }
        for (title, body) in &self.raw {
            s.push_str(&format!("\n[{title}]\n{body}"));
        }
        s
    }
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().take(8).map(|b| format!("{b:02x}")).collect())
}

fn fit_options(restarts: usize, seed: u64) -> Result<FitOptions> {
    if restarts == 0 {
        return Err(Error::Domain("--restarts must be at least 1".into()));
    }
    Ok(FitOptions { restarts, seed, ..FitOptions::default() })
}

fn eigen_table(state: &impl QuantumState, r: usize) -> Result<Table> {
    let mut t = Table::new("eigenvalues", &["index", "eigenvalue"]);
    for (i, v) in state.density().eigenvalues().into_iter().take(r).enumerate() {
        t.row(vec![(i + 1).to_string(), v.to_string()]);
    }
    Ok(t)
}

fn simulate(k: usize, rank: usize, n: u64, seed: u64, out: &Path) -> Result<Report> {
    let config = RunConfig::new("simulate").set("k", k).set("rank", rank).set("n", n).set("seed", seed).set("out", out.display());
    let truth = random_state(k, rank, sub_seed(seed, 0))?;
    let data = simulate_dataset(&truth, n, sub_seed(seed, 1))?;
    save_dataset(&data, out)?;
    let mut report = Report::new(config, Some(seed));
    let mut t = Table::new("dataset", &["k", "settings", "repetitions", "total"]);
    t.row(vec![k.to_string(), (3usize.pow(k as u32)).to_string(), n.to_string(), data.total().to_string()]);
    report.tables.push(t);
    let mut e = eigen_table(&truth, rank)?;
    e.title = "true_eigenvalues";
    report.tables.push(e);
    Ok(report)
}

fn fit(input: &Path, rank: usize, restarts: usize, seed: u64) -> Result<Report> {
    let config = RunConfig::new("fit")
        .set("in", input.display())
        .set("input_sha256", file_digest(input)?)
        .set("rank", rank)
        .set("restarts", restarts)
        .set("seed", seed);
    let data = load_dataset(input)?;
    let f = fit_rank(&data, rank, &fit_options(restarts, seed)?)?;
    let ic = information_criteria(&f, &data)?;
    let mut t = Table::new("fit", &["rank", "dim", "loglik", "aic", "bic", "converged", "iterations", "grad_norm", "best_start"]);
    t.row(vec![
        rank.to_string(),
        ic.dim.to_string(),
        f.loglik.to_string(),
        ic.aic.to_string(),
        ic.bic.to_string(),
        f.converged.to_string(),
        f.iterations.to_string(),
        f.grad_norm.to_string(),
        f.best_start.to_string(),
    ]);
    let mut report = Report::new(config, Some(seed));
    report.tables.push(t);
    report.tables.push(eigen_table(&f.factor, rank)?);
    Ok(report)
}

fn select(input: &Path, max_rank: Option<usize>, criterion: Criterion, patience: usize, restarts: usize, seed: u64) -> Result<Report> {
    let config = RunConfig::new("select")
        .set("in", input.display())
        .set("input_sha256", file_digest(input)?)
        .set("max_rank", max_rank.map_or_else(|| "auto".to_string(), |r| r.to_string()))
        .set("criterion", criterion.to_possible_value().expect("named").get_name())
        .set("patience", patience)
        .set("restarts", restarts)
        .set("seed", seed);
    let data = load_dataset(input)?;
    let scan = scan_ranks(&data, &ScanOptions { stop_after_increases: patience, max_rank, fit: fit_options(restarts, seed)? })?;
    let mut t = Table::new("scan", &["rank", "dim", "loglik", "aic", "bic", "converged"]);
    for e in &scan.entries {
        t.row(vec![
            e.rank().to_string(),
            model_dim(1 << data.num_qubits(), e.rank())?.to_string(),
            e.loglik().to_string(),
            e.criteria.aic.to_string(),
            e.criteria.bic.to_string(),
            e.fit.converged.to_string(),
        ]);
    }
    let mut sel = Table::new("selected", &["criterion", "rank"]);
    if criterion != Criterion::Bic {
        sel.row(vec!["AIC".into(), scan.selected_rank_aic.to_string()]);
    }
    if criterion != Criterion::Aic {
        sel.row(vec!["BIC".into(), scan.selected_rank_bic.to_string()]);
    }
    let mut report = Report::new(config, Some(seed));
    report.tables.push(t);
    report.tables.push(sel);
    if let Some(msg) = &scan.failure {
        report.raw.push(("scan_failure", format!("{msg}\n")));
    }
    Ok(report)
}

fn test(input: &Path, rank: usize, bootstrap: usize, alpha: f64, restarts: usize, seed: u64) -> Result<Report> {
    let config = RunConfig::new("test")
        .set("in", input.display())
        .set("input_sha256", file_digest(input)?)
        .set("rank", rank)
        .set("bootstrap", bootstrap)
        .set("alpha", alpha)
        .set("restarts", restarts)
        .set("seed", seed);
    let data = load_dataset(input)?;
    let fit_opts = fit_options(restarts, seed)?;
    let f = fit_rank(&data, rank, &fit_opts)?;
    let res = if bootstrap == 0 {
        pearson_test(&data, &f, alpha)?
    } else {
        let opts = BootstrapOptions { samples: bootstrap, alpha, seed, fit: fit_opts, ..BootstrapOptions::default() };
        bootstrap_pearson_from_fit(&data, &f, &opts)?
    };
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    let mut t = Table::new(
        "test",
        &["rank", "method", "statistic", "df", "alpha", "threshold", "p_value", "reject", "dropped", "chi2_threshold", "chi2_p_value"],
    );
    t.row(vec![
        rank.to_string(),
        res.method.to_string(),
        res.statistic.to_string(),
        res.df.to_string(),
        alpha.to_string(),
        res.threshold.to_string(),
        res.p_value.to_string(),
        res.reject.to_string(),
        res.dropped.to_string(),
        opt(res.asymptotic_threshold),
        opt(res.asymptotic_p_value),
    ]);
    let mut report = Report::new(config, Some(seed));
    report.tables.push(t);
    Ok(report)
}

fn bound(k: usize, n: f64) -> Result<Report> {
    if k == 0 || !(n.is_finite() && n > 0.0) {
        return Err(Error::Domain("bound needs k ≥ 1 and n > 0".into()));
    }
    let config = RunConfig::new("bound").set("k", k).set("n", n);
    let mut t = Table::new("bound", &["k", "n", "qmse_bound"]);
    t.row(vec![k.to_string(), n.to_string(), qmse_bound(k, n).to_string()]);
    let mut report = Report::new(config, None);
    report.tables.push(t);
    Ok(report)
}

fn study_report(study: StudyReport, out: Option<&Path>) -> Result<Report> {
    if let Some(dir) = out {
        study.write(dir)?;
    }
    let mut report = Report::new(study.config.clone(), Some(study.seed));
    report.raw.push(("selection", study.selection_csv()));
    report.raw.push(("mse", study.mse_csv()));
    if !study.failures.is_empty() {
        report.raw.push(("failures", study.failures_text()));
    }
    report.raw.push(("summary", study.summary()));
    Ok(report)
}

fn run(cli: Cli) -> Result<String> {
    let report = match cli.command {
        Command::Simulate { k, rank, n, seed, out } => simulate(k, rank, n, seed, &out)?,
        Command::Fit { input, rank, restarts, seed } => fit(&input, rank, restarts, seed)?,
        Command::Select { input, max_rank, criterion, patience, restarts, seed } => {
            select(&input, max_rank, criterion, patience, restarts, seed)?
        }
        Command::Test { input, rank, bootstrap, alpha, restarts, seed } => test(&input, rank, bootstrap, alpha, restarts, seed)?,
        Command::Bound { k, n } => bound(k, n)?,
        Command::Study1 { replicates, n, seed, k, true_ranks, restarts, out } => {
            let cfg = Study1Config {
                k,
                n,
                true_ranks,
                options: StudyOptions { replicates, seed, restarts, stop_after_increases: 2 },
                ..Study1Config::default()
            };
            study_report(run_study1(&cfg, out.as_deref())?, out.as_deref())?
        }
        Command::Study2 { replicates, seed, n_values, restarts, out } => {
            let cfg = Study2Config {
                n_values,
                options: StudyOptions { replicates, seed, restarts, stop_after_increases: 2 },
                ..Study2Config::default()
            };
            study_report(run_study2(&cfg, out.as_deref())?, out.as_deref())?
        }
    };
    Ok(report.render())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
