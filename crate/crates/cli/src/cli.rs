//! Command line definition and the batch subcommands.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mstlens::experiments::{mann_whitney_less, power_csv, power_experiment, stability_mixture, PowerConfig};
use mstlens::mst_test::DEFAULT_REPLICATES;
use mstlens::rf::default_noise_sd;
use mstlens::session::TestView;
use mstlens::{load_session, stability_experiment, Clustering, Dataset, GroupsRequest, Session};

use crate::api::{router, AppState};

#[derive(Debug, Parser)]
#[command(name = "mstlens", version, about = "Minimum-spanning-tree diagnostics for 2-D embeddings of clustered data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Start the HTTP API.
    Serve(ServeArgs),
    /// Run the MST test between two classes or two lists of row ids.
    Test(TestArgs),
    /// Compare medoid-tree stability under noise and under label permutation.
    Stability(StabilityArgs),
    /// Estimate rejection rates on separated uniform boxes.
    Power(PowerArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Feature matrix CSV (optional leading `id` column).
    #[arg(long)]
    pub data: PathBuf,
    /// Two-column embedding CSV, row-aligned with the data.
    #[arg(long)]
    pub embedding: PathBuf,
    /// One-column class label CSV, row-aligned with the data.
    #[arg(long)]
    pub labels: PathBuf,
    /// Optional per-row metadata CSV.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Work on this many leading principal components.
    #[arg(long)]
    pub pca_dims: Option<usize>,
}

impl InputArgs {
    fn session(&self) -> anyhow::Result<Session> {
        let inputs = load_session(&self.data, &self.embedding, &self.labels, self.meta.as_deref())?;
        Ok(Session::new(inputs, self.pca_dims)?)
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "MSTLENS_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Keep one JSON snapshot per session here and reload them at start-up.
    #[arg(long)]
    pub snapshot_dir: Option<PathBuf>,
    /// Preload a session from these files.
    #[arg(long, requires_all = ["embedding", "labels"])]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub embedding: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub labels: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub meta: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub pca_dims: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Two class labels, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["group1", "group2"])]
    pub classes: Option<Vec<String>>,
    /// File with one row id per line.
    #[arg(long, requires = "group2")]
    pub group1: Option<PathBuf>,
    #[arg(long, requires = "group1")]
    pub group2: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub replicates: usize,
    /// Seed for the null simulation; drawn at random and reported when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the full result as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Feature matrix CSV; the bundled ten-cluster mixture is used when absent.
    #[arg(long, requires = "labels")]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub labels: Option<PathBuf>,
    /// Replicates per arm.
    #[arg(long, default_value_t = 30)]
    pub reps: usize,
    /// Standard deviation of the added noise; defaults to half the median
    /// pairwise distance over sqrt(p).
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Half-gaps between the boxes.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub c: Vec<f64>,
    /// Dimensions.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50,100")]
    pub p: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Null replicates per test.
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_ids(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

pub fn run_test(args: &TestArgs) -> anyhow::Result<String> {
    let mut session = args.inputs.session()?;
    let (group1, group2) = match (&args.classes, &args.group1, &args.group2) {
        (Some(classes), _, _) => {
            if classes.len() != 2 || classes[0] == classes[1] {
                bail!("--classes needs two distinct labels, got {classes:?}");
            }
            let clustering = &session.inputs().clustering;
            let ids = session.inputs().dataset.ids();
            let members = |c: &str| -> anyhow::Result<Vec<String>> {
                Ok(clustering.members(c)?.into_iter().map(|r| ids[r].clone()).collect())
            };
            (members(&classes[0])?, members(&classes[1])?)
        }
        (None, Some(g1), Some(g2)) => (read_ids(g1)?, read_ids(g2)?),
        _ => bail!("give either --classes A,B or both --group1 and --group2"),
    };
    if group1.len() < 2 || group2.len() < 2 {
        bail!(
            "each group needs at least two points (got {} and {})",
            group1.len(),
            group2.len()
        );
    }
    session.select_groups(&GroupsRequest::Ids { group1, group2 })?;
    let view = session.run_test(Some(args.replicates), args.seed)?;
    Ok(if args.json {
        serde_json::to_string_pretty(&view)? + "\n"
    } else {
        describe(&view)
    })
}

fn describe(v: &TestView) -> String {
    let r = &v.result;
    format!(
        "observed crossings  {}\n\
         direct edges        {}\n\
         via mediators       {}\n\
         null mean           {:.3}\n\
         null sd             {:.3}\n\
         p-value             {:.4}\n\
         replicates          {}\n\
         seed                {}\n",
        r.observed,
        v.crossing.direct_edges,
        v.crossing.mediator_contribution,
        r.null_mean,
        r.null_sd,
        r.p_value,
        r.replicates,
        r.seed
    )
}

pub fn run_stability(args: &StabilityArgs) -> anyhow::Result<(String, String)> {
    let (data, clustering) = match (&args.data, &args.labels) {
        (Some(d), Some(l)) => {
            let data = Dataset::read_csv(d)?;
            let text = std::fs::read_to_string(l).with_context(|| format!("reading {}", l.display()))?;
            let clustering = Clustering::from_csv_str(&l.display().to_string(), &text)?;
            if clustering.len() != data.n_rows() {
                bail!("{} labels for {} data rows", clustering.len(), data.n_rows());
            }
            (data, clustering)
        }
        _ => stability_mixture(),
    };
    let sd = args.noise_sd.unwrap_or_else(|| default_noise_sd(&data));
    let report = stability_experiment(&data, &clustering, sd, args.reps, args.seed)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let p = mann_whitney_less(&report.noise, &report.permutation)?;
    let summary = format!(
        "noise sd {sd:.4}; mean RF distance: noise {:.4}, permutation {:.4}; one-sided Mann-Whitney p = {p:.3e}\n",
        mean(&report.noise),
        mean(&report.permutation)
    );
    Ok((report.to_csv(), summary))
}

pub fn run_power(args: &PowerArgs) -> anyhow::Result<String> {
    if args.c.is_empty() || args.p.is_empty() {
        bail!("--c and --p need at least one value each");
    }
    let rows = power_experiment(&PowerConfig {
        cs: args.c.clone(),
        ps: args.p.clone(),
        trials: args.trials,
        alpha: args.alpha,
        replicates: args.replicates,
        seed: args.seed,
    })?;
    Ok(power_csv(&rows))
}

pub async fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    let state = match &args.snapshot_dir {
        Some(dir) => AppState::with_snapshot_dir(dir)?,
        None => AppState::new(),
    };
    if !state.is_empty() {
        tracing::info!(sessions = state.len(), "restored snapshots");
    }
    if let (Some(data), Some(embedding), Some(labels)) = (&args.data, &args.embedding, &args.labels) {
        let inputs = load_session(data, embedding, labels, args.meta.as_deref())?;
        let id = state.insert(Session::new(inputs, args.pca_dims)?)?;
        println!("session {id}");
    }
    let addr = SocketAddr::new(args.host, args.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Serve(args) => tokio::runtime::Runtime::new()?.block_on(serve(&args)),
        Command::Test(args) => emit(None, &run_test(&args)?),
        Command::Stability(args) => {
            let (csv, summary) = run_stability(&args)?;
            emit(args.out.as_deref(), &csv)?;
            eprint!("{summary}");
            Ok(())
        }
        Command::Power(args) => emit(args.out.as_deref(), &run_power(&args)?),
    }
}
