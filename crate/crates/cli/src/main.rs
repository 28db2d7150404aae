mod io;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use flowmotif_core::analytics::{self, DEFAULT_CLUSTERS, DEFAULT_MAX_ITER};
use flowmotif_core::motif::DEFAULT_K;
use flowmotif_core::null_model::{DEFAULT_MAX_REPAIR_ATTEMPTS, DEFAULT_REPLICATES};
use flowmotif_core::possession::DEFAULT_T_MAX;
use flowmotif_core::report::{self, svg, ClusterSummary, RunManifest};
use flowmotif_core::{
    pipeline, synth, Format, NullModelConfig, NullPolicy, PcaOptions, PipelineConfig,
    SegmentationConfig, TeamStyleParams,
};

use crate::io::{Failure, Outputs};

/// Flow-motif analysis of soccer pass networks.
#[derive(Parser, Debug)]
#[command(name = "flowmotif", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Passes per motif
    #[arg(long, global = true, default_value_t = DEFAULT_K)]
    k: usize,

    /// Maximum gap between two passes of one possession, in seconds
    #[arg(long, global = true, default_value_t = DEFAULT_T_MAX)]
    tmax: f64,

    /// Randomized replicates per match
    #[arg(long, global = true, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,

    /// Master seed for the null model, k-means restarts and synthetic leagues
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = NullModelArg::TouchShuffleMatch)]
    null_model: NullModelArg,

    /// Swap attempts per repair, and full resamples per replicate
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_REPAIR_ATTEMPTS)]
    max_repair_attempts: usize,

    /// Number of k-means clusters
    #[arg(long, global = true, default_value_t = DEFAULT_CLUSTERS)]
    clusters: usize,

    /// Principal components to keep
    #[arg(long, global = true, default_value_t = 2)]
    pca_dims: usize,

    /// Scale each feature to unit variance before PCA
    #[arg(long, global = true)]
    pca_standardize: bool,

    /// Pass-event file format; guessed from the extension when omitted
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count motifs per match and team
    Motifs { inputs: Vec<PathBuf> },
    /// Score motif counts against the null model
    Zscores { inputs: Vec<PathBuf> },
    /// Average z-score tables into one fingerprint per team
    Fingerprint { inputs: Vec<PathBuf> },
    /// k-means, Ward clustering and PCA of a fingerprint table
    Cluster { input: PathBuf },
    /// PCA of a fingerprint table
    Pca { input: PathBuf },
    /// Generate a synthetic league
    Synth {
        /// JSON array of team style parameters
        #[arg(long)]
        teams: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NullModelArg {
    TouchShuffleMatch,
    TouchShufflePossession,
    UniformWalk,
}

impl From<NullModelArg> for NullPolicy {
    fn from(arg: NullModelArg) -> Self {
        match arg {
            NullModelArg::TouchShuffleMatch => NullPolicy::TouchShuffleMatch,
            NullModelArg::TouchShufflePossession => NullPolicy::TouchShufflePossession,
            NullModelArg::UniformWalk => NullPolicy::UniformWalk,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for Format {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        }
    }
}

impl Cli {
    fn pipeline(&self) -> Result<PipelineConfig, Failure> {
        let config = PipelineConfig {
            segmentation: SegmentationConfig::new(self.tmax).map_err(Failure::input)?,
            k: self.k,
            null: NullModelConfig {
                replicates: self.replicates,
                policy: self.null_model.into(),
                master_seed: self.seed,
                max_repair_attempts: self.max_repair_attempts,
            },
        };
        config.null.validate().map_err(Failure::input)?;
        flowmotif_core::enumerate_patterns(self.k).map_err(Failure::input)?;
        Ok(config)
    }

    fn config_echo(&self) -> BTreeMap<String, serde_json::Value> {
        let mut m = BTreeMap::new();
        m.insert("k".into(), json!(self.k));
        m.insert("tmax".into(), json!(self.tmax));
        m.insert("replicates".into(), json!(self.replicates));
        m.insert("seed".into(), json!(self.seed));
        m.insert(
            "null_model".into(),
            json!(NullPolicy::from(self.null_model).name()),
        );
        m.insert(
            "max_repair_attempts".into(),
            json!(self.max_repair_attempts),
        );
        m.insert("clusters".into(), json!(self.clusters));
        m.insert("pca_dims".into(), json!(self.pca_dims));
        m.insert("pca_standardize".into(), json!(self.pca_standardize));
        m.insert(
            "format".into(),
            json!(self.format.map(|f| Format::from(f).to_string())),
        );
        m
    }

    fn pca_options(&self) -> PcaOptions {
        PcaOptions {
            dims: self.pca_dims,
            standardize: self.pca_standardize,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(err) = configure_threads() {
        eprintln!("flowmotif: {err:#}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("flowmotif: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("FLOWMOTIF_THREADS") else {
        return Ok(());
    };
    let threads: usize =
        value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            anyhow!("FLOWMOTIF_THREADS must be a positive integer, got `{value}`")
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let mut outputs = Outputs::new(cli.out.clone());
    let (name, inputs): (&str, Vec<PathBuf>) = match &cli.command {
        Command::Motifs { inputs } => ("motifs", cmd_motifs(cli, inputs, &mut outputs)?),
        Command::Zscores { inputs } => ("zscores", cmd_zscores(cli, inputs, &mut outputs)?),
        Command::Fingerprint { inputs } => ("fingerprint", cmd_fingerprint(inputs, &mut outputs)?),
        Command::Cluster { input } => ("cluster", cmd_cluster(cli, input, &mut outputs)?),
        Command::Pca { input } => ("pca", cmd_pca(cli, input, &mut outputs)?),
        Command::Synth { teams } => ("synth", cmd_synth(cli, teams, &mut outputs)?),
    };
    if cli.out.is_some() {
        let manifest = RunManifest {
            command: name.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cli.config_echo(),
            inputs: io::digests(&inputs)?,
            outputs: outputs.written().to_vec(),
            duration_s: started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(Failure::internal)? + "\n";
        outputs.write_manifest(text.as_bytes())?;
    }
    Ok(())
}

fn cmd_motifs(cli: &Cli, inputs: &[PathBuf], out: &mut Outputs) -> Result<Vec<PathBuf>, Failure> {
    let config = cli.pipeline()?;
    let files = io::expand_event_inputs(inputs)?;
    let logs = io::load_logs(&files, cli.format.map(Format::from))?;
    let counts = logs
        .iter()
        .map(|log| pipeline::count_log(log, &config.segmentation, config.k))
        .collect::<flowmotif_core::Result<Vec<_>>>()
        .map_err(Failure::input)?;
    let mut buf = Vec::new();
    report::write_motif_counts_csv(&mut buf, &counts).map_err(Failure::internal)?;
    out.write_or_stdout("motifs.csv", &buf)?;
    Ok(files)
}

fn cmd_zscores(cli: &Cli, inputs: &[PathBuf], out: &mut Outputs) -> Result<Vec<PathBuf>, Failure> {
    let config = cli.pipeline()?;
    let files = io::expand_event_inputs(inputs)?;
    let logs = io::load_logs(&files, cli.format.map(Format::from))?;
    let profiles = pipeline::analyze_logs(&logs, &config).map_err(Failure::input)?;
    let mut buf = Vec::new();
    report::write_zscores_csv(&mut buf, &profiles).map_err(Failure::internal)?;
    out.write_or_stdout("zscores.csv", &buf)?;
    Ok(files)
}

fn cmd_fingerprint(inputs: &[PathBuf], out: &mut Outputs) -> Result<Vec<PathBuf>, Failure> {
    let files = io::expand_inputs(inputs, &["csv"])?;
    let mut profiles = Vec::new();
    for path in &files {
        let file = io::open(path)?;
        let mut batch = report::read_zscores_csv(file)
            .map_err(|e| Failure::input(e).context(path.display().to_string()))?;
        profiles.append(&mut batch);
    }
    let fingerprints = analytics::fingerprints_by_team(&profiles).map_err(Failure::input)?;
    let mut buf = Vec::new();
    report::write_fingerprints_csv(&mut buf, &fingerprints).map_err(Failure::internal)?;
    out.write_or_stdout("fingerprints.csv", &buf)?;
    Ok(files)
}

fn load_fingerprints(path: &Path) -> Result<Vec<analytics::TeamFingerprint>, Failure> {
    report::read_fingerprints_csv(io::open(path)?)
        .map_err(|e| Failure::input(e).context(path.display().to_string()))
}

fn write_pca(
    cli: &Cli,
    fingerprints: &[analytics::TeamFingerprint],
    clusters: Option<&analytics::ClusterAssignment>,
    out: &mut Outputs,
) -> Result<(), Failure> {
    let projection =
        analytics::pca_project(fingerprints, cli.pca_options()).map_err(Failure::input)?;
    let mut buf = Vec::new();
    report::write_pca_csv(&mut buf, &projection).map_err(Failure::internal)?;
    out.write("pca.csv", &buf)?;
    buf.clear();
    report::write_pca_variance_csv(&mut buf, &projection).map_err(Failure::internal)?;
    out.write("pca_variance.csv", &buf)?;
    out.write(
        "pca.svg",
        svg::pca_scatter(&projection, clusters).as_bytes(),
    )
}

fn cmd_cluster(cli: &Cli, input: &Path, out: &mut Outputs) -> Result<Vec<PathBuf>, Failure> {
    out.require_dir()?;
    let fingerprints = load_fingerprints(input)?;
    let clusters = analytics::kmeans(&fingerprints, cli.clusters, cli.seed, DEFAULT_MAX_ITER)
        .map_err(Failure::input)?;
    let dendrogram = analytics::ward_cluster(&fingerprints).map_err(Failure::input)?;

    let mut buf = Vec::new();
    report::write_clusters_csv(&mut buf, &clusters).map_err(Failure::internal)?;
    out.write("clusters.csv", &buf)?;
    let summary = serde_json::to_string_pretty(&ClusterSummary::from(&clusters))
        .map_err(Failure::internal)?
        + "\n";
    out.write("cluster_summary.json", summary.as_bytes())?;
    let tree = report::dendrogram_json(&dendrogram).map_err(Failure::internal)?;
    out.write("dendrogram.json", tree.as_bytes())?;
    out.write("dendrogram.svg", svg::dendrogram(&dendrogram).as_bytes())?;
    write_pca(cli, &fingerprints, Some(&clusters), out)?;
    eprintln!(
        "flowmotif: {} teams, {} clusters, between/total SS = {:.4}, within/total SS = {:.4}",
        fingerprints.len(),
        clusters.centroids.len(),
        clusters.between_over_total,
        clusters.within_over_total()
    );
    Ok(vec![input.to_path_buf()])
}

fn cmd_pca(cli: &Cli, input: &Path, out: &mut Outputs) -> Result<Vec<PathBuf>, Failure> {
    out.require_dir()?;
    let fingerprints = load_fingerprints(input)?;
    write_pca(cli, &fingerprints, None, out)?;
    Ok(vec![input.to_path_buf()])
}

fn cmd_synth(cli: &Cli, teams_path: &Path, out: &mut Outputs) -> Result<Vec<PathBuf>, Failure> {
    out.require_dir()?;
    let text = std::fs::read_to_string(teams_path)
        .with_context(|| format!("reading {}", teams_path.display()))
        .map_err(Failure::Input)?;
    let teams: Vec<TeamStyleParams> = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", teams_path.display()))
        .map_err(Failure::Input)?;
    let logs = synth::generate_league(&teams, cli.seed).map_err(Failure::input)?;
    let format = cli.format.map_or(Format::Csv, Format::from);
    let ext = match format {
        Format::Csv => "csv",
        Format::Jsonl => "jsonl",
    };
    let mut by_team: BTreeMap<&str, Vec<flowmotif_core::PassEvent>> = BTreeMap::new();
    for log in &logs {
        by_team
            .entry(log.team_id())
            .or_default()
            .extend_from_slice(log.events());
    }
    for (team, events) in by_team {
        let mut buf = Vec::new();
        flowmotif_core::ingest::write_pass_events(&mut buf, &events, format)
            .map_err(Failure::internal)?;
        out.write(&format!("{team}.{ext}"), &buf)?;
    }
    Ok(vec![teams_path.to_path_buf()])
}
