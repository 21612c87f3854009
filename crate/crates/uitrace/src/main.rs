//! `uitrace` command line.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use uitrace::arena::{Arena, ArenaError, ArenaOptions};
use uitrace::commands::{self, AlignInput, RankInput};
use uitrace::config::{PriorSetting, RunConfig};
use uitrace::core::metrics::MetricKind;
use uitrace::fixture::FixtureParams;
use uitrace::{records, Error, EXIT_IO};

#[derive(Parser)]
#[command(
    name = "uitrace",
    version,
    about = "Reference-based evaluation of generated UIs from interaction traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Run settings shared by the data commands; flags override the config file.
#[derive(Args, Default)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Metrics to compute, comma separated [default: dtw,ebleu,wmd].
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<MetricKind>>,
    /// DTW band as a fraction of the reference length [default: 0.1].
    #[arg(long)]
    band_fraction: Option<f64>,
    /// Highest eBLEU k-gram order [default: 4].
    #[arg(long)]
    ebleu_order: Option<usize>,
    /// eBLEU order weights, comma separated [default: uniform].
    #[arg(long, value_delimiter = ',')]
    ebleu_weights: Option<Vec<f64>>,
    /// Relative length difference eBLEU tolerates without penalty [default: 0.5].
    #[arg(long)]
    length_tolerance: Option<f64>,
    /// Re-normalize frames to unit norm while loading.
    #[arg(long)]
    normalize: bool,
    /// Reject frames whose norm is not 1.
    #[arg(long)]
    expect_normalized: bool,
    /// Frame cap per trace [default: 50].
    #[arg(long)]
    max_frames: Option<usize>,
    /// WMD value for tasks without generated traces [default: largest frame distance in the corpus].
    #[arg(long)]
    wmd_cap: Option<f64>,
    /// eBLEU value for tasks without generated traces [default: 0].
    #[arg(long)]
    ebleu_floor: Option<f64>,
    /// Bradley-Terry L2 prior: `auto` or a number [default: auto].
    #[arg(long)]
    prior: Option<PriorSetting>,
    /// Metric worker threads [default: all cores].
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.metrics {
            cfg.metrics = v.clone();
        }
        if let Some(v) = self.band_fraction {
            cfg.band_fraction = v;
        }
        if let Some(v) = self.ebleu_order {
            cfg.ebleu.max_order = v;
        }
        if let Some(v) = &self.ebleu_weights {
            cfg.ebleu.weights = Some(v.clone());
        }
        if let Some(v) = self.length_tolerance {
            cfg.ebleu.length_tolerance = v;
        }
        cfg.normalize |= self.normalize;
        cfg.expect_normalized |= self.expect_normalized;
        if let Some(v) = self.max_frames {
            cfg.max_frames = v;
        }
        if let Some(v) = self.wmd_cap {
            cfg.wmd_cap = Some(v);
        }
        if let Some(v) = self.ebleu_floor {
            cfg.ebleu_floor = v;
        }
        if let Some(v) = self.prior {
            cfg.prior = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score every generated model against the reference traces.
    Score {
        /// Trace file.
        #[arg(long)]
        traces: PathBuf,
        /// Score report to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Fit Elo leaderboards from metric scores or comparison records.
    Rank {
        /// Score report; needs --pairs.
        #[arg(long, requires = "pairs", conflicts_with = "records")]
        scores: Option<PathBuf>,
        /// Pairs manifest used to turn scores into labels.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Comparison records, one leaderboard per rater.
        #[arg(long, required_unless_present = "scores")]
        records: Option<PathBuf>,
        /// Leaderboard file to write.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the metric-derived comparison records.
        #[arg(long)]
        labels_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Measure how well candidate raters agree with ground truth.
    Align {
        /// Ground-truth comparison records.
        #[arg(long)]
        ground_truth: PathBuf,
        /// Candidate comparison records.
        #[arg(long)]
        candidates: PathBuf,
        /// Leaderboards from `rank` to use instead of refitting.
        #[arg(long)]
        leaderboards: Option<PathBuf>,
        /// Only use pairs between these models, comma separated.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        /// Alignment report to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write a text table.
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Embed PGM screenshots laid out as <site>/<task>/<reference|model>/<run>/*.pgm.
    Embed {
        /// Screenshot root directory.
        #[arg(long)]
        images: PathBuf,
        /// Trace file to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write a synthetic corpus, pairs manifest and ground-truth labels.
    Fixture {
        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,
        /// PRNG seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Sites.
        #[arg(long, default_value_t = 5)]
        sites: usize,
        /// Tasks per site.
        #[arg(long, default_value_t = 4)]
        tasks: usize,
        /// Runs per bundle (1 to 3).
        #[arg(long, default_value_t = 3)]
        runs: u32,
        /// Embedding dimension.
        #[arg(long, default_value_t = 16)]
        dim: usize,
        /// Perturbation of the noise model.
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
    },
    /// Serve the blinded voting arena.
    Arena {
        /// Append-only vote log.
        #[arg(long)]
        votes: PathBuf,
        /// Pairs manifest.
        #[arg(long)]
        pairs: PathBuf,
        /// Listen address.
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Directory with one preview directory per output id.
        #[arg(long)]
        previews: Option<PathBuf>,
        /// Built UI bundle to serve.
        #[arg(long)]
        ui: Option<PathBuf>,
        /// Seed for side assignment; random when absent.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Score { traces, out, config } => {
            let lines = commands::cmd_score(&traces, &out, &config.resolve()?)?;
            log::info!("wrote {} score lines to {}", lines.len(), out.display());
        }
        Command::Rank {
            scores,
            pairs,
            records,
            out,
            labels_out,
            config,
        } => {
            let input = match (scores, pairs, records) {
                (Some(scores), Some(pairs), None) => RankInput::Scores { scores, pairs },
                (None, _, Some(records)) => RankInput::Records(records),
                _ => return Err(Error::Config("give --scores with --pairs, or --records".into())),
            };
            let file = commands::cmd_rank(&input, &out, labels_out.as_deref(), &config.resolve()?)?;
            for board in &file.leaderboards {
                let mut models: Vec<_> = board.ranks.iter().collect();
                models.sort_by_key(|(m, r)| (**r, *m));
                let top: Vec<String> = models.iter().map(|(m, r)| format!("{r}. {m}")).collect();
                println!("{}: {}", board.rater, top.join(", "));
            }
        }
        Command::Align {
            ground_truth,
            candidates,
            leaderboards,
            models,
            out,
            table,
            config,
        } => {
            let input = AlignInput {
                ground_truth,
                candidates,
                leaderboards,
                models,
            };
            let file = commands::cmd_align(&input, &out, table.as_deref(), &config.resolve()?)?;
            print!("{}", uitrace::report::render_table(&file));
        }
        Command::Embed { images, out, config } => {
            let corpus = commands::cmd_embed(&images, &out, &config.resolve()?)?;
            log::info!("wrote {} traces to {}", corpus.traces().count(), out.display());
        }
        Command::Fixture {
            out_dir,
            seed,
            sites,
            tasks,
            runs,
            dim,
            noise,
        } => {
            let params = FixtureParams {
                seed,
                sites,
                tasks,
                runs,
                dim,
                noise,
                ..FixtureParams::default()
            };
            let fx = commands::cmd_fixture(&out_dir, &params)?;
            log::info!(
                "wrote {} traces and {} pairs to {}",
                fx.traces.len(),
                fx.pairs.len(),
                out_dir.display()
            );
        }
        Command::Arena {
            votes,
            pairs,
            listen,
            previews,
            ui,
            seed,
        } => {
            let manifest = records::read_pairs(&pairs)?;
            let arena = Arena::open(manifest, &votes, ArenaOptions { previews, seed }).map_err(|e| match e {
                ArenaError::Io(source) => Error::io(&votes, source),
                other => Error::Invalid(other.to_string()),
            })?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io(&votes, e))?;
            runtime
                .block_on(uitrace::arena::serve(Arc::new(arena), listen, ui))
                .map_err(|e| Error::Io {
                    path: listen.to_string().into(),
                    source: e,
                })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            let code = e.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(EXIT_IO as u8))
        }
    }
}
