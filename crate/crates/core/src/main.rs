use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use kalrec::cli;
use kalrec::config::RunConfig;
use kalrec::statespace::RiccatiMode;
use kalrec::synth::Regime;

#[derive(Parser)]
#[command(name = "kalrec", version, about = "Track user interest profiles with a Kalman predictor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Validate events and report per-user counts and window coverage
    Ingest,
    /// Generate synthetic viewing events and ground truth
    Synth,
    /// Track every user and write per-user trace CSVs
    Track,
    /// Write promoted/demoted genres per user
    Recommend,
    /// Score trace CSVs by cosine distance
    Evaluate,
}

/// Flags override the config file.
#[derive(Args)]
struct Overrides {
    /// TOML config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON-lines viewing events
    #[arg(long, global = true)]
    events: Option<PathBuf>,
    /// Genre list, one per line
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
    /// Directory of trace_*.csv files for `evaluate`
    #[arg(long, global = true)]
    traces: Option<PathBuf>,

    /// Genre count for `synth` without a vocabulary
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    t_step: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    p0: Option<f64>,
    /// include | omit
    #[arg(long, global = true)]
    riccati_q: Option<RiccatiMode>,
    #[arg(long, global = true)]
    zero_as_measurement: Option<bool>,

    /// Window length in seconds
    #[arg(long, global = true)]
    window: Option<i64>,
    #[arg(long, global = true)]
    num_windows: Option<usize>,
    #[arg(long, global = true)]
    full_threshold: Option<f64>,
    #[arg(long, global = true)]
    min_threshold: Option<f64>,
    #[arg(long, global = true)]
    normalize: Option<bool>,

    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    refine_same_day: Option<bool>,
    /// Cosine-distance threshold for `evaluate`
    #[arg(long, global = true)]
    threshold: Option<f64>,

    #[arg(long, global = true)]
    users: Option<usize>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// model-exact | piecewise-interest | random-walk
    #[arg(long, global = true)]
    regime: Option<Regime>,
    #[arg(long, global = true)]
    events_per_window: Option<usize>,
    /// Timestamp of the first synthetic window
    #[arg(long, global = true)]
    start: Option<i64>,
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value {
            $target = v;
        }
    };
}

impl Overrides {
    fn resolve(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        set!(c.seed, self.seed);
        set!(c.paths.out, self.out);
        c.paths.events = self.events.or(c.paths.events);
        c.paths.vocab = self.vocab.or(c.paths.vocab);
        c.paths.traces = self.traces.or(c.paths.traces);

        set!(c.model.d, self.d);
        set!(c.model.alpha, self.alpha);
        set!(c.model.t_step, self.t_step);
        set!(c.model.q, self.q);
        set!(c.model.r, self.r);
        set!(c.model.p0, self.p0);
        set!(c.model.riccati_q, self.riccati_q);
        set!(c.model.zero_as_measurement, self.zero_as_measurement);

        set!(c.profile.window, self.window);
        set!(c.profile.num_windows, self.num_windows);
        set!(c.profile.full_threshold, self.full_threshold);
        set!(c.profile.min_threshold, self.min_threshold);
        set!(c.profile.normalize, self.normalize);

        set!(c.recommend.tau, self.tau);
        set!(c.recommend.refine_same_day, self.refine_same_day);
        set!(c.evaluate.threshold, self.threshold);

        set!(c.synth.users, self.users);
        set!(c.synth.steps, self.steps);
        set!(c.synth.regime, self.regime);
        set!(c.synth.events_per_window, self.events_per_window);
        set!(c.synth.start, self.start);
        Ok(c)
    }
}

fn run(args: Cli) -> Result<()> {
    let config = args.overrides.resolve()?;
    match args.command {
        Command::Ingest => {
            for s in cli::cmd_ingest(&config)? {
                println!(
                    "{}: {} events, {} inside windows, {}/{} windows with consumption",
                    s.user_id, s.events, s.in_window, s.nonempty_windows, s.num_windows
                );
            }
        }
        Command::Synth => cli::cmd_synth(&config)?,
        Command::Track => cli::cmd_track(&config)?,
        Command::Recommend => {
            let records = cli::cmd_recommend(&config)?;
            println!("wrote recommendations for {} users", records.len());
        }
        Command::Evaluate => {
            let summary = cli::cmd_evaluate(&config)?;
            let overall = &summary.overall;
            println!(
                "{} instants over {} users: {:.1}% below {}, median distance {}",
                overall.per_instant.len(),
                summary.users.len(),
                100.0 * overall.fraction_below,
                summary.threshold,
                overall
                    .median_distance
                    .map_or_else(|| "n/a".to_string(), |m| format!("{m:.4}")),
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
