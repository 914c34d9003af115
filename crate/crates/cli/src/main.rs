//! `dust` — pseudo-label curation from the command line.
//!
//! Subcommands cover the full pipeline: `simulate` fabricates a hypothesis
//! corpus with the seeded noise-channel teacher, `filter` scores a corpus and
//! writes the accepted pseudo-label manifest, `sweep` tabulates accepted-set
//! WER/CER along a threshold or percentage grid, and `calibrate` writes
//! reliability bins with ECE/MCE/RCE. Identical inputs and flags produce
//! identical outputs regardless of `--threads`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dust_core::filter::{default_tau_grid, filter_corpus, percentage_sweep, threshold_sweep};
use dust_core::io::{
    read_bundles, read_truths, write_accepted_manifest, write_bundles, write_calibration,
    write_sweep, ParseMode,
};
use dust_core::sim::{sample_truths, simulate_corpus, Mixture, NoiseChannel, OpMix, SimCorpusSpec};
use dust_core::{NormalizationOptions, TokenUnit};

#[derive(Parser)]
#[command(
    name = "dust",
    version,
    about = "Dropout-consensus pseudo-label filtering"
)]
struct Cli {
    /// Worker threads for per-utterance scoring and simulation; outputs do
    /// not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fabricate a hypothesis corpus with the noise-channel teacher.
    Simulate(SimulateArgs),
    /// Score a corpus and write the accepted pseudo-label manifest.
    Filter(FilterArgs),
    /// Tabulate accepted-set WER/CER along a threshold or percentage grid.
    Sweep(SweepArgs),
    /// Write reliability bins and calibration error metrics.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Word-level distances.
    Dust,
    /// Character-level distances.
    Cdust,
}

impl Mode {
    fn unit(self) -> TokenUnit {
        match self {
            Mode::Dust => TokenUnit::Word,
            Mode::Cdust => TokenUnit::Char,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Mode::Dust => "dust",
            Mode::Cdust => "cdust",
        }
    }
}

impl FromStr for Mode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dust" => Ok(Mode::Dust),
            "cdust" => Ok(Mode::Cdust),
            other => bail!("unknown mode {other:?}, expected dust or cdust"),
        }
    }
}

/// Options shared by the scoring commands.
#[derive(Args, Debug)]
struct ScoringArgs {
    /// Bundle JSONL to read.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Filtering unit.
    #[arg(long, value_enum)]
    mode: Option<Mode>,

    /// Lowercase text before tokenizing.
    #[arg(long)]
    lowercase: bool,

    /// Drop punctuation before tokenizing.
    #[arg(long)]
    strip_punctuation: bool,

    /// Collapse whitespace runs (chars-with-spaces mode only).
    #[arg(long)]
    collapse_whitespace: bool,

    /// Keep spaces as character tokens in cdust mode.
    #[arg(long)]
    include_spaces: bool,

    /// Skip malformed bundle lines instead of aborting.
    #[arg(long)]
    lenient: bool,

    /// key=value file supplying defaults for any long option; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Output bundle JSONL path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Transcript file, one per line; omit to generate transcripts.
    #[arg(long)]
    truths: Option<PathBuf>,

    /// Number of transcripts to generate when no file is given.
    #[arg(long)]
    gen_truths: Option<usize>,

    /// Mean words per generated transcript.
    #[arg(long)]
    mean_words: Option<usize>,

    /// Probability each truth token is corrupted in the shared base decode.
    #[arg(long)]
    p_base: Option<f64>,

    /// Probability each base token is perturbed per dropout sample.
    #[arg(long)]
    p_samp: Option<f64>,

    /// Substitute / delete / insert weights (normalized).
    #[arg(long)]
    op_sub: Option<f64>,
    #[arg(long)]
    op_del: Option<f64>,
    #[arg(long)]
    op_ins: Option<f64>,

    /// Share of substitutions that are single-character slips.
    #[arg(long)]
    char_noise: Option<f64>,

    /// Dropout samples per utterance.
    #[arg(long)]
    t: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// Fraction of utterances rerouted through the severe rates below.
    #[arg(long)]
    mix_fraction: Option<f64>,
    #[arg(long)]
    mix_p_base: Option<f64>,
    #[arg(long)]
    mix_p_samp: Option<f64>,

    /// key=value file supplying defaults for any long option; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[command(flatten)]
    scoring: ScoringArgs,

    /// Accepted-manifest JSONL path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Uncertainty threshold; utterances above it are excluded.
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scoring: ScoringArgs,

    /// Sweep CSV path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Threshold grid: "start:end:step" or a comma list. Default 0:1:0.05.
    #[arg(long)]
    tau_grid: Option<String>,

    /// Percentage grid (comma list of fractions in (0,1]); replaces the
    /// threshold sweep.
    #[arg(long, conflicts_with = "tau_grid")]
    fractions: Option<String>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    scoring: ScoringArgs,

    /// Calibration CSV path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Number of equal-width confidence bins.
    #[arg(long)]
    bins: Option<usize>,
}

/// Defaults loaded from a key=value file; keys use the long option names.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .with_context(|| format!("config line {}: expected key=value", idx + 1))?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key}: {e}")),
        }
    }

    /// Boolean switch: a CLI flag wins; otherwise the config may turn it on.
    fn flag(&self, key: &str, cli: bool) -> Result<bool> {
        if cli {
            return Ok(true);
        }
        match self.0.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => bail!("config key {key}: expected a boolean, got {other:?}"),
        }
    }
}

struct ResolvedScoring {
    input: PathBuf,
    unit: TokenUnit,
    mode: Mode,
    opts: NormalizationOptions,
    parse_mode: ParseMode,
}

impl ScoringArgs {
    fn resolve(&self) -> Result<ResolvedScoring> {
        let cfg = FileConfig::load(self.config.as_deref())?;
        let input: PathBuf = match &self.input {
            Some(p) => p.clone(),
            None => cfg
                .get::<PathBuf>("input")?
                .context("--input is required")?,
        };
        let mode = match self.mode {
            Some(m) => m,
            None => cfg.get::<Mode>("mode")?.unwrap_or(Mode::Dust),
        };
        let opts = NormalizationOptions {
            lowercase: cfg.flag("lowercase", self.lowercase)?,
            strip_punctuation: cfg.flag("strip-punctuation", self.strip_punctuation)?,
            collapse_whitespace: cfg.flag("collapse-whitespace", self.collapse_whitespace)?,
            include_spaces_in_chars: cfg.flag("include-spaces", self.include_spaces)?,
        };
        let parse_mode = if cfg.flag("lenient", self.lenient)? {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        };
        Ok(ResolvedScoring {
            input,
            unit: mode.unit(),
            mode,
            opts,
            parse_mode,
        })
    }
}

impl ResolvedScoring {
    fn describe(&self) -> String {
        format!(
            "input={} mode={} lowercase={} strip_punctuation={} collapse_whitespace={} include_spaces={} parse={}",
            self.input.display(),
            self.mode.as_str(),
            self.opts.lowercase,
            self.opts.strip_punctuation,
            self.opts.collapse_whitespace,
            self.opts.include_spaces_in_chars,
            match self.parse_mode {
                ParseMode::Strict => "strict",
                ParseMode::Lenient => "lenient",
            }
        )
    }

    fn read(&self) -> Result<Vec<dust_core::HypothesisBundle>> {
        let file =
            File::open(&self.input).with_context(|| format!("opening {}", self.input.display()))?;
        let report = read_bundles(BufReader::new(file), self.parse_mode)?;
        for error in &report.errors {
            eprintln!("warning: skipped {error}");
        }
        if report.skipped > 0 {
            eprintln!("warning: skipped {} malformed lines", report.skipped);
        }
        Ok(report.bundles)
    }
}

fn create_out(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn required<T>(cli: Option<T>, cfg: Result<Option<T>>, flag: &str) -> Result<T> {
    match cli {
        Some(v) => Ok(v),
        None => cfg?.with_context(|| format!("--{flag} is required")),
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let out: PathBuf = required(args.out.clone(), cfg.get("out"), "out")?;
    let truths_path: Option<PathBuf> = match &args.truths {
        Some(p) => Some(p.clone()),
        None => cfg.get("truths")?,
    };
    let gen_truths = match args.gen_truths {
        Some(n) => n,
        None => cfg.get("gen-truths")?.unwrap_or(1000),
    };
    let mean_words = match args.mean_words {
        Some(n) => n,
        None => cfg.get("mean-words")?.unwrap_or(15),
    };
    let pick = |cli: Option<f64>, key: &str, default: f64| -> Result<f64> {
        Ok(match cli {
            Some(v) => v,
            None => cfg.get(key)?.unwrap_or(default),
        })
    };
    let p_base = pick(args.p_base, "p-base", 0.1)?;
    let p_samp = pick(args.p_samp, "p-samp", 0.2)?;
    let op_sub = pick(args.op_sub, "op-sub", 0.7)?;
    let op_del = pick(args.op_del, "op-del", 0.15)?;
    let op_ins = pick(args.op_ins, "op-ins", 0.15)?;
    let char_noise = pick(args.char_noise, "char-noise", 0.5)?;
    let t = match args.t {
        Some(v) => v,
        None => cfg.get("t")?.unwrap_or(3),
    };
    let seed = match args.seed {
        Some(v) => v,
        None => cfg.get("seed")?.unwrap_or(0),
    };
    let mix_fraction = match args.mix_fraction {
        Some(v) => Some(v),
        None => cfg.get("mix-fraction")?,
    };

    let mixture = match mix_fraction {
        Some(fraction) => Some(Mixture {
            fraction,
            base_corruption_rate: pick(args.mix_p_base, "mix-p-base", p_base)?,
            sample_perturbation_rate: pick(args.mix_p_samp, "mix-p-samp", p_samp)?,
        }),
        None => None,
    };

    let truths = match &truths_path {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_truths(BufReader::new(file))?
        }
        None => sample_truths(gen_truths, mean_words, seed ^ 0x5EED_7E27),
    };

    let channel = NoiseChannel {
        base_corruption_rate: p_base,
        sample_perturbation_rate: p_samp,
        op_mix: OpMix::new(op_sub, op_del, op_ins)?,
        char_noise,
        t,
        seed,
    };
    eprintln!(
        "config: command=simulate out={} truths={} n={} mean_words={} p_base={} p_samp={} op_mix=({:.3},{:.3},{:.3}) char_noise={} t={} seed={} mixture={:?}",
        out.display(),
        truths_path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "generated".into()),
        truths.len(),
        mean_words,
        p_base,
        p_samp,
        channel.op_mix.substitute,
        channel.op_mix.delete,
        channel.op_mix.insert,
        char_noise,
        t,
        seed,
        mixture,
    );

    let spec = SimCorpusSpec {
        truths,
        channel,
        mixture,
    };
    let corpus = simulate_corpus(&spec)?;
    let mut writer = create_out(&out)?;
    write_bundles(&corpus, &mut writer)?;
    writer.flush()?;
    eprintln!("simulated {} bundles", corpus.len());
    Ok(())
}

fn run_filter(args: &FilterArgs) -> Result<()> {
    let scoring = args.scoring.resolve()?;
    let cfg = FileConfig::load(args.scoring.config.as_deref())?;
    let out: PathBuf = required(args.out.clone(), cfg.get("out"), "out")?;
    let tau = required(args.tau, cfg.get("tau"), "tau")?;
    if tau < 0.0 {
        bail!("--tau must be nonnegative");
    }
    eprintln!(
        "config: command=filter out={} tau={} {}",
        out.display(),
        tau,
        scoring.describe()
    );

    let bundles = scoring.read()?;
    let outcome = filter_corpus(&bundles, tau, scoring.unit, &scoring.opts)?;
    let mut writer = create_out(&out)?;
    write_accepted_manifest(&outcome, &bundles, &mut writer)?;
    writer.flush()?;
    eprintln!(
        "filtered: accepted={} rejected={} tau={}",
        outcome.accepted.len(),
        outcome.rejected.len(),
        tau
    );
    Ok(())
}

/// Parses "start:end:step" or a comma-separated list into a grid.
fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("grid range must be start:end:step, got {spec:?}");
        }
        let start: f64 = parts[0].parse().context("grid start")?;
        let end: f64 = parts[1].parse().context("grid end")?;
        let step: f64 = parts[2].parse().context("grid step")?;
        if step <= 0.0 || end < start {
            bail!("grid range must ascend with a positive step");
        }
        let count = ((end - start) / step).round() as usize;
        let mut grid: Vec<f64> = (0..=count).map(|i| start + i as f64 * step).collect();
        if let Some(last) = grid.last_mut() {
            if (*last - end).abs() < step * 1e-9 {
                *last = end;
            }
        }
        grid.retain(|v| *v <= end + step * 1e-9);
        Ok(grid)
    } else {
        spec.split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .with_context(|| format!("grid value {cell:?}"))
            })
            .collect()
    }
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let scoring = args.scoring.resolve()?;
    let cfg = FileConfig::load(args.scoring.config.as_deref())?;
    let out: PathBuf = required(args.out.clone(), cfg.get("out"), "out")?;
    let tau_grid = match &args.tau_grid {
        Some(s) => Some(s.clone()),
        None => cfg.get("tau-grid")?,
    };
    let fractions = match &args.fractions {
        Some(s) => Some(s.clone()),
        None => cfg.get("fractions")?,
    };
    if tau_grid.is_some() && fractions.is_some() {
        bail!("--tau-grid and --fractions are mutually exclusive");
    }
    eprintln!(
        "config: command=sweep out={} tau_grid={} fractions={} {}",
        out.display(),
        tau_grid.as_deref().unwrap_or("default"),
        fractions.as_deref().unwrap_or("-"),
        scoring.describe()
    );

    let bundles = scoring.read()?;
    let points = match &fractions {
        Some(spec) => {
            let grid = parse_grid(spec)?;
            percentage_sweep(&bundles, &grid, scoring.unit, &scoring.opts)?
        }
        None => {
            let grid = match &tau_grid {
                Some(spec) => parse_grid(spec)?,
                None => default_tau_grid(),
            };
            threshold_sweep(&bundles, &grid, scoring.unit, &scoring.opts)?
        }
    };
    let mut writer = create_out(&out)?;
    write_sweep(&points, &mut writer)?;
    writer.flush()?;
    eprintln!(
        "swept {} points over {} bundles",
        points.len(),
        bundles.len()
    );
    Ok(())
}

fn run_calibrate(args: &CalibrateArgs) -> Result<()> {
    let scoring = args.scoring.resolve()?;
    let cfg = FileConfig::load(args.scoring.config.as_deref())?;
    let out: PathBuf = required(args.out.clone(), cfg.get("out"), "out")?;
    let bins = match args.bins {
        Some(v) => v,
        None => cfg.get("bins")?.unwrap_or(15),
    };
    eprintln!(
        "config: command=calibrate out={} bins={} {}",
        out.display(),
        bins,
        scoring.describe()
    );

    let bundles = scoring.read()?;
    let report =
        dust_core::calibration::calibration_report(&bundles, bins, scoring.unit, &scoring.opts)?;
    let mut writer = create_out(&out)?;
    write_calibration(&report, &mut writer)?;
    writer.flush()?;
    eprintln!(
        "calibrated: n={} ece={:.6} mce={:.6} rce={:.6}",
        report.n, report.ece, report.mce, report.rce
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        dust_core::configure_threads(threads)?;
    }
    match &cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Filter(args) => run_filter(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Calibrate(args) => run_calibrate(args),
    }
}
