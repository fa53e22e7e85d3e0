use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use uhrkit::config::RunConfig;
use uhrkit::curation::{
    aesthetic_score, load_gray, merge_captions, read_manifest, run_metrics, run_selection, scan_corpus,
    stats_report, write_manifest, RunOptions, RunStatus, ScorerSpec,
};
use uhrkit::dots::{histogram, sample_beta};
use uhrkit::spectral::{radial_band_energy, BandEdges, Dft2, FreqLoss, Tensor2D};
use uhrkit::toy::{experiment_compare, train};
use uhrkit::Error;

#[derive(Parser)]
#[command(name = "uhrkit", version, about = "UHR image curation and frequency-aware training toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    over: Overrides,
}

#[derive(Subcommand)]
enum Cmd {
    /// List decodable images under --root and write a stub manifest to --out.
    Scan,
    /// Compute metrics for every image under --root; resumes an interrupted run.
    Metrics,
    /// Score, filter and select from --manifest, writing --out.
    Select,
    /// Subset counts and histograms for --manifest (text to stdout, JSON to --out).
    Stats,
    /// Attach sidecar captions from --captions to --manifest, writing --out.
    CaptionMerge,
    /// Radial-band spectral energy of --input (and loss against --reference).
    FreqAnalyze,
    /// Draw Beta timesteps (raw samples or a histogram).
    DotsSample,
    /// Train the toy rectified-flow predictor; writes outcome.json into --out.
    TrainToy,
    /// Baseline vs frequency-aware training over several seeds; writes into --out.
    Compare,
}

/// Flags mirror config keys and override values from --config.
#[derive(Args, Default)]
struct Overrides {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    root: Option<PathBuf>,
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    captions: Option<PathBuf>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    reference: Option<PathBuf>,
    #[arg(long, global = true)]
    chunk_size: Option<usize>,

    #[arg(long, global = true)]
    laplacian_min: Option<f64>,
    #[arg(long, global = true)]
    sobel_density_min: Option<f64>,
    #[arg(long, global = true)]
    sobel_grad_threshold: Option<f64>,
    #[arg(long, global = true)]
    top_fraction: Option<f64>,
    #[arg(long, global = true)]
    min_avg_resolution: Option<f64>,
    #[arg(long, global = true)]
    metric_long_side: Option<usize>,
    #[arg(long, global = true)]
    glcm_levels: Option<usize>,
    #[arg(long, global = true)]
    glcm_distance: Option<usize>,
    /// heuristic | score-file:<path> | subprocess:<command>
    #[arg(long, global = true)]
    scorer: Option<String>,

    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    lambda_freq: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    /// RNG seed for training and sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, action = ArgAction::Set)]
    use_dots: Option<bool>,
    #[arg(long, global = true, action = ArgAction::Set)]
    use_swfr: Option<bool>,
    #[arg(long, global = true)]
    image_size: Option<usize>,
    #[arg(long, global = true)]
    eval_size: Option<usize>,
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Number of samples for dots-sample.
    #[arg(short = 'n', long, global = true)]
    samples: Option<usize>,
    /// Emit a histogram with this many bins instead of raw samples.
    #[arg(long, global = true)]
    histogram: Option<usize>,
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
    ($src:expr => some $dst:expr) => {
        if let Some(v) = $src.clone() {
            $dst = Some(v);
        }
    };
}

impl Overrides {
    fn resolve(&self) -> uhrkit::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        set!(self.workers => some c.workers);
        set!(self.root => some c.root);
        set!(self.manifest => some c.manifest);
        set!(self.out => some c.out);
        set!(self.captions => some c.captions);
        set!(self.input => some c.input);
        set!(self.reference => some c.reference);
        set!(self.chunk_size => c.chunk_size);
        let s = &mut c.selection;
        set!(self.laplacian_min => s.laplacian_min);
        set!(self.sobel_density_min => s.sobel_density_min);
        set!(self.sobel_grad_threshold => s.sobel_grad_threshold);
        set!(self.top_fraction => s.top_fraction);
        set!(self.min_avg_resolution => s.min_avg_resolution);
        set!(self.metric_long_side => s.metric_long_side);
        set!(self.glcm_levels => s.glcm_levels);
        set!(self.glcm_distance => s.glcm_distance);
        if let Some(spec) = &self.scorer {
            c.scorer = Some(ScorerSpec::parse(spec)?);
        }
        let t = &mut c.train;
        set!(self.lambda => t.freq_reg.lambda);
        set!(self.gamma => t.freq_reg.gamma);
        set!(self.alpha => t.dots.alpha);
        set!(self.beta => t.dots.beta);
        set!(self.lambda_freq => t.lambda_freq);
        set!(self.steps => t.steps);
        set!(self.batch_size => t.batch_size);
        set!(self.learning_rate => t.learning_rate);
        set!(self.seed => t.seed);
        set!(self.use_dots => t.use_dots);
        set!(self.use_swfr => t.use_swfr);
        set!(self.image_size => t.image_size);
        set!(self.eval_size => t.eval_size);
        set!(self.seeds => c.seeds);
        set!(self.samples => c.samples);
        set!(self.histogram => some c.histogram);
        c.validate()?;
        Ok(c)
    }
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Parse { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn require<'a>(v: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a Path, Failure> {
    v.as_deref().ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

fn require_existing<'a>(v: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a Path, Failure> {
    let p = require(v, flag)?;
    if !p.exists() {
        return Err(Failure::Usage(format!("--{flag} {} does not exist", p.display())));
    }
    Ok(p)
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Writes the resolved config next to the outputs.
fn echo_config(cfg: &RunConfig, dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(runtime)?;
    std::fs::write(dir.join("resolved_config.json"), cfg.to_json() + "\n").map_err(runtime)
}

fn file_dir(p: &Path) -> &Path {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

/// Writes `value` to `out` if given, otherwise to stdout.
fn emit_json(value: &serde_json::Value, out: Option<&Path>, cfg: &RunConfig) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(runtime)? + "\n";
    match out {
        Some(p) => {
            echo_config(cfg, file_dir(p))?;
            std::fs::write(p, text).map_err(runtime)
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(runtime),
    }
}

fn run(cmd: &Cmd, cfg: &RunConfig) -> CmdResult {
    match cmd {
        Cmd::Scan => {
            let root = require_existing(&cfg.root, "root")?;
            let out = require(&cfg.out, "out")?;
            let recs = scan_corpus(root, cfg.effective_workers()).map_err(runtime)?;
            echo_config(cfg, file_dir(out))?;
            write_manifest(&recs, out)?;
            eprintln!("scanned {} image(s)", recs.len());
        }
        Cmd::Metrics => {
            let root = require_existing(&cfg.root, "root")?;
            let out = require(&cfg.out, "out")?;
            echo_config(cfg, file_dir(out))?;
            let opts = RunOptions {
                workers: cfg.effective_workers(),
                chunk_size: cfg.chunk_size,
                stop_after_chunks: None,
            };
            match run_metrics(root, out, &cfg.selection.metric_config(), &opts).map_err(runtime)? {
                RunStatus::Complete { records, resumed } => {
                    eprintln!("measured {records} image(s) ({resumed} resumed)")
                }
                RunStatus::Interrupted { done, remaining } => {
                    eprintln!("stopped with {done} done, {remaining} remaining")
                }
            }
        }
        Cmd::Select => {
            let manifest = require_existing(&cfg.manifest, "manifest")?;
            let out = require(&cfg.out, "out")?;
            let mut recs = read_manifest(manifest)?;
            if let Some(spec) = &cfg.scorer {
                let root = match spec {
                    ScorerSpec::ScoreFile { .. } => cfg.root.as_deref().unwrap_or(Path::new(".")),
                    _ => require_existing(&cfg.root, "root")?,
                };
                aesthetic_score(&mut recs, root, spec).map_err(runtime)?;
            }
            let counts = run_selection(&mut recs, &cfg.selection)?;
            echo_config(cfg, file_dir(out))?;
            write_manifest(&recs, out)?;
            println!("{}", serde_json::to_string(&counts).map_err(runtime)?);
        }
        Cmd::Stats => {
            let manifest = require_existing(&cfg.manifest, "manifest")?;
            let recs = read_manifest(manifest)?;
            let report = stats_report(&recs);
            print!("{}", report.to_text());
            if let Some(out) = &cfg.out {
                emit_json(&serde_json::to_value(&report).map_err(runtime)?, Some(out), cfg)?;
            }
        }
        Cmd::CaptionMerge => {
            let manifest = require_existing(&cfg.manifest, "manifest")?;
            let captions = require_existing(&cfg.captions, "captions")?;
            let out = require(&cfg.out, "out")?;
            let mut recs = read_manifest(manifest)?;
            let n = merge_captions(&mut recs, captions).map_err(runtime)?;
            echo_config(cfg, file_dir(out))?;
            write_manifest(&recs, out)?;
            eprintln!("attached {n} caption(s) to {} record(s)", recs.len());
        }
        Cmd::FreqAnalyze => {
            let input = require_existing(&cfg.input, "input")?;
            let bands = BandEdges::new(cfg.train.band_edges.clone())?;
            let to_tensor = |p: &Path| -> std::result::Result<Tensor2D, Failure> {
                let g = load_gray(p).map_err(runtime)?;
                Ok(Tensor2D::new(g.height(), g.width(), g.data().to_vec())?)
            };
            let x = to_tensor(input)?;
            let (h, w) = x.shape();
            let dft = Dft2::new(h, w)?;
            let spec = dft.forward(&x).map_err(runtime)?;
            let energy = radial_band_energy(&spec, &bands)?;
            let mut report = json!({
                "height": h,
                "width": w,
                "band_edges": bands.edges(),
                "band_energy": energy,
                "total_energy": spec.energy(),
            });
            if cfg.reference.is_some() {
                let reference = require_existing(&cfg.reference, "reference")?;
                let y = to_tensor(reference)?;
                if y.shape() != x.shape() {
                    return Err(Failure::Usage(format!(
                        "reference is {}x{}, input is {h}x{w}",
                        y.shape().0,
                        y.shape().1
                    )));
                }
                let residual = x.sub(&y)?;
                let rspec = dft.forward(&residual).map_err(runtime)?;
                let loss = FreqLoss::new(h, w, &cfg.train.freq_reg)?.loss(&x, &y).map_err(runtime)?;
                report["residual_band_energy"] = json!(radial_band_energy(&rspec, &bands)?);
                report["mse"] = json!(residual.mean_squared());
                report["freq_loss"] = json!(loss);
                report["freq_reg"] = serde_json::to_value(cfg.train.freq_reg).map_err(runtime)?;
            }
            emit_json(&report, cfg.out.as_deref(), cfg)?;
        }
        Cmd::DotsSample => {
            let params = cfg.train.dots;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
            let samples: Vec<f64> = (0..cfg.samples).map(|_| sample_beta(&mut rng, &params)).collect();
            let report = match cfg.histogram {
                Some(bins) => {
                    let counts = histogram(&samples, bins)?;
                    let argmax = counts
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    json!({
                        "alpha": params.alpha,
                        "beta": params.beta,
                        "n": cfg.samples,
                        "bins": bins,
                        "counts": counts,
                        "argmax_bin": argmax,
                        "argmax_range": [argmax as f64 / bins as f64, (argmax + 1) as f64 / bins as f64],
                        "mode": params.mode(),
                        "mean": params.mean(),
                    })
                }
                None => json!({
                    "alpha": params.alpha,
                    "beta": params.beta,
                    "n": cfg.samples,
                    "samples": samples,
                }),
            };
            emit_json(&report, cfg.out.as_deref(), cfg)?;
        }
        Cmd::TrainToy => {
            let out = require(&cfg.out, "out")?;
            info!("training {} steps", cfg.train.steps);
            let outcome = train(&cfg.train).map_err(runtime)?;
            echo_config(cfg, out)?;
            let text = serde_json::to_string_pretty(&outcome).map_err(runtime)?;
            std::fs::write(out.join("outcome.json"), text + "\n").map_err(runtime)?;
            let last = outcome.log.last();
            println!(
                "{}",
                json!({
                    "steps": outcome.log.len(),
                    "final_total": last.map(|l| l.total),
                    "final_diff": last.map(|l| l.diff),
                    "final_freq": last.map(|l| l.freq),
                })
            );
        }
        Cmd::Compare => {
            let out = require(&cfg.out, "out")?;
            let report = experiment_compare(&cfg.train, cfg.seeds).map_err(runtime)?;
            echo_config(cfg, out)?;
            let text = report.to_text();
            std::fs::write(out.join("compare.json"), serde_json::to_string_pretty(&report).map_err(runtime)? + "\n")
                .map_err(runtime)?;
            std::fs::write(out.join("compare.txt"), &text).map_err(runtime)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = cli.over.resolve().map_err(Failure::from).and_then(|cfg| run(&cli.command, &cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
