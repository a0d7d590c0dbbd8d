//! Argument parsing and subcommand dispatch.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nirfuse::synth::{corpus, CORPUS_SEEDS};
use nirfuse::{fuse_pair, metrics_report};

use crate::batch::run_batch;
use crate::codec::{ensure_dir, load_image, load_pair, save_gray, save_image, BitDepth};
use crate::config::FusionConfig;
use crate::error::{CliError, Result};
use crate::report::{write_line, PairLine, Scores, TimingsMs};

#[derive(Parser, Debug)]
#[command(name = "nirfuse", version, about = "Visible/NIR image fusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fuse a single visible/NIR pair.
    Fuse {
        #[arg(long)]
        vis: PathBuf,
        #[arg(long)]
        nir: PathBuf,
        /// Fused PNG to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Fuse every pair of a corpus.
    Batch {
        /// Directory holding `<id>_vis.*` and `<id>_nir.*` files.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Pair list file with `vis nir [id]` per line.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Output directory for `<id>_fused.png`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Score an existing fused image against its pair.
    Metrics {
        #[arg(long)]
        vis: PathBuf,
        #[arg(long)]
        nir: PathBuf,
        #[arg(long)]
        fused: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the built-in synthetic corpus (`<id>_vis.png`, `<id>_nir.png`,
    /// `<id>_truth.png`).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, value_parser = parse_bits)]
        bit_depth: Option<u32>,
    },
}

fn parse_bits(s: &str) -> std::result::Result<u32, String> {
    match s.parse::<u32>() {
        Ok(b @ (8 | 16)) => Ok(b),
        _ => Err(format!("bit depth must be 8 or 16, got `{s}`")),
    }
}

/// Parameter overrides shared by `fuse` and `batch`. Flags win over the
/// config file, which wins over built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct ParamArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub wgif_radius: Option<usize>,
    #[arg(long)]
    pub wgif_eps: Option<f64>,
    #[arg(long)]
    pub gif_radius: Option<usize>,
    #[arg(long)]
    pub gif_eps: Option<f64>,
    #[arg(long)]
    pub xdog_sigma: Option<f64>,
    #[arg(long)]
    pub xdog_k: Option<f64>,
    #[arg(long)]
    pub xdog_p: Option<f64>,
    /// JSON-lines report; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_parser = parse_bits)]
    pub bit_depth: Option<u32>,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<FusionConfig> {
        let mut cfg = match &self.config {
            Some(path) => FusionConfig::load(path)?,
            None => FusionConfig::default(),
        };
        let p = &mut cfg.params;
        if let Some(v) = self.alpha {
            p.arctan.alpha = v;
        }
        if let Some(v) = self.wgif_radius {
            p.filter.wgif_radius = v;
        }
        if let Some(v) = self.wgif_eps {
            p.filter.wgif_eps = v;
        }
        if let Some(v) = self.gif_radius {
            p.filter.gif_radius = v;
        }
        if let Some(v) = self.gif_eps {
            p.filter.gif_eps = v;
        }
        if let Some(v) = self.xdog_sigma {
            p.xdog.sigma = v;
        }
        if let Some(v) = self.xdog_k {
            p.xdog.k = v;
        }
        if let Some(v) = self.xdog_p {
            p.xdog.p = v;
        }
        if let Some(v) = &self.report {
            cfg.report = Some(v.clone());
        }
        if let Some(b) = self.bit_depth {
            cfg.bit_depth = BitDepth::from_bits(b)?;
        }
        Ok(cfg)
    }
}

fn open_report(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                ensure_dir(dir)?;
            }
            Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::io(p, e))?,
            ))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(path: Option<&Path>, line: &PairLine) -> Result<()> {
    let mut out = open_report(path)?;
    let name = path.unwrap_or(Path::new("<stdout>"));
    write_line(&mut out, line).map_err(|e| CliError::io(name, e))?;
    out.flush().map_err(|e| CliError::io(name, e))
}

fn pair_id(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("pair");
    stem.strip_suffix("_vis").unwrap_or(stem).to_string()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fuse {
            vis,
            nir,
            out,
            params,
        } => {
            let cfg = params.resolve()?;
            cfg.params.validate()?;
            let pair = load_pair(&vis, &nir)?;
            let output = fuse_pair(&pair, &cfg.params)?;
            let fused = output.image();
            save_image(&fused, &out, cfg.bit_depth)?;
            let line = PairLine::Ok {
                pair: pair_id(&vis),
                scores: Scores::from(&metrics_report(&pair, &fused)?),
                timings_ms: Some(TimingsMs::from(&output.timings)),
            };
            emit(cfg.report.as_deref(), &line)
        }
        Command::Batch {
            input,
            pairs,
            out,
            jobs,
            params,
        } => {
            let mut cfg = params.resolve()?;
            if input.is_some() || pairs.is_some() {
                cfg.input_dir = input;
                cfg.pairs = pairs;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            let mut report = open_report(cfg.report.as_deref())?;
            run_batch(&cfg, jobs, &mut report).map(|_| ())
        }
        Command::Metrics {
            vis,
            nir,
            fused,
            report,
        } => {
            let pair = load_pair(&vis, &nir)?;
            let fused_img = load_image(&fused)?;
            if fused_img.dimensions() != pair.dimensions() {
                return Err(CliError::Dimensions {
                    path: fused,
                    vis: pair.dimensions(),
                    nir: fused_img.dimensions(),
                });
            }
            let line = PairLine::Ok {
                pair: pair_id(&vis),
                scores: Scores::from(&metrics_report(&pair, &fused_img.into_rgb())?),
                timings_ms: None,
            };
            emit(report.as_deref(), &line)
        }
        Command::Synth {
            out,
            width,
            height,
            bit_depth,
        } => {
            if width == 0 || height == 0 {
                return Err(CliError::Usage("synthetic size must be non-zero".into()));
            }
            let depth = BitDepth::from_bits(bit_depth.unwrap_or(8))?;
            ensure_dir(&out)?;
            for (id, triple) in corpus(width, height) {
                save_image(
                    triple.pair.visible(),
                    &out.join(format!("{id}_vis.png")),
                    depth,
                )?;
                save_gray(triple.pair.nir(), &out.join(format!("{id}_nir.png")), depth)?;
                save_image(&triple.truth, &out.join(format!("{id}_truth.png")), depth)?;
            }
            eprintln!(
                "wrote {} synthetic pairs to {}",
                CORPUS_SEEDS.len(),
                out.display()
            );
            Ok(())
        }
    }
}
