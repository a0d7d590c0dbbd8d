//! Corpus runs: pair discovery, bounded parallel fusion, ordered reporting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nirfuse::{fuse_pair, metrics_report, FusionParams, MetricsReport, StageTimings};

use crate::codec::{ensure_dir, load_pair, save_image, BitDepth};
use crate::config::FusionConfig;
use crate::error::{CliError, Result};
use crate::report::{write_line, Aggregate, PairLine, Scores, TimingsMs};

const EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pnm"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairEntry {
    pub id: String,
    pub vis: PathBuf,
    pub nir: PathBuf,
}

fn split_role(path: &Path) -> Option<(String, &'static str)> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    if !EXTENSIONS.contains(&ext.as_str()) {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    ["_vis", "_nir"]
        .into_iter()
        .find_map(|role| stem.strip_suffix(role).map(|id| (id.to_string(), role)))
        .filter(|(id, _)| !id.is_empty())
}

/// Finds `<id>_vis.<ext>` / `<id>_nir.<ext>` files in `dir`, sorted by id.
/// A file without a partner still yields a pair; loading the missing half
/// then fails and is reported for that pair only.
pub fn discover_pairs(dir: &Path) -> Result<Vec<PairEntry>> {
    let mut found: std::collections::BTreeMap<String, (Option<PathBuf>, Option<PathBuf>)> =
        Default::default();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        if let Some((id, role)) = split_role(&path) {
            let slot = found.entry(id).or_default();
            let target = if role == "_vis" {
                &mut slot.0
            } else {
                &mut slot.1
            };
            // Several extensions for one id: keep the lexicographically first.
            if target.as_ref().is_none_or(|p| path < *p) {
                *target = Some(path);
            }
        }
    }
    Ok(found
        .into_iter()
        .map(|(id, (vis, nir))| PairEntry {
            vis: vis.unwrap_or_else(|| dir.join(format!("{id}_vis.png"))),
            nir: nir.unwrap_or_else(|| dir.join(format!("{id}_nir.png"))),
            id,
        })
        .collect())
}

/// Reads a pair list: one `vis nir [id]` entry per line, `#` comments.
/// Relative paths are taken relative to the list's directory.
pub fn read_pair_list(path: &Path) -> Result<Vec<PairEntry>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(CliError::Usage(format!(
                "{}:{}: expected `vis nir [id]`",
                path.display(),
                n + 1
            )));
        }
        let vis = base.join(fields[0]);
        let id = match fields.get(2) {
            Some(id) => id.to_string(),
            None => {
                let stem = vis.file_stem().and_then(|s| s.to_str()).unwrap_or("pair");
                stem.strip_suffix("_vis").unwrap_or(stem).to_string()
            }
        };
        pairs.push(PairEntry {
            id,
            vis,
            nir: base.join(fields[1]),
        });
    }
    Ok(pairs)
}

/// Output path of the fused image for `id`.
pub fn fused_path(out_dir: &Path, id: &str) -> PathBuf {
    out_dir.join(format!("{id}_fused.png"))
}

/// Fuses one pair, writes the fused PNG and scores it.
pub fn process_pair(
    entry: &PairEntry,
    params: &FusionParams,
    out_dir: &Path,
    depth: BitDepth,
) -> Result<(MetricsReport, StageTimings)> {
    let pair = load_pair(&entry.vis, &entry.nir)?;
    let output = fuse_pair(&pair, params)?;
    let fused = output.image();
    save_image(&fused, &fused_path(out_dir, &entry.id), depth)?;
    Ok((metrics_report(&pair, &fused)?, output.timings))
}

/// Runs `f` over `items` on at most `jobs` workers (0 picks the default),
/// returning results in input order.
fn run_bounded<T, U, F>(jobs: usize, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(_) => items.iter().map(f).collect(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        items.iter().map(f).collect()
    }
}

#[derive(Clone, Debug)]
pub struct BatchSummary {
    pub lines: Vec<PairLine>,
    pub aggregate: Aggregate,
}

/// The pairs named by the config: from `pairs` if set, else from `input_dir`.
pub fn config_pairs(cfg: &FusionConfig) -> Result<Vec<PairEntry>> {
    match (&cfg.pairs, &cfg.input_dir) {
        (Some(list), _) => read_pair_list(list),
        (None, Some(dir)) => discover_pairs(dir),
        (None, None) => Err(CliError::Usage(
            "batch needs an input directory or a pair list".into(),
        )),
    }
}

/// Fuses every pair, writing fused PNGs to `cfg.out_dir` and one report line
/// per pair (in input order) plus an aggregate line to `report`.
///
/// Failed pairs are reported and skipped. Fails only when there was at least
/// one pair and every pair failed.
pub fn run_batch(cfg: &FusionConfig, jobs: usize, report: &mut dyn Write) -> Result<BatchSummary> {
    cfg.validate()?;
    let out_dir = cfg
        .out_dir
        .as_deref()
        .ok_or_else(|| CliError::Usage("batch needs an output directory".into()))?;
    let entries = config_pairs(cfg)?;
    ensure_dir(out_dir)?;

    let results = run_bounded(jobs, &entries, |entry| {
        process_pair(entry, &cfg.params, out_dir, cfg.bit_depth)
    });

    let mut lines = Vec::with_capacity(entries.len());
    let mut first_error = None;
    let report_path = cfg
        .report
        .clone()
        .unwrap_or_else(|| PathBuf::from("<stdout>"));
    for (entry, result) in entries.iter().zip(results) {
        let line = match result {
            Ok((metrics, timings)) => PairLine::Ok {
                pair: entry.id.clone(),
                scores: Scores::from(&metrics),
                timings_ms: Some(TimingsMs::from(&timings)),
            },
            Err(e) => {
                eprintln!("pair {}: {e}", entry.id);
                let line = PairLine::Error {
                    pair: entry.id.clone(),
                    error: e.to_string(),
                };
                first_error.get_or_insert(e);
                line
            }
        };
        write_line(report, &line).map_err(|e| CliError::io(&report_path, e))?;
        lines.push(line);
    }
    let aggregate = Aggregate::from_lines(&lines);
    write_line(report, &aggregate).map_err(|e| CliError::io(&report_path, e))?;
    report.flush().map_err(|e| CliError::io(&report_path, e))?;

    if aggregate.succeeded == 0 {
        if let Some(first) = first_error {
            return Err(CliError::AllFailed {
                count: lines.len(),
                first: Box::new(first),
            });
        }
    }
    Ok(BatchSummary { lines, aggregate })
}
