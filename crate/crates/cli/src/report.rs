//! JSON-lines reports: one object per pair, then one aggregate object.

use std::io::Write;

use nirfuse::{MetricsReport, StageTimings};
use serde::{Serialize, Serializer};

/// Non-finite values are written as the strings `"inf"`, `"-inf"` or `"nan"`
/// so every line stays valid JSON.
fn finite_or_tag<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimingsMs {
    pub decompose: f64,
    pub xdog: f64,
    pub weights: f64,
    pub fuse: f64,
    pub total: f64,
}

impl From<&StageTimings> for TimingsMs {
    fn from(t: &StageTimings) -> Self {
        let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
        TimingsMs {
            decompose: ms(t.decompose),
            xdog: ms(t.xdog),
            weights: ms(t.weights),
            fuse: ms(t.fuse),
            total: ms(t.total()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scores {
    #[serde(serialize_with = "finite_or_tag")]
    pub cd: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub psnr_vs_visible: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub ssim_vs_visible: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub ssim_vs_nir: f64,
    /// Spectrum distortion index; not computed, kept for format parity.
    pub sdi: Option<f64>,
}

impl From<&MetricsReport> for Scores {
    fn from(m: &MetricsReport) -> Self {
        Scores {
            cd: m.cd,
            psnr_vs_visible: m.psnr_vs_visible,
            ssim_vs_visible: m.ssim_vs_visible,
            ssim_vs_nir: m.ssim_vs_nir,
            sdi: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PairLine {
    Ok {
        pair: String,
        #[serde(flatten)]
        scores: Scores,
        #[serde(skip_serializing_if = "Option::is_none")]
        timings_ms: Option<TimingsMs>,
    },
    Error {
        pair: String,
        error: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub aggregate: bool,
    pub pairs: usize,
    pub succeeded: usize,
    pub failed: usize,
    /// Means over succeeded pairs; `None` when there are none.
    pub mean: Option<Scores>,
    pub total_ms: f64,
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

impl Aggregate {
    /// Summarizes pair lines. An infinite PSNR anywhere makes the mean PSNR
    /// infinite.
    pub fn from_lines(lines: &[PairLine]) -> Self {
        let ok: Vec<(&Scores, Option<&TimingsMs>)> = lines
            .iter()
            .filter_map(|l| match l {
                PairLine::Ok {
                    scores, timings_ms, ..
                } => Some((scores, timings_ms.as_ref())),
                PairLine::Error { .. } => None,
            })
            .collect();
        let mean = (!ok.is_empty()).then(|| Scores {
            cd: mean_of(ok.iter().map(|(s, _)| s.cd)),
            psnr_vs_visible: mean_of(ok.iter().map(|(s, _)| s.psnr_vs_visible)),
            ssim_vs_visible: mean_of(ok.iter().map(|(s, _)| s.ssim_vs_visible)),
            ssim_vs_nir: mean_of(ok.iter().map(|(s, _)| s.ssim_vs_nir)),
            sdi: None,
        });
        Aggregate {
            aggregate: true,
            pairs: lines.len(),
            succeeded: ok.len(),
            failed: lines.len() - ok.len(),
            mean,
            total_ms: ok.iter().filter_map(|(_, t)| t.map(|t| t.total)).sum(),
        }
    }
}

/// Writes one value as a single JSON line with one `write_all` call.
pub fn write_line<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> std::io::Result<()> {
    let mut line = serde_json::to_vec(value).map_err(std::io::Error::other)?;
    line.push(b'\n');
    out.write_all(&line)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(psnr: f64) -> Scores {
        Scores {
            cd: 2.0,
            psnr_vs_visible: psnr,
            ssim_vs_visible: 0.9,
            ssim_vs_nir: 0.5,
            sdi: None,
        }
    }

    #[test]
    fn infinite_psnr_is_a_string_sentinel() {
        let line = PairLine::Ok {
            pair: "a".into(),
            scores: scores(f64::INFINITY),
            timings_ms: None,
        };
        let v: serde_json::Value = serde_json::to_value(&line).unwrap();
        assert_eq!(v["psnr_vs_visible"], "inf");
        assert_eq!(v["status"], "ok");
        assert!(v["sdi"].is_null());
        assert_eq!(v["cd"], 2.0);
    }

    #[test]
    fn aggregate_skips_failures() {
        let lines = vec![
            PairLine::Ok {
                pair: "a".into(),
                scores: scores(30.0),
                timings_ms: None,
            },
            PairLine::Error {
                pair: "b".into(),
                error: "boom".into(),
            },
            PairLine::Ok {
                pair: "c".into(),
                scores: scores(40.0),
                timings_ms: None,
            },
        ];
        let agg = Aggregate::from_lines(&lines);
        assert_eq!((agg.pairs, agg.succeeded, agg.failed), (3, 2, 1));
        assert_eq!(agg.mean.unwrap().psnr_vs_visible, 35.0);
        assert!(Aggregate::from_lines(&[]).mean.is_none());
    }

    #[test]
    fn lines_end_with_newline() {
        let mut buf = Vec::new();
        write_line(&mut buf, &Aggregate::from_lines(&[])).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
        assert_eq!(*buf.last().unwrap(), b'\n');
    }
}
