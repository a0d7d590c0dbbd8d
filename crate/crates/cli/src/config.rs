//! Flat `key = value` configuration. Blank lines and `#` comments are
//! ignored; unknown keys are errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nirfuse::FusionParams;

use crate::codec::BitDepth;
use crate::error::{CliError, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FusionConfig {
    pub params: FusionParams,
    /// Directory scanned for `<id>_vis.*` / `<id>_nir.*` pairs.
    pub input_dir: Option<PathBuf>,
    /// File listing `vis nir [id]` per line.
    pub pairs: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub bit_depth: BitDepth,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{value}`")))
}

impl FusionConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        match key {
            "alpha" => p.arctan.alpha = parse_num(key, value)?,
            "y_clamp" => p.arctan.y_clamp = parse_num(key, value)?,
            "wgif_radius" => p.filter.wgif_radius = parse_num(key, value)?,
            "wgif_eps" => p.filter.wgif_eps = parse_num(key, value)?,
            "wgif_lambda" => p.filter.wgif_lambda = parse_num(key, value)?,
            "gif_radius" => p.filter.gif_radius = parse_num(key, value)?,
            "gif_eps" => p.filter.gif_eps = parse_num(key, value)?,
            "xdog_sigma" => p.xdog.sigma = parse_num(key, value)?,
            "xdog_k" => p.xdog.k = parse_num(key, value)?,
            "xdog_p" => p.xdog.p = parse_num(key, value)?,
            "xdog_eps_t" => p.xdog.eps_t = parse_num(key, value)?,
            "xdog_phi" => p.xdog.phi = parse_num(key, value)?,
            "input_dir" => self.input_dir = Some(value.into()),
            "pairs" => self.pairs = Some(value.into()),
            "out_dir" => self.out_dir = Some(value.into()),
            "report" => self.report = Some(value.into()),
            "bit_depth" => self.bit_depth = BitDepth::from_bits(parse_num(key, value)?)?,
            other => return Err(CliError::Usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = FusionConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", n + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders every setting. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn serialize(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("alpha", format!("{:?}", p.arctan.alpha));
        put("y_clamp", format!("{:?}", p.arctan.y_clamp));
        put("wgif_radius", p.filter.wgif_radius.to_string());
        put("wgif_eps", format!("{:?}", p.filter.wgif_eps));
        put("wgif_lambda", format!("{:?}", p.filter.wgif_lambda));
        put("gif_radius", p.filter.gif_radius.to_string());
        put("gif_eps", format!("{:?}", p.filter.gif_eps));
        put("xdog_sigma", format!("{:?}", p.xdog.sigma));
        put("xdog_k", format!("{:?}", p.xdog.k));
        put("xdog_p", format!("{:?}", p.xdog.p));
        put("xdog_eps_t", format!("{:?}", p.xdog.eps_t));
        put("xdog_phi", format!("{:?}", p.xdog.phi));
        let paths = [
            ("input_dir", &self.input_dir),
            ("pairs", &self.pairs),
            ("out_dir", &self.out_dir),
            ("report", &self.report),
        ];
        for (k, v) in paths {
            if let Some(v) = v {
                put(k, v.display().to_string());
            }
        }
        put("bit_depth", self.bit_depth.bits().to_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(dir) = &self.input_dir {
            if !dir.is_dir() {
                return Err(CliError::io(
                    dir,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input directory not found"),
                ));
            }
        }
        if let Some(list) = &self.pairs {
            if !list.is_file() {
                return Err(CliError::io(
                    list,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "pair list not found"),
                ));
            }
        }
        Ok(())
    }
}
