//! Run configuration and its flat `key = value` file format.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Unknown keys are rejected so typos do not silently fall back to defaults.

use crate::error::{CliError, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use vesselseg_core::evaluation::DEFAULT_ROC_STEP;
use vesselseg_core::pipeline::SegmentationConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub segmentation: SegmentationConfig,
    /// Threshold step of the ROC tables, in quantized levels.
    pub roc_step: usize,
    /// Score only pixels inside the field-of-view mask.
    pub fov_restricted: bool,
    pub output_dir: PathBuf,
    /// Worker threads; 0 means one per logical processor.
    pub threads: usize,
    /// Record ids skipped when loading a dataset.
    pub exclude: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            segmentation: SegmentationConfig::default(),
            roc_step: DEFAULT_ROC_STEP,
            fov_restricted: true,
            output_dir: PathBuf::from("out"),
            threads: 0,
            exclude: Vec::new(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "mask_threshold",
    "prefilter_side",
    "clahe_tiles",
    "clahe_clip",
    "t",
    "beta",
    "orientation_step",
    "extent_sigmas",
    "levels",
    "vessels_dark",
    "roc_step",
    "fov_restricted",
    "output_dir",
    "threads",
    "exclude",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let seg = &mut self.segmentation;
        match key {
            "mask_threshold" => seg.preprocess.mask_threshold = parse_value(key, value)?,
            "prefilter_side" => seg.preprocess.prefilter_side = parse_value(key, value)?,
            "clahe_tiles" => seg.preprocess.clahe_tiles = parse_value(key, value)?,
            "clahe_clip" => seg.preprocess.clahe_clip = parse_value(key, value)?,
            "t" => seg.gabor.thickness = parse_value(key, value)?,
            "beta" => seg.gabor.beta = parse_value(key, value)?,
            "orientation_step" => seg.gabor.orientation_step = parse_value(key, value)?,
            "extent_sigmas" => seg.gabor.extent_sigmas = parse_value(key, value)?,
            "levels" => seg.levels = parse_value(key, value)?,
            "vessels_dark" => seg.vessels_dark = parse_value(key, value)?,
            "roc_step" => self.roc_step = parse_value(key, value)?,
            "fov_restricted" => self.fov_restricted = parse_value(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "threads" => self.threads = parse_value(key, value)?,
            "exclude" => {
                self.exclude = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Parses file contents on top of the defaults. `origin` names the source
    /// in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let syntax = |reason: String| CliError::ConfigSyntax {
                path: origin.to_string(),
                line: i + 1,
                reason,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
            cfg.set(key.trim(), value.trim()).map_err(syntax)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Checks every parameter against the pipeline's requirements.
    pub fn validate(&self) -> Result<()> {
        self.segmentation
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.roc_step == 0 {
            return Err(CliError::Config("roc_step must be >= 1".into()));
        }
        Ok(())
    }

    /// Serializes every key; `parse` of the result reproduces `self`.
    pub fn to_file_string(&self) -> String {
        let seg = &self.segmentation;
        let pre = &seg.preprocess;
        let g = &seg.gabor;
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("mask_threshold", pre.mask_threshold.to_string());
        put("prefilter_side", pre.prefilter_side.to_string());
        put("clahe_tiles", pre.clahe_tiles.to_string());
        put("clahe_clip", pre.clahe_clip.to_string());
        put("t", g.thickness.to_string());
        put("beta", g.beta.to_string());
        put("orientation_step", g.orientation_step.to_string());
        put("extent_sigmas", g.extent_sigmas.to_string());
        put("levels", seg.levels.to_string());
        put("vessels_dark", seg.vessels_dark.to_string());
        put("roc_step", self.roc_step.to_string());
        put("fov_restricted", self.fov_restricted.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("threads", self.threads.to_string());
        put("exclude", self.exclude.join(","));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::parse("", "x").unwrap(), RunConfig::default());
        assert_eq!(
            RunConfig::parse("# only\n\n   \n", "x").unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn parses_values_and_comments() {
        let text = "t = 8   # thicker vessels\nbeta=0.75\nexclude = im0001, im0002 ,\nfov_restricted = false\n";
        let cfg = RunConfig::parse(text, "x").unwrap();
        assert_eq!(cfg.segmentation.gabor.thickness, 8.0);
        assert_eq!(cfg.segmentation.gabor.beta, 0.75);
        assert_eq!(cfg.exclude, vec!["im0001", "im0002"]);
        assert!(!cfg.fov_restricted);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = RunConfig::parse("t = 6\nlevels 12\n", "run.cfg").unwrap_err();
        assert!(err.to_string().starts_with("run.cfg:2:"), "{err}");
        let err = RunConfig::parse("\nspeed = 3\n", "run.cfg").unwrap_err();
        assert!(err.to_string().contains("unknown key `speed`"), "{err}");
        let err = RunConfig::parse("levels = many\n", "run.cfg").unwrap_err();
        assert!(err.to_string().contains("invalid value"), "{err}");
    }

    #[test]
    fn every_key_is_serialized() {
        let text = RunConfig::default().to_file_string();
        let keys: Vec<&str> = text
            .lines()
            .map(|l| l.split(" = ").next().unwrap())
            .collect();
        assert_eq!(keys, KEYS);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let cfg = RunConfig {
            roc_step: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::parse("levels = 1", "x").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        assert!(RunConfig::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn file_round_trip(
            mask_threshold in any::<u8>(),
            tiles in 2usize..32,
            clip in 1.0f64..10.0,
            t in 1.0f64..20.0,
            beta in 0.5f64..=1.0,
            levels in 2usize..=256,
            roc_step in 1usize..20,
            flags in any::<(bool, bool)>(),
            threads in 0usize..64,
            exclude in proptest::collection::vec("[a-z0-9_]{1,8}", 0..4),
        ) {
            let mut cfg = RunConfig::default();
            let seg = &mut cfg.segmentation;
            seg.preprocess.mask_threshold = mask_threshold;
            seg.preprocess.clahe_tiles = tiles;
            seg.preprocess.clahe_clip = clip;
            seg.gabor.thickness = t;
            seg.gabor.beta = beta;
            seg.levels = levels;
            seg.vessels_dark = flags.0;
            cfg.roc_step = roc_step;
            cfg.fov_restricted = flags.1;
            cfg.threads = threads;
            cfg.exclude = exclude;
            let back = RunConfig::parse(&cfg.to_file_string(), "x").unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
