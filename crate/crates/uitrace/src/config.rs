//! Run configuration: a TOML file whose values command line flags override.
//!
//! ```toml
//! metrics = ["dtw", "wmd"]
//! band_fraction = 0.1
//! normalize = true
//! prior = "auto"        # or a number
//! workers = 4
//!
//! [ebleu]
//! max_order = 4
//! weights = [0.25, 0.25, 0.25, 0.25]
//! length_tolerance = 0.5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use uitrace_core::metrics::{EbleuConfig, MetricKind};
use uitrace_core::ranking::{FitConfig, Prior};
use uitrace_core::scoring::{Imputation, MetricParams};
use uitrace_core::trace::{CorpusOptions, DEFAULT_MAX_FRAMES};

use crate::error::{Error, Result};

/// eBLEU settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EbleuSettings {
    /// Highest k-gram order.
    pub max_order: usize,
    /// Per-order weights; uniform when absent.
    pub weights: Option<Vec<f64>>,
    /// Relative length difference tolerated without penalty.
    pub length_tolerance: f64,
}

impl Default for EbleuSettings {
    fn default() -> Self {
        Self {
            max_order: 4,
            weights: None,
            length_tolerance: 0.5,
        }
    }
}

/// Prior setting as written in config files: `"auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSetting {
    /// A fixed L2 strength.
    Fixed(f64),
    /// The literal `"auto"`.
    Named(AutoKeyword),
}

/// The `"auto"` keyword.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    /// Small prior only when needed.
    Auto,
}

impl Default for PriorSetting {
    fn default() -> Self {
        Self::Named(AutoKeyword::Auto)
    }
}

impl std::str::FromStr for PriorSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Named(AutoKeyword::Auto));
        }
        s.parse()
            .map(Self::Fixed)
            .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

/// All tunables of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Metrics to compute.
    pub metrics: Vec<MetricKind>,
    /// DTW band fraction in `(0, 1]`.
    pub band_fraction: f64,
    /// eBLEU settings.
    pub ebleu: EbleuSettings,
    /// Re-normalize frames to unit norm while loading.
    pub normalize: bool,
    /// Reject frames whose norm is not 1.
    pub expect_normalized: bool,
    /// Frame cap per trace.
    pub max_frames: usize,
    /// WMD value for tasks without generated traces; corpus maximum frame
    /// distance when absent.
    pub wmd_cap: Option<f64>,
    /// eBLEU value for tasks without generated traces.
    pub ebleu_floor: f64,
    /// Bradley-Terry prior.
    pub prior: PriorSetting,
    /// Metric worker threads; all cores when absent.
    pub workers: Option<usize>,
    /// Seed for fixture generation and arena assignment.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metrics: MetricKind::ALL.to_vec(),
            band_fraction: uitrace_core::metrics::dtw::DEFAULT_BAND_FRACTION,
            ebleu: EbleuSettings::default(),
            normalize: false,
            expect_normalized: false,
            max_frames: DEFAULT_MAX_FRAMES,
            wmd_cap: None,
            ebleu_floor: 0.0,
            prior: PriorSetting::default(),
            workers: None,
            seed: 42,
        }
    }
}

impl RunConfig {
    /// Reads a TOML config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks ranges and builds the eBLEU configuration once to validate it.
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::Config("select at least one metric".into()));
        }
        if !(self.band_fraction > 0.0 && self.band_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "band_fraction {} is outside (0, 1]",
                self.band_fraction
            )));
        }
        if self.max_frames == 0 {
            return Err(Error::Config("max_frames must be positive".into()));
        }
        if self.normalize && self.expect_normalized {
            return Err(Error::Config("normalize and expect_normalized are exclusive".into()));
        }
        if let Some(cap) = self.wmd_cap {
            if !(cap.is_finite() && cap >= 0.0) {
                return Err(Error::Config(format!("wmd_cap {cap} must be finite and non-negative")));
            }
        }
        if !(0.0..=1.0).contains(&self.ebleu_floor) {
            return Err(Error::Config(format!(
                "ebleu_floor {} is outside [0, 1]",
                self.ebleu_floor
            )));
        }
        if let PriorSetting::Fixed(p) = self.prior {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Config(format!("prior {p} must be finite and non-negative")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        self.ebleu_config()?;
        Ok(())
    }

    /// eBLEU configuration.
    pub fn ebleu_config(&self) -> Result<EbleuConfig> {
        let e = &self.ebleu;
        let cfg = match &e.weights {
            Some(w) => EbleuConfig::new(e.max_order, w.clone(), e.length_tolerance),
            None => EbleuConfig::uniform(e.max_order).and_then(|c| c.with_length_tolerance(e.length_tolerance)),
        };
        cfg.map_err(|err| Error::Config(format!("ebleu: {err}")))
    }

    /// Metric parameters.
    pub fn metric_params(&self) -> Result<MetricParams> {
        Ok(MetricParams {
            band_fraction: self.band_fraction,
            ebleu: self.ebleu_config()?,
        })
    }

    /// Imputation settings.
    pub fn imputation(&self) -> Imputation {
        Imputation {
            wmd_cap: self.wmd_cap,
            ebleu_floor: self.ebleu_floor,
        }
    }

    /// Corpus loading options.
    pub fn corpus_options(&self) -> CorpusOptions {
        CorpusOptions {
            max_frames: self.max_frames,
            normalize: self.normalize,
            expect_normalized: self.expect_normalized,
        }
    }

    /// Bradley-Terry fit settings.
    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            prior: match self.prior {
                PriorSetting::Fixed(p) => Prior::Fixed(p),
                PriorSetting::Named(AutoKeyword::Auto) => Prior::Auto,
            },
            ..FitConfig::default()
        }
    }

    /// Metrics in canonical order without repeats.
    pub fn selected_metrics(&self) -> Vec<MetricKind> {
        MetricKind::ALL
            .iter()
            .copied()
            .filter(|m| self.metrics.contains(m))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg: RunConfig = toml::from_str(
            r#"
            metrics = ["wmd", "dtw"]
            prior = 0.5
            [ebleu]
            max_order = 2
            "#,
        )
        .unwrap();
        assert_eq!(cfg.selected_metrics(), vec![MetricKind::Dtw, MetricKind::Wmd]);
        assert_eq!(cfg.prior, PriorSetting::Fixed(0.5));
        assert_eq!(cfg.ebleu_config().unwrap().max_order(), 2);
        assert!(cfg.validate().is_ok());
        let auto: RunConfig = toml::from_str(r#"prior = "auto""#).unwrap();
        assert_eq!(auto.fit_config().prior, Prior::Auto);
    }

    #[test]
    fn unknown_keys_and_bad_ranges_are_rejected() {
        assert!(toml::from_str::<RunConfig>("bandfraction = 0.2").is_err());
        let cfg = RunConfig {
            band_fraction: 0.0,
            ..RunConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = RunConfig {
            metrics: vec![],
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            ebleu: EbleuSettings {
                max_order: 2,
                weights: Some(vec![1.0]),
                length_tolerance: 0.5,
            },
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn prior_from_flag_text() {
        assert_eq!(
            "auto".parse::<PriorSetting>(),
            Ok(PriorSetting::Named(AutoKeyword::Auto))
        );
        assert_eq!("0.1".parse::<PriorSetting>(), Ok(PriorSetting::Fixed(0.1)));
        assert!("x".parse::<PriorSetting>().is_err());
    }
}
