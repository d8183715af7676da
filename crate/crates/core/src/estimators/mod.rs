//! Simultaneous prediction interval estimators and the pointwise baseline.

pub mod bonferroni;
pub mod gspie;
pub mod olshen;

use std::fmt;
use std::str::FromStr;

use crate::curves::{Alpha, Band, SampleMatrix};
use crate::error::{Result, SpiError};

pub use bonferroni::{bonferroni_band, ogive_quantile};
pub use gspie::{gspie, gspie_step, split_rows, GspieConfig, GspieFit, PathStep, Retraction, Side, Wall};
pub use olshen::{
    column_stats, column_stats_with, critical_k, fit_olshen, fit_two_sided_olshen, olshen, sample_max_distance,
    two_sided_distance, two_sided_olshen, two_sided_stats, BoxFamily, ColumnStats, CriticalK, Denominator,
    OlshenConfig, OlshenFit, TwoSidedStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Olshen,
    TwoSidedOlshen,
    Gspie,
    Bonferroni,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Olshen, Method::TwoSidedOlshen, Method::Gspie, Method::Bonferroni];

    pub fn name(self) -> &'static str {
        match self {
            Method::Olshen => "olshen",
            Method::TwoSidedOlshen => "olshen2",
            Method::Gspie => "gspie",
            Method::Bonferroni => "bonferroni",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SpiError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| SpiError::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// Knobs shared by every estimator; each method reads the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSettings {
    pub bootstrap_reps: usize,
    pub resample: bool,
    pub split_fraction: f64,
    pub seed: u64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        EstimatorSettings {
            bootstrap_reps: olshen::DEFAULT_BOOTSTRAP_REPS,
            resample: true,
            split_fraction: gspie::DEFAULT_SPLIT_FRACTION,
            seed: 0,
        }
    }
}

impl EstimatorSettings {
    pub fn olshen_config(&self, alpha: Alpha) -> OlshenConfig {
        OlshenConfig {
            alpha,
            bootstrap_reps: self.bootstrap_reps,
            seed: self.seed,
            resample: self.resample,
            denominator: Denominator::Population,
        }
    }

    pub fn gspie_config(&self, alpha: Alpha) -> GspieConfig {
        GspieConfig {
            alpha,
            split_fraction: self.split_fraction,
            seed: self.seed,
        }
    }
}

/// A fitted estimator that can produce bands for several levels.
pub enum Fitted {
    Olshen(OlshenFit<ColumnStats>),
    TwoSided(OlshenFit<TwoSidedStats>),
    Gspie(GspieFit),
    Bonferroni(SampleMatrix),
}

impl Fitted {
    /// Fits `method`; `loosest` is the largest alpha that will be queried.
    pub fn fit(method: Method, samples: &SampleMatrix, settings: &EstimatorSettings, loosest: Alpha) -> Result<Self> {
        Ok(match method {
            Method::Olshen => Fitted::Olshen(fit_olshen(samples, &settings.olshen_config(loosest))?),
            Method::TwoSidedOlshen => Fitted::TwoSided(fit_two_sided_olshen(samples, &settings.olshen_config(loosest))?),
            Method::Gspie => Fitted::Gspie(GspieFit::new(samples, settings.split_fraction, settings.seed, loosest)?),
            Method::Bonferroni => {
                samples.require_rows(2)?;
                Fitted::Bonferroni(samples.clone())
            }
        })
    }

    /// Band at `alpha`, clipped into `[0, 1]`.
    pub fn band(&self, alpha: Alpha) -> Result<Band> {
        Ok(match self {
            Fitted::Olshen(fit) => fit.band(alpha),
            Fitted::TwoSided(fit) => fit.band(alpha),
            Fitted::Gspie(fit) => fit.band(alpha).clipped(),
            Fitted::Bonferroni(samples) => bonferroni_band(samples, alpha)?,
        })
    }
}

/// Estimates a clipped band with any method.
pub fn estimate(method: Method, samples: &SampleMatrix, alpha: Alpha, settings: &EstimatorSettings) -> Result<Band> {
    Fitted::fit(method, samples, settings, alpha)?.band(alpha)
}
