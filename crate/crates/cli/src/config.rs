//! Scenario description files.
//!
//! A scenario is a TOML document with these keys:
//!
//! ```toml
//! sample_rate_hz = 250.0          # optional, default 1.0
//! noise_sd = 0.005                # optional, default 0.0
//! seed = 1                        # optional, default 0
//! mixing = [[1.3, 2.0], [1.0, 2.85]]
//!
//! [sources]
//! kind = "gaussian"               # or "shifted_uniform"
//! duration_s = 0.2
//! [[sources.specs]]
//! amplitude = 1.0
//! center_s = 0.1
//! width_s = 0.0125
//! ```
//!
//! A `shifted_uniform` block takes `length`, `shift` and an optional
//! `source_seed` instead of `duration_s` and `specs`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use heading_bss::simgen::{generate_shifted_uniform_sources, GaussianSourceSpec};
use heading_bss::{MixingMatrix, Scenario};
use serde::{Deserialize, Serialize};

pub const PRESETS: [(&str, &str); 2] = [
    ("example1", include_str!("../presets/example1.toml")),
    ("section2iii", include_str!("../presets/section2iii.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
    pub mixing: Vec<Vec<f64>>,
    pub sources: SourcesConfig,
}

fn default_rate() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourcesConfig {
    Gaussian {
        duration_s: f64,
        specs: Vec<GaussianSourceSpec>,
    },
    ShiftedUniform {
        length: usize,
        shift: usize,
        #[serde(default)]
        source_seed: u64,
    },
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid scenario file {}", path.display()))
    }

    pub fn preset(name: &str) -> Result<Self> {
        match PRESETS.iter().find(|(n, _)| *n == name) {
            Some((_, text)) => Self::parse(text).with_context(|| format!("preset {name}")),
            None => {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                bail!("unknown preset `{name}` (available: {})", names.join(", "))
            }
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let mixing = MixingMatrix::from_rows(self.mixing.clone()).context("mixing matrix")?;
        let scenario = match &self.sources {
            SourcesConfig::Gaussian { duration_s, specs } => {
                Scenario::gaussian(specs, self.sample_rate_hz, *duration_s, mixing, self.noise_sd)?
            }
            SourcesConfig::ShiftedUniform {
                length,
                shift,
                source_seed,
            } => {
                let sources =
                    generate_shifted_uniform_sources(*length, *shift, *source_seed)?.with_sample_rate(self.sample_rate_hz)?;
                Scenario::new(sources, mixing, self.noise_sd)?
            }
        };
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_round_trip() {
        for (name, _) in PRESETS {
            let c = ScenarioConfig::preset(name).unwrap();
            let back = ScenarioConfig::parse(&c.to_toml().unwrap()).unwrap();
            assert_eq!(c, back);
            c.scenario().unwrap();
        }
    }

    #[test]
    fn example1_preset_matches_builtin() {
        let s = ScenarioConfig::preset("example1").unwrap().scenario().unwrap();
        assert_eq!(s, Scenario::example1(0.005).unwrap());
    }

    #[test]
    fn section2iii_shape() {
        let s = ScenarioConfig::preset("section2iii").unwrap().scenario().unwrap();
        assert_eq!(s.sources.samples(), 190);
        assert!(s.sources.row(0)[100..].iter().all(|&v| v == 0.0));
        assert!(s.sources.row(1)[..90].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ScenarioConfig::parse("noise_sd = 0.1\nmixing = [[1.0, 2.0]\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
        let err = ScenarioConfig::parse("mixing = [[1.0]]\nnoise = 1\n[sources]\nkind = \"gaussian\"\nduration_s = 1\nspecs = []\n")
            .unwrap_err();
        assert!(format!("{err:#}").contains("noise"), "{err:#}");
    }

    #[test]
    fn unknown_preset() {
        assert!(ScenarioConfig::preset("nope").is_err());
    }
}
