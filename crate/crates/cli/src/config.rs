//! JSON run configurations.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use lumber_dol::adm::ADMPopulationParams;
use lumber_dol::inference::{PTConfig, PriorSpec};
use lumber_dol::profile::{
    constant_profile, generate_residential, ramp_profile, ramp_then_constant,
};
use lumber_dol::simulate::{DesignArm, ExperimentDesign};
use lumber_dol::{
    DegradationParams, DolError, EtaMode, LoadProfile, ResidentialConfig, Result,
    DEFAULT_GRID_SPACING, HOURS_PER_YEAR, TEST_RAMP_RATE,
};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// A time span written with an explicit unit, e.g. `"4 yr"` or `"100 h"`.
/// Stored in hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hours(pub f64);

impl Hours {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_ascii_alphabetic())
            .ok_or_else(|| format!("time '{s}' needs a unit suffix (h or yr)"))?;
        let (num, unit) = s.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("time '{s}': '{}' is not a number", num.trim()))?;
        let factor = match unit.trim() {
            "h" | "hr" | "hrs" | "hour" | "hours" => 1.0,
            "yr" | "y" | "year" | "years" => HOURS_PER_YEAR,
            other => return Err(format!("time '{s}': unknown unit '{other}' (use h or yr)")),
        };
        if !value.is_finite() || value < 0.0 {
            return Err(format!("time '{s}' must be finite and >= 0"));
        }
        Ok(Hours(value * factor))
    }
}

impl fmt::Display for Hours {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} h", self.0)
    }
}

impl Serialize for Hours {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Hours {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Hours;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a time with a unit suffix such as \"4 yr\" or \"100 h\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Hours, E> {
                Hours::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_str(V)
    }
}

/// Where a load profile comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSource {
    Ramp {
        #[serde(default = "test_rate")]
        rate: f64,
        horizon: Hours,
    },
    RampThenConstant {
        #[serde(default = "test_rate")]
        rate: f64,
        level: f64,
        total: Hours,
    },
    Constant {
        level: f64,
        horizon: Hours,
    },
    /// Profile JSON file, relative to the config file.
    File {
        path: PathBuf,
    },
    Residential {
        #[serde(default, flatten)]
        config: ResidentialConfig,
    },
    Inline {
        profile: LoadProfile,
    },
}

fn test_rate() -> f64 {
    TEST_RAMP_RATE
}

impl ProfileSource {
    pub fn build(&self, base: &Path) -> Result<LoadProfile> {
        match self {
            ProfileSource::Ramp { rate, horizon } => ramp_profile(*rate, horizon.0),
            ProfileSource::RampThenConstant { rate, level, total } => {
                ramp_then_constant(*rate, *level, total.0)
            }
            ProfileSource::Constant { level, horizon } => constant_profile(*level, horizon.0),
            ProfileSource::File { path } => lumber_dol::io::read_json(&base.join(path)),
            ProfileSource::Residential { config } => generate_residential(config),
            ProfileSource::Inline { profile } => Ok(profile.clone()),
        }
    }
}

fn default_spacing() -> f64 {
    DEFAULT_GRID_SPACING
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub id: String,
    pub profile: ProfileSource,
    pub n_pieces: usize,
    /// defaults to the profile horizon
    #[serde(default)]
    pub truncation: Option<Hours>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "means")]
    pub params: DegradationParams,
    /// absent: the three-arm Hemlock design
    #[serde(default)]
    pub arms: Option<Vec<ArmConfig>>,
    #[serde(default = "default_spacing")]
    pub grid_spacing: f64,
    #[serde(default = "smoothed")]
    pub eta_mode: EtaMode,
    #[serde(default = "one")]
    pub seed: u64,
}

pub fn means() -> DegradationParams {
    DegradationParams::HEMLOCK_MEANS
}

fn smoothed() -> EtaMode {
    EtaMode::RampSmoothed
}

fn pointwise() -> EtaMode {
    EtaMode::Pointwise
}

fn one() -> u64 {
    1
}

impl SimulateConfig {
    pub fn design(&self, base: &Path) -> Result<ExperimentDesign> {
        let Some(arms) = &self.arms else {
            return Ok(ExperimentDesign::hemlock());
        };
        let arms = arms
            .iter()
            .map(|a| {
                let profile = a.profile.build(base)?;
                let truncation = a.truncation.map_or(profile.horizon(), |h| h.0);
                Ok(DesignArm {
                    id: a.id.clone(),
                    profile,
                    n_pieces: a.n_pieces,
                    truncation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let design = ExperimentDesign { arms };
        design.validate()?;
        Ok(design)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub dataset: PathBuf,
    /// profile id -> source; ids without an entry are read from
    /// `<profiles_dir>/<id>.json`
    #[serde(default)]
    pub profiles: BTreeMap<String, ProfileSource>,
    #[serde(default)]
    pub profiles_dir: Option<PathBuf>,
    #[serde(default = "default_spacing")]
    pub grid_spacing: f64,
    #[serde(default)]
    pub pt: PTConfig,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default)]
    pub start: Option<DegradationParams>,
    #[serde(default = "smoothed")]
    pub eta_mode: EtaMode,
    /// posterior draws used for the CDF bands
    #[serde(default = "band_draws")]
    pub band_draws: usize,
}

fn band_draws() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarizeConfig {
    pub posterior: PathBuf,
}

/// Posterior draws from a CSV (`posterior`), or one fixed parameter vector
/// (`params`); the Table-1 posterior means when neither is given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSource {
    #[serde(default)]
    pub posterior: Option<PathBuf>,
    #[serde(default)]
    pub params: Option<DegradationParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityConfig {
    #[serde(flatten)]
    pub source: ParamSource,
    pub profile: ProfileSource,
    #[serde(default = "default_spacing")]
    pub grid_spacing: f64,
    #[serde(default = "curve_points")]
    pub curve_points: usize,
    /// use at most this many draws, evenly thinned
    #[serde(default)]
    pub max_draws: Option<usize>,
}

fn curve_points() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualScenario {
    pub name: String,
    /// load held after the test ramp
    pub level: f64,
    #[serde(default = "test_rate")]
    pub ramp_rate: f64,
    /// survival time already observed
    pub t_prime: Hours,
    /// end of the search for the residual median
    pub horizon: Hours,
    /// largest residual time on the survivor curve
    pub curve_end: Hours,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualConfig {
    #[serde(flatten)]
    pub source: ParamSource,
    pub scenarios: Vec<ResidualScenario>,
    #[serde(default = "default_spacing")]
    pub grid_spacing: f64,
    #[serde(default = "curve_points")]
    pub curve_points: usize,
    #[serde(default)]
    pub max_draws: Option<usize>,
    #[serde(default = "pointwise")]
    pub eta_mode: EtaMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmCompareConfig {
    #[serde(flatten)]
    pub source: ParamSource,
    pub profile: ProfileSource,
    #[serde(default = "ADMPopulationParams::illustrative")]
    pub population: ADMPopulationParams,
    #[serde(default = "n_sim")]
    pub n_sim: usize,
    #[serde(default = "default_spacing")]
    pub grid_spacing: f64,
    #[serde(default)]
    pub max_draws: Option<usize>,
    #[serde(default = "one")]
    pub seed: u64,
}

fn n_sim() -> usize {
    20000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileGenConfig {
    pub profile: ProfileSource,
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| DolError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units() {
        assert_eq!(Hours::parse("100 h").unwrap(), Hours(100.0));
        assert_eq!(Hours::parse("4 yr").unwrap(), Hours(4.0 * 8760.0));
        assert_eq!(Hours::parse("0.5years").unwrap(), Hours(4380.0));
        assert!(Hours::parse("100").is_err());
        assert!(Hours::parse("3 weeks").is_err());
        assert!(Hours::parse("-1 h").is_err());
    }

    #[test]
    fn profile_sources_parse() {
        let s: ProfileSource =
            serde_json::from_str(r#"{"kind":"ramp_then_constant","level":3000,"total":"4 yr"}"#)
                .unwrap();
        let p = s.build(Path::new(".")).unwrap();
        assert_eq!(p.max_load(), 3000.0);
        let s: ProfileSource = serde_json::from_str(r#"{"kind":"residential"}"#).unwrap();
        assert_eq!(
            s,
            ProfileSource::Residential {
                config: ResidentialConfig::default()
            }
        );
        let s: ProfileSource = serde_json::from_str(r#"{"kind":"residential","seed":3}"#).unwrap();
        assert!(matches!(s, ProfileSource::Residential { config } if config.seed == 3));
    }

    #[test]
    fn param_source_variants() {
        let c: ReliabilityConfig = serde_json::from_str(
            r#"{"posterior":"p.csv","profile":{"kind":"constant","level":1,"horizon":"1 h"}}"#,
        )
        .unwrap();
        assert_eq!(c.source.posterior, Some(PathBuf::from("p.csv")));
        let c: ReliabilityConfig =
            serde_json::from_str(r#"{"profile":{"kind":"constant","level":1,"horizon":"1 h"}}"#)
                .unwrap();
        assert_eq!(c.source, ParamSource::default());
    }
}
