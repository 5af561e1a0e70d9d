//! Experiment configuration, compiled-in presets, and instance generation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::AgentMode;
use crate::error::{Error, Result};
use crate::harness::geometric_checkpoints;
use crate::model::{InstanceParams, ProblemInstance, DEFAULT_VARSIGMA};
use crate::policy::{PolicyConfig, DEFAULT_ALPHA, DEFAULT_M};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Five routes from the published experiment table.
    #[serde(rename = "table1_n5")]
    Table1N5,
    /// Ten routes from the published experiment table.
    #[serde(rename = "table1_n10")]
    Table1N10,
    /// Three actions, both parties prefer action 2.
    #[serde(rename = "example1")]
    Example1,
    /// Four actions, the parties' favorites differ.
    #[serde(rename = "example2")]
    Example2,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Table1N5,
        Preset::Table1N10,
        Preset::Example1,
        Preset::Example2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1N5 => "table1_n5",
            Preset::Table1N10 => "table1_n10",
            Preset::Example1 => "example1",
            Preset::Example2 => "example2",
        }
    }

    pub fn params(self) -> InstanceParams {
        let (theta0, r0): (Vec<f64>, Vec<f64>) = match self {
            Preset::Table1N5 => (
                vec![29.0, 1.0, 14.0, 26.0, 15.0],
                vec![14.0, -24.0, -4.0, 19.0, 29.0],
            ),
            Preset::Table1N10 => (
                vec![0.0, 44.0, 51.0, 65.0, 9.0, 35.0, 69.0, 91.0, 51.0, 44.0],
                vec![-4.0, 8.0, 22.0, -12.0, -2.0, 46.0, -8.0, 16.0, 38.0, 14.0],
            ),
            Preset::Example1 => (vec![1.0, 8.0, 2.0], vec![0.0, 4.0, 3.0]),
            Preset::Example2 => (vec![1.0, 8.0, 7.0, 2.0], vec![0.0, 4.0, 3.0, 6.0]),
        };
        // C = [-20, 60] everywhere. The five-action table has r_2 = -24 below
        // C_low, so its reward set is widened to [-24, 50] and C kept explicit.
        let (reward_min, incentive_range) = match self {
            Preset::Table1N5 => (-24.0, Some([-20.0, 60.0])),
            _ => (-20.0, None),
        };
        InstanceParams {
            theta0,
            r0,
            reward_min,
            reward_max: 50.0,
            gamma: 10.0,
            theta_min: 0.0,
            theta_max: 100.0,
            reward_noise_sd: 5.0,
            varsigma: DEFAULT_VARSIGMA,
            incentive_range,
        }
    }

    pub fn instance(self) -> ProblemInstance {
        ProblemInstance::new(self.params()).expect("presets are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))
    }
}

/// Integer-grid random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInstanceSpec {
    pub n: usize,
    pub theta_range: (f64, f64),
    pub reward_range: (f64, f64),
    pub gamma: f64,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    pub seed: u64,
}

fn default_noise_sd() -> f64 {
    5.0
}

impl RandomInstanceSpec {
    pub fn generate(&self, varsigma: f64) -> Result<ProblemInstance> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (tlo, thi) = self.theta_range;
        let (rlo, rhi) = self.reward_range;
        let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> f64 {
            let (lo, hi) = (lo.ceil() as i64, hi.floor() as i64);
            rng.random_range(lo..=hi) as f64
        };
        if tlo.ceil() > thi.floor() || rlo.ceil() > rhi.floor() {
            return Err(Error::Config("random ranges contain no integers".into()));
        }
        let mut last_err = None;
        for _ in 0..1000 {
            let params = InstanceParams {
                theta0: (0..self.n).map(|_| draw(&mut rng, tlo, thi)).collect(),
                r0: (0..self.n).map(|_| draw(&mut rng, rlo, rhi)).collect(),
                reward_min: rlo,
                reward_max: rhi,
                gamma: self.gamma,
                theta_min: tlo,
                theta_max: thi,
                reward_noise_sd: self.noise_sd,
                varsigma,
                incentive_range: None,
            };
            match ProblemInstance::new(params) {
                Ok(inst) => return Ok(inst),
                Err(e) => last_err = Some(e),
            }
        }
        Err(Error::Config(format!(
            "could not draw a valid random instance: {}",
            last_err.map(|e| e.to_string()).unwrap_or_default()
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Preset(Preset),
    File(PathBuf),
    Random(RandomInstanceSpec),
}

impl InstanceSource {
    pub fn label(&self) -> String {
        match self {
            InstanceSource::Preset(p) => p.name().to_string(),
            InstanceSource::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
            InstanceSource::Random(spec) => format!("random_n{}_s{}", spec.n, spec.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    #[serde(default = "default_agent")]
    pub agent: AgentMode,
    pub horizon: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_varsigma")]
    pub varsigma: f64,
    /// Geometric grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting_id: Option<String>,
    /// Also write a per-round log for every seed.
    #[serde(default)]
    pub rounds_log: bool,
}

fn default_agent() -> AgentMode {
    AgentMode::Truthful
}

fn default_seeds() -> Vec<u64> {
    (1..=5).collect()
}

fn default_m() -> f64 {
    DEFAULT_M
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_varsigma() -> f64 {
    DEFAULT_VARSIGMA
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Defaults around a preset.
    pub fn for_preset(preset: Preset, horizon: u64) -> Self {
        ExperimentConfig {
            instance: InstanceSource::Preset(preset),
            agent: default_agent(),
            horizon,
            seeds: default_seeds(),
            m: DEFAULT_M,
            alpha: DEFAULT_ALPHA,
            varsigma: DEFAULT_VARSIGMA,
            checkpoints: None,
            out_dir: default_out_dir(),
            setting_id: None,
            rounds_log: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn setting_id(&self) -> String {
        self.setting_id
            .clone()
            .unwrap_or_else(|| format!("{}_{}_T{}", self.instance.label(), self.agent, self.horizon))
    }

    pub fn checkpoint_grid(&self) -> Vec<u64> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| geometric_checkpoints(self.horizon))
    }

    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig {
            m: self.m,
            alpha: self.alpha,
            ..PolicyConfig::default()
        }
    }

    /// Build the instance, applying the configured oracle margin.
    pub fn resolve_instance(&self) -> Result<ProblemInstance> {
        let built = match &self.instance {
            InstanceSource::Preset(p) => ProblemInstance::new(InstanceParams {
                varsigma: self.varsigma,
                ..p.params()
            }),
            InstanceSource::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let params: InstanceParams = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                ProblemInstance::new(InstanceParams {
                    varsigma: self.varsigma,
                    ..params
                })
            }
            InstanceSource::Random(spec) => spec.generate(self.varsigma),
        };
        built.map_err(as_config_error)
    }

    /// Full validation; returns the resolved instance.
    pub fn validate(&self) -> Result<ProblemInstance> {
        let instance = self.resolve_instance()?;
        self.policy().validate(instance.n()).map_err(as_config_error)?;
        if self.horizon < instance.n() as u64 {
            return Err(Error::Config(format!(
                "horizon T >= n violated (T = {}, n = {})",
                self.horizon,
                instance.n()
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed required".into()));
        }
        if let Some(bad) = self
            .checkpoint_grid()
            .into_iter()
            .find(|&c| c == 0 || c > self.horizon)
        {
            return Err(Error::Config(format!(
                "checkpoint {bad} outside 1..={}",
                self.horizon
            )));
        }
        if self.setting_id().contains([',', '"', '\n']) {
            return Err(Error::Config("setting_id must not contain commas or quotes".into()));
        }
        Ok(instance)
    }
}

fn as_config_error(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    }
}

/// Read and validate a JSON config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let config = ExperimentConfig::from_json(&text)?;
    config.validate()?;
    Ok(config)
}

/// Parse `a..b` (inclusive) or a comma-separated list.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list '{spec}'"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_n5_preset() {
        let cfg = ExperimentConfig::for_preset(Preset::Table1N5, 1000);
        let inst = cfg.validate().unwrap();
        assert_eq!(inst.theta0(), &[29.0, 1.0, 14.0, 26.0, 15.0]);
        assert_eq!(inst.r0(), &[14.0, -24.0, -4.0, 19.0, 29.0]);
        assert_eq!((inst.incentive_low(), inst.incentive_high()), (-20.0, 60.0));
        assert_eq!(cfg.m, 30.0);
    }

    #[test]
    fn all_presets_are_valid() {
        for p in Preset::ALL {
            p.instance();
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn minimal_json_gets_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"instance": {"preset": "table1_n5"}, "horizon": 10000}"#)
            .unwrap();
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.varsigma, 0.1);
        assert_eq!(cfg.checkpoint_grid(), vec![100, 1000, 10_000]);
        assert_eq!(cfg.seeds, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(
            r#"{"instance": {"preset": "table1_n5"}, "horizon": 100, "epsilon": 0.1}"#,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn gamma_violation_names_the_inequality() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let params = InstanceParams {
            gamma: 100.0,
            ..Preset::Table1N10.params()
        };
        std::fs::write(&path, serde_json::to_string(&params).unwrap()).unwrap();
        let cfg = ExperimentConfig {
            instance: InstanceSource::File(path),
            ..ExperimentConfig::for_preset(Preset::Table1N5, 100)
        };
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("gamma <= R_max - R_min - 1 = 69"), "{err}");
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::for_preset(Preset::Table1N10, 500);
        cfg.checkpoints = Some(vec![100, 500]);
        cfg.agent = AgentMode::Strategic;
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn random_instances_are_valid_and_seeded() {
        let spec = RandomInstanceSpec {
            n: 6,
            theta_range: (0.0, 100.0),
            reward_range: (-20.0, 50.0),
            gamma: 10.0,
            noise_sd: 5.0,
            seed: 3,
        };
        let a = spec.generate(0.1).unwrap();
        let b = spec.generate(0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 6);
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_seeds("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("7,9").unwrap(), vec![7, 9]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
