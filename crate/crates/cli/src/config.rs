use std::path::Path;

use serde::{Deserialize, Serialize};

use longi_readout::circuit::CircuitParams;
use longi_readout::floquet::FloquetSpec;
use longi_readout::genetic::GAConfig;
use longi_readout::oracle::EvolutionConfig;
use longi_readout::readout::SqueezeSpec;
use longi_readout::SystemParams;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    DesignPoly,
    DesignTrig,
    Baseline,
    CDFrame,
    Floquet,
    GA,
    Oracle,
    Circuit,
    OCT,
}

impl Scenario {
    pub fn slug(self) -> &'static str {
        match self {
            Scenario::DesignPoly => "design-poly",
            Scenario::DesignTrig => "design-trig",
            Scenario::Baseline => "baseline",
            Scenario::CDFrame => "cd-frame",
            Scenario::Floquet => "floquet",
            Scenario::GA => "ga",
            Scenario::Oracle => "oracle",
            Scenario::Circuit => "circuit",
            Scenario::OCT => "oct",
        }
    }

    /// The only scenario block this scenario accepts, and whether it is required.
    fn block(self) -> (Block, bool) {
        match self {
            Scenario::DesignPoly | Scenario::DesignTrig | Scenario::Baseline | Scenario::CDFrame => {
                (Block::Squeeze, false)
            }
            Scenario::Floquet => (Block::Floquet, true),
            Scenario::GA => (Block::Ga, true),
            Scenario::Oracle => (Block::Evolution, true),
            Scenario::Circuit => (Block::Circuit, true),
            Scenario::OCT => (Block::Oct, true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    Squeeze,
    Floquet,
    Ga,
    Evolution,
    Circuit,
    Oct,
}

impl Block {
    fn name(self) -> &'static str {
        match self {
            Block::Squeeze => "squeeze",
            Block::Floquet => "floquet",
            Block::Ga => "ga",
            Block::Evolution => "evolution",
            Block::Circuit => "circuit",
            Block::Oct => "oct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ansatz {
    #[default]
    Polynomial,
    Trigonometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OctConfig {
    /// Control bound in rad/s.
    pub u_max: f64,
    #[serde(default = "default_max_returns")]
    pub max_returns: u64,
}

fn default_max_returns() -> u64 {
    longi_readout::time_optimal::DEFAULT_MAX_RETURNS
}

fn default_grid_points() -> usize {
    401
}

fn default_fock() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default = "SystemParams::standard")]
    pub system: SystemParams,
    /// Column label in comparisons. Defaults to the scenario slug.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Waveform for CDFrame, Floquet and Oracle.
    #[serde(default)]
    pub ansatz: Ansatz,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Fock truncation for the Floquet oracle run.
    #[serde(default = "default_fock")]
    pub fock_truncation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeeze: Option<SqueezeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floquet: Option<FloquetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga: Option<GAConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oct: Option<OctConfig>,
}

impl ExperimentConfig {
    /// A runnable default for `scenario` at the standard parameters.
    pub fn default_for(scenario: Scenario) -> Self {
        let system = SystemParams::standard();
        let mut c = ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            scenario,
            system,
            label: None,
            ansatz: Ansatz::default(),
            grid_points: default_grid_points(),
            fock_truncation: default_fock(),
            seed: None,
            output_dir: None,
            squeeze: None,
            floquet: None,
            ga: None,
            evolution: None,
            circuit: None,
            oct: None,
        };
        match scenario {
            Scenario::Floquet => {
                c.floquet = Some(FloquetSpec { omega: 1.0, nu: 2.0 * std::f64::consts::PI * 50.0 / system.t_f })
            }
            Scenario::GA => c.ga = Some(GAConfig::for_params(&system, 8, 0)),
            Scenario::Oracle => {
                // the reduced coupling keeps the pointer states inside a 20-level space
                c.system = system.with_g_z0(system.g_z0 / 20.0);
                c.evolution = Some(EvolutionConfig::rk4(20, longi_readout::oracle::Frame::Rotating));
            }
            Scenario::Circuit => c.circuit = Some(CircuitParams::standard()),
            Scenario::OCT => c.oct = Some(OctConfig { u_max: 2.0 * std::f64::consts::PI * 2.57e9, max_returns: default_max_returns() }),
            _ => {}
        }
        c
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let schema = |path: &str, message: String| CliError::Schema { path: path.into(), message };
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let present = [
            (Block::Squeeze, self.squeeze.is_some()),
            (Block::Floquet, self.floquet.is_some()),
            (Block::Ga, self.ga.is_some()),
            (Block::Evolution, self.evolution.is_some()),
            (Block::Circuit, self.circuit.is_some()),
            (Block::Oct, self.oct.is_some()),
        ];
        let (own, required) = self.scenario.block();
        for (block, is_set) in present {
            if is_set && block != own {
                return Err(schema(
                    block.name(),
                    format!("block not allowed for scenario {:?}", self.scenario),
                ));
            }
            if !is_set && block == own && required {
                return Err(schema(block.name(), format!("scenario {:?} requires this block", self.scenario)));
            }
        }
        if self.grid_points < 11 {
            return Err(schema("grid_points", format!("{} is below the minimum of 11", self.grid_points)));
        }
        if self.fock_truncation == 0 {
            return Err(schema("fock_truncation", "must be at least 1".into()));
        }
        self.system
            .validate()
            .map_err(|e| schema("system", e.to_string()))?;
        Ok(())
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.scenario.slug().to_string())
    }

    /// Applies command-line overrides.
    pub fn apply_overrides(&mut self, seed: Option<u64>, fock: Option<usize>) {
        if let Some(s) = seed {
            self.seed = Some(s);
        }
        if let Some(ga) = self.ga.as_mut() {
            if let Some(s) = self.seed {
                ga.seed = s;
            }
        }
        if let Some(n) = fock {
            self.fock_truncation = n;
            if let Some(ev) = self.evolution.as_mut() {
                ev.fock_truncation = n;
            }
        }
    }

    /// Canonical JSON used for hashing and the manifest echo.
    pub fn canonical_json(&self) -> Vec<u8> {
        let mut c = self.clone();
        c.output_dir = None;
        serde_json::to_vec(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for s in [
            Scenario::DesignPoly,
            Scenario::DesignTrig,
            Scenario::Baseline,
            Scenario::CDFrame,
            Scenario::Floquet,
            Scenario::GA,
            Scenario::Oracle,
            Scenario::Circuit,
            Scenario::OCT,
        ] {
            ExperimentConfig::default_for(s).validate().unwrap();
        }
    }

    #[test]
    fn minimal_json() {
        let c = ExperimentConfig::parse(r#"{"schema_version": 1, "scenario": "DesignTrig"}"#).unwrap();
        assert_eq!(c.system, SystemParams::standard());
        assert_eq!(c.grid_points, 401);
    }

    #[test]
    fn schema_errors_carry_paths() {
        let e = ExperimentConfig::parse(r#"{"schema_version": 1, "scenario": "DesignTrig", "system": {"kappa": "x"}}"#)
            .unwrap_err();
        match e {
            CliError::Schema { path, .. } => assert_eq!(path, "system.kappa"),
            other => panic!("{other:?}"),
        }
        let e = ExperimentConfig::parse(r#"{"schema_version": 2, "scenario": "DesignTrig"}"#).unwrap_err();
        assert!(matches!(e, CliError::Schema { ref path, .. } if path == "schema_version"));
        let e = ExperimentConfig::parse(r#"{"schema_version": 1, "scenario": "GA"}"#).unwrap_err();
        assert!(matches!(e, CliError::Schema { ref path, .. } if path == "ga"));
        let e = ExperimentConfig::parse(r#"{"schema_version": 1, "scenario": "Baseline", "bogus": 1}"#).unwrap_err();
        assert!(matches!(e, CliError::Schema { .. }));
    }

    #[test]
    fn foreign_block_rejected() {
        let mut c = ExperimentConfig::default_for(Scenario::DesignPoly);
        c.circuit = Some(CircuitParams::standard());
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::default_for(Scenario::GA);
        c.apply_overrides(Some(9), Some(30));
        assert_eq!(c.ga.unwrap().seed, 9);
        assert_eq!(c.fock_truncation, 30);
        let mut o = ExperimentConfig::default_for(Scenario::Oracle);
        o.apply_overrides(None, Some(25));
        assert_eq!(o.evolution.unwrap().fock_truncation, 25);
    }
}
