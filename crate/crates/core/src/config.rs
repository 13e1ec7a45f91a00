//! TOML run configuration.
//!
//! ```toml
//! label = "paper-sigma1"
//!
//! [kernel]
//! name = "exponential"
//! amplitude = 3.0
//!
//! [params]
//! sigma = 1.0
//!
//! [sim]
//! dt = 0.001
//! t_end = 80.0
//! projection = true
//! frame_stride = 100
//! seed = 0
//!
//! [scenario]
//! kind = "paper"
//! ```
//!
//! `kind = "random"` takes `n`, `pos_spread` and `vel_scale` (the seed comes
//! from `[sim]`); `kind = "explicit"` takes `positions` and `velocities` as
//! arrays of 3-element arrays.

use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::integrator::SimConfig;
use crate::kernel::KernelSpec;
use crate::scenario::{constrain, paper_scenario, random_scenario, Scenario};
use crate::Vec3;

pub const PRESETS: [&str; 2] = ["paper-sigma1", "paper-sigma5"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    Paper,
    Random {
        n: usize,
        pos_spread: f64,
        vel_scale: f64,
    },
    Explicit {
        positions: Vec<[f64; 3]>,
        velocities: Vec<[f64; 3]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub label: String,
    pub kernel: KernelSpec,
    pub params: Params,
    pub sim: SimConfig,
    pub scenario: ScenarioSpec,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn emit(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn preset(name: &str) -> Option<Self> {
        let sigma = match name {
            "paper-sigma1" => 1.0,
            "paper-sigma5" => 5.0,
            _ => return None,
        };
        Some(Self {
            label: name.to_string(),
            kernel: KernelSpec::Exponential { amplitude: 3.0 },
            params: Params { sigma },
            sim: SimConfig::default(),
            scenario: ScenarioSpec::Paper,
        })
    }

    /// Builds the scenario and validates the simulation settings.
    pub fn build(&self) -> Result<Scenario> {
        self.sim.steps()?;
        let kernel = self.kernel.build()?;
        let params = ModelParams::new(kernel, self.params.sigma)?;
        let mut scenario = match &self.scenario {
            ScenarioSpec::Paper => {
                if self.kernel != (KernelSpec::Exponential { amplitude: 3.0 }) {
                    return Err(Error::Config(
                        "the paper scenario fixes kernel = exponential, amplitude = 3".into(),
                    ));
                }
                paper_scenario(self.params.sigma)?
            }
            ScenarioSpec::Random {
                n,
                pos_spread,
                vel_scale,
            } => random_scenario(self.sim.seed, *n, *pos_spread, *vel_scale, params)?,
            ScenarioSpec::Explicit {
                positions,
                velocities,
            } => {
                let xs: Vec<Vec3> = positions.iter().map(|a| Vec3::from(*a)).collect();
                let vs: Vec<Vec3> = velocities.iter().map(|a| Vec3::from(*a)).collect();
                let (ensemble, adjustment) = constrain(&xs, &vs)?;
                Scenario {
                    label: String::new(),
                    ensemble,
                    params,
                    sim: self.sim.clone(),
                    adjustment,
                }
            }
        };
        scenario.label = self.label.clone();
        scenario.sim = self.sim.clone();
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let c = Config::preset(name).unwrap();
            let text = c.emit().unwrap();
            assert_eq!(Config::parse(&text).unwrap(), c);
        }
        assert!(Config::preset("paper-sigma2").is_none());
    }

    #[test]
    fn preset_builds_paper_scenario() {
        let s = Config::preset("paper-sigma5").unwrap().build().unwrap();
        assert_eq!(s.ensemble.n(), 6);
        assert_eq!(s.params.sigma, 5.0);
        assert_eq!(s.label, "paper-sigma5");
    }

    #[test]
    fn parses_documented_example() {
        let text = r#"
            label = "cap"
            [kernel]
            name = "linear"
            slope = 1.5
            [params]
            sigma = 0.5
            [sim]
            dt = 0.01
            t_end = 2.0
            seed = 9
            [scenario]
            kind = "random"
            n = 4
            pos_spread = 0.1
            vel_scale = 0.01
        "#;
        let c = Config::parse(text).unwrap();
        assert_eq!(c.kernel, KernelSpec::Linear { slope: 1.5 });
        assert!(c.sim.projection);
        assert_eq!(c.sim.frame_stride, 100);
        let s = c.build().unwrap();
        assert_eq!(s.ensemble.n(), 4);
        assert_eq!(s.sim.seed, 9);
    }

    #[test]
    fn explicit_scenario_round_trips() {
        let c = Config {
            label: "pair".into(),
            kernel: KernelSpec::Quadratic { scale: 0.25 },
            params: Params { sigma: 2.0 },
            sim: SimConfig {
                dt: 0.005,
                t_end: 1.0,
                projection: false,
                frame_stride: 10,
                seed: 1,
            },
            scenario: ScenarioSpec::Explicit {
                positions: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
                velocities: vec![[0.0, 0.1, 0.0], [0.0, 0.0, 0.3]],
            },
        };
        assert_eq!(Config::parse(&c.emit().unwrap()).unwrap(), c);
        assert_eq!(c.build().unwrap().ensemble.n(), 2);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let text = format!(
            "extra = 1\n{}",
            Config::preset("paper-sigma1").unwrap().emit().unwrap()
        );
        assert!(matches!(Config::parse(&text), Err(Error::Config(_))));
        let mut c = Config::preset("paper-sigma1").unwrap();
        c.sim.dt = 0.0;
        assert!(c.build().is_err());
        c = Config::preset("paper-sigma1").unwrap();
        c.kernel = KernelSpec::Linear { slope: 1.0 };
        assert!(c.build().is_err());
    }
}
