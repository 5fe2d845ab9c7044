use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, Metrics};
use super::mnist::Sample;
use crate::compile::{compile, DeviceConfig, LoweredProgram};
use crate::error::{Error, Result};
use crate::noise::{NoiseSpec, TrajectoryPlan};
use crate::qnn::{self, build_vqc_host, downsample_features, quanvolve, sigmoid, Backend, QnnParams, VQC_QUBITS};
use crate::trojan::{build_trojan, implant, TaggedCircuit, TrojanClass, TrojanSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    #[serde(rename = "none")]
    None,
    A,
    B,
    C,
}

impl AttackKind {
    pub fn class(self) -> Option<TrojanClass> {
        match self {
            AttackKind::None => None,
            AttackKind::A => Some(TrojanClass::A),
            AttackKind::B => Some(TrojanClass::B),
            AttackKind::C => Some(TrojanClass::C),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::A => "A",
            AttackKind::B => "B",
            AttackKind::C => "C",
        }
    }
}

impl From<Option<TrojanClass>> for AttackKind {
    fn from(c: Option<TrojanClass>) -> Self {
        match c {
            None => AttackKind::None,
            Some(TrojanClass::A) => AttackKind::A,
            Some(TrojanClass::B) => AttackKind::B,
            Some(TrojanClass::C) => AttackKind::C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Ideal,
    Noisy {
        noise: NoiseSpec,
        trajectories: usize,
        shots: Option<u64>,
        seed: u64,
    },
}

impl BackendSpec {
    /// Default noisy evaluation: 200 exact-expectation trajectories.
    pub fn noisy(noise: NoiseSpec, seed: u64) -> Self {
        BackendSpec::Noisy {
            noise,
            trajectories: 200,
            shots: None,
            seed,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BackendSpec::Ideal => "ideal",
            BackendSpec::Noisy { .. } => "noisy",
        }
    }

    /// Backend for test image `index`; each image gets its own trajectory seed.
    fn for_image(&self, index: usize) -> Backend {
        match *self {
            BackendSpec::Ideal => Backend::Ideal,
            BackendSpec::Noisy {
                noise,
                trajectories,
                shots,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(index as u64);
                Backend::Noisy {
                    noise,
                    plan: TrajectoryPlan {
                        n_trajectories: trajectories,
                        shots_per_trajectory: shots,
                        master_seed: rng.next_u64(),
                    },
                }
            }
        }
    }
}

/// One evaluation setting: backend, optional Trojan and device configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub backend: BackendSpec,
    pub trojan: Option<TrojanSpec>,
    pub config: Option<DeviceConfig>,
    pub config_path: Option<String>,
    pub model_path: Option<String>,
    pub data_seed: Option<u64>,
    pub threshold: f64,
}

impl Scenario {
    pub fn new(backend: BackendSpec) -> Self {
        Scenario {
            backend,
            trojan: None,
            config: None,
            config_path: None,
            model_path: None,
            data_seed: None,
            threshold: 0.5,
        }
    }

    /// Mounts the default Trojan of `class` with the given angle seed.
    pub fn with_attack(mut self, class: TrojanClass, trojan_seed: u64) -> Self {
        self.trojan = Some(TrojanSpec::new(class, VQC_QUBITS, trojan_seed));
        self
    }

    pub fn with_config(mut self, config: DeviceConfig, path: Option<String>) -> Self {
        self.config = Some(config);
        self.config_path = path;
        self
    }

    pub fn attack(&self) -> AttackKind {
        self.trojan.map(|t| t.class).into()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = &self.trojan {
            t.validate().map_err(|e| Error::Scenario(e.to_string()))?;
            if t.class.needs_ancilla() && self.config.is_none() {
                return Err(Error::Scenario(format!(
                    "attack {:?} needs a device config to resolve its trigger",
                    t.class
                )));
            }
        }
        if let Some(c) = &self.config {
            c.validate()?;
        }
        Ok(())
    }

    pub fn descriptor(&self) -> ScenarioDescriptor {
        ScenarioDescriptor {
            noise_model: self.backend.label().to_owned(),
            backend: self.backend,
            attack_class: self.attack(),
            trojan: self.trojan,
            config_path: self.config_path.clone(),
            device_name: self.config.as_ref().map(|c| c.device_name.clone()),
            triggered: self.config.as_ref().is_some_and(|c| !c.is_benign()),
            model_path: self.model_path.clone(),
            data_seed: self.data_seed,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    pub noise_model: String,
    pub backend: BackendSpec,
    pub attack_class: AttackKind,
    pub trojan: Option<TrojanSpec>,
    pub config_path: Option<String>,
    pub device_name: Option<String>,
    pub triggered: bool,
    pub model_path: Option<String>,
    pub data_seed: Option<u64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub metrics: Metrics,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub scenario: ScenarioDescriptor,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// The VQC for `features` with the scenario's Trojan implanted.
pub fn implanted_vqc(features: &[f64; VQC_QUBITS], params: &QnnParams, trojan: Option<&TrojanSpec>) -> Result<TaggedCircuit> {
    let ancilla = trojan.is_some_and(|t| t.class.needs_ancilla());
    let host = build_vqc_host(features, &params.vqc, ancilla)?;
    match trojan {
        None => Ok(host.circuit.into()),
        Some(spec) => {
            let t = build_trojan(VQC_QUBITS, spec)?;
            implant(&host, &t, spec.class.default_insertion())
        }
    }
}

/// Lowered program the scenario runs for one image's features.
pub fn scenario_program(features: &[f64; VQC_QUBITS], params: &QnnParams, scenario: &Scenario) -> Result<LoweredProgram> {
    let tagged = implanted_vqc(features, params, scenario.trojan.as_ref())?;
    let config = match &scenario.config {
        Some(c) => c.clone(),
        None => DeviceConfig::benign("default", tagged.circuit.num_qubits(), NoiseSpec::IDEAL),
    };
    compile(&tagged, &config, true)
}

/// Class-1 probability of one image under the scenario.
pub fn score_image(sample_index: usize, image: &qnn::Image, params: &QnnParams, scenario: &Scenario) -> Result<f64> {
    let features = downsample_features(&quanvolve(image, params)?);
    let program = scenario_program(&features, params, scenario)?;
    let circuit = program.to_circuit()?;
    Ok(sigmoid(qnn::logit_of(&circuit, &scenario.backend.for_image(sample_index))?))
}

/// Scores every test image and assembles the report.
pub fn run_experiment(scenario: &Scenario, params: &QnnParams, test: &[Sample]) -> Result<EvalReport> {
    scenario.validate()?;
    params.validate()?;
    if test.is_empty() {
        return Err(Error::InsufficientSamples {
            requested: 1,
            available: 0,
        });
    }
    let scores: Vec<f64> = test
        .par_iter()
        .enumerate()
        .map(|(i, (img, _))| score_image(i, img, params, scenario))
        .collect::<Result<_>>()?;
    let labels: Vec<u8> = test.iter().map(|(_, y)| *y).collect();
    let metrics = compute_metrics(&scores, &labels, scenario.threshold)?;
    Ok(EvalReport {
        metrics,
        scores,
        labels,
        scenario: scenario.descriptor(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigger_needs_config() {
        let s = Scenario::new(BackendSpec::Ideal).with_attack(TrojanClass::C, 0);
        assert!(matches!(s.validate(), Err(Error::Scenario(_))));
        let a = Scenario::new(BackendSpec::Ideal).with_attack(TrojanClass::A, 0);
        assert!(a.validate().is_ok());
    }

    #[test]
    fn per_image_seeds_differ() {
        let b = BackendSpec::noisy(NoiseSpec::ARIA_1, 3);
        let seed = |i| match b.for_image(i) {
            Backend::Noisy { plan, .. } => plan.master_seed,
            Backend::Ideal => unreachable!(),
        };
        assert_ne!(seed(0), seed(1));
        assert_eq!(seed(4), seed(4));
    }

    #[test]
    fn attack_labels_serialize() {
        assert_eq!(serde_json::to_string(&AttackKind::None).unwrap(), "\"none\"");
        assert_eq!(serde_json::to_string(&AttackKind::C).unwrap(), "\"C\"");
        assert!(AttackKind::None < AttackKind::A && AttackKind::B < AttackKind::C);
    }
}
