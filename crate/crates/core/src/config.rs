//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beams::Labeler;
use crate::channel::{ArraySpec, OfdmSpec, Propagation};
use crate::dataset::{GenerationSpec, SplitSpec};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::harness::{ModelConfig, TrainConfig};
use crate::scene::{GridSpec, Scene, StepPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub bs_position: Vec3,
    pub ris_position: Vec3,
    pub buildings: Vec<Aabb>,
    pub grid: GridSpec,
    pub steps: StepPolicy,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let s = Scene::default();
        SceneConfig {
            bs_position: s.bs_position,
            ris_position: s.ris_position,
            buildings: s.buildings,
            grid: s.grid,
            steps: StepPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    /// Hz
    pub carrier_frequency: f64,
    /// Hz
    pub bandwidth: f64,
    pub subcarriers: usize,
    pub taps: usize,
    pub rolloff: f64,
    pub absorption_per_m: f64,
    pub quantize_delays: bool,
    /// Only single-path propagation is modeled.
    pub paths: usize,
    pub bs_array: ArraySpec,
    pub ris_array: ArraySpec,
}

/// Half-wavelength ULA along -x, so beam indices grow as the drone advances.
fn ula_minus_x(n_elements: usize) -> ArraySpec {
    ArraySpec {
        n_elements,
        spacing_wavelengths: 0.5,
        axis: Vec3::new(-1.0, 0.0, 0.0),
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            carrier_frequency: 200e9,
            bandwidth: 1e9,
            subcarriers: 512,
            taps: 512,
            rolloff: 0.8,
            absorption_per_m: 0.0033,
            quantize_delays: true,
            paths: 1,
            bs_array: ula_minus_x(64),
            ris_array: ula_minus_x(256),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodebookConfig {
    pub bs_size: usize,
    pub ris_size: usize,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            bs_size: 64,
            ris_size: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_sequences: usize,
    pub train_fraction: f64,
    pub max_attempts: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n_sequences: 16_000,
            train_fraction: 0.7,
            max_attempts: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// Half-width, in grid cells, of the band around LOS/NLOS transitions.
    pub boundary_band: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { boundary_band: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub scene: SceneConfig,
    pub channel: ChannelConfig,
    pub codebook: CodebookConfig,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub report: ReportConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 7,
            out_dir: PathBuf::from("out"),
            scene: SceneConfig::default(),
            channel: ChannelConfig::default(),
            codebook: CodebookConfig::default(),
            dataset: DatasetConfig::default(),
            model: ModelConfig::default(),
            training: TrainConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

impl Config {
    /// Smaller codebooks (32 BS beams, 64 RIS beams) for single-machine runs.
    pub fn desk() -> Self {
        Config {
            codebook: CodebookConfig {
                bs_size: 32,
                ris_size: 64,
            },
            model: ModelConfig {
                classifier_dim: 64,
                embedding_vocab: 96,
                ..ModelConfig::default()
            },
            ..Config::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Config = toml::from_str(s).map_err(|e| Error::Config(vec![e.message().trim().to_string()]))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field and cross-field constraint, reporting all
    /// offending keys at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, key: &str, why: String| {
            if !ok {
                bad.push(format!("{key}: {why}"));
            }
        };
        let sc = &self.scene;
        check(sc.bs_position.is_finite(), "scene.bs_position", "must be finite".into());
        check(sc.ris_position.is_finite(), "scene.ris_position", "must be finite".into());
        for (i, b) in sc.buildings.iter().enumerate() {
            check(b.has_positive_extent(), &format!("scene.buildings[{i}]"), "needs max > min on every axis".into());
            check(
                !b.contains(sc.bs_position) && !b.contains(sc.ris_position),
                &format!("scene.buildings[{i}]"),
                "must not contain the base station or RIS".into(),
            );
        }
        check(
            sc.grid.spacing.iter().all(|s| s.is_finite() && *s > 0.0),
            "scene.grid.spacing",
            "must be positive".into(),
        );
        check(!sc.grid.counts.contains(&0), "scene.grid.counts", "must be at least 1".into());
        check(
            sc.grid.counts[0] >= crate::dataset::SEQUENCE_LENGTH,
            "scene.grid.counts",
            format!("x count must be at least {}", crate::dataset::SEQUENCE_LENGTH),
        );
        check(sc.grid.origin.is_finite(), "scene.grid.origin", "must be finite".into());
        check(sc.steps.validate().is_ok(), "scene.steps.weights", "must be nonnegative and not all zero".into());

        let ch = &self.channel;
        check(ch.carrier_frequency > 0.0, "channel.carrier_frequency", "must be positive".into());
        check(ch.bandwidth > 0.0, "channel.bandwidth", "must be positive".into());
        check(ch.subcarriers > 0, "channel.subcarriers", "must be positive".into());
        check(
            ch.taps > 0 && ch.taps <= ch.subcarriers,
            "channel.taps",
            "must lie in 1..=channel.subcarriers".into(),
        );
        check((0.0..=1.0).contains(&ch.rolloff), "channel.rolloff", "must lie in [0, 1]".into());
        check(
            ch.absorption_per_m.is_finite() && ch.absorption_per_m >= 0.0,
            "channel.absorption_per_m",
            "must be nonnegative".into(),
        );
        check(ch.paths == 1, "channel.paths", "only single-path propagation is supported".into());
        check(ch.bs_array.validate().is_ok(), "channel.bs_array", "invalid array".into());
        check(ch.ris_array.validate().is_ok(), "channel.ris_array", "invalid array".into());

        let cb = &self.codebook;
        check(cb.bs_size > 0, "codebook.bs_size", "must be positive".into());
        check(cb.ris_size > 0, "codebook.ris_size", "must be positive".into());

        let ds = &self.dataset;
        check(ds.n_sequences > 0, "dataset.n_sequences", "must be positive".into());
        check(
            ds.train_fraction > 0.0 && ds.train_fraction < 1.0,
            "dataset.train_fraction",
            "must lie in (0, 1)".into(),
        );
        check(ds.max_attempts > 0, "dataset.max_attempts", "must be positive".into());

        let m = &self.model;
        check(m.gru_layers > 0, "model.gru_layers", "must be positive".into());
        check(m.hidden > 0, "model.hidden", "must be positive".into());
        check(m.embedding_dim > 0, "model.embedding_dim", "must be positive".into());
        check((0.0..1.0).contains(&m.dropout), "model.dropout", "must lie in [0, 1)".into());
        let classes = cb.bs_size.max(cb.ris_size);
        check(
            m.classifier_dim == classes,
            "model.classifier_dim",
            format!("must equal max(codebook.bs_size, codebook.ris_size) = {classes}"),
        );
        let vocab = cb.bs_size + cb.ris_size;
        check(
            m.embedding_vocab == vocab,
            "model.embedding_vocab",
            format!("must equal codebook.bs_size + codebook.ris_size = {vocab}"),
        );

        let t = &self.training;
        check(t.batch_size > 0, "training.batch_size", "must be positive".into());
        check(
            t.learning_rate.is_finite() && t.learning_rate >= 0.0,
            "training.learning_rate",
            "must be nonnegative".into(),
        );
        check((0.0..1.0).contains(&t.beta1), "training.beta1", "must lie in [0, 1)".into());
        check((0.0..1.0).contains(&t.beta2), "training.beta2", "must lie in [0, 1)".into());
        check(t.epsilon > 0.0, "training.epsilon", "must be positive".into());
        check(
            t.window > 0 && t.window < crate::dataset::SEQUENCE_LENGTH,
            "training.window",
            format!("must lie in 1..{}", crate::dataset::SEQUENCE_LENGTH),
        );

        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    pub fn scene(&self) -> Scene {
        Scene {
            bs_position: self.scene.bs_position,
            ris_position: self.scene.ris_position,
            buildings: self.scene.buildings.clone(),
            grid: self.scene.grid.clone(),
            carrier_frequency: self.channel.carrier_frequency,
            bandwidth: self.channel.bandwidth,
        }
    }

    pub fn labeler(&self) -> Result<Labeler> {
        let scene = self.scene();
        let prop = Propagation::for_scene(&scene, self.channel.absorption_per_m, self.channel.quantize_delays);
        let ofdm = OfdmSpec::new(
            self.channel.subcarriers,
            self.channel.bandwidth,
            self.channel.taps,
            self.channel.rolloff,
        )?;
        Labeler::new(
            scene,
            prop,
            self.channel.bs_array.clone(),
            self.channel.ris_array.clone(),
            ofdm,
            self.codebook.bs_size,
            self.codebook.ris_size,
        )
    }

    pub fn generation(&self) -> GenerationSpec {
        GenerationSpec {
            n_sequences: self.dataset.n_sequences,
            seed: self.seed,
            policy: self.scene.steps,
            max_attempts: self.dataset.max_attempts,
        }
    }

    pub fn split(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.dataset.train_fraction,
            shuffle_seed: derive_seed(self.seed, 2),
        }
    }

    pub fn training_seed(&self) -> u64 {
        derive_seed(self.seed, 3)
    }
}
