//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use qrobust::attacks::{AttackKind, QuidTarget};
use qrobust::defend::QDetectConfig;
use qrobust::encode::EncodingSpec;
use qrobust::model::{Classifier, Cmlp, CmlpConfig, ExecMode, Pqc6, Pqc6Config, Qmlp, QmlpConfig};
use qrobust::qcore::{make_amplitude_damping, make_depolarizing, NoisePolicy};
use qrobust::train::TrainConfig;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

/// Layer counts allowed in a depth sweep.
pub const SWEEP_LAYERS: [usize; 4] = [2, 5, 10, 50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    /// Output directory; the CLI falls back to `runs/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub data: DataSpec,
    #[serde(default)]
    pub split: SplitSpec,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub train: TrainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defense: Option<DefenseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// Gaussian clusters, regenerated from each seed.
    Blobs {
        classes: usize,
        dim: usize,
        per_class: usize,
        spread: f64,
    },
    Mnist {
        images: PathBuf,
        labels: PathBuf,
    },
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Keep only the first n classes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    /// PCA components fitted on the training split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<usize>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_per_class: 200,
            test_per_class: 50,
            classes: None,
            pca: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QmlpEncoding {
    Angle,
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Qmlp {
        encoding: QmlpEncoding,
        qubits: usize,
        layers: usize,
    },
    /// Six-layer, four-qubit classifier over eight dense-angle features.
    Pqc6,
    Cmlp {
        hidden: usize,
    },
}

impl ModelSpec {
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Qmlp {
                encoding: QmlpEncoding::Angle,
                layers,
                ..
            } => format!("qmlp-angle-L{layers}"),
            ModelSpec::Qmlp {
                encoding: QmlpEncoding::Amplitude,
                layers,
                ..
            } => format!("qmlp-amplitude-L{layers}"),
            ModelSpec::Pqc6 => "pqc6".into(),
            ModelSpec::Cmlp { hidden } => format!("cmlp-h{hidden}"),
        }
    }

    /// Range features are rescaled into before they reach the model.
    pub fn input_range(&self) -> (f64, f64) {
        match self {
            ModelSpec::Qmlp {
                encoding: QmlpEncoding::Angle,
                qubits,
                ..
            } => EncodingSpec::angle(*qubits).input_range,
            ModelSpec::Qmlp {
                encoding: QmlpEncoding::Amplitude,
                qubits,
                ..
            } => EncodingSpec::amplitude(*qubits).input_range,
            ModelSpec::Pqc6 => EncodingSpec::dense_angle(4).input_range,
            ModelSpec::Cmlp { .. } => (0.0, 1.0),
        }
    }

    /// Encoder whose state geometry drives QUID; `None` for classical models.
    pub fn encoder(&self) -> Option<EncodingSpec> {
        match *self {
            ModelSpec::Qmlp {
                encoding: QmlpEncoding::Angle,
                qubits,
                ..
            } => Some(EncodingSpec::angle(qubits)),
            ModelSpec::Qmlp {
                encoding: QmlpEncoding::Amplitude,
                qubits,
                ..
            } => Some(EncodingSpec::amplitude(qubits)),
            ModelSpec::Pqc6 => Some(EncodingSpec::dense_angle(4)),
            ModelSpec::Cmlp { .. } => None,
        }
    }

    pub fn build(&self, n_features: usize, n_classes: usize, rng: &mut impl Rng) -> Result<Classifier> {
        Ok(match *self {
            ModelSpec::Qmlp {
                encoding: QmlpEncoding::Angle,
                qubits,
                layers,
            } => {
                if n_features != qubits {
                    return Err(BenchError::Config(format!(
                        "angle QMLP with {qubits} qubits needs {qubits} features, data has {n_features}"
                    )));
                }
                Classifier::Qmlp(Qmlp::new(QmlpConfig::angle(qubits, layers, n_classes), rng)?)
            }
            ModelSpec::Qmlp {
                encoding: QmlpEncoding::Amplitude,
                qubits,
                layers,
            } => Classifier::Qmlp(Qmlp::new(
                QmlpConfig::amplitude(qubits, layers, n_classes, n_features),
                rng,
            )?),
            ModelSpec::Pqc6 => {
                let cfg = Pqc6Config::new(n_classes);
                if n_features != cfg.n_features() {
                    return Err(BenchError::Config(format!(
                        "pqc6 needs {} features, data has {n_features}",
                        cfg.n_features()
                    )));
                }
                Classifier::Pqc6(Pqc6::new(cfg, rng)?)
            }
            ModelSpec::Cmlp { hidden } => Classifier::Cmlp(Cmlp::new(
                CmlpConfig {
                    input_dim: n_features,
                    hidden_dim: hidden,
                    n_classes,
                },
                rng,
            )?),
        })
    }

    fn with_layers(self, new_layers: usize) -> Self {
        match self {
            ModelSpec::Qmlp { encoding, qubits, .. } => ModelSpec::Qmlp {
                encoding,
                qubits,
                layers: new_layers,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSpec {
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub label_smoothing: f64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            lr: d.lr,
            weight_decay: d.weight_decay,
            batch_size: d.batch_size,
            epochs: d.epochs,
            label_smoothing: d.label_smoothing,
        }
    }
}

impl TrainSpec {
    pub fn to_config(self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            batch_size: self.batch_size,
            epochs: self.epochs,
            label_smoothing: self.label_smoothing,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChannel {
    Depolarizing,
    /// Depolarizing then amplitude damping, both at strength p.
    DepolarizingDamping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseBasis {
    /// Channels follow every gate as written.
    #[default]
    Logical,
    /// Channels follow every gate of the {RX, RZ, X, CX} rewrite.
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub channel: NoiseChannel,
    pub p: f64,
    #[serde(default)]
    pub basis: NoiseBasis,
    /// Train under noise as well (SPSA); otherwise noise only affects
    /// evaluation.
    #[serde(default)]
    pub train: bool,
}

impl NoiseSpec {
    pub fn exec_mode(&self) -> Result<ExecMode> {
        let mut channels = vec![make_depolarizing(self.p)?];
        if self.channel == NoiseChannel::DepolarizingDamping {
            channels.push(make_amplitude_damping(self.p)?);
        }
        Ok(ExecMode::Mixed(match self.basis {
            NoiseBasis::Logical => NoisePolicy::PerGate(channels),
            NoiseBasis::Native => NoisePolicy::NativeBasis(channels),
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuidTargetSpec {
    #[default]
    LeastSimilar,
    MostSimilar,
}

impl From<QuidTargetSpec> for QuidTarget {
    fn from(t: QuidTargetSpec) -> Self {
        match t {
            QuidTargetSpec::LeastSimilar => QuidTarget::LeastSimilar,
            QuidTargetSpec::MostSimilar => QuidTarget::MostSimilar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    LabelFlip {
        ratio: f64,
    },
    Quid {
        ratio: f64,
        #[serde(default)]
        target: QuidTargetSpec,
    },
    Fgsm {
        epsilon: f64,
    },
    Pgd {
        epsilon: f64,
        step: f64,
        iters: usize,
        #[serde(default)]
        random_start: bool,
    },
}

impl AttackSpec {
    pub fn kind(&self) -> AttackKind {
        match *self {
            AttackSpec::LabelFlip { ratio } => AttackKind::LabelFlip { ratio },
            AttackSpec::Quid { ratio, .. } => AttackKind::Quid { ratio },
            AttackSpec::Fgsm { epsilon } => AttackKind::Fgsm { epsilon },
            AttackSpec::Pgd {
                epsilon, step, iters, ..
            } => AttackKind::Pgd { epsilon, step, iters },
        }
    }

    pub fn is_evasion(&self) -> bool {
        matches!(self, AttackSpec::Fgsm { .. } | AttackSpec::Pgd { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DefenseSpec {
    LabelSmoothing {
        alpha: f64,
    },
    /// Annealed loss-based reweighting; the annealer seed follows the run
    /// seed.
    Qdetect {
        #[serde(default = "defaults::wan_lr")]
        wan_lr: f64,
        #[serde(default = "defaults::anneal_coeff")]
        anneal_coeff: f64,
        #[serde(default = "defaults::beta_range")]
        beta_range: (f64, f64),
        #[serde(default = "defaults::sweeps")]
        sweeps: usize,
        #[serde(default = "defaults::keep_fraction")]
        keep_fraction: f64,
    },
}

mod defaults {
    use qrobust::defend::QDetectConfig;

    pub fn wan_lr() -> f64 {
        QDetectConfig::default().wan_lr
    }
    pub fn anneal_coeff() -> f64 {
        QDetectConfig::default().anneal_coeff
    }
    pub fn beta_range() -> (f64, f64) {
        QDetectConfig::default().beta_range
    }
    pub fn sweeps() -> usize {
        QDetectConfig::default().sweeps
    }
    pub fn keep_fraction() -> f64 {
        QDetectConfig::default().keep_fraction
    }
}

impl DefenseSpec {
    pub fn qdetect(&self, seed: u64) -> Option<QDetectConfig> {
        match *self {
            DefenseSpec::Qdetect {
                wan_lr,
                anneal_coeff,
                beta_range,
                sweeps,
                keep_fraction,
            } => Some(QDetectConfig {
                wan_lr,
                anneal_coeff,
                beta_range,
                sweeps,
                keep_fraction,
                seed,
            }),
            DefenseSpec::LabelSmoothing { .. } => None,
        }
    }
}

/// Grid over QMLP depth and noise strength; each cell is a full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<usize>,
    /// Noise strengths; requires a `[noise]` section for the channel.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p: Vec<f64>,
}

/// One point of a sweep: a label and the concrete config to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub config: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds list is empty".into());
        }
        if self.models.is_empty() {
            return bad("no models configured".into());
        }
        if let DataSpec::Blobs {
            classes,
            dim,
            per_class,
            spread,
        } = self.data
        {
            if classes < 2 || dim == 0 || per_class == 0 || !(spread >= 0.0) {
                return bad("blobs need classes >= 2, dim >= 1, per_class >= 1, spread >= 0".into());
            }
        }
        if self.split.train_per_class == 0 || self.split.test_per_class == 0 {
            return bad("train and test counts per class must be positive".into());
        }
        for m in &self.models {
            match *m {
                ModelSpec::Qmlp { qubits, layers, .. } if qubits == 0 || layers == 0 => {
                    return bad(format!("{}: qubits and layers must be positive", m.label()));
                }
                ModelSpec::Cmlp { hidden: 0 } => return bad("cmlp hidden width must be positive".into()),
                _ => {}
            }
        }
        self.train.to_config(0).validate()?;
        if let Some(n) = &self.noise {
            if !(0.0..=1.0).contains(&n.p) {
                return bad(format!("noise p = {} outside [0, 1]", n.p));
            }
        }
        if let Some(a) = &self.attack {
            qrobust::attacks::AttackConfig {
                kind: a.kind(),
                seed: 0,
            }
            .validate()?;
            if a.is_evasion() && self.noise.is_some() {
                return bad("gradient attacks run noiseless only; remove [noise]".into());
            }
        }
        if let Some(d) = &self.defense {
            match d {
                DefenseSpec::LabelSmoothing { alpha } => {
                    if !(0.0..1.0).contains(alpha) {
                        return bad(format!("label smoothing {alpha} outside [0, 1)"));
                    }
                }
                DefenseSpec::Qdetect { .. } => d.qdetect(0).expect("qdetect").validate()?,
            }
            if self.attack.is_some_and(|a| a.is_evasion()) {
                return bad("defenses apply to training-time attacks only".into());
            }
        }
        if let Some(s) = &self.sweep {
            if s.layers.is_empty() && s.p.is_empty() {
                return bad("sweep has neither layers nor p".into());
            }
            if let Some(l) = s.layers.iter().find(|l| !SWEEP_LAYERS.contains(l)) {
                return bad(format!("sweep depth {l} not in {SWEEP_LAYERS:?}"));
            }
            if !s.p.is_empty() && self.noise.is_none() {
                return bad("sweeping p needs a [noise] section".into());
            }
            if let Some(p) = s.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return bad(format!("sweep p = {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical TOML form, with the
    /// output directory left out.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out: None,
            ..self.clone()
        };
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Expands the sweep grid; a config without a sweep is one cell
    /// labelled "-".
    pub fn cells(&self) -> Vec<Cell> {
        let Some(s) = &self.sweep else {
            return vec![Cell {
                label: "-".into(),
                config: self.clone(),
            }];
        };
        let layers: Vec<Option<usize>> = if s.layers.is_empty() {
            vec![None]
        } else {
            s.layers.iter().copied().map(Some).collect()
        };
        let ps: Vec<Option<f64>> = if s.p.is_empty() {
            vec![None]
        } else {
            s.p.iter().copied().map(Some).collect()
        };
        let mut cells = Vec::new();
        for l in &layers {
            for p in &ps {
                let mut config = self.clone();
                config.sweep = None;
                let mut parts = Vec::new();
                if let Some(l) = *l {
                    config.models = config.models.iter().map(|m| m.with_layers(l)).collect();
                    parts.push(format!("layers={l}"));
                }
                if let Some(p) = *p {
                    if let Some(n) = config.noise.as_mut() {
                        n.p = p;
                    }
                    parts.push(format!("p={p}"));
                }
                cells.push(Cell {
                    label: parts.join(","),
                    config,
                });
            }
        }
        cells
    }
}
