use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "qrobust-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON container for a trained model. Floats are written in shortest
/// round-trip form, so reloading is lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub model: Classifier,
}

impl Checkpoint {
    pub fn new(model: Classifier, seed: u64) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            seed,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("not a checkpoint: format {:?}", ckpt.format)));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    fs::write(path, ckpt.to_json()?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cmlp, CmlpConfig, Model, Pqc6, Pqc6Config, Qmlp, QmlpConfig};
    use crate::rng::{stream, Stream};

    #[test]
    fn lossless_roundtrip() {
        let mut rng = stream(11, Stream::Init);
        let models = vec![
            Classifier::Qmlp(Qmlp::new(QmlpConfig::angle(3, 2, 4), &mut rng).unwrap()),
            Classifier::Qmlp(Qmlp::new(QmlpConfig::amplitude(2, 2, 3, 4), &mut rng).unwrap()),
            Classifier::Pqc6(Pqc6::new(Pqc6Config::new(4), &mut rng).unwrap()),
            Classifier::Cmlp(
                Cmlp::new(
                    CmlpConfig {
                        input_dim: 4,
                        hidden_dim: 8,
                        n_classes: 4,
                    },
                    &mut rng,
                )
                .unwrap(),
            ),
        ];
        let dir = tempfile::tempdir().unwrap();
        for (i, m) in models.into_iter().enumerate() {
            let path = dir.path().join(format!("m{i}.json"));
            let ckpt = Checkpoint::new(m, 99);
            save_checkpoint(&path, &ckpt).unwrap();
            let back = load_checkpoint(&path).unwrap();
            assert_eq!(back, ckpt);
            let (a, b) = (ckpt.model.params(), back.model.params());
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn rejects_foreign_documents() {
        assert!(Checkpoint::from_json(r#"{"format":"other","version":1,"seed":0,"model":{}}"#).is_err());
        let mut rng = stream(0, Stream::Init);
        let m = Classifier::Qmlp(Qmlp::new(QmlpConfig::angle(2, 1, 2), &mut rng).unwrap());
        let mut ckpt = Checkpoint::new(m, 0);
        ckpt.version = 7;
        assert!(Checkpoint::from_json(&ckpt.to_json().unwrap()).is_err());
    }
}
