//! Text model files.
//!
//! A model is stored as pretty-printed JSON. Floats are written in shortest
//! round-trip form and parsed with correct rounding, so a loaded model
//! predicts bit-for-bit like the one that was saved.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boosting::{BaselineKind, BoostConfig, Ensemble, IterationLog, Learner};
use crate::error::{Error, Result};
use crate::losses::LossKind;

/// Major version of the on-disk format. Matches the crate's major version.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub loss: LossKind,
    pub base_score: f64,
    pub n_features: usize,
    pub method: BaselineKind,
    pub config: BoostConfig,
    pub initial_loss: f64,
    pub learners: Vec<Learner>,
    pub log: Vec<IterationLog>,
}

impl From<&Ensemble> for ModelFile {
    fn from(e: &Ensemble) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            loss: e.config.loss,
            base_score: e.base_score,
            n_features: e.n_features,
            method: e.method,
            config: e.config.clone(),
            initial_loss: e.initial_loss,
            learners: e.learners.clone(),
            log: e.log.clone(),
        }
    }
}

impl TryFrom<ModelFile> for Ensemble {
    type Error = Error;

    fn try_from(m: ModelFile) -> Result<Self> {
        if m.format_version != FORMAT_VERSION {
            return Err(Error::schema(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                m.format_version
            )));
        }
        if m.loss != m.config.loss {
            return Err(Error::schema("model loss disagrees with its config"));
        }
        let admitted = m.log.iter().filter(|l| l.admitted).count();
        if admitted != m.learners.len() {
            return Err(Error::schema(format!(
                "log admits {admitted} learners but the model holds {}",
                m.learners.len()
            )));
        }
        for l in &m.learners {
            let ok = match l {
                Learner::Tree(t) => t.max_feature().is_none_or(|f| f < m.n_features),
                Learner::Linear(g) => g.n_features() == m.n_features,
            };
            if !ok {
                return Err(Error::schema("learner references features beyond the model width"));
            }
        }
        Ok(Ensemble {
            method: m.method,
            config: m.config,
            n_features: m.n_features,
            base_score: m.base_score,
            initial_loss: m.initial_loss,
            learners: m.learners,
            log: m.log,
        })
    }
}

pub fn to_string(ensemble: &Ensemble) -> Result<String> {
    serde_json::to_string_pretty(&ModelFile::from(ensemble))
        .map_err(|e| Error::schema(format!("cannot serialize model: {e}")))
}

pub fn from_str(text: &str) -> Result<Ensemble> {
    let m: ModelFile = serde_json::from_str(text).map_err(|e| Error::schema(format!("invalid model file: {e}")))?;
    m.try_into()
}

pub fn save(ensemble: &Ensemble, path: impl AsRef<Path>) -> Result<()> {
    let mut text = to_string(ensemble)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Ensemble> {
    from_str(&fs::read_to_string(path)?)
}

/// Serde adapter writing infinities as the strings `"inf"` / `"-inf"`.
pub(crate) mod f64_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected number, got '{t}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::{train, LearnerConfig};
    use crate::data::gen_noisy_regression;
    use crate::trust_region::TrustParams;

    #[test]
    fn round_trip_preserves_predictions_bitwise() {
        let data = gen_noisy_regression(60, 3, 0.1, 5.0, 11).unwrap();
        let cfg = BoostConfig {
            n_estimators: 12,
            trust: TrustParams::frozen(1.01, 0.0),
            ..BoostConfig::default()
        };
        let e = train(&data, &cfg).unwrap();
        let back = from_str(&to_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);
        let a = e.predict(&data.features).unwrap();
        let b = back.predict(&data.features).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn linear_round_trip() {
        let data = gen_noisy_regression(40, 2, 0.0, 0.0, 1).unwrap();
        let cfg = BoostConfig {
            n_estimators: 3,
            learner: LearnerConfig::Linear,
            ..BoostConfig::default()
        };
        let e = train(&data, &cfg).unwrap();
        assert_eq!(from_str(&to_string(&e).unwrap()).unwrap(), e);
    }

    #[test]
    fn rejects_wrong_version_and_garbage() {
        let data = gen_noisy_regression(10, 1, 0.0, 0.0, 1).unwrap();
        let cfg = BoostConfig {
            n_estimators: 1,
            ..BoostConfig::default()
        };
        let e = train(&data, &cfg).unwrap();
        let text = to_string(&e)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        assert_eq!(from_str(&text).unwrap_err().kind(), crate::ErrorKind::Schema);
        assert!(from_str("{not json").is_err());
    }
}
