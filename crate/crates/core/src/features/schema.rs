use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bic::BicName;
use super::spectral::FrequencyWindows;
use crate::signal::{Channel, KinematicType};

pub const SCHEMA_VERSION: &str = "v1";
pub const N_TEMPORAL_BASE: usize = 16;
pub const N_TEMPORAL: usize = 48;
pub const N_SPECTRAL: usize = 304;
pub const N_BIC: usize = 15;
pub const N_FEATURES: usize = N_TEMPORAL + N_SPECTRAL + N_BIC;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Temporal,
    Spectral,
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Power {
    One,
    Sqrt,
    Square,
}

impl Power {
    pub const ALL: [Power; 3] = [Power::One, Power::Sqrt, Power::Square];

    fn suffix(self) -> &'static str {
        match self {
            Power::One => "",
            Power::Sqrt => "_sqrt",
            Power::Square => "_sq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureDetail {
    Power(Power),
    Window { lo_hz: f64, hi_hz: f64 },
    Bic(BicName),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub group: FeatureGroup,
    pub kind: Option<KinematicType>,
    pub channel: Option<Channel>,
    pub detail: FeatureDetail,
}

/// Fixed, ordered list of the 367 features:
/// 16 peaks × {1, ½, 2} powers, then 4 types × 4 channels × 19 windows of mean
/// spectral density, then 15 brain injury criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub schema_version: String,
    pub features: Vec<FeatureDescriptor>,
}

fn peak_name(kind: KinematicType, ch: Channel) -> String {
    format!("{}_{}_peak", kind.key(), ch.key())
}

impl FeatureSchema {
    /// The canonical schema (shared, immutable).
    pub fn v1() -> &'static FeatureSchema {
        static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
        SCHEMA.get_or_init(Self::build_v1)
    }

    fn build_v1() -> FeatureSchema {
        let mut features = Vec::with_capacity(N_FEATURES);
        for power in Power::ALL {
            for kind in KinematicType::ALL {
                for ch in Channel::ALL {
                    features.push(FeatureDescriptor {
                        name: format!("{}{}", peak_name(kind, ch), power.suffix()),
                        group: FeatureGroup::Temporal,
                        kind: Some(kind),
                        channel: Some(ch),
                        detail: FeatureDetail::Power(power),
                    });
                }
            }
        }
        for kind in KinematicType::ALL {
            for ch in Channel::ALL {
                for w in FrequencyWindows::standard().iter() {
                    features.push(FeatureDescriptor {
                        name: format!("psd_{}_{}_{}_{}hz", kind.key(), ch.key(), w.lo_hz, w.hi_hz),
                        group: FeatureGroup::Spectral,
                        kind: Some(kind),
                        channel: Some(ch),
                        detail: FeatureDetail::Window { lo_hz: w.lo_hz, hi_hz: w.hi_hz },
                    });
                }
            }
        }
        for bic in BicName::ALL {
            features.push(FeatureDescriptor {
                name: bic.feature_name().to_string(),
                group: FeatureGroup::Bic,
                kind: None,
                channel: None,
                detail: FeatureDetail::Bic(bic),
            });
        }
        FeatureSchema { schema_version: SCHEMA_VERSION.to_string(), features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn count(&self, group: FeatureGroup) -> usize {
        self.features.iter().filter(|f| f.group == group).count()
    }

    /// Indices of the 16 power-1 peak features, in table order
    /// (lin_acc x/y/z/res, ang_vel …, ang_acc …, ang_jerk …).
    pub fn temporal_base_indices(&self) -> Vec<usize> {
        (0..N_TEMPORAL_BASE).collect()
    }

    /// Temporal and spectral features (no criteria).
    pub fn temporal_spectral_indices(&self) -> Vec<usize> {
        (0..N_TEMPORAL + N_SPECTRAL).collect()
    }

    pub fn peak_index(kind: KinematicType, ch: Channel) -> usize {
        let k = KinematicType::ALL.iter().position(|&x| x == kind).unwrap();
        let c = Channel::ALL.iter().position(|&x| x == ch).unwrap();
        k * 4 + c
    }

    pub fn peak_feature_name(kind: KinematicType, ch: Channel) -> String {
        peak_name(kind, ch)
    }

    /// Hex SHA-256 of the ordered feature names.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema_version.as_bytes());
        for n in self.names() {
            h.update(b"\n");
            h.update(n.as_bytes());
        }
        hex::encode(h.finalize())
    }
}
