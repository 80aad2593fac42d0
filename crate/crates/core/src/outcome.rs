//! Test effort accounting and the defect-overlooking noise model.
//!
//! Effort on a module is `size * c` when it is predicted defective and
//! `size * c * ratio` otherwise. Lowering the ratio raises the chance that a
//! defect in a negative-prediction module is missed (type 1, probability
//! `1 - ratio`). Defects in positive-prediction modules are still missed with
//! a fixed probability (type 2). Tests never report a defect that is not there.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlookKind {
    #[default]
    None,
    Type1,
    Type2,
}

impl OverlookKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OverlookKind::None => "none",
            OverlookKind::Type1 => "type1",
            OverlookKind::Type2 => "type2",
        }
    }
}

/// What the test of one module reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedOutcome {
    pub observed_defective: bool,
    pub overlook_kind: OverlookKind,
}

impl ObservedOutcome {
    pub const CLEAN: Self = Self {
        observed_defective: false,
        overlook_kind: OverlookKind::None,
    };
    pub const FOUND: Self = Self {
        observed_defective: true,
        overlook_kind: OverlookKind::None,
    };

    /// Outcome implied by a known observation: a missed defect is type 1 under
    /// a negative prediction and type 2 under a positive one.
    pub fn from_observation(true_defective: bool, effective_prediction: bool, observed: bool) -> Result<Self> {
        match (true_defective, observed) {
            (false, true) => Err(Error::InvalidParameter(
                "a clean module cannot be observed defective".into(),
            )),
            (false, false) => Ok(Self::CLEAN),
            (true, true) => Ok(Self::FOUND),
            (true, false) => Ok(Self {
                observed_defective: false,
                overlook_kind: if effective_prediction {
                    OverlookKind::Type2
                } else {
                    OverlookKind::Type1
                },
            }),
        }
    }
}

// Negated comparisons so that NaN is rejected too.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn effort(size: f64, effective_prediction: bool, c: f64, ratio: f64) -> Result<f64> {
    if !(size > 0.0) {
        return Err(Error::InvalidParameter(format!("size must be positive, got {size}")));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "effort constant must be positive, got {c}"
        )));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "effort ratio must be in (0, 1], got {ratio}"
        )));
    }
    Ok(if effective_prediction {
        size * c
    } else {
        size * c * ratio
    })
}

/// Probability that a defect in a negative-prediction module is missed.
pub fn type1_probability(ratio: f64) -> f64 {
    1.0 - ratio
}

pub fn observe_outcome<R: Rng + ?Sized>(
    true_defective: bool,
    effective_prediction: bool,
    ratio: f64,
    type2_prob: f64,
    rng: &mut R,
) -> ObservedOutcome {
    if !true_defective {
        return ObservedOutcome::CLEAN;
    }
    let (miss_prob, kind) = if effective_prediction {
        (type2_prob, OverlookKind::Type2)
    } else {
        (type1_probability(ratio), OverlookKind::Type1)
    };
    // one draw per defective module regardless of outcome, so streams stay aligned
    let u: f64 = rng.gen();
    if u < miss_prob {
        ObservedOutcome {
            observed_defective: false,
            overlook_kind: kind,
        }
    } else {
        ObservedOutcome::FOUND
    }
}
