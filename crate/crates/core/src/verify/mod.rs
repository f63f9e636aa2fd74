//! Inequality checkers, fixture generators and seeded ensembles.
//!
//! Every checker returns a [`SlackReport`] whose `slack` is the left side
//! minus the right side of the inequality under test.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

mod checks;
mod ensemble;
mod fixtures;

pub use checks::{
    check_broadcast_difference, check_clone_broadcast, check_clone_broadcast_recovery,
    check_duality, check_petz_monotonicity, check_reverse_recovery, check_subspace_recovery,
    check_uqcm_recovery, resolve_params, run_check, DeltaVariant, OmegaSource, SubspaceFamily,
};
pub use ensemble::{run_ensemble, trial_seed, EnsembleSummary};
pub use fixtures::{Fixture, FixtureFamily, FixtureSpec, HypothesisReport, Target};

/// Slack floor for checks that only involve eigendecompositions.
pub const EIGEN_TOLERANCE: f64 = 1e-8;
/// Slack floor once the β-quadrature enters.
pub const QUADRATURE_TOLERANCE: f64 = 1e-7;
/// Max-entry deviation allowed in the channel duality identity.
pub const DUALITY_TOLERANCE: f64 = 1e-10;
/// Fixture hypotheses are rejected above this defect.
pub const HYPOTHESIS_TOLERANCE: f64 = 1e-8;
/// Support preconditions (ω inside a subspace) are rejected above this defect.
pub const SUPPORT_TOLERANCE: f64 = 1e-10;
/// Largest factor count accepted by the subspace checkers.
pub const MAX_CHECK_FACTORS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoremId {
    Thm3,
    Thm4,
    Thm13,
    Thm5,
    Thm6,
    Thm7,
    Thm8,
    Thm14,
    Duality,
}

impl TheoremId {
    pub const ALL: [TheoremId; 9] = [
        TheoremId::Thm3,
        TheoremId::Thm4,
        TheoremId::Thm13,
        TheoremId::Thm5,
        TheoremId::Thm6,
        TheoremId::Thm7,
        TheoremId::Thm8,
        TheoremId::Thm14,
        TheoremId::Duality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::Thm3 => "thm3",
            TheoremId::Thm4 => "thm4",
            TheoremId::Thm13 => "thm13",
            TheoremId::Thm5 => "thm5",
            TheoremId::Thm6 => "thm6",
            TheoremId::Thm7 => "thm7",
            TheoremId::Thm8 => "thm8",
            TheoremId::Thm14 => "thm14",
            TheoremId::Duality => "duality",
        }
    }

    /// Default slack floor for this check.
    pub fn tolerance(self) -> f64 {
        match self {
            TheoremId::Thm4 | TheoremId::Thm13 | TheoremId::Thm8 | TheoremId::Thm14 => {
                QUADRATURE_TOLERANCE
            }
            TheoremId::Duality => DUALITY_TOLERANCE,
            _ => EIGEN_TOLERANCE,
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::UnknownTheorem(s.to_string()))
    }
}

/// Checker parameters. Absent fields take per-theorem defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Input copies `σ^{⊗k}` for the cloning checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_copies: Option<usize>,
    /// Output dimension of the random channel in the monotonicity check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_out: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FixtureFamily>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subspace: Option<SubspaceFamily>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<DeltaVariant>,
}

/// An `f64` serialized as a decimal with 16 significant digits, or as the
/// strings `"+inf"`, `"-inf"`, `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_nan() {
            s.serialize_str("nan")
        } else if v.is_infinite() {
            s.serialize_str(if v > 0.0 { "+inf" } else { "-inf" })
        } else {
            let raw = serde_json::value::RawValue::from_string(format!("{v:.15e}"))
                .map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        }
    }
}

impl From<f64> for Real {
    fn from(v: f64) -> Self {
        Real(v)
    }
}

/// A diagnostic value attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Extra {
    Number(Real),
    Flag(bool),
    Text(String),
    Group(BTreeMap<String, Real>),
}

impl From<f64> for Extra {
    fn from(v: f64) -> Self {
        Extra::Number(Real(v))
    }
}

impl From<bool> for Extra {
    fn from(v: bool) -> Self {
        Extra::Flag(v)
    }
}

impl From<&str> for Extra {
    fn from(v: &str) -> Self {
        Extra::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlackReport {
    pub theorem: TheoremId,
    pub params: Params,
    pub seed: u64,
    pub lhs: Real,
    pub rhs: Real,
    pub slack: Real,
    pub tolerance: Real,
    pub pass: bool,
    pub extras: BTreeMap<String, Extra>,
}

impl SlackReport {
    /// Builds a report with `slack = lhs − rhs`. An infinite `lhs` passes
    /// vacuously and is labeled in `extras`.
    pub fn new(theorem: TheoremId, params: Params, seed: u64, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut extras = BTreeMap::new();
        let slack = if lhs == f64::INFINITY {
            extras.insert("vacuous".to_string(), Extra::Flag(true));
            f64::INFINITY
        } else {
            lhs - rhs
        };
        Self {
            theorem,
            params,
            seed,
            lhs: Real(lhs),
            rhs: Real(rhs),
            slack: Real(slack),
            tolerance: Real(tolerance),
            pass: slack >= -tolerance,
            extras,
        }
    }

    pub fn slack(&self) -> f64 {
        self.slack.0
    }

    pub fn lhs(&self) -> f64 {
        self.lhs.0
    }

    pub fn rhs(&self) -> f64 {
        self.rhs.0
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        match self.extras.get(key)? {
            Extra::Number(r) => Some(r.0),
            _ => None,
        }
    }

    /// Re-evaluates `pass` against a different slack floor.
    pub fn set_tolerance(&mut self, tolerance: f64) {
        self.tolerance = Real(tolerance);
        self.pass = self.slack.0 >= -tolerance;
    }

    pub(crate) fn set(&mut self, key: &str, value: impl Into<Extra>) {
        self.extras.insert(key.to_string(), value.into());
    }
}
