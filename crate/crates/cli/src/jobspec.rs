//! The JSON job format.
//!
//! Polynomials are sparse term lists `[exponents, coefficient]`; matrices are
//! sparse term lists `[exponents, row, col, coefficient]`. Coefficients are
//! integers and are reduced into the ring when the job is built.

use std::path::Path;

use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "pdcrys-job/1";

pub type Term = (Vec<i32>, i64);
pub type MatTerm = (Vec<i32>, usize, usize, i64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub format: String,
    pub ring: RingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atlas: Option<AtlasSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub module: Option<ModuleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    pub p: u64,
    pub n: u32,
    #[serde(default = "one")]
    pub s: u32,
}

fn one() -> u32 {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AtlasSpec {
    Affine {
        d: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        lifts: Vec<LiftSpec>,
    },
    Torus {
        d: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        lifts: Vec<LiftSpec>,
    },
    ProjectiveLine {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        lifts: Vec<LiftSpec>,
    },
    Product {
        factors: Vec<AtlasSpec>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        lifts: Vec<LiftSpec>,
    },
    Charts {
        charts: Vec<ChartSpec>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        overlaps: Vec<OverlapSpec>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        lifts: Vec<LiftSpec>,
    },
}

impl AtlasSpec {
    pub fn lifts(&self) -> &[LiftSpec] {
        match self {
            AtlasSpec::Affine { lifts, .. }
            | AtlasSpec::Torus { lifts, .. }
            | AtlasSpec::ProjectiveLine { lifts }
            | AtlasSpec::Product { lifts, .. }
            | AtlasSpec::Charts { lifts, .. } => lifts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// One flag per coordinate; true means the coordinate is inverted.
    pub invertible: Vec<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coordinates: Vec<String>,
}

/// Coordinates of chart `from` written in the coordinates of chart `to`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    pub from: usize,
    pub to: usize,
    pub images: Vec<Vec<Term>>,
    /// Coordinates of chart `from` that become invertible on the overlap.
    pub invertible: Vec<bool>,
}

/// F(t_i) = t_i^p + p·a_i with a_i given at level n + 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub chart: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corrections: Vec<Vec<Term>>,
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpec {
    #[default]
    One,
    P,
    Higgs,
}

impl LambdaSpec {
    fn is_default(&self) -> bool {
        *self == LambdaSpec::One
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSpec {
    /// (O, d) with the trivial filtration and φ = 1 on every chart.
    #[serde(default, skip_serializing_if = "is_false")]
    pub structure_sheaf: bool,
    #[serde(default)]
    pub rank: usize,
    #[serde(default, skip_serializing_if = "LambdaSpec::is_default")]
    pub lambda: LambdaSpec,
    /// One sparse matrix per coordinate direction.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connection: Vec<Vec<MatTerm>>,
    /// Divided-power action ψ_[I] of a p-connection.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<GammaTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<u32>,
    /// Explicit bases of M^1, M^2, ... (used instead of `weights`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filtration: Vec<FiltrationStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<Vec<MatTerm>>,
    /// Per-chart data for modules on atlases with several charts.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charts: Vec<LocalSpec>,
    /// Frame of chart `from` in the frame of chart `to`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<FrameChange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaTerm {
    pub index: Vec<u32>,
    pub matrix: Vec<MatTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationStep {
    pub cols: usize,
    pub basis: Vec<MatTerm>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connection: Vec<Vec<MatTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<Vec<MatTerm>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameChange {
    pub from: usize,
    pub to: usize,
    pub matrix: Vec<MatTerm>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lifts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_poly: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_big: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_pd: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frobenius: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e1: Option<bool>,
}

impl JobSpec {
    pub fn parse(text: &str) -> Result<JobSpec, String> {
        let job: JobSpec = serde_json::from_str(text).map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column()))?;
        if job.format != FORMAT {
            return Err(format!("format: expected \"{FORMAT}\", found \"{}\"", job.format));
        }
        Ok(job)
    }

    pub fn load(path: &Path) -> Result<JobSpec, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        JobSpec::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("job specs serialize")
    }
}
