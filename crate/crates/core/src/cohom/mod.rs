//! Čech–de Rham cohomology.

use smallvec::SmallVec;
use thiserror::Error;

use crate::cartier::CartierError;
use crate::chart::{Chart, ChartError, Exps};
use crate::conn::ConnError;
use crate::fontaine::FontaineError;
use crate::pdhopf::PdError;
use crate::ring::RingError;

pub mod linalg;
pub mod plain;
pub mod pd;
pub mod report;
pub mod stable;
pub mod dolbeault;

pub use linalg::{Complex, Cohomology, Sparse, Subgroup};
pub use plain::{GluedModule, PlainBicomplex, PlainKey};
pub use pd::{PdBicomplex, PdKey};
pub use report::*;
pub use stable::{Certificate, StableGroup};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CohomError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Conn(#[from] ConnError),
    #[error(transparent)]
    Cartier(#[from] CartierError),
    #[error(transparent)]
    Fontaine(#[from] FontaineError),
    #[error(transparent)]
    Pd(#[from] PdError),
    #[error("invalid glued module: {0}")]
    Invalid(String),
    #[error("element outside the capped complex: {0}")]
    OutsideCap(String),
    #[error("not a cocycle")]
    NotCocycle,
    #[error("stabilization failed in degree {degree}: {detail}")]
    StabilizationFailure { degree: usize, detail: String },
    #[error("PD degree beyond the cap with nonzero coefficient: {0}")]
    TruncationOverflow(String),
    #[error("class does not lift through the diagonal evaluation: {0}")]
    LiftFailure(String),
    #[error("{0}")]
    Internal(String),
}

impl CohomError {
    /// Cap-related failures, which a caller may retry with larger caps.
    pub fn is_cap_failure(&self) -> bool {
        matches!(
            self,
            CohomError::StabilizationFailure { .. }
                | CohomError::TruncationOverflow(_)
                | CohomError::OutsideCap(_)
                | CohomError::LiftFailure(_)
        )
    }
}

/// Exponent vectors in the cap box of a chart: |a_i| ≤ deg, a_i ≥ 0 unless invertible.
pub fn box_exponents(chart: &Chart, deg: i32) -> Vec<Exps> {
    let mut out: Vec<Exps> = vec![SmallVec::new()];
    for i in 0..chart.d {
        let lo = if chart.invertible[i] { -deg } else { 0 };
        let mut next = Vec::new();
        for e in &out {
            for k in lo..=deg {
                let mut f = e.clone();
                f.push(k);
                next.push(f);
            }
        }
        out = next;
    }
    out
}
