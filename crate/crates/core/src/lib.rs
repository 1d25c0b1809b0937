//! Hermitian structures on Lie algebras with a left-invariant complex structure:
//! complex structure constants, invariant forms, Chern torsion, Hermitian-symplectic
//! compatibility, the admissible-frame decomposition of 2-step solvable algebras,
//! and explicit Kähler certificates.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod config;
pub mod document;
pub mod error;
pub mod exterior;
pub mod kahler;
pub mod linalg;
pub mod metrics;
pub mod report;
pub mod samples;
pub mod solvable;

use serde::{Deserialize, Serialize};

pub use algebra::{
    complexify_and_extract, realify, solvable_profile, unimodularity_check, ComplexStructure, CompatibleMetric, Frame,
    HermitianAlgebra, RealLieAlgebra, Realization, SolvableProfile, StructureConstants, Tensor3,
};
pub use config::Config;
pub use document::{load, AlgebraDocument, LoadedDocument, Resolved};
pub use error::{Error, Result};
pub use exterior::{Differential, InvariantForm};
pub use kahler::{claims_pipeline, generate_family, kahlerize, random_family, simultaneous_diagonalize, ClaimsRecord, FamilyInstance, KahlerCertificate};
pub use linalg::{CMat, CVec, RMat};
pub use metrics::{
    chern_torsion, hs_compatibility, hs_metric_search, metric_checks, FrameMetric, HsSearchResult, HsSolution, MetricChecks,
};
pub use report::{analyze, hs_report, kahlerize_report, verify_claims_report, CheckRecord, Report, Status};
pub use solvable::{
    build_admissible_frame, extract_blocks, verify_bianchi_blocks, verify_hs_blocks, verify_restrictions, AdmissibleDecomposition,
    BlockData, BlockShape, CheckTable, NamedCheck, PureType, RestrictionReport,
};

/// A residual measured against a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    pub residual: f64,
}

impl Check {
    pub fn new(residual: f64, tol: f64) -> Self {
        Self { pass: residual <= tol, residual }
    }
}
