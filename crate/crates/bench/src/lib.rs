//! Shared fixtures for the criterion benches.

use hermlie_core::{random_family, samples, AlgebraDocument, FrameMetric, LoadedDocument, StructureConstants};

/// Family instance with `r` and `n` as a loaded complex document.
pub fn family_document(r: usize, n: usize, seed: u64) -> LoadedDocument {
    let inst = random_family(r, n, seed).expect("valid family parameters");
    AlgebraDocument::from_family("bench", &inst, Some(seed)).resolve().expect("generated documents resolve")
}

pub fn kodaira_thurston_document() -> LoadedDocument {
    let sc = samples::kodaira_thurston();
    AlgebraDocument::from_constants("kodaira_thurston", &sc, &FrameMetric::identity(2), None)
        .resolve()
        .expect("catalog algebra resolves")
}

/// Family constants of size `n` with `r = n / 2`.
pub fn family_constants(n: usize, seed: u64) -> StructureConstants {
    random_family(n / 2, n, seed).expect("valid family parameters").constants
}
