//! JSON documents describing a Hermitian algebra, either as a real Lie algebra
//! with `J` and `G`, or directly by complex structure constants in a frame.
//!
//! Indices in files are 1-based.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{realify, ComplexStructure, CompatibleMetric, Frame, HermitianAlgebra, RealLieAlgebra, StructureConstants};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::kahler::FamilyInstance;
use crate::linalg::{c, CMat, RMat};
use crate::metrics::FrameMetric;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealEntry {
    pub indices: [usize; 3],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexEntry {
    pub indices: [usize; 3],
    pub value: [f64; 2],
}

pub type ComplexMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDocument {
    pub schema_version: u32,
    pub name: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<RealEntry>>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<Vec<f64>>>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g_real: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<ComplexEntry>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<ComplexEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<ComplexMatrix>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<ComplexMatrix>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// A validated document in computable form.
#[derive(Debug, Clone)]
pub enum Resolved {
    Real { hermitian: HermitianAlgebra },
    Complex { constants: StructureConstants, metric: FrameMetric },
}

/// Resolved document plus the optional attached `S`.
#[derive(Debug, Clone)]
pub struct LoadedDocument {
    pub doc: AlgebraDocument,
    pub resolved: Resolved,
    pub s: Option<CMat>,
}

fn validation(field: &str, message: impl Into<String>) -> Error {
    Error::Validation { field: field.to_string(), message: message.into() }
}

fn real_matrix(field: &str, rows: &[Vec<f64>], dim: usize) -> Result<RMat> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(validation(field, format!("expected a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(validation(field, "entries must be finite"));
    }
    Ok(RMat::from_fn(dim, dim, |r, k| rows[r][k]))
}

fn complex_matrix(field: &str, rows: &ComplexMatrix, dim: usize) -> Result<CMat> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(validation(field, format!("expected a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(validation(field, "entries must be finite"));
    }
    Ok(CMat::from_fn(dim, dim, |r, k| c(rows[r][k][0], rows[r][k][1])))
}

fn check_indices(field: &str, idx: [usize; 3], bound: usize) -> Result<[usize; 3]> {
    if idx.iter().any(|&i| i == 0 || i > bound) {
        return Err(validation(field, format!("indices {idx:?} out of range 1..={bound}")));
    }
    Ok([idx[0] - 1, idx[1] - 1, idx[2] - 1])
}

fn complex_constants(n: usize, cs: &[ComplexEntry], ds: &[ComplexEntry]) -> Result<StructureConstants> {
    let mut sc = StructureConstants::zeros(n);
    let mut seen_c: BTreeMap<[usize; 3], num_complex::Complex64> = BTreeMap::new();
    for e in cs {
        let [j, i, k] = check_indices("C", e.indices, n)?;
        let v = c(e.value[0], e.value[1]);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(validation("C", "entries must be finite"));
        }
        if i == k {
            if v.norm() != 0.0 {
                return Err(validation("C", format!("diagonal entry at {:?} must vanish", e.indices)));
            }
            continue;
        }
        let (key, val) = if i < k { ([j, i, k], v) } else { ([j, k, i], -v) };
        if let Some(prev) = seen_c.get(&key) {
            if (prev - val).norm() > 1e-12 * (1.0 + val.norm()) {
                return Err(validation("C", format!("conflicting entries for indices {:?}", e.indices)));
            }
        }
        seen_c.insert(key, val);
        sc.set_c(key[0], key[1], key[2], val);
    }
    let mut seen_d: BTreeMap<[usize; 3], num_complex::Complex64> = BTreeMap::new();
    for e in ds {
        let key = check_indices("D", e.indices, n)?;
        let v = c(e.value[0], e.value[1]);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(validation("D", "entries must be finite"));
        }
        if let Some(prev) = seen_d.get(&key) {
            if (prev - v).norm() > 1e-12 * (1.0 + v.norm()) {
                return Err(validation("D", format!("conflicting entries for indices {:?}", e.indices)));
            }
        }
        seen_d.insert(key, v);
        sc.set_d(key[0], key[1], key[2], v);
    }
    Ok(sc)
}

impl AlgebraDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format { line: e.line(), column: e.column(), message: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    /// Validates the document and builds its computable form.
    pub fn resolve(&self) -> Result<LoadedDocument> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(validation("schema_version", format!("unsupported version {}", self.schema_version)));
        }
        let (resolved, size) = match self.mode {
            Mode::Real => {
                for (field, present) in [("n", self.n.is_some()), ("C", self.c.is_some()), ("D", self.d.is_some()), ("g", self.g.is_some())] {
                    if present {
                        return Err(validation(field, "not allowed in real mode"));
                    }
                }
                let dim = self.dim.ok_or_else(|| validation("dim", "required in real mode"))?;
                if dim == 0 || dim % 2 != 0 || dim > 64 {
                    return Err(validation("dim", format!("must be even and between 2 and 64, got {dim}")));
                }
                let mut triples = vec![];
                for e in self.f.as_deref().unwrap_or(&[]) {
                    let [cc, a, b] = check_indices("f", e.indices, dim)?;
                    if !e.value.is_finite() {
                        return Err(validation("f", "entries must be finite"));
                    }
                    triples.push((cc, a, b, e.value));
                }
                let alg = RealLieAlgebra::from_triples(dim, &triples)?;
                let j = match &self.j {
                    Some(rows) => ComplexStructure::new(real_matrix("J", rows, dim)?)?,
                    None => return Err(validation("J", "required in real mode")),
                };
                let metric = match &self.g_real {
                    Some(rows) => CompatibleMetric::new(real_matrix("G", rows, dim)?)?,
                    None => CompatibleMetric::identity(dim),
                };
                (Resolved::Real { hermitian: HermitianAlgebra::new(alg, j, metric)? }, dim / 2)
            }
            Mode::Complex => {
                for (field, present) in [("dim", self.dim.is_some()), ("f", self.f.is_some()), ("J", self.j.is_some()), ("G", self.g_real.is_some())] {
                    if present {
                        return Err(validation(field, "not allowed in complex mode"));
                    }
                }
                let n = self.n.ok_or_else(|| validation("n", "required in complex mode"))?;
                if n == 0 || n > 32 {
                    return Err(validation("n", format!("must be between 1 and 32, got {n}")));
                }
                let constants = complex_constants(n, self.c.as_deref().unwrap_or(&[]), self.d.as_deref().unwrap_or(&[]))?;
                let metric = match &self.g {
                    Some(rows) => FrameMetric::new(complex_matrix("g", rows, n)?).map_err(|e| match e {
                        Error::Validation { message, .. } => validation("g", message),
                        other => other,
                    })?,
                    None => FrameMetric::identity(n),
                };
                (Resolved::Complex { constants, metric }, n)
            }
        };
        let s = match &self.s {
            Some(rows) => {
                let s = complex_matrix("S", rows, size)?;
                if crate::linalg::max_abs(&(&s + s.transpose())) > 1e-12 * (1.0 + crate::linalg::max_abs(&s)) {
                    return Err(validation("S", "must be skew-symmetric"));
                }
                Some(s)
            }
            None => None,
        };
        Ok(LoadedDocument { doc: self.clone(), resolved, s })
    }

    /// Complex-mode document for given constants and metric.
    pub fn from_constants(name: &str, sc: &StructureConstants, g: &FrameMetric, s: Option<&CMat>) -> Self {
        let n = sc.n();
        let mut cs = vec![];
        let mut ds = vec![];
        for j in 0..n {
            for i in 0..n {
                for k in 0..n {
                    let v = sc.c(j, i, k);
                    if i < k && v.norm() != 0.0 {
                        cs.push(ComplexEntry { indices: [j + 1, i + 1, k + 1], value: [v.re, v.im] });
                    }
                    let w = sc.d(j, i, k);
                    if w.norm() != 0.0 {
                        ds.push(ComplexEntry { indices: [j + 1, i + 1, k + 1], value: [w.re, w.im] });
                    }
                }
            }
        }
        let to_rows = |m: &CMat| -> ComplexMatrix { (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect()).collect() };
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            mode: Mode::Complex,
            dim: None,
            f: None,
            j: None,
            g_real: None,
            n: Some(n),
            c: Some(cs),
            d: Some(ds),
            g: Some(to_rows(g.matrix())),
            s: s.map(to_rows),
            metadata: BTreeMap::new(),
        }
    }

    /// Real-mode document for a Hermitian algebra.
    pub fn from_hermitian(name: &str, h: &HermitianAlgebra) -> Self {
        let d = h.alg.dim();
        let rows = |m: &RMat| (0..d).map(|r| (0..d).map(|k| m[(r, k)]).collect()).collect();
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            mode: Mode::Real,
            dim: Some(d),
            f: Some(h.alg.triples().into_iter().map(|(cc, a, b, v)| RealEntry { indices: [cc + 1, a + 1, b + 1], value: v }).collect()),
            j: Some(rows(h.j.matrix())),
            g_real: Some(rows(h.metric.matrix())),
            n: None,
            c: None,
            d: None,
            g: None,
            s: None,
            metadata: BTreeMap::new(),
        }
    }

    /// Document of a generated family instance, with `r`, `n`, `λ`, `p` in the metadata.
    pub fn from_family(name: &str, inst: &FamilyInstance, seed: Option<u64>) -> Self {
        let mut doc = Self::from_constants(name, &inst.constants, &inst.metric, Some(&inst.s));
        let lam: ComplexMatrix = (0..inst.lambda.nrows())
            .map(|x| (0..inst.lambda.ncols()).map(|i| [inst.lambda[(x, i)].re, inst.lambda[(x, i)].im]).collect())
            .collect();
        let p: Vec<[f64; 2]> = inst.p.iter().map(|z| [z.re, z.im]).collect();
        let mut fam = serde_json::Map::new();
        fam.insert("r".into(), inst.r.into());
        fam.insert("n".into(), inst.n.into());
        fam.insert("lambda".into(), serde_json::to_value(lam).unwrap());
        fam.insert("p".into(), serde_json::to_value(p).unwrap());
        if let Some(seed) = seed {
            fam.insert("seed".into(), seed.into());
        }
        doc.metadata.insert("family".into(), serde_json::Value::Object(fam));
        doc
    }
}

impl LoadedDocument {
    pub fn n(&self) -> usize {
        match &self.resolved {
            Resolved::Real { hermitian } => hermitian.n(),
            Resolved::Complex { constants, .. } => constants.n(),
        }
    }

    /// The real Hermitian algebra (complex documents are realified in the basis
    /// `(e_k + ē_k)/√2`, `i(e_k − ē_k)/√2`) and the document's own frame.
    pub fn hermitian(&self, cfg: &Config) -> Result<(HermitianAlgebra, Option<Frame>)> {
        match &self.resolved {
            Resolved::Real { hermitian } => Ok((hermitian.clone(), None)),
            Resolved::Complex { constants, metric } => {
                let real = realify(constants, Some(metric.matrix()), cfg)?;
                Ok((real.hermitian, Some(real.frame)))
            }
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    AlgebraDocument::parse(&text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_applied_on_load() {
        let text = r#"{"schema_version":1,"name":"t","mode":"real","dim":4,
            "f":[{"indices":[3,1,2],"value":1.0}],
            "J":[[0,-1,0,0],[1,0,0,0],[0,0,0,-1],[0,0,1,0]]}"#;
        let loaded = AlgebraDocument::parse(text).unwrap().resolve().unwrap();
        let Resolved::Real { hermitian } = loaded.resolved else { panic!() };
        assert_eq!(hermitian.alg.get(2, 1, 0), -1.0);
    }

    #[test]
    fn format_error_has_position() {
        let err = AlgebraDocument::parse("{\n  \"name\": ").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn validation_names_field() {
        let text = r#"{"schema_version":1,"name":"t","mode":"complex","n":2,
            "C":[{"indices":[1,1,3],"value":[1,0]}]}"#;
        let err = AlgebraDocument::parse(text).unwrap().resolve().unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "C"), "{err:?}");
        let text = r#"{"schema_version":1,"name":"t","mode":"complex","n":2,
            "C":[{"indices":[1,1,2],"value":[1,0]},{"indices":[1,2,1],"value":[1,0]}]}"#;
        let err = AlgebraDocument::parse(text).unwrap().resolve().unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "C"), "{err:?}");
    }

    #[test]
    fn round_trip_constants() {
        let sc = crate::samples::kodaira_thurston();
        let doc = AlgebraDocument::from_constants("kt", &sc, &FrameMetric::identity(2), None);
        let back = AlgebraDocument::parse(&doc.to_json()).unwrap().resolve().unwrap();
        let Resolved::Complex { constants, .. } = back.resolved else { panic!() };
        assert_eq!(constants, sc);
    }
}
