//! Check pipelines over documents and their deterministic reports.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{complexify_and_extract, solvable_profile, unimodularity_check, HermitianAlgebra, StructureConstants};
use crate::config::Config;
use crate::document::{LoadedDocument, Resolved};
use crate::error::Error;
use crate::exterior::{Differential, InvariantForm};
use crate::kahler::{claims_pipeline, kahlerize, KahlerCertificate};
use crate::linalg::{self, CMat, CVec};
use crate::metrics::{chern_torsion, hs_compatibility, hs_two_form, metric_checks, FrameMetric};
use crate::solvable::{build_admissible_frame, extract_blocks, verify_bianchi_blocks, verify_hs_blocks, verify_restrictions, AdmissibleDecomposition, CheckTable};

pub const TOOL: &str = "hermlie";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

mod refs {
    pub const PLUMBING: &str = "plumbing";
    pub const INTEGRABILITY: &str = "Eq. 1, \"the integrability condition\"";
    pub const BIANCHI: &str = "Eq. 5, \"equivalent to the Jacobi identity\"";
    pub const UNIMODULAR: &str = "Eq. 6, \"is unimodular\"";
    pub const TWO_STEP: &str = "§3, \"its commutator ${\\mathfrak g}':= [{\\mathfrak g}, {\\mathfrak g}]$ is abelian\"";
    pub const STRUCTURE_EQ: &str = "Eq. 4, \"the (first) structure equation\"";
    pub const TORSION: &str = "Lemma 1/Eq. 7, \"Chern torsion components $T^j_{ik}$\"";
    pub const HS: &str = "Lemma 2/Eq. 8, \"there exists a skew-symmetric matrix\"";
    pub const HS_PLURICLOSED: &str = "§1, \"it is {\\em pluriclosed}\"";
    pub const ADMISSIBLE: &str = "Definition of admissible frames, \"said to be {\\em admissible}\"";
    pub const RESTRICTION1: &str = "Lemma restriction1, \"satisfy the following restrictions\"";
    pub const RESTRICTION2: &str = "Lemma restriction2, \"the structure constants satisfy\"";
    pub const RESTRICTION3: &str = "Lemma restriction3 Eq. C1–C7, \"for any $r\\!+\\!1\\leq x, y, z\\leq n$\"";
    pub const RESTRICTION4: &str = "Lemma restriction4 Eq. D1–D8, \"so that the following hold\"";
    pub const SUMMARY: &str = "§3, \"In summary, we know that\"";
    pub const CLAIMS: &str = "Claims 1–5, \"$Z_a=0$ for all\" through \"There exist $\\xi_x \\in {\\mathbb C}^r$\"";
    pub const CERTIFICATE: &str = "Theorem 1 proof, \"Therefore we have $d\\tilde{\\omega}=0$\"";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub paper_ref: String,
    pub status: Status,
    pub residual: Option<f64>,
    /// Whether a failure of this check makes the command exit with code 1.
    pub gating: bool,
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub document: String,
    pub config: Config,
    pub checks: Vec<CheckRecord>,
    pub verdict: String,
    pub results: Value,
}

impl Report {
    fn new(command: &str, document: &str, cfg: &Config) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            document: document.into(),
            config: *cfg,
            checks: vec![],
            verdict: String::new(),
            results: json!({}),
        }
    }

    fn record(&mut self, id: &str, paper_ref: &str, status: Status, residual: Option<f64>, gating: bool, details: impl Into<String>) {
        self.checks.push(CheckRecord {
            check_id: id.into(),
            paper_ref: paper_ref.into(),
            status,
            residual: residual.map(sanitize),
            gating,
            details: details.into(),
        });
    }

    fn check(&mut self, id: &str, paper_ref: &str, pass: bool, residual: f64, gating: bool, details: impl Into<String>) {
        let status = if pass { Status::Pass } else { Status::Fail };
        self.record(id, paper_ref, status, Some(residual), gating, details);
    }

    fn skip(&mut self, id: &str, paper_ref: &str, details: impl Into<String>) {
        self.record(id, paper_ref, Status::NotApplicable, None, false, details);
    }

    fn table(&mut self, prefix: &str, paper_ref: &str, table: &CheckTable, gating: bool) {
        for c in &table.checks {
            self.check(&format!("{prefix}.{}", c.id), paper_ref, c.pass, c.residual, gating, "");
        }
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.check_id == id)
    }

    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.gating && c.status == Status::Fail) {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    fn set(&mut self, key: &str, v: Value) {
        self.results.as_object_mut().expect("results is an object").insert(key.into(), v);
    }
}

/// Non-finite residuals do not exist in JSON; they are reported as the largest double.
fn sanitize(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

fn cjson(z: num_complex::Complex64) -> Value {
    // adding 0.0 turns -0.0 into 0.0
    json!([z.re + 0.0, z.im + 0.0])
}

fn cmat_json(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|k| cjson(m[(r, k)])).collect())).collect())
}

fn cvec_json(v: &CVec) -> Value {
    Value::Array(v.iter().map(|z| cjson(*z)).collect())
}

/// Terms as `{holo, antiholo, value}` with 1-based indices, in monomial order.
pub fn form_json(f: &InvariantForm) -> Value {
    Value::Array(
        f.terms()
            .map(|(m, z)| {
                let (p, q) = f.split_mask(m);
                json!({
                    "holo": p.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "antiholo": q.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "value": cjson(z),
                })
            })
            .collect(),
    )
}

pub fn certificate_json(cert: &KahlerCertificate) -> Value {
    json!({
        "lambda": cmat_json(&cert.lambda),
        "p": cvec_json(&cert.p),
        "U": cmat_json(&cert.u),
        "psi_coeffs": cmat_json(&cert.psi_coeffs),
        "omega_tilde": form_json(&cert.omega_tilde),
        "residuals": cert.residuals.iter().map(|(k, v)| (k.clone(), json!(sanitize(*v)))).collect::<serde_json::Map<_, _>>(),
    })
}

/// Structure constants and metric the document works in, after the validity checks.
struct Prepared {
    hermitian: HermitianAlgebra,
    constants: StructureConstants,
    metric: FrameMetric,
    /// `B` with `ẽ_i = Σ_j B_{ji} e_j` for the admissible frame, when the document has its own frame.
    doc_frame: Option<crate::algebra::Frame>,
}

fn prepare(loaded: &LoadedDocument, cfg: &Config, rep: &mut Report) -> Option<Prepared> {
    rep.check("document.load", refs::PLUMBING, true, 0.0, true, "schema and indices validated");
    let (hermitian, doc_frame) = match loaded.hermitian(cfg) {
        Ok(x) => x,
        Err(e) => {
            rep.check("document.realify", refs::PLUMBING, false, f64::INFINITY, true, e.to_string());
            return None;
        }
    };
    let res = hermitian.validation_residuals();
    let scale = match &loaded.resolved {
        Resolved::Real { hermitian } => hermitian.alg.dense().iter().fold(1.0f64, |m, v| m.max(v.abs())),
        Resolved::Complex { constants, .. } => constants.max_abs().max(1.0),
    };
    let mut ok = true;
    let j_ok = res.j_square <= cfg.tol_alg;
    rep.check("algebra.j_square", refs::PLUMBING, j_ok, res.j_square, true, "J² = −1");
    ok &= j_ok;
    let int_ok = res.integrability <= cfg.tol_alg * scale;
    rep.check("algebra.integrability", refs::INTEGRABILITY, int_ok, res.integrability, true, "Nijenhuis tensor on basis pairs");
    ok &= int_ok;
    let comp_ok = res.compatibility <= cfg.tol_alg * scale;
    rep.check("algebra.compatibility", refs::PLUMBING, comp_ok, res.compatibility, true, "JᵀGJ = G");
    ok &= comp_ok;
    let jac_ok = res.jacobi <= cfg.tol_jacobi * scale * scale;
    rep.check("algebra.jacobi", refs::BIANCHI, jac_ok, res.jacobi, true, "real Jacobi identity");
    ok &= jac_ok;
    if !ok {
        return None;
    }
    let (constants, metric) = match &loaded.resolved {
        Resolved::Complex { constants, metric } => (constants.clone(), metric.clone()),
        Resolved::Real { hermitian } => {
            let frame = match hermitian.unitary_frame(cfg) {
                Ok(f) => f,
                Err(e) => {
                    rep.check("document.frame", refs::PLUMBING, false, f64::INFINITY, true, e.to_string());
                    return None;
                }
            };
            match complexify_and_extract(&hermitian.alg, &hermitian.j, &frame, cfg) {
                Ok(sc) => (sc, FrameMetric::identity(hermitian.n())),
                Err(e) => {
                    rep.check("document.frame", refs::PLUMBING, false, f64::INFINITY, true, e.to_string());
                    return None;
                }
            }
        }
    };
    let bianchi = constants.bianchi_residual();
    let b_ok = bianchi <= cfg.tol_jacobi * scale * scale;
    rep.check("algebra.bianchi", refs::BIANCHI, b_ok, bianchi, true, "Bianchi identities in C, D");
    if !b_ok {
        return None;
    }
    Some(Prepared { hermitian, constants, metric, doc_frame })
}

fn skip_rest(rep: &mut Report, ids: &[(&str, &str)], why: &str) {
    for (id, r) in ids {
        rep.skip(id, r, why);
    }
}

/// Max deviation of the outer blocks of the admissible metric from the identity.
fn outer_block_residual(dec: &AdmissibleDecomposition) -> f64 {
    let crate::solvable::BlockShape { r, s, n } = dec.shape;
    let g = dec.metric.matrix();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if (r..s).contains(&i) && (r..s).contains(&j) {
                continue;
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - linalg::c(target, 0.0)).norm());
        }
    }
    worst
}

/// `B` with admissible frame vector `ẽ_i = Σ_j B_{ji} e_j` in terms of the document frame.
fn frame_relation(doc_frame: &crate::algebra::Frame, dec: &AdmissibleDecomposition) -> CMat {
    let n = doc_frame.n();
    let mut b = CMat::zeros(n, n);
    for i in 0..n {
        let coords = doc_frame.coordinates(&dec.frame.vector(i));
        for j in 0..n {
            b[(j, i)] = coords[j];
        }
    }
    b
}

fn decomposition_json(dec: &AdmissibleDecomposition) -> Value {
    json!({
        "r": dec.shape.r,
        "s": dec.shape.s,
        "n": dec.shape.n,
        "pure_type": dec.pure_type.to_string(),
        "derived_real_dim": dec.derived_dim,
        "g_mid": cmat_json(&dec.g_mid),
    })
}

struct SolvablePart {
    dec: AdmissibleDecomposition,
    restriction2: bool,
    hs_s: Option<CMat>,
}

/// Admissible frame, restriction checks and HS solution in that frame.
fn solvable_checks(p: &Prepared, cfg: &Config, rep: &mut Report, hs_feasible: bool, gate_r2: bool) -> Option<SolvablePart> {
    let dec = match build_admissible_frame(&p.hermitian, cfg) {
        Ok(d) => d,
        Err(e) => {
            rep.check("solvable.admissible_frame", refs::ADMISSIBLE, false, f64::INFINITY, true, e.to_string());
            return None;
        }
    };
    let outer = outer_block_residual(&dec);
    rep.check(
        "solvable.admissible_frame",
        refs::ADMISSIBLE,
        outer <= 1e-10,
        outer,
        true,
        format!("r = {}, s = {}, n = {}, pure type {}", dec.shape.r, dec.shape.s, dec.shape.n, dec.pure_type),
    );
    rep.set("decomposition", decomposition_json(&dec));
    if let Some(f) = &p.doc_frame {
        rep.set("admissible_frame", cmat_json(&frame_relation(f, &dec)));
    }
    let restr = verify_restrictions(dec.shape, &dec.constants, cfg);
    rep.table("solvable.restriction1", refs::RESTRICTION1, &restr.restriction1, true);
    rep.check(
        "solvable.restriction2",
        refs::RESTRICTION2,
        restr.restriction2.pass,
        restr.restriction2.residual,
        gate_r2,
        "D^*_{α*} = 0 (compact-quotient necessary condition)",
    );
    let bd = extract_blocks(dec.shape, &dec.constants, None).expect("shape matches constants");
    let bianchi = verify_bianchi_blocks(&bd, cfg);
    if restr.restriction2.pass {
        rep.table("solvable.bianchi_blocks", refs::RESTRICTION3, &bianchi, true);
    } else {
        rep.skip("solvable.bianchi_blocks", refs::RESTRICTION3, "requires D^*_{α*} = 0");
    }
    let sol = match hs_compatibility(&dec.constants, &dec.metric, cfg) {
        Ok(s) => s,
        Err(e) => {
            rep.check("hs.frame_invariance", refs::HS, false, f64::INFINITY, true, e.to_string());
            return None;
        }
    };
    rep.check(
        "hs.frame_invariance",
        refs::HS,
        sol.feasible == hs_feasible,
        sol.residual,
        true,
        "feasibility agrees in the admissible frame",
    );
    let hs_s = if sol.feasible { Some(sol.s) } else { None };
    Some(SolvablePart { dec, restriction2: restr.restriction2.pass, hs_s })
}

/// Claims 1–5, D1–D8 and the Kähler certificate for an HS solution in an admissible frame.
fn kahler_checks(part: &SolvablePart, s: &CMat, cfg: &Config, rep: &mut Report, full_tables: bool) -> Option<KahlerCertificate> {
    let dec = &part.dec;
    let bd = extract_blocks(dec.shape, &dec.constants, Some(s)).expect("shape matches constants");
    match verify_hs_blocks(&bd, cfg) {
        Ok(t) => {
            let (d_part, summary): (Vec<_>, Vec<_>) = t.checks.iter().cloned().partition(|c| c.id.starts_with('D'));
            rep.table("solvable.hs_blocks", refs::RESTRICTION4, &CheckTable { checks: d_part }, true);
            if full_tables {
                rep.table("solvable.summary", refs::SUMMARY, &CheckTable { checks: summary }, true);
            }
        }
        Err(e) => rep.check("solvable.hs_blocks", refs::RESTRICTION4, false, f64::INFINITY, true, e.to_string()),
    }
    if full_tables {
        match claims_pipeline(dec.shape, &dec.constants, s, cfg) {
            Ok(rec) => {
                let tol = cfg.tol_alg * dec.constants.max_abs().max(1.0);
                for (k, v) in &rec.residuals {
                    if k == "t_independence" {
                        rep.check(&format!("kahler.{k}"), refs::CLAIMS, *v > 0.0, *v, false, "σ_min/σ_max of λ");
                    } else {
                        rep.check(&format!("kahler.{k}"), refs::CLAIMS, *v <= tol, *v, true, "");
                    }
                }
            }
            Err(e) => rep.check("kahler.claims", refs::CLAIMS, false, claim_residual(&e), true, e.to_string()),
        }
    }
    match kahlerize(dec.shape, &dec.constants, s, &dec.metric, cfg) {
        Ok(cert) => {
            let dw = cert.residuals["d_omega_tilde"];
            rep.check("kahler.certificate", refs::CERTIFICATE, true, dw, true, "dω̃ = 0 with ω̃ positive");
            Some(cert)
        }
        Err(e) => {
            rep.check("kahler.certificate", refs::CERTIFICATE, false, claim_residual(&e), true, e.to_string());
            None
        }
    }
}

fn claim_residual(e: &Error) -> f64 {
    match e {
        Error::ClaimViolation { residual, .. } | Error::Certification { residual, .. } => *residual,
        _ => f64::INFINITY,
    }
}

/// Compares a certificate's `p` with `metadata.family.p` of a generated document.
fn metadata_match(loaded: &LoadedDocument, cert: &KahlerCertificate, rep: &mut Report) {
    let Some(p_meta) = loaded.doc.metadata.get("family").and_then(|f| f.get("p")) else { return };
    let Ok(p_meta) = serde_json::from_value::<Vec<[f64; 2]>>(p_meta.clone()) else {
        rep.check("kahler.metadata_p", refs::PLUMBING, false, f64::INFINITY, true, "metadata.family.p is malformed");
        return;
    };
    if p_meta.len() != cert.p.len() {
        rep.check("kahler.metadata_p", refs::PLUMBING, false, f64::INFINITY, true, "metadata.family.p has the wrong length");
        return;
    }
    let diff = p_meta.iter().zip(cert.p.iter()).map(|(a, b)| (linalg::c(a[0], a[1]) - b).norm()).fold(0.0, f64::max);
    rep.check("kahler.metadata_p", refs::PLUMBING, diff <= 1e-9, diff, true, "recovered p against metadata.family.p");
}

/// Full pipeline: validity, classification, HS decision, admissible frame checks
/// and Kählerization when the hypotheses hold.
pub fn analyze(loaded: &LoadedDocument, cfg: &Config) -> Report {
    let mut rep = Report::new("analyze", &loaded.doc.name, cfg);
    let Some(p) = prepare(loaded, cfg, &mut rep) else {
        rep.verdict = invalid_verdict(&rep);
        return rep;
    };
    let uni = unimodularity_check(&p.constants, cfg);
    rep.check("algebra.unimodular", refs::UNIMODULAR, uni.pass, uni.residual, false, "trace of ad vanishes");
    let profile = solvable_profile(&p.hermitian.alg, cfg);
    rep.check(
        "algebra.two_step_solvable",
        refs::TWO_STEP,
        profile.is_2step_solvable,
        0.0,
        false,
        format!("derived series real dims {:?}", profile.derived_series_dims),
    );
    rep.set("derived_series_dims", json!(profile.derived_series_dims));

    let mc = metric_checks(&p.constants, &p.metric, cfg);
    rep.check("metric.kahler", refs::STRUCTURE_EQ, mc.kahler.pass, mc.kahler.residual, false, "dω = 0");
    rep.check("metric.pluriclosed", refs::STRUCTURE_EQ, mc.pluriclosed.pass, mc.pluriclosed.residual, false, "∂∂̄ω = 0");
    rep.check("metric.balanced", refs::STRUCTURE_EQ, mc.balanced.pass, mc.balanced.residual, false, "d(ω^{n−1}) = 0");
    if let Ok(t) = chern_torsion(&p.constants, &p.metric, cfg) {
        rep.check("metric.torsion_free", refs::TORSION, t.max_abs() <= cfg.tol_alg, t.max_abs(), false, "max |T^j_{ik}|");
    }
    let hs = match hs_compatibility(&p.constants, &p.metric, cfg) {
        Ok(s) => s,
        Err(e) => {
            rep.check("hs.decide", refs::HS, false, f64::INFINITY, true, e.to_string());
            rep.verdict = invalid_verdict(&rep);
            return rep;
        }
    };
    rep.check("hs.decide", refs::HS, hs.feasible, hs.residual, false, format!("least-squares residual, ‖b‖ = {:.6e}", hs.rhs_norm));
    if hs.feasible {
        rep.set("S", cmat_json(&hs.s));
        rep.check("hs.implies_pluriclosed", refs::HS_PLURICLOSED, mc.pluriclosed.pass, mc.pluriclosed.residual, true, "");
    } else {
        rep.skip("hs.implies_pluriclosed", refs::HS_PLURICLOSED, "metric is not HS");
    }
    if let Some(s) = &loaded.s {
        let a = hs_two_form(s);
        let omega = &(&a + &p.metric.kahler_form()) + &a.conj();
        let closed = Differential::new(&p.constants).apply(&omega).sup_norm();
        let tol = cfg.tol_feas * p.constants.max_abs().max(1.0);
        rep.check("hs.attached_s", refs::HS, closed <= tol, closed, true, "dΩ = 0 for the attached S");
    }

    let mut restriction2 = None;
    let mut cert_ok = None;
    if profile.is_2step_solvable {
        if let Some(part) = solvable_checks(&p, cfg, &mut rep, hs.feasible, false) {
            restriction2 = Some(part.restriction2);
            match (&part.hs_s, part.restriction2) {
                (Some(s), true) => {
                    let cert = kahler_checks(&part, s, cfg, &mut rep, false);
                    if let Some(cert) = &cert {
                        rep.set("certificate", certificate_json(cert));
                        metadata_match(loaded, cert, &mut rep);
                    }
                    cert_ok = Some(cert.is_some());
                }
                _ => {
                    let why = if part.hs_s.is_none() { "metric is not HS" } else { "D^*_{α*} ≠ 0" };
                    skip_rest(&mut rep, &[("solvable.hs_blocks", refs::RESTRICTION4), ("kahler.certificate", refs::CERTIFICATE)], why);
                }
            }
        }
    } else {
        skip_rest(
            &mut rep,
            &[
                ("solvable.admissible_frame", refs::ADMISSIBLE),
                ("solvable.restriction1", refs::RESTRICTION1),
                ("solvable.restriction2", refs::RESTRICTION2),
                ("kahler.certificate", refs::CERTIFICATE),
            ],
            "algebra is not 2-step solvable",
        );
    }

    rep.verdict = if mc.kahler.pass {
        "Kähler".to_string()
    } else if hs.feasible {
        match cert_ok {
            Some(true) => "Hermitian-symplectic, not Kähler; Kähler metric constructed".to_string(),
            Some(false) => "Hermitian-symplectic, not Kähler; Kählerization failed".to_string(),
            None if restriction2 == Some(false) => "Hermitian-symplectic, not Kähler (restriction2 fails)".to_string(),
            None => "Hermitian-symplectic, not Kähler".to_string(),
        }
    } else if mc.pluriclosed.pass {
        if restriction2 == Some(false) {
            "pluriclosed, not HS-compatible (restriction2 fails)".to_string()
        } else {
            "pluriclosed, not HS-compatible".to_string()
        }
    } else if mc.balanced.pass {
        "balanced, not pluriclosed".to_string()
    } else {
        "Hermitian, none of Kähler/pluriclosed/balanced".to_string()
    };
    rep
}

fn invalid_verdict(rep: &Report) -> String {
    let failed: Vec<&str> = rep.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.check_id.as_str()).collect();
    format!("invalid input: {} failed", failed.join(", "))
}

/// HS decision only, in the document's frame.
pub fn hs_report(loaded: &LoadedDocument, cfg: &Config) -> Report {
    let mut rep = Report::new("hs", &loaded.doc.name, cfg);
    let Some(p) = prepare(loaded, cfg, &mut rep) else {
        rep.verdict = invalid_verdict(&rep);
        return rep;
    };
    match hs_compatibility(&p.constants, &p.metric, cfg) {
        Ok(sol) => {
            rep.check("hs.decide", refs::HS, sol.feasible, sol.residual, true, format!("least-squares residual, ‖b‖ = {:.6e}", sol.rhs_norm));
            rep.set("residual", json!(sol.residual));
            rep.set("rhs_norm", json!(sol.rhs_norm));
            if sol.feasible {
                rep.set("S", cmat_json(&sol.s));
                rep.verdict = "Hermitian-symplectic".into();
            } else {
                rep.verdict = format!("not Hermitian-symplectic (residual {:.6e})", sol.residual);
            }
        }
        Err(e) => {
            rep.check("hs.decide", refs::HS, false, f64::INFINITY, true, e.to_string());
            rep.verdict = invalid_verdict(&rep);
        }
    }
    rep
}

fn solvable_hs_preconditions(p: &Prepared, cfg: &Config, rep: &mut Report) -> Option<SolvablePart> {
    let profile = solvable_profile(&p.hermitian.alg, cfg);
    rep.check(
        "algebra.two_step_solvable",
        refs::TWO_STEP,
        profile.is_2step_solvable,
        0.0,
        true,
        format!("derived series real dims {:?}", profile.derived_series_dims),
    );
    if !profile.is_2step_solvable {
        return None;
    }
    let hs = hs_compatibility(&p.constants, &p.metric, cfg).ok()?;
    rep.check("hs.decide", refs::HS, hs.feasible, hs.residual, true, format!("least-squares residual, ‖b‖ = {:.6e}", hs.rhs_norm));
    let part = solvable_checks(p, cfg, rep, hs.feasible, true)?;
    if !hs.feasible || !part.restriction2 {
        return None;
    }
    Some(part)
}

/// Kähler certificate for a 2-step solvable HS document satisfying `D^*_{α*} = 0`.
pub fn kahlerize_report(loaded: &LoadedDocument, cfg: &Config) -> Report {
    let mut rep = Report::new("kahlerize", &loaded.doc.name, cfg);
    let Some(p) = prepare(loaded, cfg, &mut rep) else {
        rep.verdict = invalid_verdict(&rep);
        return rep;
    };
    let Some(part) = solvable_hs_preconditions(&p, cfg, &mut rep) else {
        rep.verdict = format!("no certificate: {}", failed_ids(&rep));
        return rep;
    };
    let s = part.hs_s.clone().expect("feasible");
    match kahler_checks(&part, &s, cfg, &mut rep, false) {
        Some(cert) => {
            rep.set("certificate", certificate_json(&cert));
            metadata_match(loaded, &cert, &mut rep);
            rep.verdict = format!("Kähler certificate, ‖dω̃‖ = {:.3e}", cert.residuals["d_omega_tilde"]);
        }
        None => rep.verdict = format!("no certificate: {}", failed_ids(&rep)),
    }
    rep
}

fn failed_ids(rep: &Report) -> String {
    rep.checks.iter().filter(|c| c.gating && c.status == Status::Fail).map(|c| c.check_id.clone()).collect::<Vec<_>>().join(", ")
}

/// Residual table of C1–C7, D1–D8, the summary system and Claims 1–5.
pub fn verify_claims_report(loaded: &LoadedDocument, cfg: &Config) -> Report {
    let mut rep = Report::new("verify-claims", &loaded.doc.name, cfg);
    let Some(p) = prepare(loaded, cfg, &mut rep) else {
        rep.verdict = invalid_verdict(&rep);
        return rep;
    };
    let Some(part) = solvable_hs_preconditions(&p, cfg, &mut rep) else {
        rep.verdict = format!("hypotheses not met: {}", failed_ids(&rep));
        return rep;
    };
    let s = part.hs_s.clone().expect("feasible");
    let cert = kahler_checks(&part, &s, cfg, &mut rep, true);
    if let Some(cert) = &cert {
        rep.set("certificate", certificate_json(cert));
    }
    rep.verdict = if rep.exit_code() == 0 { "all identities hold".into() } else { format!("violations: {}", failed_ids(&rep)) };
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::AlgebraDocument;
    use crate::samples;

    fn loaded(sc: &StructureConstants) -> LoadedDocument {
        AlgebraDocument::from_constants("t", sc, &FrameMetric::identity(sc.n()), None).resolve().unwrap()
    }

    #[test]
    fn torus_is_kahler() {
        let rep = analyze(&loaded(&samples::torus(2)), &Config::default());
        assert_eq!(rep.verdict, "Kähler");
        assert_eq!(rep.exit_code(), 0);
    }

    #[test]
    fn kodaira_thurston_verdict() {
        let l = loaded(&samples::kodaira_thurston());
        let rep = analyze(&l, &Config::default());
        assert_eq!(rep.verdict, "pluriclosed, not HS-compatible (restriction2 fails)");
        let k = kahlerize_report(&l, &Config::default());
        assert_eq!(k.exit_code(), 1);
    }

    #[test]
    fn family_document_is_kahlerized() {
        let cfg = Config::default();
        for (r, n, seed) in [(1, 2, 1), (1, 3, 2), (2, 4, 3), (2, 5, 4)] {
            let inst = crate::kahler::random_family(r, n, seed).unwrap();
            let l = AlgebraDocument::from_family("fam", &inst, Some(seed)).resolve().unwrap();
            let rep = analyze(&l, &cfg);
            assert_eq!(rep.exit_code(), 0, "{}", rep.to_json());
            assert!(rep.verdict.ends_with("Kähler metric constructed"), "{}", rep.verdict);
            assert_eq!(rep.get("kahler.metadata_p").unwrap().status, Status::Pass);
            assert_eq!(rep.get("hs.attached_s").unwrap().status, Status::Pass);
            let v = verify_claims_report(&l, &cfg);
            assert_eq!(v.exit_code(), 0, "{}", v.to_json());
        }
    }

    #[test]
    fn real_mode_family_is_kahlerized() {
        use rand::SeedableRng;
        let cfg = Config::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let inst = crate::kahler::random_family(2, 4, 5).unwrap();
        let h = samples::realization_in_random_basis(&inst.constants, inst.metric.matrix(), &mut rng).unwrap();
        let l = AlgebraDocument::from_hermitian("fam", &h).resolve().unwrap();
        let rep = kahlerize_report(&l, &cfg);
        assert_eq!(rep.exit_code(), 0, "{}", rep.to_json());
    }
}
