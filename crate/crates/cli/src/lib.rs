//! Command-line surface of `hermlie`: argument parsing, report rendering and exit codes.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hermlie_core::{
    analyze, hs_metric_search, hs_report, kahlerize_report, load, random_family, verify_claims_report, AlgebraDocument, CMat,
    CVec, Config, Error, LoadedDocument, Report, Status,
};
use rayon::prelude::*;
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hermlie", version, about = "Hermitian geometry of Lie algebras with a complex structure")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// JSON file with tolerance overrides; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Tolerance for algebraic identities.
    #[arg(long, global = true)]
    tol_alg: Option<f64>,
    /// Relative residual below which the HS system counts as solvable.
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    /// Tolerance for the Kähler certificate.
    #[arg(long, global = true)]
    tol_cert: Option<f64>,
    /// Seed for `generate` and metric search.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print only the JSON report.
    #[arg(long, global = true)]
    json_only: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline on one document.
    Analyze { file: PathBuf },
    /// Hermitian-symplectic decision for the document's metric.
    Hs {
        file: PathBuf,
        /// Also search over other invariant metrics with this many restarts.
        #[arg(long)]
        search: Option<usize>,
    },
    /// Kähler certificate for a 2-step solvable Hermitian-symplectic document.
    Kahlerize { file: PathBuf },
    /// Residual table of the block identities and claims.
    VerifyClaims { file: PathBuf },
    /// Writes a document of the explicit family.
    Generate {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        /// JSON file with the (n−r)×r matrix λ as [re, im] pairs.
        #[arg(long, requires = "p", conflicts_with = "seed")]
        lambda: Option<PathBuf>,
        /// JSON file with the vector p as [re, im] pairs.
        #[arg(long, requires = "lambda")]
        p: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Analyzes every `*.json` document in a directory.
    Batch { dir: PathBuf },
}

struct InputError(String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

/// Runs the tool with colors decided by `NO_COLOR` and whether stdout is a terminal.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let color = std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal();
    run_with(argv, out, err, color)
}

pub fn run_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = if color { e.render().ansi().to_string() } else { e.render().to_string() };
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli, out, color) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}

fn config(opts: &GlobalOpts) -> Result<Config, InputError> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    for (flag, value) in [("--tol-alg", opts.tol_alg), ("--tol-feas", opts.tol_feas), ("--tol-cert", opts.tol_cert)] {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0) {
                return Err(InputError(format!("{flag} must be a positive number, got {v}")));
            }
        }
    }
    cfg.tol_alg = opts.tol_alg.unwrap_or(cfg.tol_alg);
    cfg.tol_feas = opts.tol_feas.unwrap_or(cfg.tol_feas);
    cfg.tol_cert = opts.tol_cert.unwrap_or(cfg.tol_cert);
    cfg.seed = opts.seed.unwrap_or(cfg.seed);
    Ok(cfg)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, color: bool) -> Result<i32, InputError> {
    let cfg = config(&cli.global)?;
    let opts = &cli.global;
    let single = |f: fn(&LoadedDocument, &Config) -> Report, file: &Path| -> Result<Report, InputError> {
        let doc = load(file)?;
        Ok(f(&doc, &cfg))
    };
    let rep = match &cli.command {
        Command::Analyze { file } => single(analyze, file)?,
        Command::Kahlerize { file } => single(kahlerize_report, file)?,
        Command::VerifyClaims { file } => single(verify_claims_report, file)?,
        Command::Hs { file, search } => {
            let doc = load(file)?;
            let mut rep = hs_report(&doc, &cfg);
            if let Some(restarts) = search {
                add_search(&mut rep, &doc, *restarts, &cfg);
            }
            rep
        }
        Command::Generate { r, n, lambda, p, name, output } => return generate(*r, *n, lambda.as_deref(), p.as_deref(), name.as_deref(), output, &cfg, out),
        Command::Batch { dir } => return batch(dir, &cfg, opts, out, color),
    };
    emit(&rep, opts, out, color)?;
    Ok(rep.exit_code())
}

fn add_search(rep: &mut Report, doc: &LoadedDocument, restarts: usize, cfg: &Config) {
    let hermlie_core::Resolved::Complex { constants, .. } = &doc.resolved else {
        let (h, _) = match doc.hermitian(cfg) {
            Ok(x) => x,
            Err(_) => return,
        };
        let Ok(frame) = h.unitary_frame(cfg) else { return };
        let Ok(sc) = hermlie_core::complexify_and_extract(&h.alg, &h.j, &frame, cfg) else { return };
        return push_search(rep, &sc, restarts, cfg);
    };
    push_search(rep, constants, restarts, cfg);
}

fn push_search(rep: &mut Report, sc: &hermlie_core::StructureConstants, restarts: usize, cfg: &Config) {
    let res = hs_metric_search(sc, restarts, cfg.seed, cfg);
    rep.checks.push(hermlie_core::CheckRecord {
        check_id: "hs.metric_search".into(),
        paper_ref: "plumbing".into(),
        status: if res.found { Status::Pass } else { Status::Fail },
        residual: Some(res.best_residual),
        gating: false,
        details: format!("{restarts} restarts, {} evaluations", res.evaluations),
    });
    if let Some(obj) = rep.results.as_object_mut() {
        let g = res.best_g.matrix();
        let gj: Vec<Vec<[f64; 2]>> = (0..g.nrows()).map(|i| (0..g.ncols()).map(|j| [g[(i, j)].re, g[(i, j)].im]).collect()).collect();
        obj.insert("search".into(), json!({"found": res.found, "best_residual": res.best_residual, "best_g": gj}));
    }
}

fn read_pairs(path: &Path) -> Result<serde_json::Value, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn generate(
    r: usize,
    n: usize,
    lambda: Option<&Path>,
    p: Option<&Path>,
    name: Option<&str>,
    output: &Path,
    cfg: &Config,
    out: &mut dyn Write,
) -> Result<i32, InputError> {
    let (inst, seed) = match (lambda, p) {
        (Some(lf), Some(pf)) => {
            let bad = |f: &Path, e: serde_json::Error| InputError(format!("{}: {e}", f.display()));
            let lam: Vec<Vec<[f64; 2]>> = serde_json::from_value(read_pairs(lf)?).map_err(|e| bad(lf, e))?;
            let pv: Vec<[f64; 2]> = serde_json::from_value(read_pairs(pf)?).map_err(|e| bad(pf, e))?;
            let cols = lam.first().map_or(0, Vec::len);
            if lam.iter().any(|row| row.len() != cols) {
                return Err(InputError(format!("{}: rows of λ differ in length", lf.display())));
            }
            let lam = CMat::from_fn(lam.len(), cols, |i, j| hermlie_core::linalg::c(lam[i][j][0], lam[i][j][1]));
            let pv = CVec::from_iterator(pv.len(), pv.iter().map(|z| hermlie_core::linalg::c(z[0], z[1])));
            (hermlie_core::generate_family(r, n, &lam, &pv)?, None)
        }
        _ => (random_family(r, n, cfg.seed)?, Some(cfg.seed)),
    };
    let name = name.map(str::to_owned).unwrap_or_else(|| format!("family_r{r}n{n}"));
    let doc = AlgebraDocument::from_family(&name, &inst, seed);
    std::fs::write(output, doc.to_json() + "\n").map_err(|e| InputError(format!("{}: {e}", output.display())))?;
    let _ = writeln!(out, "wrote {} (r = {r}, n = {n})", output.display());
    Ok(EXIT_OK)
}

fn emit(rep: &Report, opts: &GlobalOpts, out: &mut dyn Write, color: bool) -> Result<(), InputError> {
    let json = rep.to_json();
    if let Some(path) = &opts.report {
        std::fs::write(path, json.clone() + "\n").map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    }
    if !opts.json_only {
        let _ = write!(out, "{}", render_text(rep, color));
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "{json}");
    Ok(())
}

fn paint(s: &str, code: &str, color: bool) -> String {
    if color {
        format!("\x1b[{code}m{s}\x1b[0m")
    } else {
        s.to_owned()
    }
}

fn status_label(s: Status) -> (&'static str, &'static str) {
    match s {
        Status::Pass => ("PASS", "32"),
        Status::Fail => ("FAIL", "31"),
        Status::NotApplicable => ("N/A", "2"),
    }
}

/// Aligned table of check records followed by the verdict.
pub fn render_text(rep: &Report, color: bool) -> String {
    let width = rep.checks.iter().map(|c| c.check_id.chars().count()).max().unwrap_or(0);
    let mut s = format!("{} {} {} ({})\n", rep.tool, rep.version, rep.command, rep.document);
    for c in &rep.checks {
        let (label, code) = status_label(c.status);
        let residual = c.residual.map_or_else(|| "-".to_owned(), |r| format!("{r:.3e}"));
        let pad = width - c.check_id.chars().count();
        let mut line = format!("{} {}{} {:>10}  {}", paint(&format!("{label:<4}"), code, color), c.check_id, " ".repeat(pad), residual, c.paper_ref);
        if !c.details.is_empty() {
            line.push_str(&format!("  [{}]", c.details));
        }
        s.push_str(line.trim_end());
        s.push('\n');
    }
    s.push_str(&format!("verdict: {}\n", rep.verdict));
    s
}

struct BatchRow {
    file: String,
    outcome: Result<Report, String>,
}

fn batch(dir: &Path, cfg: &Config, opts: &GlobalOpts, out: &mut dyn Write, color: bool) -> Result<i32, InputError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| InputError(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let rows: Vec<BatchRow> = files
        .par_iter()
        .map(|f| BatchRow {
            file: f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            outcome: load(f).map(|d| analyze(&d, cfg)).map_err(|e| e.to_string()),
        })
        .collect();

    let code = if rows.iter().any(|r| r.outcome.is_err()) {
        EXIT_INPUT
    } else if rows.iter().any(|r| r.outcome.as_ref().is_ok_and(|rep| rep.exit_code() != 0)) {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    };
    let documents: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| match &r.outcome {
            Ok(rep) => json!({"file": r.file, "exit_code": rep.exit_code(), "report": rep}),
            Err(e) => json!({"file": r.file, "exit_code": EXIT_INPUT, "error": e}),
        })
        .collect();
    let summary = json!({
        "tool": hermlie_core::report::TOOL,
        "version": hermlie_core::report::VERSION,
        "command": "batch",
        "config": cfg,
        "documents": documents,
    });
    let json = serde_json::to_string_pretty(&summary).expect("batch summary serializes");
    if let Some(path) = &opts.report {
        std::fs::write(path, json.clone() + "\n").map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    }
    if !opts.json_only {
        let width = rows.iter().map(|r| r.file.chars().count()).max().unwrap_or(0).max(4);
        let _ = writeln!(out, "{:<width$}  exit  verdict", "file");
        for r in &rows {
            let (exit, verdict) = match &r.outcome {
                Ok(rep) => (rep.exit_code(), rep.verdict.clone()),
                Err(e) => (EXIT_INPUT, format!("error: {e}")),
            };
            let painted = paint(&format!("{exit:>4}"), if exit == 0 { "32" } else { "31" }, color);
            let _ = writeln!(out, "{:<width$}  {painted}  {verdict}", r.file);
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "{json}");
    Ok(code)
}
