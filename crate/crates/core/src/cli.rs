//! The `bott` command line.
//!
//! Every subcommand prints one JSON document with sorted keys. Exit codes:
//! `0` on success, `1` on bad input or a library error (the document is then
//! `{"error": ...}`), `2` on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::error::Error;
use crate::iso::{extract_sigma_eps, search_bound_from_env, search_isos, GradedIso};
use crate::json::{to_canonical_string, CertificateDoc, ClassDoc, IsoDoc, JsonInt, MatrixDoc};
use crate::ring::{BottMatrix, CohClass};
use crate::stabilize::{stabilize_full, verify_certificate};
use crate::structure::{all_blocks, decompose_tower, qtrivial_partition, square_zero_generators};

#[derive(Debug, Parser)]
#[command(
    name = "bott",
    version,
    about = "Cohomology rings of Bott manifolds and certified stabilization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the ring presentation and the squares of the generators.
    Ring { matrix: PathBuf },
    /// List the square-zero generators `2x_i - alpha_i`.
    Sqzero { matrix: PathBuf },
    /// Print the ℚ-trivial tower, levels and blocks.
    Decompose { matrix: PathBuf },
    /// Check that C defines an isomorphism and report its invariants.
    IsoCheck {
        a: PathBuf,
        b: PathBuf,
        iso: PathBuf,
    },
    /// Enumerate isomorphisms with bounded entries.
    IsoSearch {
        a: PathBuf,
        b: PathBuf,
        /// Coefficient bound; defaults to BOTT_SEARCH_BOUND or 6.
        #[arg(long)]
        bound: Option<u32>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Stabilize an isomorphism and emit a certificate.
    Stabilize {
        a: PathBuf,
        b: PathBuf,
        iso: PathBuf,
        /// Also write the certificate to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay and check a certificate.
    VerifyCert { cert: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn ok(v: &Value) -> Self {
        CliOutput {
            code: 0,
            stdout: to_canonical_string(v),
            stderr: String::new(),
        }
    }

    fn failure(msg: String) -> Self {
        CliOutput {
            code: 1,
            stdout: to_canonical_string(&json!({ "error": msg })),
            stderr: String::new(),
        }
    }
}

/// Runs the command line given as `args` (including the program name).
pub fn run<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliOutput {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => CliOutput {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    match dispatch(cli.command) {
        Ok(v) => CliOutput::ok(&v),
        Err(msg) => CliOutput::failure(msg),
    }
}

type Outcome = std::result::Result<Value, String>;

fn read_json<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_matrix(path: &Path) -> std::result::Result<BottMatrix, String> {
    let doc: MatrixDoc = read_json(path)?;
    doc.to_matrix()
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn lib_err(e: Error) -> String {
    e.to_string()
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Ring { matrix } => ring(&read_matrix(&matrix)?),
        Command::Sqzero { matrix } => Ok(sqzero(&read_matrix(&matrix)?)),
        Command::Decompose { matrix } => decompose(&read_matrix(&matrix)?),
        Command::IsoCheck { a, b, iso } => {
            let (a, b) = (read_matrix(&a)?, read_matrix(&b)?);
            let doc: IsoDoc = read_json(&iso)?;
            iso_check(a, b, &doc)
        }
        Command::IsoSearch { a, b, bound, jobs } => {
            let (a, b) = (read_matrix(&a)?, read_matrix(&b)?);
            iso_search(&a, &b, bound.unwrap_or_else(search_bound_from_env), jobs)
        }
        Command::Stabilize { a, b, iso, out } => {
            let (a, b) = (read_matrix(&a)?, read_matrix(&b)?);
            let doc: IsoDoc = read_json(&iso)?;
            stabilize(a, b, &doc, out.as_deref())
        }
        Command::VerifyCert { cert } => {
            let doc: CertificateDoc = read_json(&cert)?;
            Ok(match verify_certificate(&doc) {
                Ok(()) => json!({ "valid": true }),
                Err(reason) => json!({ "valid": false, "reason": reason }),
            })
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn ring(a: &BottMatrix) -> Outcome {
    let ctx = Arc::new(a.clone());
    let squares: Vec<Value> = (1..=a.n())
        .map(|i| {
            let sq = CohClass::generator(ctx.clone(), i).pow(2);
            let terms: Vec<Value> = sq
                .terms()
                .iter()
                .map(|(m, c)| json!({ "monomial": m.indices(), "coeff": JsonInt(c.clone()) }))
                .collect();
            json!({ "index": i, "terms": terms })
        })
        .collect();
    let flags: Vec<bool> = (1..=a.n()).map(|i| a.alpha_square_zero(i)).collect();
    Ok(json!({
        "matrix": to_value(&MatrixDoc::from(a)),
        "alpha_square_zero": flags,
        "squares": squares,
    }))
}

fn sqzero(a: &BottMatrix) -> Value {
    let gens: Vec<Value> = square_zero_generators(a)
        .iter()
        .map(|g| {
            json!({
                "index": g.index,
                "gen": to_value(&ClassDoc::from(&g.gen)),
                "primitive": to_value(&ClassDoc::from(&g.primitive)),
            })
        })
        .collect();
    json!({ "generators": gens })
}

fn decompose(a: &BottMatrix) -> Outcome {
    let tower = decompose_tower(a).map_err(lib_err)?;
    let levels: Vec<usize> = (1..=a.n()).map(|i| tower.index_level(i)).collect();
    let blocks = all_blocks(a, &tower).map_err(lib_err)?;
    Ok(json!({
        "dims": tower.dims,
        "levels": levels,
        "blocks": blocks,
        "partition_if_qtrivial": qtrivial_partition(a),
    }))
}

fn iso_check(a: BottMatrix, b: BottMatrix, doc: &IsoDoc) -> Outcome {
    let c = doc.to_matrix().map_err(lib_err)?;
    let phi = match GradedIso::new(a, b, c) {
        Ok(phi) => phi,
        Err(e) => return Ok(json!({ "valid": false, "reason": e.to_string() })),
    };
    let ta = decompose_tower(phi.source()).map_err(lib_err)?;
    let tb = decompose_tower(phi.target()).map_err(lib_err)?;
    let se = extract_sigma_eps(&phi, &ta, &tb).map_err(lib_err)?;
    let eps2: Vec<JsonInt> = se.eps_times_2().into_iter().map(JsonInt).collect();
    Ok(json!({
        "valid": true,
        "max_stable": phi.max_stable(),
        "sigma": se.sigma,
        "eps_times_2": eps2,
    }))
}

fn iso_search(a: &BottMatrix, b: &BottMatrix, bound: u32, jobs: Option<usize>) -> Outcome {
    let found = match jobs {
        Some(0) => return Err("--jobs must be at least 1".into()),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| e.to_string())?
            .install(|| search_isos(a, b, bound)),
        None => search_isos(a, b, bound),
    };
    let isos: Vec<Value> = found
        .iter()
        .map(|phi| to_value(&IsoDoc::from(phi)))
        .collect();
    Ok(json!({ "bound": bound, "isos": isos }))
}

fn stabilize(a: BottMatrix, b: BottMatrix, doc: &IsoDoc, out: Option<&Path>) -> Outcome {
    let c = doc.to_matrix().map_err(lib_err)?;
    let phi = GradedIso::new(a, b, c).map_err(lib_err)?;
    let cert = stabilize_full(&phi).map_err(lib_err)?;
    let value = to_value(&cert.to_doc());
    if let Some(path) = out {
        fs::write(path, to_canonical_string(&value))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(value)
}
