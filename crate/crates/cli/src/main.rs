use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sonc::circuits::{enumerate_circuits, CircuitCatalog};
use sonc::dual_cone::{
    hankel_minor_values, psd_dual_quartic, quartic_dual_membership, quartic_inequality_values,
    sage_dual_membership, sonc_dual_membership_with_catalog, DualConfig,
};
use sonc::nonneg_circuit::{is_nonneg_circuit, CircuitPolynomial};
use sonc::optimize::{
    certify_optimality_with, extended_support, sonc_lower_bound_with, BoundResult, BoundStatus, OptConfig,
};
use sonc::poly_support::{parse_polynomial, serialize_polynomial, DualVector, SparsePolynomial, SupportSet};

/// Version of the JSON documents written to stdout.
const SCHEMA_VERSION: &str = "1";

#[derive(Parser, Debug)]
#[command(name = "sonc", version = SCHEMA_VERSION, about = "SONC certificates for sparse polynomials")]
struct Cli {
    /// Tolerance for membership and nonnegativity checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for the multistart local search. Falls back to SONC_SEED.
    #[arg(long, global = true, env = "SONC_SEED")]
    seed: Option<u64>,
    /// Newton steps per feasibility solve.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the circuit catalog of a polynomial or support set.
    Circuits { file: PathBuf },
    /// Run a single membership or nonnegativity check.
    Check {
        #[command(subcommand)]
        check: Check,
    },
    /// Compute the SONC lower bound and try to certify optimality.
    Bound { file: PathBuf },
    /// Print a SONC certificate together with the catalog it refers to.
    Certify { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum Check {
    /// Is a circuit polynomial nonnegative on Rⁿ?
    NonnegCircuit { file: PathBuf },
    /// Is a vector in the dual SONC cone?
    DualMember { file: PathBuf },
    /// Is a vector in the dual SAGE cone?
    SageDual { file: PathBuf },
    /// Closed-form dual test for univariate quartics.
    QuarticDual {
        /// Test the Hankel (PSD) dual instead.
        #[arg(long)]
        psd: bool,
        file: PathBuf,
    },
}

struct Report {
    value: Value,
    text: String,
    ok: bool,
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_json(text: &str) -> Result<Option<Value>> {
    let t = text.trim_start();
    if !(t.starts_with('{') || t.starts_with('[')) {
        return Ok(None);
    }
    serde_json::from_str(t).map(Some).context("invalid JSON")
}

fn read_polynomial(path: &Path) -> Result<SparsePolynomial> {
    let text = read_input(path)?;
    match parse_json(&text)? {
        Some(v) => Ok(SparsePolynomial::from_json_value(&v)?),
        None => Ok(parse_polynomial(text.trim())?),
    }
}

fn read_dual_vector(path: &Path) -> Result<DualVector> {
    let text = read_input(path)?;
    let v = parse_json(&text)?.ok_or_else(|| anyhow!("expected a JSON dual vector"))?;
    Ok(DualVector::from_json_value(&v)?)
}

fn read_quartic(path: &Path) -> Result<[f64; 5]> {
    let text = read_input(path)?;
    let v = parse_json(&text)?.ok_or_else(|| anyhow!("expected JSON input"))?;
    if let Value::Array(items) = &v {
        let xs: Vec<f64> = items
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| anyhow!("non-numeric entry {x}")))
            .collect::<Result<_>>()?;
        return xs.try_into().map_err(|xs: Vec<f64>| anyhow!("expected 5 values, found {}", xs.len()));
    }
    let dv = DualVector::from_json_value(&v)?;
    if dv.support() != &SupportSet::univariate_dense(4) {
        bail!("quartic dual vectors must be supported on {{0, 1, 2, 3, 4}} in one variable");
    }
    Ok(std::array::from_fn(|i| dv.values()[i]))
}

fn opt_config(cli: &Cli) -> OptConfig {
    let mut config = OptConfig::default();
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(budget) = cli.budget {
        config.newton_budget = budget;
    }
    config
}

fn fmt_point(e: &[u32]) -> String {
    let parts: Vec<String> = e.iter().map(u32::to_string).collect();
    format!("({})", parts.join(","))
}

fn catalog_text(catalog: &CircuitCatalog) -> String {
    let mut out = String::new();
    for (id, c) in catalog.circuits().iter().enumerate() {
        let vertices: Vec<String> = c.vertices().iter().map(|v| fmt_point(v.entries())).collect();
        let mu: Vec<String> = c.barycentric().iter().map(|q| q.to_string()).collect();
        out.push_str(&format!(
            "{id}: [{}] -> {} mu=[{}]{}\n",
            vertices.join(" "),
            fmt_point(c.inner().entries()),
            mu.join(" "),
            if c.beta_even() { " even" } else { "" }
        ));
    }
    out
}

fn cmd_circuits(path: &Path) -> Result<Report> {
    let text = read_input(path)?;
    let support = match parse_json(&text)? {
        Some(v) if v.get("points").is_some() && v.get("values").is_none() => SupportSet::from_json_value(&v)?,
        Some(v) => SparsePolynomial::from_json_value(&v)?.support(),
        None => parse_polynomial(text.trim())?.support(),
    };
    let catalog = enumerate_circuits(&support)?;
    Ok(Report {
        value: catalog.to_json_value(),
        text: catalog_text(&catalog),
        ok: true,
    })
}

fn cmd_nonneg_circuit(path: &Path) -> Result<Report> {
    let p = read_polynomial(path)?;
    let cp = CircuitPolynomial::from_polynomial(&p)?;
    let d = is_nonneg_circuit(&cp);
    let value = json!({
        "nonneg": d.nonneg,
        "theta": d.theta,
        "delta": cp.delta(),
        "circuit": cp.circuit().to_json_value(),
        "witness": d.witness.as_ref().map(|w| json!({"nu": w.nu})),
    });
    let text = format!(
        "{}\ntheta: {}\ndelta: {}\n",
        if d.nonneg { "nonnegative" } else { "not nonnegative" },
        d.theta,
        cp.delta()
    );
    Ok(Report { value, text, ok: d.nonneg })
}

fn cmd_dual_member(path: &Path, tol: f64) -> Result<Report> {
    let v = read_dual_vector(path)?;
    let catalog = enumerate_circuits(v.support())?;
    let report = sonc_dual_membership_with_catalog(&catalog, &v, &DualConfig::with_tol(tol))?;
    let mut text = format!("{}\n", if report.member { "member" } else { "not member" });
    if let Some((id, c)) = &report.violated_circuit {
        text.push_str(&format!("violated circuit {id}: beta {}\n", fmt_point(c.inner().entries())));
    }
    Ok(Report {
        value: report.to_json_value(),
        text,
        ok: report.member,
    })
}

fn cmd_sage_dual(path: &Path, tol: f64) -> Result<Report> {
    let v = read_dual_vector(path)?;
    let member = sage_dual_membership(v.support(), &v, tol)?;
    Ok(Report {
        value: json!({ "member": member }),
        text: format!("{}\n", if member { "member" } else { "not member" }),
        ok: member,
    })
}

fn cmd_quartic_dual(path: &Path, psd: bool, tol: f64) -> Result<Report> {
    let v = read_quartic(path)?;
    if psd {
        let member = psd_dual_quartic(&v, tol);
        return Ok(Report {
            value: json!({ "member": member, "hankel_minors": hankel_minor_values(&v) }),
            text: format!("{}\n", if member { "psd" } else { "not psd" }),
            ok: member,
        });
    }
    let member = quartic_dual_membership(&v, tol);
    Ok(Report {
        value: json!({ "member": member, "inequalities": quartic_inequality_values(&v) }),
        text: format!("{}\n", if member { "member" } else { "not member" }),
        ok: member,
    })
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn bound_text(r: &BoundResult) -> String {
    let mut out = format!("status: {}\np_sonc: {}\np_dual: {}\n", r.status.as_str(), num(r.p_sonc), num(r.p_dual));
    if let Some(z) = &r.optimal_point {
        let parts: Vec<String> = z.iter().copied().map(num).collect();
        out.push_str(&format!("optimal_point: ({})\n", parts.join(", ")));
    }
    out
}

fn cmd_bound(path: &Path, config: &OptConfig) -> Result<Report> {
    let p = read_polynomial(path)?;
    let r = certify_optimality_with(&p, config)?;
    let ok = matches!(r.status, BoundStatus::Certified | BoundStatus::OptimalityCertified);
    Ok(Report {
        value: r.to_json_value(),
        text: bound_text(&r),
        ok,
    })
}

fn cmd_certify(path: &Path, config: &OptConfig) -> Result<Report> {
    let p = read_polynomial(path)?;
    let catalog = enumerate_circuits(&extended_support(&p))?;
    let r = sonc_lower_bound_with(&p, config)?;
    let value = json!({
        "polynomial": p.to_json_value(),
        "certificate": r.certificate.as_ref().map(|c| c.to_json_value()),
        "catalog": catalog.to_json_value(),
    });
    let text = match &r.certificate {
        None => "no certificate\n".to_string(),
        Some(c) => {
            let mut out = format!("gamma: {}\n", num(c.gamma));
            for piece in &c.pieces {
                let cs: Vec<String> = piece.c.iter().copied().map(num).collect();
                out.push_str(&format!("circuit {}: c=[{}] delta={}\n", piece.circuit_id, cs.join(" "), num(piece.delta)));
            }
            out.push_str(&format!("residual: {}\n", serialize_polynomial(&c.residual)));
            out
        }
    };
    Ok(Report {
        value,
        text,
        ok: r.certificate.is_some(),
    })
}

fn run(cli: &Cli) -> Result<Report> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        bail!("--tol must be positive, got {}", cli.tol);
    }
    let config = opt_config(cli);
    match &cli.command {
        Command::Circuits { file } => cmd_circuits(file),
        Command::Check { check } => match check {
            Check::NonnegCircuit { file } => cmd_nonneg_circuit(file),
            Check::DualMember { file } => cmd_dual_member(file, cli.tol),
            Check::SageDual { file } => cmd_sage_dual(file, cli.tol),
            Check::QuarticDual { psd, file } => cmd_quartic_dual(file, *psd, cli.tol),
        },
        Command::Bound { file } => cmd_bound(file, &config),
        Command::Certify { file } => cmd_certify(file, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            match cli.format {
                Format::Json => println!("{}", report.value),
                Format::Text => print!("{}", report.text),
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
