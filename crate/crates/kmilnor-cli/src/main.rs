//! kmilnor: exact Milnor K-theory and Kähler differential computations for
//! finite commutative rings, plus machine verification of the relative
//! K-group / differential-quotient isomorphism on split nilpotent
//! extensions.

mod catalog;
mod suite;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use kmilnor_core::fring::parse::{
    build_ring_from_file, parse_differential, parse_symbol_word,
};
use kmilnor_core::fring::stability::{residue_field_sizes, StabilityMode};
use kmilnor_core::fring::{split_extension, FiniteRing, FringError, SplitExtension};
use kmilnor_core::goodwillie::{verify_theorem, TheoremOptions};
use kmilnor_core::kahler::{omega_n, relative_omega, FormalDifferential, KahlerError};
use kmilnor_core::milnork::dennis_stein::{dennis_stein, dennis_stein_projection};
use kmilnor_core::milnork::{
    k_milnor, relative_k_milnor, unit_structure_auto, unit_structure_split, MilnorError,
    SymbolWord,
};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

const EXIT_FAIL: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_TOO_LARGE: u8 = 3;
const EXIT_REPORT_ONLY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "kmilnor",
    about = "Milnor K-theory, Kähler differentials and Dennis-Stein groups of finite rings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComputeKind {
    Omega,
    Kmilnor,
    D2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Criterion,
}

#[derive(Subcommand)]
enum Command {
    /// Print order, units, locality and stability of a ring file.
    RingInfo { file: PathBuf },
    /// Compute a group: Kähler differentials, Milnor K, or Dennis-Stein.
    Compute {
        kind: ComputeKind,
        #[arg(long)]
        ring: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Compute the kernel relative to the extension ideal.
        #[arg(long)]
        relative: bool,
        /// Encode an expression (differential or symbol word) and print
        /// its coordinates in the computed group.
        #[arg(long)]
        encode: Option<String>,
    },
    /// Verify the relative K / differential-quotient isomorphism.
    Verify {
        #[arg(long)]
        ring: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        mode: Option<ModeArg>,
    },
    /// Run the whole catalog with the property battery.
    Suite {
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Include the catalog entries marked slow.
        #[arg(long)]
        include_slow: bool,
    },
}

fn main() -> ExitCode {
    kmilnor_core::abgroup::cache::init_from_env();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = classify_error(&e);
            ExitCode::from(code)
        }
    }
}

fn classify_error(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(f) = cause.downcast_ref::<FringError>() {
            return match f {
                FringError::Parse { .. } => EXIT_PARSE,
                FringError::TooLarge(_) | FringError::NonTerminatingRewrite { .. } => {
                    EXIT_TOO_LARGE
                }
                _ => EXIT_FAIL,
            };
        }
        if let Some(m) = cause.downcast_ref::<MilnorError>() {
            return match m {
                MilnorError::TooLarge(_) => EXIT_TOO_LARGE,
                _ => EXIT_FAIL,
            };
        }
        if let Some(k) = cause.downcast_ref::<KahlerError>() {
            return match k {
                KahlerError::TooLarge(_) => EXIT_TOO_LARGE,
                _ => EXIT_FAIL,
            };
        }
    }
    EXIT_FAIL
}

fn load_ring(path: &PathBuf) -> Result<(Arc<FiniteRing>, Vec<kmilnor_core::fring::RingElement>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "ring".to_string());
    let (ring, gens) = build_ring_from_file(&text, &stem)?;
    Ok((ring, gens))
}

fn load_extension(path: &PathBuf) -> Result<(Arc<FiniteRing>, Arc<SplitExtension>)> {
    let (ring, gens) = load_ring(path)?;
    if gens.is_empty() {
        return Err(anyhow!(
            "{} declares no [extension] ideal_gens; verification needs one",
            path.display()
        ));
    }
    let ext = split_extension(ring.clone(), gens)?;
    Ok((ring, ext))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::RingInfo { file } => {
            let (ring, gens) = load_ring(&file)?;
            let mut parts = vec![
                format!("order {}", ring.order()),
                format!("characteristic {}", ring.characteristic),
                format!("units {}", ring.unit_count()),
            ];
            match residue_field_sizes(&ring) {
                Ok(sizes) if sizes.len() == 1 => {
                    parts.push("local".to_string());
                    parts.push(format!("residue field {}", sizes[0]));
                    let stable = sizes[0] >= 6;
                    parts.push(format!(
                        "{}5-fold stable (criterion)",
                        if stable { "" } else { "not " }
                    ));
                }
                Ok(sizes) => {
                    parts.push(format!(
                        "semilocal, residue fields {:?}",
                        sizes
                    ));
                    let stable = sizes.iter().all(|&q| q >= 6);
                    parts.push(format!(
                        "{}5-fold stable (criterion)",
                        if stable { "" } else { "not " }
                    ));
                }
                Err(e) => parts.push(format!("residue fields unknown: {e}")),
            }
            if !gens.is_empty() {
                let ext = split_extension(ring.clone(), gens)?;
                parts.push(format!(
                    "extension ideal of rank {}, nilpotency {}",
                    ext.ideal_monomials.len(),
                    ext.nilpotency
                ));
            }
            println!("{}", parts.join(", "));
            Ok(ExitCode::SUCCESS)
        }
        Command::Compute {
            kind,
            ring,
            n,
            relative,
            encode,
        } => {
            let out = compute(kind, &ring, n, relative, encode)?;
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            ring,
            n,
            json,
            threads,
            seed,
            mode,
        } => {
            let _ = threads;
            let (_, ext) = load_extension(&ring)?;
            let stem = ring
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "ring".to_string());
            let opts = TheoremOptions {
                seed,
                stability_mode: mode.map(|m| match m {
                    ModeArg::Exact => StabilityMode::Exact,
                    ModeArg::Criterion => StabilityMode::ResidueCriterion,
                }),
                ..TheoremOptions::default()
            };
            let inst = verify_theorem(&ext, n, &stem, &opts).map_err(|e| anyhow!("{e}"))?;
            let text = serde_json::to_string_pretty(&inst.report)?;
            if let Some(path) = &json {
                std::fs::write(path, &text)?;
            }
            println!("{text}");
            Ok(match inst.report.verdict.as_str() {
                "PASS" => ExitCode::SUCCESS,
                "REPORT-ONLY" => ExitCode::from(EXIT_REPORT_ONLY),
                _ => ExitCode::from(EXIT_FAIL),
            })
        }
        Command::Suite {
            filter,
            json,
            threads,
            seed,
            include_slow,
        } => {
            let opts = suite::SuiteOptions {
                filter,
                include_slow,
                threads,
                seed,
            };
            let report = suite::run_suite(&opts)?;
            let text = serde_json::to_string_pretty(&report)?;
            if let Some(path) = &json {
                std::fs::write(path, &text)?;
            } else {
                println!("{text}");
            }
            for inst in &report.instances {
                eprintln!(
                    "{}/n={}: {} lhs={:?} rhs={:?} ({} ms)",
                    inst.ring_id,
                    inst.n,
                    inst.verdict,
                    inst.lhs_invariants,
                    inst.rhs_invariants,
                    inst.elapsed_ms
                );
            }
            for p in &report.properties {
                eprintln!("{}: {}", p.name, if p.ok { "ok" } else { "FAILED" });
            }
            if suite::suite_ok(&report) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_FAIL))
            }
        }
    }
}

fn invariants_json(v: Vec<num_bigint::BigInt>) -> serde_json::Value {
    serde_json::Value::Array(
        v.into_iter()
            .map(|d| serde_json::Value::String(d.to_string()))
            .collect(),
    )
}

fn invariants_u64_json(v: &[num_bigint::BigInt]) -> serde_json::Value {
    serde_json::Value::Array(
        v.iter()
            .map(|d| match u64::try_from(d.clone()) {
                Ok(x) => serde_json::json!(x),
                Err(_) => serde_json::Value::String(d.to_string()),
            })
            .collect(),
    )
}

fn compute(
    kind: ComputeKind,
    path: &PathBuf,
    n: usize,
    relative: bool,
    encode: Option<String>,
) -> Result<serde_json::Value> {
    let (ring, gens) = load_ring(path)?;
    let ext = if gens.is_empty() {
        None
    } else {
        Some(split_extension(ring.clone(), gens)?)
    };
    let need_ext = || -> Result<&Arc<SplitExtension>> {
        ext.as_ref()
            .ok_or_else(|| anyhow!("--relative needs [extension] ideal_gens in the ring file"))
    };
    match kind {
        ComputeKind::Omega => {
            if relative {
                let rel = relative_omega(need_ext()?, n)?;
                Ok(serde_json::json!({
                    "kind": "omega", "n": n, "relative": true,
                    "invariants": invariants_u64_json(&rel.kernel.invariant_factors()),
                }))
            } else {
                let m = omega_n(ring.clone(), n);
                let gens_desc: Vec<String> =
                    (0..m.ngens()).map(|i| m.describe_gen(i)).collect();
                let mut out = serde_json::json!({
                    "kind": "omega", "n": n, "relative": false,
                    "invariants": invariants_u64_json(&m.group.invariant_factors()),
                    "generators": gens_desc,
                });
                if let Some(expr) = encode {
                    let (coef, args) = parse_differential(&ring, &expr)?;
                    let coords = m.encode_form(&FormalDifferential::term(coef, args))?;
                    out["encoded"] = invariants_json(m.group.canonical_form(&coords));
                    out["is_zero"] = serde_json::json!(m.group.is_zero_element(&coords));
                }
                Ok(out)
            }
        }
        ComputeKind::Kmilnor => {
            if relative {
                let ext = need_ext()?;
                let base = unit_structure_auto(&ext.subring)?;
                let units = unit_structure_split(ext, base.clone())?;
                let rel = relative_k_milnor(&units, &base, n)?;
                Ok(serde_json::json!({
                    "kind": "kmilnor", "n": n, "relative": true,
                    "invariants": invariants_u64_json(&rel.kernel.invariant_factors()),
                }))
            } else {
                let units = unit_structure_auto(&ring)?;
                let k = k_milnor(units, n);
                let gens_desc: Vec<String> =
                    (0..k.ngens()).map(|i| k.describe_gen(i)).collect();
                let mut out = serde_json::json!({
                    "kind": "kmilnor", "n": n, "relative": false,
                    "invariants": invariants_u64_json(&k.group.invariant_factors()),
                    "generators": gens_desc,
                    "steinberg_generators": k.steinberg_generator_count,
                });
                if let Some(expr) = encode {
                    let word = parse_symbol_word(&ring, &expr)?;
                    let word = SymbolWord {
                        factors: word,
                    };
                    let coords = k.encode_word(&word)?;
                    out["encoded"] = invariants_json(k.group.canonical_form(&coords));
                    out["is_zero"] = serde_json::json!(k.group.is_zero_element(&coords));
                }
                Ok(out)
            }
        }
        ComputeKind::D2 => {
            let d = dennis_stein(&ring, 300_000_000)?;
            if relative {
                let ext = need_ext()?;
                let d_s = dennis_stein(&ext.subring, 300_000_000)?;
                let proj = dennis_stein_projection(ext, &d, &d_s)?;
                let (kernel, _) = proj.kernel();
                Ok(serde_json::json!({
                    "kind": "d2", "relative": true,
                    "invariants": invariants_u64_json(&kernel.invariant_factors()),
                }))
            } else {
                let gens_desc: Vec<String> =
                    (0..d.alive.len()).map(|i| d.describe_gen(i)).collect();
                Ok(serde_json::json!({
                    "kind": "d2", "relative": false,
                    "invariants": invariants_u64_json(&d.group.invariant_factors()),
                    "generators": gens_desc,
                }))
            }
        }
    }
}
