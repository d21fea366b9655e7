//! Command-line front end: ball tables and profiles, grid eigensolves,
//! order-reduction verification, rearrangements and shape-derivative
//! checks, each emitting plain CSV or whitespace-separated columns.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage error,
//! 3 solver failure.

mod commands;
mod fmt;

use std::process::ExitCode;

use plate_core::Error;

const USAGE: &str = "usage: plate [--config FILE] [--print-config] <command> [options]

commands:
  ball-table        --dims A..B [--volume V] [--out PATH|csv]
  ball-profile      --d D [--volume V] [--samples N] [--out PATH]
  solve             --domain SPEC.json [--out PATH] [--tol T]
  verify-reduction  --domain SPEC.json [--exact-g]
  rearrange         --field FIELD.csv --mode schwarz|dagger [--out PATH]
  talenti           --domain SPEC.json --f FIELD.csv
  shape-deriv       --domain SPEC.json --field dilation|translation[:vx,vy]|bump:t,w,a
  check-all         --domain SPEC.json [--tol T]

Domain specs are JSON: {\"shape\": \"disk|square|annulus|mask\",
\"params\": [...], \"resolution\": N}. Field files are the CSV written by
`solve` (a `# h ...` line, a header, then index,x,y,value rows).";

/// Options shared by every subcommand; file config first, flags override.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub resolution_override: Option<usize>,
    pub volume: f64,
    pub tol: f64,
    pub samples: usize,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            resolution_override: None,
            volume: 1.0,
            tol: 1e-10,
            samples: 200,
            out: None,
        }
    }
}

fn print_config(cfg: &RunConfig) {
    println!("resolution_override: {:?}", cfg.resolution_override);
    println!("volume: {}", cfg.volume);
    println!("tol: {:e}", cfg.tol);
    println!("samples: {}", cfg.samples);
    println!("out: {:?}", cfg.out);
}

struct Usage(String);

type Flags = Vec<(String, String)>;

fn parse_flags(args: &[String]) -> Result<(Flags, Vec<String>), Usage> {
    let mut flags = Vec::new();
    let mut positional = Vec::new();
    let mut it = args.iter().peekable();
    while let Some(a) = it.next() {
        if let Some(name) = a.strip_prefix("--") {
            match name {
                // Boolean flags.
                "exact-g" | "print-config" => flags.push((name.to_string(), String::new())),
                _ => {
                    let value = it
                        .next()
                        .ok_or_else(|| Usage(format!("flag --{name} needs a value")))?;
                    flags.push((name.to_string(), value.clone()));
                }
            }
        } else {
            positional.push(a.clone());
        }
    }
    Ok((flags, positional))
}

fn apply_config_file(cfg: &mut RunConfig, path: &str) -> Result<(), Error> {
    let text = std::fs::read_to_string(path)?;
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config {path}: {e}")))?;
    if let Some(v) = json.get("resolution").and_then(|v| v.as_u64()) {
        cfg.resolution_override = Some(v as usize);
    }
    if let Some(v) = json.get("volume").and_then(|v| v.as_f64()) {
        cfg.volume = v;
    }
    if let Some(v) = json.get("tol").and_then(|v| v.as_f64()) {
        cfg.tol = v;
    }
    if let Some(v) = json.get("samples").and_then(|v| v.as_u64()) {
        cfg.samples = v as usize;
    }
    Ok(())
}

fn run() -> Result<bool, (u8, String)> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if argv.is_empty() {
        return Err((2, USAGE.to_string()));
    }
    let (flags, positional) = parse_flags(&argv).map_err(|u| (2, u.0))?;
    let mut cfg = RunConfig::default();
    for (name, value) in &flags {
        if name == "config" {
            apply_config_file(&mut cfg, value).map_err(|e| (2, format!("error: config: {e}")))?;
        }
    }
    let get = |name: &str| -> Option<String> {
        flags
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
    };
    let parse_f64 = |name: &str| -> Result<Option<f64>, (u8, String)> {
        get(name)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| (2, format!("error: usage: --{name} expects a number, got '{v}'")))
            })
            .transpose()
    };
    let parse_usize = |name: &str| -> Result<Option<usize>, (u8, String)> {
        get(name)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| (2, format!("error: usage: --{name} expects an integer, got '{v}'")))
            })
            .transpose()
    };
    if let Some(v) = parse_f64("volume")? {
        cfg.volume = v;
    }
    if let Some(v) = parse_f64("tol")? {
        cfg.tol = v;
    }
    if let Some(v) = parse_usize("samples")? {
        cfg.samples = v;
    }
    if let Some(v) = parse_usize("resolution")? {
        cfg.resolution_override = Some(v);
    }
    cfg.out = get("out");

    if flags.iter().any(|(n, _)| n == "print-config") {
        print_config(&cfg);
        if positional.is_empty() {
            return Ok(true);
        }
    }
    let command = match positional.first() {
        Some(c) => c.as_str(),
        None => return Err((2, USAGE.to_string())),
    };

    let to_exit = |e: Error| -> (u8, String) {
        let code = match e {
            Error::Parse(_) | Error::Domain(_) | Error::EmptyInterior(_) => 2,
            _ => 3,
        };
        (code, format!("error: {}: {e}", error_kind(&e)))
    };

    let outcome = match command {
        "ball-table" => {
            let dims = get("dims").unwrap_or_else(|| "4..9".into());
            commands::ball_table(&cfg, &dims).map_err(to_exit)?
        }
        "ball-profile" => {
            let d = parse_usize("d")?.ok_or((2, "error: usage: ball-profile needs --d".into()))?;
            commands::ball_profile(&cfg, d as u32).map_err(to_exit)?
        }
        "solve" => {
            let spec = get("domain").ok_or((2, "error: usage: solve needs --domain".into()))?;
            commands::solve(&cfg, &spec).map_err(to_exit)?
        }
        "verify-reduction" => {
            let spec = get("domain")
                .ok_or((2, "error: usage: verify-reduction needs --domain".into()))?;
            let exact_g = flags.iter().any(|(n, _)| n == "exact-g");
            commands::verify_reduction(&cfg, &spec, exact_g).map_err(to_exit)?
        }
        "rearrange" => {
            let field = get("field").ok_or((2, "error: usage: rearrange needs --field".into()))?;
            let mode = get("mode").unwrap_or_else(|| "schwarz".into());
            commands::rearrange(&cfg, &field, &mode).map_err(to_exit)?
        }
        "talenti" => {
            let spec = get("domain").ok_or((2, "error: usage: talenti needs --domain".into()))?;
            let field = get("f").ok_or((2, "error: usage: talenti needs --f".into()))?;
            commands::talenti(&cfg, &spec, &field).map_err(to_exit)?
        }
        "shape-deriv" => {
            let spec = get("domain").ok_or((2, "error: usage: shape-deriv needs --domain".into()))?;
            let field = get("field").unwrap_or_else(|| "dilation".into());
            commands::shape_deriv(&cfg, &spec, &field).map_err(to_exit)?
        }
        "check-all" => {
            let spec = get("domain").ok_or((2, "error: usage: check-all needs --domain".into()))?;
            commands::check_all(&cfg, &spec).map_err(to_exit)?
        }
        other => return Err((2, format!("error: usage: unknown command '{other}'\n{USAGE}"))),
    };
    Ok(outcome)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Bracket(_) => "bracket",
        Error::EmptyInterior(_) => "empty-interior",
        Error::Solver(_) => "solver",
        Error::NoConvergence { .. } => "no-convergence",
        Error::Inconsistent(_) => "inconsistent",
        Error::NearDegenerate(_) => "near-degenerate",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err((code, message)) => {
            eprintln!("{message}");
            ExitCode::from(code)
        }
    }
}
