//! `cvs register` and `cvs verify`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cvs_core::idcodec::SystemEntropy;
use cvs_core::io::{load_rgb, save_png};
use cvs_core::pipeline::{PipelineConfig, Strength, Verdict, register_content, verify_content};
use cvs_core::registry::RecordStore;
use cvs_core::stego::{Margins, MasterKey};
use serde_json::json;

const KEY_ENV: &str = "CVS_MASTER_KEY";

#[derive(Parser)]
#[command(
    name = "cvs",
    version,
    about = "Register images under a hidden content id and verify copies later"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Watermark an image with a new content id and store its signature
    Register(RegisterArgs),
    /// Recover the content id from an image and compare it with the stored signature
    Verify(VerifyArgs),
}

#[derive(Args)]
struct KeyArgs {
    /// Master key file (hex text, otherwise raw bytes); takes precedence over CVS_MASTER_KEY
    #[arg(long, value_name = "PATH")]
    key_file: Option<PathBuf>,
}

#[derive(Args)]
struct RegisterArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Where the watermarked image goes; always written as PNG
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    /// Record store directory, created if missing
    #[arg(long, value_name = "DIR")]
    store: PathBuf,
    #[arg(long, value_name = "STR", default_value = "")]
    who: String,
    #[arg(long = "where", value_name = "STR", default_value = "")]
    where_from: String,
    /// Fixed spectral strength; by default it is calibrated per image for 40.1 dB pixel PSNR
    #[arg(long, value_name = "F")]
    alpha: Option<f64>,
    /// Spectral margins in frequency bins; default is 1/16 of each dimension
    #[arg(long, value_name = "R,C", value_parser = parse_margins)]
    margins: Option<Margins>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    key: KeyArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "DIR")]
    store: PathBuf,
    /// Margins used at registration, if not the default
    #[arg(long, value_name = "R,C", value_parser = parse_margins)]
    margins: Option<Margins>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    key: KeyArgs,
}

/// Bad invocation; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn parse_margins(s: &str) -> std::result::Result<Margins, String> {
    let (r, c) = s.split_once(',').ok_or("expected R,C")?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Margins::new(num(r)?, num(c)?))
}

fn key_from_file(path: &Path) -> Result<MasterKey> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("cannot read key file {}: {e}", path.display())))?;
    let key = match std::str::from_utf8(&bytes).ok().map(MasterKey::from_hex) {
        Some(Ok(k)) => Ok(k),
        _ => MasterKey::new(bytes),
    };
    key.map_err(|e| usage(format!("key file {}: {e}", path.display())))
}

fn master_key(args: &KeyArgs) -> Result<MasterKey> {
    if let Some(path) = &args.key_file {
        return key_from_file(path);
    }
    match std::env::var(KEY_ENV) {
        Ok(hex) => MasterKey::from_hex(&hex).map_err(|e| usage(format!("{KEY_ENV}: {e}"))),
        Err(std::env::VarError::NotPresent) => Err(usage(format!("no master key: set {KEY_ENV} or pass --key-file"))),
        Err(e) => Err(usage(format!("{KEY_ENV}: {e}"))),
    }
}

fn config(alpha: Option<f64>, margins: Option<Margins>) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig {
        margins,
        ..PipelineConfig::default()
    };
    if let Some(a) = alpha {
        cfg.strength = Strength::Alpha(a);
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn register(args: RegisterArgs) -> Result<ExitCode> {
    let key = master_key(&args.key)?;
    let cfg = config(args.alpha, args.margins)?;
    let image = load_rgb(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let store = RecordStore::open(&args.store).with_context(|| format!("opening store {}", args.store.display()))?;
    let reg = register_content(
        &image,
        &args.who,
        &args.where_from,
        &store,
        &key,
        &cfg,
        &mut SystemEntropy,
    )?;
    save_png(&reg.watermarked, &args.output).with_context(|| format!("writing {}", args.output.display()))?;
    let r = &reg.record;
    if args.json {
        let out = json!({
            "content_id": r.content_id.to_string(),
            "output": args.output.display().to_string(),
            "canonical_dims": r.canonical_dims.to_string(),
            "alpha": r.alpha,
            "pixel_psnr_db": reg.pixel_psnr_db,
        });
        println!("{out}");
    } else {
        println!("Content ID: {}", r.content_id);
        println!("Output: {}", args.output.display());
        println!("Canonical size: {}", r.canonical_dims);
        println!("Alpha: {}", r.alpha);
        println!("Pixel PSNR: {:.2} dB", reg.pixel_psnr_db);
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let key = master_key(&args.key)?;
    let cfg = config(None, args.margins)?;
    let image = load_rgb(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    if !args.store.is_dir() {
        return Err(usage(format!("store {} does not exist", args.store.display())));
    }
    let store = RecordStore::open(&args.store).with_context(|| format!("opening store {}", args.store.display()))?;
    let report = verify_content(&image, &store, &key, &cfg)?;
    if args.json {
        println!("{}", report.to_json());
    } else {
        println!("{report}");
    }
    Ok(ExitCode::from(match report.verdict {
        Verdict::Verified => 0,
        Verdict::Suspected => 3,
        Verdict::Tampered => 4,
        Verdict::WatermarkNotFound | Verdict::RecordNotFound => 5,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Register(a) => register(a),
        Command::Verify(a) => verify(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("cvs: {e:#}");
        if e.is::<Usage>() {
            ExitCode::from(2)
        } else {
            ExitCode::from(1)
        }
    })
}
