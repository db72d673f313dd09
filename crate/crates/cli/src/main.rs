use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use crosslayer::analysis::{
    emit_attack_table, emit_curves, emit_throughput_table, AttackParams, CodeProfile, ExponentMode,
    Grid,
};
use crosslayer::pipeline::{
    cascade_preset, decrypt_pipeline, encrypt_pipeline, format_values, golden::golden_checks,
    parse_plaintext, DecryptOptions, EncryptOptions, SignalingConfig, DEFAULT_BLOCK_LEN,
};
use crosslayer::signaling::ChannelModel;
use crosslayer::{FrameSet, KeyBundle, LiftingKernel, ModuliSet, RsaKeyPair};

#[derive(Debug, Parser)]
#[command(
    name = "crosslayer",
    version,
    about = "Cross-layer encrypt, transmit, correct and decrypt pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a key bundle.
    Keygen(KeygenArgs),
    /// Encrypt a plaintext file (one integer per line) into a frame CSV.
    Encrypt(EncryptArgs),
    /// Pass a frame CSV through the channel model and decrypt it.
    Decrypt(DecryptArgs),
    /// Run the golden vectors; exit 0 iff all pass.
    Verify,
    /// Closed-form analyzers; CSV on stdout.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cascade {
    Demo8,
    #[value(name = "fig4x23")]
    Fig4x23,
    Random,
    Fec,
    Identity,
}

impl Cascade {
    fn name(self) -> &'static str {
        match self {
            Cascade::Demo8 => "demo8",
            Cascade::Fig4x23 => "fig4x23",
            Cascade::Random => "random",
            Cascade::Fec => "fec",
            Cascade::Identity => "identity",
        }
    }
}

#[derive(Debug, Args)]
struct KeygenArgs {
    /// RSA primes `P,Q`.
    #[arg(long, value_parser = parse_pair, default_value = "13,37")]
    primes: (BigUint, BigUint),
    /// RSA public exponent.
    #[arg(long, default_value = "5")]
    e: BigUint,
    /// Pairwise coprime RNS moduli, each below 256.
    #[arg(long, value_delimiter = ',', default_value = "107,109,113")]
    moduli: Vec<u64>,
    /// Lifting kernel taps `h0,h1,h2`.
    #[arg(long, value_parser = parse_kernel, default_value = "2,0,0", allow_hyphen_values = true)]
    kernel: [i64; 3],
    #[arg(long, value_enum, default_value = "demo8")]
    cascade: Cascade,
    /// Seed for the random cascade and the default channel.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Default channel bit error probability stored in the bundle.
    #[arg(long, default_value_t = 0.0)]
    pe: f64,
    /// Spread every symbol byte over a Walsh codeword of length 256.
    #[arg(long)]
    walsh: bool,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EncryptArgs {
    #[arg(long)]
    key: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    /// Values per message block (power of two).
    #[arg(long, default_value_t = DEFAULT_BLOCK_LEN)]
    block_len: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecryptArgs {
    #[arg(long)]
    key: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    /// Channel bit error probability; defaults to the bundle's value.
    #[arg(long)]
    pe: Option<f64>,
    /// Channel seed; defaults to the bundle's value.
    #[arg(long)]
    seed: Option<u64>,
    /// Fail on corrupted symbols even when the channel is noisy.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Analyze {
    /// Attack cost per cascade stage count.
    Attack(AttackArgs),
    /// Exact and approximate throughput over a sweep of bit error rates.
    Throughput(ThroughputArgs),
    /// Union bound on the coded bit error rate over an SNR sweep.
    Ber(BerArgs),
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[arg(long, value_parser = parse_pair, default_value = "13,37")]
    primes: (BigUint, BigUint),
    /// Bits per symbol.
    #[arg(long, default_value_t = 8)]
    k: u32,
    /// Plaintext-ciphertext blocks available to the attacker.
    #[arg(long, default_value_t = 10)]
    p: u64,
    /// Transducer states.
    #[arg(long, default_value_t = 2)]
    q: u64,
    /// Stage counts `start:stop:step`.
    #[arg(long, default_value = "1:4:1")]
    stages: Grid,
}

#[derive(Debug, Args)]
struct ThroughputArgs {
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Bits per block.
    #[arg(long, default_value_t = 1024)]
    bits: u32,
    /// Bit error rates `start:stop:step`.
    #[arg(long, default_value = "0:0.00001:0.000001")]
    pe: Grid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Exponent {
    L,
    D,
}

#[derive(Debug, Args)]
struct BerArgs {
    /// Code as `n,k,L`; repeat for several columns. Defaults to 2,2,2 and 4,4,2.
    #[arg(long)]
    code: Vec<String>,
    /// SNR per bit in dB, `start:stop:step`.
    #[arg(long, default_value = "0:20:1", allow_hyphen_values = true)]
    snr_db: Grid,
    #[arg(long, value_enum, default_value = "l")]
    exponent: Exponent,
}

fn parse_pair(s: &str) -> Result<(BigUint, BigUint), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse()
                .map_err(|_| format!("{a:?} is not a non-negative integer"))?,
            b.parse()
                .map_err(|_| format!("{b:?} is not a non-negative integer"))?,
        )),
        _ => Err(format!("expected two comma-separated integers, got {s:?}")),
    }
}

fn parse_kernel(s: &str) -> Result<[i64; 3], String> {
    let taps: Vec<i64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| format!("{t:?} is not an integer"))
        })
        .collect::<Result<_, _>>()?;
    taps.try_into()
        .map_err(|_| format!("expected three taps, got {s:?}"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_key(path: &Path) -> Result<KeyBundle> {
    KeyBundle::from_toml(&read(path)?)
        .with_context(|| format!("loading key bundle {}", path.display()))
}

fn keygen(a: KeygenArgs) -> Result<()> {
    let (p, q) = a.primes;
    let rsa = RsaKeyPair::derive(p, q, a.e)?;
    let moduli = ModuliSet::new(&a.moduli)?;
    let kernel = LiftingKernel::new(a.kernel)?;
    let cascade =
        cascade_preset(a.cascade.name(), a.seed).expect("every cascade choice is a preset");
    let signaling = SignalingConfig {
        walsh: a.walsh,
        pe: a.pe,
        seed: a.seed,
        ..SignalingConfig::default()
    };
    let kb = KeyBundle::new(rsa, moduli, kernel, cascade, signaling)?;
    emit(a.out.as_deref(), &kb.to_toml())
}

fn encrypt(a: EncryptArgs) -> Result<()> {
    let kb = load_key(&a.key)?;
    let plain = parse_plaintext(&read(&a.input)?)?;
    let frames = encrypt_pipeline(
        &kb,
        &plain,
        EncryptOptions {
            block_len: a.block_len,
        },
    )?;
    emit(a.out.as_deref(), &frames.to_csv())
}

fn decrypt(a: DecryptArgs) -> Result<()> {
    let kb = load_key(&a.key)?;
    let frames = FrameSet::from_csv(&read(&a.input)?)?;
    let pe = a.pe.unwrap_or(kb.signaling.pe);
    let seed = a.seed.unwrap_or(kb.signaling.seed);
    let channel = if pe > 0.0 {
        Some(ChannelModel::new(pe, seed)?)
    } else {
        None
    };
    let opts = DecryptOptions {
        channel,
        tolerant: channel.is_some() && !a.strict,
    };
    let report = decrypt_pipeline(&kb, &frames, opts)?;
    emit(a.out.as_deref(), &format_values(&report.values))?;
    eprintln!(
        "decrypted {} values; channel flips {}, symbol faults {}, range faults {}",
        report.values.len(),
        report.channel_flips,
        report.symbol_faults,
        report.range_faults
    );
    Ok(())
}

fn verify() -> Result<()> {
    let checks = golden_checks();
    let mut out = String::new();
    for c in &checks {
        out.push_str(&format!(
            "{} {}: {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    emit(None, &out)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} of {} golden checks failed", checks.len());
    }
    Ok(())
}

fn analyze(a: Analyze) -> Result<()> {
    let csv = match a {
        Analyze::Attack(a) => {
            let base = AttackParams {
                p_blocks: a.p,
                q_states: a.q,
                k: a.k,
                stages: 1,
            };
            let stages = a
                .stages
                .points()
                .into_iter()
                .map(|v| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as u32)
                    } else {
                        bail!("stage count {v} is not a positive integer")
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            emit_attack_table(&a.primes.0, &a.primes.1, &base, &stages)?
        }
        Analyze::Throughput(a) => emit_throughput_table(a.rate, a.bits, &a.pe)?,
        Analyze::Ber(a) => {
            let profiles = if a.code.is_empty() {
                vec![CodeProfile::k2(), CodeProfile::k4()]
            } else {
                a.code
                    .iter()
                    .map(|c| CodeProfile::by_code(c))
                    .collect::<Result<_, _>>()?
            };
            let mode = match a.exponent {
                Exponent::L => ExponentMode::L,
                Exponent::D => ExponentMode::D,
            };
            emit_curves(&profiles, &a.snr_db, mode)?
        }
    };
    emit(None, &csv)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Encrypt(a) => encrypt(a),
        Command::Decrypt(a) => decrypt(a),
        Command::Verify => verify(),
        Command::Analyze(a) => analyze(a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors and 0 for --help
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
