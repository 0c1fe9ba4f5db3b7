use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jigsaw_core::pipeline::Reconstruction;
use jigsaw_core::simnet::ExperimentConfig;
use jigsaw_core::{
    is_prime, random_prime, receive_with_report, run_experiment, send_prepare, write_csv, AdversaryModel, KeyMaterial,
    MacKey, Mode, PipelineError, PrimeModulus, RawMessage, Secrecy, SessionConfig, SimError, Topology,
    DEFAULT_ATTACK_BUDGET, DEFAULT_MAX_FRAGMENTS, DEFAULT_PRIME,
};
use rand::rngs::OsRng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tempfile::NamedTempFile;

/// Split a file into N authenticated packets that are only useful together.
#[derive(Debug, Parser)]
#[command(name = "jigsaw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a fresh key file (MAC key, modulus, mode).
    Keygen(KeygenArgs),
    /// Split a file into packet files.
    Send(SendArgs),
    /// Rebuild a file from packet files.
    Recv(RecvArgs),
    /// Run repeated sends over a simulated network.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct KeygenArgs {
    /// Prime modulus in decimal. Defaults to 2^61-1, or a random 64-bit prime
    /// with --secret.
    #[arg(long)]
    p: Option<u64>,
    /// Mark the modulus as secret.
    #[arg(long)]
    secret: bool,
    #[arg(long, default_value = "base")]
    mode: Mode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SendArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    keys: PathBuf,
    /// Number of packets.
    #[arg(long)]
    n: usize,
    /// Overrides the key file's mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Hint-mode payload size in bits.
    #[arg(long)]
    payload_bits: Option<u64>,
    /// Directory for msg-<seq>-<i>.jpkt files.
    #[arg(long)]
    out: PathBuf,
    /// Also write the split positions and pairs. Anyone holding this file can
    /// reassemble the message.
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Seed the sender's generator instead of using OS entropy. For tests only.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RecvArgs {
    /// Glob matching the packet files.
    #[arg(long)]
    packets: String,
    #[arg(long)]
    keys: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    src: String,
    #[arg(long)]
    dst: String,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    keys: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    payload_bits: Option<u64>,
    /// eavesdrop:IDX,.. | modify:IDX,.. | drop:IDX,.. (0-based path indices)
    #[arg(long, default_value = "none")]
    adversary: AdversaryModel,
    /// The adversary knows the modulus.
    #[arg(long)]
    knows_p: bool,
    /// Candidates the adversary may test per trial.
    #[arg(long, default_value_t = DEFAULT_ATTACK_BUDGET)]
    budget: u64,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Protocol(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Protocol(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Protocol(m) | CliError::Io(m) => m,
        }
    }
}

fn io_error(what: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{what} {}: {e}", path.display()))
}

// `files` names the inputs so per-packet errors can point at one.
fn protocol_error(e: &PipelineError, files: &[PathBuf]) -> CliError {
    let file = |i: &usize| files.get(*i).map(|p| format!(" [{}]", p.display())).unwrap_or_default();
    let located = match e {
        PipelineError::MacMismatch { index, .. }
        | PipelineError::SeqMismatch { index, .. }
        | PipelineError::MalformedPacket { index, .. } => file(index),
        PipelineError::RootCountMismatch { packet: Some(i), .. } => file(i),
        _ => String::new(),
    };
    CliError::Protocol(format!("{} gate: {}: {e}{located}", e.gate(), e.kind()))
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Pipeline(p) => protocol_error(&p, &[]),
        SimError::NotEnoughPaths { .. } => CliError::Protocol(format!("NotEnoughPaths: {e}")),
        SimError::ArityMismatch { .. } => CliError::Protocol(format!("ArityMismatch: {e}")),
        other => CliError::Usage(other.to_string()),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| io_error("cannot read", path, e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_error("cannot read", path, e))
}

fn load_keys(path: &Path) -> Result<KeyMaterial, CliError> {
    KeyMaterial::from_json(&read_text(path)?).map_err(|e| CliError::Usage(format!("key file {}: {e}", path.display())))
}

fn temp_beside(path: &Path) -> Result<NamedTempFile, CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    NamedTempFile::new_in(dir).map_err(|e| io_error("cannot create a temporary file in", dir, e))
}

fn staged(path: &Path, bytes: &[u8]) -> Result<NamedTempFile, CliError> {
    let mut tmp = temp_beside(path)?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| io_error("cannot write", path, e))?;
    Ok(tmp)
}

/// Writes every file or none: all contents are staged first, then renamed.
fn write_all_or_nothing(files: Vec<(PathBuf, Vec<u8>)>) -> Result<(), CliError> {
    let mut pending = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let tmp = staged(&path, &bytes)?;
        pending.push((path, tmp));
    }
    let mut done: Vec<PathBuf> = Vec::new();
    for (path, tmp) in pending {
        if let Err(e) = tmp.persist(&path) {
            for p in &done {
                let _ = fs::remove_file(p);
            }
            return Err(io_error("cannot write", &path, e.error));
        }
        done.push(path);
    }
    Ok(())
}

fn session(
    keys: KeyMaterial,
    mode: Option<Mode>,
    n: usize,
    payload_bits: Option<u64>,
) -> Result<SessionConfig, CliError> {
    let usage = |e: PipelineError| CliError::Usage(e.to_string());
    let mut keys = keys;
    if let Some(mode) = mode {
        keys.mode = mode;
    }
    let mut cfg = SessionConfig::new(n, keys).map_err(usage)?;
    if let Some(bits) = payload_bits {
        if cfg.keys.mode != Mode::Hint {
            return Err(CliError::Usage("--payload-bits only applies to hint mode".into()));
        }
        cfg = cfg.with_payload_bits(bits).map_err(usage)?;
    }
    Ok(cfg)
}

fn message(path: &Path) -> Result<RawMessage, CliError> {
    RawMessage::new(read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn keygen(args: KeygenArgs) -> Result<(), CliError> {
    let secrecy = if args.secret { Secrecy::Secret } else { Secrecy::Public };
    let p = match args.p {
        Some(p) if !is_prime(p) => return Err(CliError::Usage(format!("NotPrime: {p} is not prime"))),
        Some(p) => p,
        None if args.secret => random_prime(&mut OsRng),
        None => DEFAULT_PRIME,
    };
    let modulus = PrimeModulus::new(p, secrecy).map_err(|e| CliError::Usage(e.to_string()))?;
    let keys = KeyMaterial {
        k0: MacKey::generate(&mut OsRng),
        modulus,
        mode: args.mode,
    };
    let tmp = staged(&args.out, keys.to_json().as_bytes())?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let _ = tmp.as_file().set_permissions(fs::Permissions::from_mode(0o600));
    }
    tmp.persist(&args.out)
        .map_err(|e| io_error("cannot write", &args.out, e.error))?;
    println!(
        "wrote {} (p = {p}, {} modulus, mode {})",
        args.out.display(),
        if args.secret { "secret" } else { "public" },
        args.mode
    );
    Ok(())
}

fn send(args: SendArgs) -> Result<(), CliError> {
    let cfg = session(load_keys(&args.keys)?, args.mode, args.n, args.payload_bits)?;
    let msg = message(&args.input)?;
    let mut rng = match args.seed {
        Some(seed) => ChaCha20Rng::seed_from_u64(seed),
        None => ChaCha20Rng::from_rng(OsRng).map_err(|e| CliError::Io(format!("no OS entropy: {e}")))?,
    };
    let sent = send_prepare(&msg, &cfg, &mut rng).map_err(|e| protocol_error(&e, &[]))?;

    fs::create_dir_all(&args.out).map_err(|e| io_error("cannot create", &args.out, e))?;
    let mut files: Vec<(PathBuf, Vec<u8>)> = sent
        .packets
        .iter()
        .enumerate()
        .map(|(i, bytes)| {
            (
                args.out.join(format!("msg-{:08x}-{i}.jpkt", sent.seq_no)),
                bytes.clone(),
            )
        })
        .collect();
    let names: Vec<String> = files.iter().map(|(p, _)| p.display().to_string()).collect();
    if let Some(audit) = &args.audit {
        let body = serde_json::json!({
            "warning": "contains split positions; anyone holding this file can reassemble the message",
            "audit": sent.audit,
        });
        let text = serde_json::to_string_pretty(&body).expect("audit serializes") + "\n";
        files.push((audit.clone(), text.into_bytes()));
    }
    write_all_or_nothing(files)?;
    for name in names {
        println!("{name}");
    }
    Ok(())
}

fn recv(args: RecvArgs) -> Result<(), CliError> {
    let keys = load_keys(&args.keys)?;
    let mut files: Vec<PathBuf> = glob::glob(&args.packets)
        .map_err(|e| CliError::Usage(format!("bad packet glob {:?}: {e}", args.packets)))?
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Io(e.to_string()))?;
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("no packet files match {:?}", args.packets)));
    }
    let packets = files.iter().map(|f| read(f)).collect::<Result<Vec<_>, _>>()?;
    let Reconstruction {
        message,
        candidates_tried,
    } = receive_with_report(&packets, &keys).map_err(|e| protocol_error(&e, &files))?;
    write_all_or_nothing(vec![(args.out.clone(), message.into_bytes())])?;
    println!(
        "wrote {} from {} packets ({} candidate{} tried)",
        args.out.display(),
        files.len(),
        candidates_tried,
        if candidates_tried == 1 { "" } else { "s" }
    );
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let topology = Topology::from_json(&read_text(&args.topology)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.topology.display())))?;
    let session = session(load_keys(&args.keys)?, args.mode, args.n, args.payload_bits)?;
    if let Some(&bad) = args.adversary.compromised.iter().find(|&&i| i >= args.n) {
        return Err(CliError::Usage(format!(
            "adversary path index {bad} is not below --n {}",
            args.n
        )));
    }
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let adversary = args
        .adversary
        .clone()
        .with_knows_p(args.knows_p)
        .with_budget(args.budget);
    let cfg = ExperimentConfig {
        session,
        message: message(&args.input)?,
        seed: args.seed,
    };
    let report = run_experiment(&topology, &args.src, &args.dst, &cfg, &adversary, args.trials).map_err(sim_error)?;
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_csv(&report.rows, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        write_all_or_nothing(vec![(path.clone(), buf)])?;
    }
    print!("{}", report.render(&topology));
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Send(a) => {
            if a.n < 2 || a.n > DEFAULT_MAX_FRAGMENTS {
                return Err(CliError::Usage(format!(
                    "--n {} outside 2..={DEFAULT_MAX_FRAGMENTS}",
                    a.n
                )));
            }
            send(a)
        }
        Command::Recv(a) => recv(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jigsaw: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
