mod error;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use pdd_core::ingest::{read_structures, structure_files, LoadedStructure};
use pdd_core::invariants::{decode_record, encode_amd, encode_pdd, read_pdd_csv, write_amd_csv, write_pdd_csv, Record};
use pdd_core::lattice::{Lattice, Structure};
use pdd_core::{
    amd, amd_distance, build_mst, check_distance_generic, emd, pdd, reconstruct_motif,
    scan_duplicates, AmdVector, InvariantStore, PddMatrix,
};

use error::CliError;

const DEFAULT_K: usize = 100;
const EXTENDED_THRESHOLD: f64 = 0.1;

/// Pointwise distance distributions of periodic point sets: invariants,
/// comparisons, duplicate scans, spanning trees and motif reconstruction.
#[derive(Debug, Parser)]
#[command(name = "pdd", version)]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "PDD_WORKERS")]
    workers: Option<usize>,

    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute PDDs of every structure in the inputs.
    Pdd(InvariantCmd),
    /// Compute AMDs of every structure in the inputs.
    Amd(InvariantCmd),
    /// Print the EMD between the PDDs of two structures, with their AMD gap.
    Compare(CompareCmd),
    /// Report near-duplicate pairs: AMD filter, then EMD confirmation.
    Scan(ScanCmd),
    /// Build the minimum spanning tree under EMD.
    Mst(MstCmd),
    /// Rebuild a motif from a lattice and a PDD.
    Reconstruct(ReconstructCmd),
    /// Check whether 2D or 3D periodic sets are distance-generic.
    CheckGeneric(CheckGenericCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Binary,
}

impl Format {
    fn extension(self, kind: &str) -> String {
        match self {
            Format::Csv => "csv".into(),
            Format::Json => "json".into(),
            Format::Binary => kind.into(),
        }
    }
}

#[derive(Debug, Args)]
struct InvariantArgs {
    /// Number of neighbours per point.
    #[arg(long)]
    k: Option<usize>,

    /// Collapse rows whose entries differ by at most this much.
    #[arg(long, default_value_t = 0.0)]
    collapse_tol: f64,
}

impl InvariantArgs {
    fn k(&self) -> usize {
        self.k.unwrap_or(DEFAULT_K)
    }
}

#[derive(Debug, Args)]
struct InvariantCmd {
    /// Structure files (.cif, .json) or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    #[command(flatten)]
    invariants: InvariantArgs,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file, or a directory when there are several structures.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareCmd {
    first: PathBuf,
    second: PathBuf,

    #[command(flatten)]
    invariants: InvariantArgs,

    /// Machine-readable output instead of text.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct StoreArgs {
    /// Structure files, directories of them, or one saved store directory.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    #[command(flatten)]
    invariants: InvariantArgs,

    /// Save the computed invariants as a store directory for later runs.
    #[arg(long)]
    save_store: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanCmd {
    #[command(flatten)]
    store: StoreArgs,

    /// Largest AMD gap passed on to the EMD stage.
    #[arg(long, default_value_t = 0.01)]
    amd_threshold: f64,

    /// Largest EMD reported as a duplicate.
    #[arg(long, default_value_t = 0.01)]
    emd_threshold: f64,

    /// Raise both thresholds to 0.1 to list looser near-duplicates.
    #[arg(long)]
    extended_sweep: bool,
}

#[derive(Debug, Args)]
struct MstCmd {
    #[command(flatten)]
    store: StoreArgs,

    /// Candidate neighbours per record, ranked by PPC difference.
    #[arg(long, default_value_t = 3000)]
    candidates: usize,
}

#[derive(Debug, Args)]
struct ReconstructCmd {
    /// Lattice as JSON `{"cell": [[...], ...]}` or a CIF or structure file.
    #[arg(long)]
    lattice: PathBuf,

    /// PDD as CSV, JSON or a binary record.
    #[arg(long)]
    pdd: PathBuf,

    /// Motif size; defaults to the common denominator of the weights.
    #[arg(long)]
    m: Option<usize>,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckGenericCmd {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return;
        }
        Err(e) => fail(CliError::input(e.render().to_string().trim_end())),
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .unwrap_or_else(|e| fail(CliError::input(e)));
    if let Err(e) = pool.install(|| run(cli.command)) {
        fail(e);
    }
}

fn fail(e: CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code());
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Pdd(cmd) => invariants(cmd, true),
        Command::Amd(cmd) => invariants(cmd, false),
        Command::Compare(cmd) => compare(cmd),
        Command::Scan(cmd) => scan(cmd),
        Command::Mst(cmd) => mst(cmd),
        Command::Reconstruct(cmd) => reconstruct(cmd),
        Command::CheckGeneric(cmd) => check_generic(cmd),
    }
}

/// Expands directories into their structure files and reads every structure.
fn load_all(inputs: &[PathBuf]) -> Result<Vec<LoadedStructure>, CliError> {
    let mut out = Vec::new();
    for input in inputs {
        let files = if input.is_dir() { structure_files(input)? } else { vec![input.clone()] };
        for file in files {
            out.extend(read_structures(&file)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::input("no structures found in the inputs"));
    }
    Ok(out)
}

fn load_one(path: &Path) -> Result<LoadedStructure, CliError> {
    let mut all = read_structures(path)?;
    if all.len() != 1 {
        return Err(CliError::input(format!("{}: expected one structure, found {}", path.display(), all.len())));
    }
    Ok(all.remove(0))
}

fn write_output(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(CliError::input)
        }
    }
}

fn file_name(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("value serialises");
    text.push('\n');
    text.into_bytes()
}

enum Invariant {
    Pdd(PddMatrix),
    Amd(AmdVector),
}

impl Invariant {
    fn encode(&self, format: Format) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        match (self, format) {
            (Invariant::Pdd(p), Format::Csv) => write_pdd_csv(p, &mut buf).map_err(CliError::input)?,
            (Invariant::Amd(a), Format::Csv) => write_amd_csv(a, &mut buf).map_err(CliError::input)?,
            (Invariant::Pdd(p), Format::Json) => buf = to_json(p),
            (Invariant::Amd(a), Format::Json) => buf = to_json(a),
            (Invariant::Pdd(p), Format::Binary) => buf = encode_pdd(p),
            (Invariant::Amd(a), Format::Binary) => buf = encode_amd(a),
        }
        Ok(buf)
    }
}

fn invariants(cmd: InvariantCmd, full: bool) -> Result<(), CliError> {
    let structures = load_all(&cmd.inputs)?;
    let k = cmd.invariants.k();
    let computed: Vec<(String, Invariant)> = structures
        .iter()
        .map(|s| {
            let p = pdd(&s.structure, k, cmd.invariants.collapse_tol)
                .map_err(|e| CliError::input(format!("{}: {e}", s.label)))?;
            let inv = if full { Invariant::Pdd(p) } else { Invariant::Amd(amd(&p)) };
            Ok((s.label.clone(), inv))
        })
        .collect::<Result<_, CliError>>()?;
    let kind = if full { "pdd" } else { "amd" };

    if let [(_, inv)] = computed.as_slice() {
        return write_output(cmd.output.as_deref(), &inv.encode(cmd.format)?);
    }
    match (&cmd.output, cmd.format) {
        (Some(dir), _) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
            for (label, inv) in &computed {
                let path = dir.join(format!("{}.{}", file_name(label), cmd.format.extension(kind)));
                write_output(Some(&path), &inv.encode(cmd.format)?)?;
            }
            info!("wrote {} files to {}", computed.len(), dir.display());
            Ok(())
        }
        (None, Format::Json) => {
            let entries: Vec<serde_json::Value> = computed
                .iter()
                .map(|(label, inv)| {
                    let value = match inv {
                        Invariant::Pdd(p) => serde_json::to_value(p),
                        Invariant::Amd(a) => serde_json::to_value(a),
                    }
                    .expect("value serialises");
                    serde_json::json!({ "label": label, kind: value })
                })
                .collect();
            write_output(None, &to_json(&entries))
        }
        (None, _) => Err(CliError::input(format!(
            "{} structures found; pass --output DIR or --format json",
            computed.len()
        ))),
    }
}

#[derive(Serialize)]
struct Comparison<'a> {
    first: &'a str,
    second: &'a str,
    k: usize,
    emd: f64,
    amd_gap: f64,
}

fn compare(cmd: CompareCmd) -> Result<(), CliError> {
    let (a, b) = (load_one(&cmd.first)?, load_one(&cmd.second)?);
    let k = cmd.invariants.k();
    let tol = cmd.invariants.collapse_tol;
    let pa = pdd(&a.structure, k, tol).map_err(|e| CliError::input(format!("{}: {e}", a.label)))?;
    let pb = pdd(&b.structure, k, tol).map_err(|e| CliError::input(format!("{}: {e}", b.label)))?;
    let (d, _) = emd(&pa, &pb).map_err(|e| CliError::Numeric(e.to_string()))?;
    let gap = amd_distance(&amd(&pa), &amd(&pb)).map_err(|e| CliError::Numeric(e.to_string()))?;
    let result = Comparison { first: &a.label, second: &b.label, k, emd: d, amd_gap: gap };
    let bytes = match cmd.format {
        None => format!("{d:.6}\namd_gap {gap:.6}\n").into_bytes(),
        Some(Format::Json) => to_json(&result),
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&result).map_err(CliError::input)?;
            w.into_inner().map_err(CliError::input)?
        }
        Some(Format::Binary) => return Err(CliError::input("compare has no binary output")),
    };
    write_output(None, &bytes)
}

fn open_store(args: &StoreArgs) -> Result<InvariantStore, CliError> {
    let saved = match args.inputs.as_slice() {
        [dir] if dir.join("manifest.json").is_file() => Some(dir),
        _ => None,
    };
    let store = match saved {
        Some(dir) => {
            let store = InvariantStore::load(dir)?;
            if let Some(k) = args.invariants.k {
                if k != store.k() {
                    return Err(CliError::input(format!("store {} has k = {}, not {k}", dir.display(), store.k())));
                }
            }
            store
        }
        None => {
            let structures = load_all(&args.inputs)?;
            InvariantStore::from_structures(&structures, args.invariants.k(), args.invariants.collapse_tol)?
        }
    };
    info!("{} records with k = {}", store.len(), store.k());
    if let Some(dir) = &args.save_store {
        store.save(dir)?;
    }
    Ok(store)
}

fn scan(cmd: ScanCmd) -> Result<(), CliError> {
    let store = open_store(&cmd.store)?;
    let (mut amd_t, mut emd_t) = (cmd.amd_threshold, cmd.emd_threshold);
    if cmd.extended_sweep {
        amd_t = amd_t.max(EXTENDED_THRESHOLD);
        emd_t = emd_t.max(EXTENDED_THRESHOLD);
    }
    let report = scan_duplicates(&store, amd_t, emd_t)?;
    let bytes = match cmd.store.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).map_err(CliError::input)?;
            buf
        }
        Format::Json => {
            let mut text = report.to_json();
            text.push('\n');
            text.into_bytes()
        }
        Format::Binary => return Err(CliError::input("scan writes csv or json")),
    };
    write_output(cmd.store.output.as_deref(), &bytes)
}

fn mst(cmd: MstCmd) -> Result<(), CliError> {
    let store = open_store(&cmd.store)?;
    let tree = build_mst(&store, cmd.candidates)?;
    let bytes = match cmd.store.format {
        Format::Csv => {
            let mut buf = Vec::new();
            tree.write_csv(&mut buf).map_err(CliError::input)?;
            buf
        }
        Format::Json => {
            let mut text = tree.to_graph_json();
            text.push('\n');
            text.into_bytes()
        }
        Format::Binary => return Err(CliError::input("mst writes csv or json")),
    };
    write_output(cmd.store.output.as_deref(), &bytes)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn extension(path: &Path) -> String {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase()).unwrap_or_default()
}

fn read_lattice(path: &Path) -> Result<Lattice, CliError> {
    let bad = |msg: String| CliError::input(format!("{}: {msg}", path.display()));
    if extension(path) == "cif" {
        return match load_one(path)?.structure {
            Structure::Periodic(set) => Ok(set.lattice().clone()),
            Structure::Finite(_) => Err(bad("not periodic".into())),
        };
    }
    let value: serde_json::Value = serde_json::from_str(&read_text(path)?).map_err(|e| bad(e.to_string()))?;
    let cell: Vec<Vec<f64>> = value
        .get("cell")
        .cloned()
        .ok_or_else(|| bad("missing \"cell\"".into()))
        .and_then(|c| serde_json::from_value(c).map_err(|e| bad(e.to_string())))?;
    Lattice::from_vectors(&cell).map_err(|e| bad(e.to_string()))
}

fn read_pdd(path: &Path) -> Result<PddMatrix, CliError> {
    let bad = |msg: String| CliError::input(format!("{}: {msg}", path.display()));
    match extension(path).as_str() {
        "csv" => read_pdd_csv(read_text(path)?.as_bytes()).map_err(|e| bad(e.to_string())),
        "json" => serde_json::from_str(&read_text(path)?).map_err(|e| bad(e.to_string())),
        _ => {
            let bytes = std::fs::read(path).map_err(|e| bad(e.to_string()))?;
            match decode_record(&bytes).map_err(|e| bad(e.to_string()))? {
                Record::Pdd(p) => Ok(p),
                Record::Amd(_) => Err(bad("expected a PDD record, found an AMD".into())),
            }
        }
    }
}

fn reconstruct(cmd: ReconstructCmd) -> Result<(), CliError> {
    let lattice = read_lattice(&cmd.lattice)?;
    let p = read_pdd(&cmd.pdd)?;
    let m = match cmd.m {
        Some(m) => m,
        None => usize::try_from(p.common_denominator()).map_err(CliError::input)?,
    };
    let rec = reconstruct_motif(&lattice, m, &p)?;
    info!("verification emd {:e}", rec.trace.verification_emd);
    let structure = Structure::Periodic(rec.set.with_label("reconstructed"));
    let mut text = pdd_core::ingest::structure_to_json(&structure);
    text.push('\n');
    write_output(cmd.output.as_deref(), text.as_bytes())
}

fn check_generic(cmd: CheckGenericCmd) -> Result<(), CliError> {
    let structures = load_all(&cmd.inputs)?;
    let mut reports = Vec::with_capacity(structures.len());
    for s in &structures {
        let set = s
            .structure
            .as_periodic()
            .ok_or_else(|| CliError::input(format!("{}: genericity needs a periodic set", s.label)))?;
        let report = check_distance_generic(set).map_err(|e| CliError::input(format!("{}: {e}", s.label)))?;
        reports.push(serde_json::json!({ "label": s.label, "report": report }));
    }
    let bytes = match reports.as_slice() {
        [single] => to_json(&single["report"]),
        _ => to_json(&reports),
    };
    write_output(cmd.output.as_deref(), &bytes)
}
