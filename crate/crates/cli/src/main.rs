//! `siglink` command-line entry point.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use siglink::evaluate::{default_thresholds, threshold_sweep, write_sweep};
use siglink::ingest::save_database;
use siglink::select::write_report;
use siglink::synth::{corrupt, generate_pair, inject_mcar, SynthParams, QID_ATTRIBUTES};
use siglink::{
    link, load_database, load_ground_truth, precision_recall, select_attribute_combinations,
    AttributeCombination, Combination, CombinationSource, Config, CsvLayout, Database, Error,
};

#[derive(Parser)]
#[command(name = "siglink", version, about = "Signature-based record linkage")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select attribute combinations and write them as a CSV report.
    Select(SelectArgs),
    /// Link two databases.
    Link(LinkArgs),
    /// Sweep the similarity threshold in both matching modes.
    Eval(EvalArgs),
    /// Generate a synthetic database pair with ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    db_a: PathBuf,
    #[arg(long)]
    db_b: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any config key, e.g. `--set relationship=last_name+street_address`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Transforms for one attribute, e.g. `--transform birth_date=identity,yearOf`.
    #[arg(long = "transform", value_name = "ATTR=LIST")]
    transforms: Vec<String>,
    #[arg(long)]
    n_a: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    ct: Option<f64>,
    /// Directory holding cached selections.
    #[arg(long, default_value = ".siglink-cache")]
    cache_dir: PathBuf,
    /// Neither read nor write the selection cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct MatchFlags {
    #[arg(long)]
    pt: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    st: Option<f64>,
    /// Skip the relational stage.
    #[arg(long)]
    attribute_only: bool,
    #[arg(long)]
    one_to_one: bool,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value = "combos.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct LinkArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    matching: MatchFlags,
    #[arg(long, default_value = "matches.csv")]
    out: PathBuf,
    /// Ground-truth pairs; enables the metrics report.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    runtime: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    matching: MatchFlags,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Comma-separated thresholds (default 0.5,0.6,...,1.0).
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
}

#[derive(Args)]
struct SynthArgs {
    /// Records in the first database.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Records in the second database (default: same as --n).
    #[arg(long)]
    n_b: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    overlap: f64,
    #[arg(long, default_value_t = 3.0)]
    household_size: f64,
    #[arg(long, default_value_t = 0.0)]
    mcar: f64,
    #[arg(long, default_value_t = 5)]
    mcar_max: usize,
    #[arg(long, default_value_t = 0.0)]
    corrupt: f64,
    #[arg(long, default_value_t = 3)]
    max_edits: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.workers {
        Some(0) => Err(Error::InvalidParameter("--workers must be positive".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building worker pool")
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg = format!("{msg}: {text}");
        }
    }
    msg
}

/// 2 for bad input or usage, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::UnknownVertex(_)
            | Error::InvalidOccurrence(_)
            | Error::IncompatibleSignatures(_),
        ) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Select(args) => cmd_select(args),
        Command::Link(args) => cmd_link(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn resolve_config(inputs: &Inputs, matching: Option<&MatchFlags>) -> Result<Config> {
    let mut cfg = match &inputs.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    for kv in &inputs.set {
        let (k, v) = split_kv(kv)?;
        cfg.set(k, v)?;
    }
    for kv in &inputs.transforms {
        let (k, v) = split_kv(kv)?;
        cfg.set_transforms(k, v)?;
    }
    if let Some(v) = inputs.n_a {
        cfg.n_a = v;
    }
    if let Some(v) = inputs.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = inputs.ct {
        cfg.c_t = v;
    }
    if let Some(m) = matching {
        if let Some(v) = m.pt {
            cfg.p_t = v;
        }
        if let Some(v) = m.beta {
            cfg.beta = v;
        }
        if let Some(v) = m.st {
            cfg.s_t = v;
        }
        cfg.attribute_only |= m.attribute_only;
        cfg.one_to_one |= m.one_to_one;
    }
    cfg.validate()?;
    log::info!("resolved config:\n{cfg}");
    Ok(cfg)
}

fn split_kv(kv: &str) -> Result<(&str, &str)> {
    kv.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::InvalidParameter(format!("expected KEY=VALUE, got `{kv}`")).into())
}

fn load_pair(inputs: &Inputs, cfg: &Config) -> Result<(Database, Database)> {
    let layout = CsvLayout::from_config(cfg);
    let a = load_database(&inputs.db_a, &layout)?;
    let b = load_database(&inputs.db_b, &layout)?;
    log::info!(
        "loaded {} records from {}, {} from {}",
        a.len(),
        inputs.db_a.display(),
        b.len(),
        inputs.db_b.display()
    );
    Ok((a, b))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

/// Digest of both input files and every parameter selection depends on.
fn cache_key(inputs: &Inputs, cfg: &Config) -> Result<String> {
    let mut h = Sha256::new();
    for path in [&inputs.db_a, &inputs.db_b] {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    let params = format!(
        "{}|{:?}|{:?}|{:?}|{}|{}|{}|{:?}|{:?}",
        cfg.id_column,
        cfg.entity_column,
        cfg.attributes,
        cfg.transforms,
        cfg.n_a,
        cfg.alpha,
        cfg.c_t,
        cfg.score_scope,
        cfg.combinations
    );
    h.update(params.as_bytes());
    Ok(hex::encode(h.finalize()))
}

fn cache_path(inputs: &Inputs, key: &str) -> PathBuf {
    inputs.cache_dir.join(format!("{key}.sel"))
}

fn write_cache(path: &Path, combos: &[AttributeCombination], schema: &[String]) -> Result<()> {
    let mut w = create(path)?;
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    for c in combos {
        writeln!(
            w,
            "{}\t{:?}\t{:?}\t{:?}",
            c.combination.label(schema),
            c.score,
            c.completeness,
            c.gini
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// A missing or unreadable cache entry is a miss, never an error.
fn read_cache(path: &Path, schema: &[String]) -> Option<Vec<AttributeCombination>> {
    let text = std::fs::read_to_string(path).ok()?;
    text.lines()
        .map(|line| {
            let mut f = line.split('\t');
            let combination = Combination::parse(f.next()?, schema).ok()?;
            let mut num = || f.next()?.parse::<f64>().ok();
            Some(AttributeCombination {
                combination,
                score: num()?,
                completeness: num()?,
                gini: num()?,
            })
        })
        .collect()
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let cfg = resolve_config(&args.inputs, None)?;
    let (a, b) = load_pair(&args.inputs, &cfg)?;
    let selection = select_attribute_combinations(&a, &b, &cfg)?;
    write_report(&selection, a.schema(), create(&args.out)?)?;
    for c in &selection.combinations {
        log::info!(
            "selected {} (score {:.4})",
            c.combination.label(a.schema()),
            c.score
        );
    }
    if !args.inputs.no_cache {
        let path = cache_path(&args.inputs, &cache_key(&args.inputs, &cfg)?);
        write_cache(&path, &selection.combinations, a.schema())?;
        log::info!("cached selection in {}", path.display());
    }
    println!(
        "{} combinations written to {}",
        selection.combinations.len(),
        args.out.display()
    );
    Ok(())
}

/// Selection source for link and eval: fixed combinations, then the cache,
/// then a fresh selection (which is cached).
fn combination_source(
    inputs: &Inputs,
    cfg: &Config,
    schema: &[String],
) -> Result<(CombinationSource, Option<PathBuf>)> {
    if inputs.no_cache || !cfg.combinations.is_empty() {
        return Ok((CombinationSource::Select, None));
    }
    let path = cache_path(inputs, &cache_key(inputs, cfg)?);
    match read_cache(&path, schema) {
        Some(c) => {
            log::info!("using cached selection {}", path.display());
            Ok((CombinationSource::Cached(c), None))
        }
        None => Ok((CombinationSource::Select, Some(path))),
    }
}

fn cmd_link(args: LinkArgs) -> Result<()> {
    let cfg = resolve_config(&args.inputs, Some(&args.matching))?;
    let (a, b) = load_pair(&args.inputs, &cfg)?;
    let truth = args
        .truth
        .as_deref()
        .map(|p| load_ground_truth(p, &a, &b))
        .transpose()?;
    let (source, cache_to) = combination_source(&args.inputs, &cfg, a.schema())?;
    let outcome = link(&a, &b, &cfg, source)?;
    if let (Some(path), Some(_)) = (cache_to, &outcome.selection) {
        write_cache(&path, &outcome.combinations, a.schema())?;
    }

    let mut w = create(&args.out)?;
    outcome.matches.write_csv(&mut w)?;
    w.flush().context("writing matches")?;
    println!(
        "{} matches written to {}",
        outcome.matches.len(),
        args.out.display()
    );

    if let Some(truth) = &truth {
        let metrics = precision_recall(&outcome.matches, truth);
        print!("{metrics}");
        if let Some(path) = &args.metrics {
            let mut w = create(path)?;
            write!(w, "{metrics}").context("writing metrics")?;
        }
    } else if args.metrics.is_some() {
        return Err(Error::InvalidParameter("--metrics needs --truth".into()).into());
    }
    match &args.runtime {
        Some(path) => {
            write!(create(path)?, "{}", outcome.runtime).context("writing runtime report")?
        }
        None => eprint!("{}", outcome.runtime),
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let cfg = resolve_config(&args.inputs, Some(&args.matching))?;
    let (a, b) = load_pair(&args.inputs, &cfg)?;
    let truth = load_ground_truth(&args.truth, &a, &b)?;
    let (source, cache_to) = combination_source(&args.inputs, &cfg, a.schema())?;
    let outcome = link(&a, &b, &cfg, source)?;
    if let (Some(path), Some(_)) = (cache_to, &outcome.selection) {
        write_cache(&path, &outcome.combinations, a.schema())?;
    }
    let thresholds = args.thresholds.clone().unwrap_or_else(default_thresholds);
    let rows = threshold_sweep(
        &outcome.signatures_a,
        &outcome.signatures_b,
        &cfg,
        &truth,
        &thresholds,
    )?;
    let mut w = create(&args.out)?;
    write_sweep(&rows, &mut w)?;
    w.flush().context("writing sweep")?;
    for r in &rows {
        println!(
            "s_t = {:.2} {:>14} matches = {:>7} precision = {:.4} recall = {:.4}",
            r.s_t, r.mode, r.matches, r.metrics.precision, r.metrics.recall
        );
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let params = SynthParams {
        records_a: args.n,
        records_b: args.n_b.unwrap_or(args.n),
        overlap: args.overlap,
        household_size: args.household_size,
        seed: args.seed,
    };
    let pair = generate_pair(&params)?;
    let qids: Vec<String> = QID_ATTRIBUTES.iter().map(|s| s.to_string()).collect();
    let perturb = |db: &Database, salt: u64| -> siglink::Result<Database> {
        let seed = args.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt;
        let db = inject_mcar(db, args.mcar, args.mcar_max, &qids, seed)?;
        corrupt(
            &db,
            args.corrupt,
            args.max_edits,
            &qids,
            seed.rotate_left(17),
        )
    };
    let a = perturb(&pair.a, 0xa)?;
    let b = perturb(&pair.b, 0xb)?;

    let mut layout = CsvLayout::new("id");
    layout.entity_column = Some("entity_id".to_string());
    std::fs::create_dir_all(&args.out_dir).map_err(|source| Error::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    save_database(&a, &args.out_dir.join("a.csv"), &layout)?;
    save_database(&b, &args.out_dir.join("b.csv"), &layout)?;
    pair.truth.save(&args.out_dir.join("truth.csv"))?;

    let mut cfg = Config {
        entity_column: Some("entity_id".to_string()),
        attributes: qids,
        ..Config::default()
    };
    cfg.set("relationship", "last_name + street_address")?;
    let cfg_path = args.out_dir.join("synth.cfg");
    write!(create(&cfg_path)?, "{cfg}").context("writing config")?;
    println!("truth pairs: {}", pair.truth.len());
    Ok(())
}
