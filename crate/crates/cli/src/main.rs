use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use locrec::clustering::{write_assignments, write_diagnostics};
use locrec::data::Dataset;
use locrec::embedding::{generate_walks, write_walks};
use locrec::eval::score;
use locrec::graph::Side;
use locrec::pipeline::{ingest, with_threads, IngestSummary, Pipeline, PipelineConfig, FULL_DATA};
use locrec::recommend::TopNList;
use locrec::Error;

#[derive(Parser, Debug)]
#[command(name = "locrec", version, about = "Cluster-local top-N recommendation")]
struct Cli {
    /// TOML configuration file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set walk.in_out_q=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core, 1 is bitwise reproducible.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Read the dataset and print entity counts.
    Ingest,
    /// Write the one-mode projection of one side as an edge list.
    Project(SideArgs),
    /// Write node vectors for one side (word2vec text format).
    Embed(EmbedArgs),
    /// Write cluster assignments for one side.
    Cluster(ClusterArgs),
    /// Write top-N lists for every user, trained on all interactions.
    Recommend(RecommendArgs),
    /// Score a recommendation CSV against held-out interactions.
    Evaluate(EvaluateArgs),
    /// Cross-validate the two-phase recommender against the base recommender.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    User,
    Item,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::User => Side::User,
            SideArg::Item => Side::Item,
        }
    }
}

#[derive(Args, Debug)]
struct SideArgs {
    #[arg(long, value_enum)]
    side: SideArg,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    side: SideArgs,
    /// Also write the walk corpus here.
    #[arg(long)]
    walks: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    side: SideArgs,
    /// Also write per-node density diagnostics as CSV.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RecommendArgs {
    #[arg(short = 'n', long, default_value_t = 10)]
    top_n: usize,
    /// Run the base recommender on the whole matrix instead.
    #[arg(long)]
    original: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// CSV with `user_id,rank,item_id,score`.
    #[arg(long)]
    recommendations: PathBuf,
    /// Held-out interactions as `user_id,item_id` lines, comma or tab separated.
    #[arg(long)]
    test: PathBuf,
    #[arg(short = 'n', long, default_value_t = 10)]
    top_n: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Report file; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(Error),
    Ingest(Error),
    Stage(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Ingest(_) => 3,
            Failure::Stage(_) => 4,
        }
    }

    fn error(&self) -> &Error {
        match self {
            Failure::Config(e) | Failure::Ingest(e) | Failure::Stage(e) => e,
        }
    }
}

fn stage(e: Error) -> Failure {
    match e {
        Error::Config(_) => Failure::Config(e),
        e => Failure::Stage(e),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::load_with_overrides(cli.config.as_deref(), &cli.overrides).map_err(Failure::Config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(c) = &cli.cache_dir {
        cfg.cache_dir = Some(c.clone());
    }
    Ok(cfg)
}

fn load_data(cfg: &PipelineConfig) -> Result<Dataset, Failure> {
    let ds = ingest(&cfg.data).map_err(|e| match e {
        Error::Config(_) => Failure::Config(e),
        e => Failure::Ingest(e),
    })?;
    info!("ingested {}", IngestSummary::of(&ds));
    Ok(ds)
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, content).map_err(|e| Failure::Stage(Error::io(p, e))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Failure::Stage(Error::io("<stdout>", e))),
    }
}

fn text(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("artifacts are UTF-8")
}

fn read_test_pairs(path: &Path, ds: &Dataset) -> Result<Vec<Vec<u32>>, Failure> {
    let body = fs::read(path).map_err(|e| Failure::Ingest(Error::io(path, e)))?;
    let delimiter = if body.contains(&b'\t') { b'\t' } else { b',' };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(body.as_slice());
    let mut test = vec![Vec::new(); ds.n_users()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Failure::Ingest(Error::parse(path.display().to_string(), 0, e.to_string())))?;
        if rec.len() < 2 {
            continue;
        }
        // unknown ids (including a header row) cannot be hits
        if let (Some(u), Some(i)) = (ds.users.get(rec[0].trim()), ds.items.get(rec[1].trim())) {
            test[u as usize].push(i);
        }
    }
    for t in &mut test {
        t.sort_unstable();
        t.dedup();
    }
    Ok(test)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let threads = cfg.threads;
    let body = || -> Result<(), Failure> {
        match &cli.command {
            Command::Ingest => {
                let ds = load_data(&cfg)?;
                emit(None, &format!("{}\n", IngestSummary::of(&ds)))
            }
            Command::Project(a) => {
                let ds = load_data(&cfg)?;
                let p = Pipeline::new(&cfg, &ds);
                let (g, _) = p.projection(&ds, a.side.into()).map_err(stage)?;
                emit(a.out.as_deref(), &text(|b| g.write_edge_list(b)))
            }
            Command::Embed(a) => {
                let ds = load_data(&cfg)?;
                let p = Pipeline::new(&cfg, &ds);
                let side = a.side.side.into();
                let (g, key) = p.projection(&ds, side).map_err(stage)?;
                if let Some(w) = &a.walks {
                    let walk = cfg.walk.to_config(cfg.seed);
                    let walks = generate_walks(&g, &walk).map_err(stage)?;
                    emit(Some(w), &text(|b| write_walks(&walks, b)))?;
                }
                let (m, _) = p.embedding(&g, &key, side, FULL_DATA).map_err(stage)?;
                emit(a.side.out.as_deref(), &text(|b| m.write_text(b)))
            }
            Command::Cluster(a) => {
                let ds = load_data(&cfg)?;
                let p = Pipeline::new(&cfg, &ds);
                let side = a.side.side.into();
                let (s, _) = p.side(&ds, side, FULL_DATA).map_err(stage)?;
                if let Some(d) = &a.diagnostics {
                    let run = p.cluster_run(&s.embedding, side, FULL_DATA).map_err(stage)?;
                    emit(Some(d), &text(|b| write_diagnostics(&run.diagnostics, b)))?;
                }
                emit(a.side.out.as_deref(), &text(|b| write_assignments(&s.clusters, b)))
            }
            Command::Recommend(a) => {
                let ds = load_data(&cfg)?;
                let p = Pipeline::new(&cfg, &ds);
                let (u, uk) = p.side(&ds, Side::User, FULL_DATA).map_err(stage)?;
                let (i, ik) = p.side(&ds, Side::Item, FULL_DATA).map_err(stage)?;
                let (clustered, original) = p
                    .recommendations(&ds, &u.clusters, &uk, &i.clusters, &ik, a.top_n, FULL_DATA)
                    .map_err(|e| stage(e.in_stage("recommend")))?;
                let lists = if a.original { original } else { clustered };
                emit(a.out.as_deref(), &text(|b| lists.write_csv(&ds.users, &ds.items, b)))
            }
            Command::Evaluate(a) => {
                let ds = load_data(&cfg)?;
                let f = fs::File::open(&a.recommendations).map_err(|e| Failure::Ingest(Error::io(&a.recommendations, e)))?;
                let lists = TopNList::read_csv(
                    BufReader::new(f),
                    &ds.users,
                    &ds.items,
                    &a.recommendations.display().to_string(),
                )
                .map_err(Failure::Ingest)?;
                let test = read_test_pairs(&a.test, &ds)?;
                let m = score(&lists, &test, a.top_n).map_err(|e| stage(e.in_stage("evaluate")))?;
                emit(
                    None,
                    &format!(
                        "n,users,precision,recall,hr,arhr\n{},{},{},{},{},{}\n",
                        a.top_n, m.users, m.precision, m.recall, m.hr, m.arhr
                    ),
                )
            }
            Command::Pipeline(a) => {
                let ds = load_data(&cfg)?;
                let outcome = Pipeline::new(&cfg, &ds).run().map_err(stage)?;
                info!("cache hits {}, misses {}", outcome.cache_hits, outcome.cache_misses);
                let r = &outcome.report;
                let body = match a.format {
                    Format::Table => r.to_table(),
                    Format::Csv => r.to_csv(),
                    Format::Json => r.to_json() + "\n",
                };
                emit(a.out.as_deref(), &body)
            }
        }
    };
    with_threads(threads, body).map_err(Failure::Config)?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error());
            let mut src = std::error::Error::source(f.error());
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(f.code())
        }
    }
}
