use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use entgraph::config::{ConfigBuilder, PipelineConfig};
use entgraph::formats::{self, export};
use entgraph::pipeline::{self, FinetuneTarget};
use entgraph::{write_file, Error, Result};
use entgraph_core::MockBackend;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "entgraph", version, about = "Build and evaluate typed entailment graphs")]
struct Cli {
    /// JSON configuration with flat dotted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set generation.k_p=200`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// "mock" or the base URL of a model server.
    #[arg(long, global = true)]
    backend: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Generator,
    Weigher,
}

#[derive(Subcommand)]
enum Command {
    /// Expand seed predicates into a predicate list.
    Generate {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed every predicate into a binary cache.
    Embed {
        #[arg(long)]
        predicates: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep the highest-scoring candidate edges per type pair.
    Select {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score selected edges with the entailment model.
    Weigh {
        #[arg(long)]
        predicates: PathBuf,
        #[arg(long)]
        selected: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Line-delimited JSON of pairs that got no edge.
        #[arg(long)]
        failures: Option<PathBuf>,
    },
    /// Write one `.egg` graph per type pair.
    Build {
        #[arg(long)]
        predicates: PathBuf,
        #[arg(long)]
        weighted: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a labeled dataset against graphs and report curve areas.
    Eval {
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Also write pr.csv and roc.csv here.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Fit a selector head on labeled pairs.
    TrainSelector {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check the sphere bound on embedded predicates and soft transitivity on graphs.
    Audit {
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        graphs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write fine-tuning records derived from a labeled dataset.
    ExportFinetune {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the mock backend over HTTP.
    MockServe {
        #[arg(long, default_value = "127.0.0.1:8700")]
        addr: String,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
    /// Run every stage from seeds to the evaluation report.
    Pipeline {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        work_dir: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut b = ConfigBuilder::new();
    if let Some(path) = &cli.config {
        b.merge_file(path)?;
    }
    for o in &cli.overrides {
        b.set_override(o)?;
    }
    if let Some(url) = &cli.backend {
        b.set("backend.url", url.as_str().into())?;
    }
    if let Some(seed) = cli.seed {
        b.set("seed", seed.into())?;
    }
    Ok(b.build()?)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TrainSummary {
    initial_f1: f64,
    best_f1: f64,
    best_epoch: usize,
    epochs_run: usize,
    history: Vec<f64>,
}

#[derive(Serialize)]
struct SphereAudit {
    epsilon: f64,
    examined: usize,
    qualifying: usize,
    violations: usize,
}

#[derive(Serialize)]
struct TransitivityAudit {
    type_pair: String,
    edges: usize,
    violations: usize,
}

#[derive(Serialize)]
struct AuditSummary {
    spheres: Option<SphereAudit>,
    graphs: Vec<TransitivityAudit>,
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Generate { seeds, out } => {
            let backend = pipeline::make_backend(&cfg);
            let mapper = pipeline::make_mapper(&cfg)?;
            let seeds = formats::read_predicate_file(seeds)?;
            let (preds, summary) = pipeline::generate(&mapper, &seeds, &cfg.generation, backend.as_ref())?;
            for g in &summary {
                log::info!("{}: {} seeds -> {} predicates in {} stages", g.type_pair, g.seeds, g.predicates, g.stages);
            }
            formats::write_predicate_file(out, &preds)
        }
        Command::Embed { predicates, out } => {
            let backend = pipeline::make_backend(&cfg);
            let mapper = pipeline::make_mapper(&cfg)?;
            let preds = formats::read_predicate_file(predicates)?;
            formats::write_embeddings(out, &pipeline::embed(&mapper, &preds, backend.as_ref())?)
        }
        Command::Select { embeddings, out } => {
            let cache = formats::read_embeddings(embeddings)?;
            if cache.dim() != cfg.backend.embed_dim {
                return Err(Error::Usage(format!(
                    "cache holds {}-dimensional embeddings but backend.embed_dim is {}",
                    cache.dim(),
                    cfg.backend.embed_dim
                )));
            }
            let head = pipeline::load_or_init_head(&cfg)?;
            formats::write_edges(out, &pipeline::select(&cache, &head, cfg.k_edge, cfg.shards)?)
        }
        Command::Weigh { predicates, selected, out, failures } => {
            let backend = pipeline::make_backend(&cfg);
            let mapper = pipeline::make_mapper(&cfg)?;
            let preds = formats::read_predicate_file(predicates)?;
            let selected = formats::read_edges(selected)?;
            let (edges, failed) = pipeline::weigh(&mapper, &preds, &selected, backend.as_ref());
            for f in &failed {
                log::warn!("no edge {} -> {}: {}", f.src, f.dst, f.reason);
            }
            if let Some(path) = failures {
                write_file(path, export::to_jsonl(&failed))?;
            }
            formats::write_edges(out, &edges)
        }
        Command::Build { predicates, weighted, out_dir } => {
            let preds = formats::read_predicate_file(predicates)?;
            let edges = formats::read_edges(weighted)?;
            pipeline::write_graphs(out_dir, &pipeline::build(&preds, &edges)?)
        }
        Command::Eval { graphs, dataset, report, curves } => {
            let mapper = pipeline::make_mapper(&cfg)?;
            let mut collection = pipeline::read_graphs(graphs)?;
            collection.index_sentences(&mapper);
            let pairs = formats::load_dataset(dataset)?;
            let name = dataset.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let ev = pipeline::evaluate(&name, &collection, &pairs, cfg.strategies, cfg.precision_floor, &mapper)?;
            log::info!("{name}: AUC-PR {:.4}, AUC-ROC {:.4}", ev.report.auc_pr, ev.report.auc_roc);
            pipeline::write_eval(report, curves.as_deref(), &ev)
        }
        Command::TrainSelector { dataset, out, report } => {
            let backend = pipeline::make_backend(&cfg);
            let mapper = pipeline::make_mapper(&cfg)?;
            let pairs = formats::load_dataset(dataset)?;
            let (head, r) =
                pipeline::train_selector(&mapper, &pairs, backend.as_ref(), cfg.head_dims, cfg.f_plus, &cfg.train)?;
            formats::write_head(out, &head)?;
            let summary = TrainSummary {
                initial_f1: r.initial_f1,
                best_f1: r.best_f1,
                best_epoch: r.best_epoch,
                epochs_run: r.epochs_run,
                history: r.history,
            };
            emit(report.as_deref(), &to_json(&summary))
        }
        Command::Audit { embeddings, graphs, out } => {
            if embeddings.is_none() && graphs.is_none() {
                return Err(Error::Usage("audit needs --embeddings, --graphs or both".into()));
            }
            let spheres = match embeddings {
                Some(path) => {
                    let cache = formats::read_embeddings(path)?;
                    let head = pipeline::load_or_init_head(&cfg)?;
                    let r = pipeline::audit_embeddings(&cache, &head, cfg.audit_epsilon, cfg.audit_trials, cfg.seed)?;
                    Some(SphereAudit {
                        epsilon: cfg.audit_epsilon,
                        examined: r.examined,
                        qualifying: r.qualifying,
                        violations: r.violations,
                    })
                }
                None => None,
            };
            let graphs = match graphs {
                Some(dir) => pipeline::read_graphs(dir)?
                    .iter()
                    .map(|g| TransitivityAudit {
                        type_pair: g.type_pair().to_string(),
                        edges: g.edge_count(),
                        violations: g.soft_transitivity_violations(cfg.audit_epsilon).len(),
                    })
                    .collect(),
                None => Vec::new(),
            };
            emit(out.as_deref(), &to_json(&AuditSummary { spheres, graphs }))
        }
        Command::ExportFinetune { dataset, target, out } => {
            let mapper = pipeline::make_mapper(&cfg)?;
            let pairs = formats::load_dataset(dataset)?;
            let target = match target {
                Target::Generator => FinetuneTarget::Generator,
                Target::Weigher => FinetuneTarget::Weigher,
            };
            write_file(out, pipeline::export_finetune(&mapper, &pairs, target))
        }
        Command::MockServe { addr, workers } => {
            let handler = entgraph::http::mock_handler(MockBackend::new(cfg.seed, cfg.backend.embed_dim));
            let server = entgraph::http::StubServer::start(addr, *workers, handler)
                .map_err(|e| Error::Usage(format!("cannot listen on {addr}: {e}")))?;
            eprintln!("mock backend listening on {}", server.url());
            server.join();
            Ok(())
        }
        Command::Pipeline { seeds, dataset, work_dir } => {
            let report = pipeline::run_all(&cfg, seeds, dataset, work_dir)?;
            log::info!("{}: AUC-PR {:.4}, AUC-ROC {:.4}", report.dataset, report.auc_pr, report.auc_roc);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
