use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xlr_forge::annotation::{self, AnnotationConfig, AnnotationStore, GroupKey};
use xlr_forge::bench::{self, AlignmentInputs, CurationState, Embedding, MtBenchItem};
use xlr_forge::corpus::{self, CorpusStore};
use xlr_forge::eval::{self, EmbeddingMatrix, LogprobDump, PromptInput, PromptMode, SegmentPair};
use xlr_forge::instructions::{
    self, BitextPool, ChatExample, MixtureSpec, ParallelPair, TranslatedInstruction,
};
use xlr_forge::jsonl;
use xlr_forge::pipeline;
use xlr_forge::sampler::{self, parse_rational, Availability, ParallelBudget};
use xlr_forge::{Lang, LangPair};

/// Data-mixture planning, instruction formatting, benchmark construction and
/// evaluation for extremely low-resource language models.
#[derive(Parser)]
#[command(name = "forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pipeline config end to end and print its manifest digest.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Document store: ingest, statistics, held-out splits.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Budget planning over languages or language pairs.
    #[command(subcommand)]
    Sampler(SamplerCmd),
    /// Instruction formatting and mixtures.
    #[command(subcommand)]
    Instr(InstrCmd),
    /// Benchmark curation and FLORES alignment.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Metrics and evaluation prompts.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Human-evaluation service and reports.
    #[command(subcommand)]
    Annotate(AnnotateCmd),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Ingest the sources listed in a TOML manifest into a store.
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Per (language, source) counts.
    Stats {
        #[arg(long)]
        store: PathBuf,
    },
    /// Reserve documents of one language for validation.
    Heldout {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        lang: Lang,
        #[arg(long)]
        documents: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    budget: u64,
    /// `key=count` or `key=uncapped`, repeatable.
    #[arg(long = "available", value_name = "KEY=N", required = true)]
    available: Vec<String>,
}

#[derive(Subcommand)]
enum SamplerCmd {
    /// Unimax allocation with an epoch cap.
    Unimax {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value = "4")]
        cap: String,
    },
    /// Allocation proportional to availability.
    Proportional {
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Unimax over language pairs in sentence pairs; keys are pairs like `kpv-ru`.
    Pairs {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value = "1")]
        cap: String,
    },
}

#[derive(Subcommand)]
enum InstrCmd {
    /// Render chat examples (JSON lines) with loss spans.
    Render {
        #[arg(long)]
        input: PathBuf,
    },
    /// Sample translation instructions from bitext.
    Trinst {
        #[arg(long)]
        bitext: PathBuf,
        #[arg(long, default_value_t = instructions::TRINST_PER_DIRECTION)]
        per_direction: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Build an instruction mixture; datasets are `name=path.jsonl`.
    Mixture {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "dataset", value_name = "NAME=PATH")]
        datasets: Vec<String>,
        #[arg(long)]
        csv: bool,
    },
    /// Drop machine translations that copy the original.
    CopyFilter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = instructions::COPY_BLEU_THRESHOLD)]
        threshold: f64,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Filter chat logs to short two-turn English candidates.
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = bench::MAX_USER_TOKENS)]
        max_user_tokens: u32,
    },
    /// Run (or resume) clustering rounds and write the review worklist.
    Curate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.95,0.9,0.85")]
        thresholds: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        min_size: usize,
        /// Reviewed worklist to apply before continuing.
        #[arg(long)]
        review: Option<PathBuf>,
    },
    /// Pick the final items per category.
    Finalize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = bench::PER_CATEGORY)]
        per_category: usize,
    },
    /// Build target-language test sets from FLORES translations.
    Align {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Corpus BLEU over `{candidate, references}` lines.
    Bleu {
        #[arg(long)]
        input: PathBuf,
    },
    /// Byte perplexity per language from log-probability dumps.
    Ppl {
        #[arg(long)]
        input: PathBuf,
    },
    /// Linear CKA between two embedding matrices.
    Cka {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Mean and bootstrap standard error of 0/1 scores, one per line.
    Accuracy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = eval::DEFAULT_BOOTSTRAP_ITERS)]
        iters: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Render an evaluation prompt from a JSON prompt input.
    Prompt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "pretrained")]
        mode: PromptMode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Ratings,
    Pairwise,
    Qe,
    Collection,
}

#[derive(Subcommand)]
enum AnnotateCmd {
    /// Serve the annotation API.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "annotation-events.jsonl")]
        log: PathBuf,
    },
    /// Print a report from the event log.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "annotation-events.jsonl")]
        log: PathBuf,
        #[arg(long, value_enum)]
        kind: ReportKind,
        #[arg(long, default_value = "lang,model")]
        group_by: String,
        #[arg(long)]
        csv: bool,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn parse_available(items: &[String]) -> Result<BTreeMap<String, Availability>> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| anyhow!("expected KEY=N, got `{s}`"))?;
            let a = if v == "uncapped" {
                Availability::Unbounded
            } else {
                Availability::Count(v.parse().with_context(|| format!("bad count in `{s}`"))?)
            };
            Ok((k.to_owned(), a))
        })
        .collect()
}

fn rational(s: &str) -> Result<sampler::Rational> {
    parse_rational(s).ok_or_else(|| anyhow!("not a number: `{s}`"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).with_context(|| path.display().to_string())?;
    serde_json::from_slice(&bytes).with_context(|| path.display().to_string())
}

fn corpus(cmd: CorpusCmd) -> Result<()> {
    match cmd {
        CorpusCmd::Ingest { manifest, store } => {
            let sources = corpus::read_manifest(manifest)?;
            let mut store = CorpusStore::open(store)?;
            print_json(&store.ingest(&sources)?)
        }
        CorpusCmd::Stats { store } => print_json(&CorpusStore::open(store)?.stats().rows()),
        CorpusCmd::Heldout {
            store,
            lang,
            documents,
            seed,
        } => print_json(&corpus::carve_heldout(
            &CorpusStore::open(store)?,
            lang,
            documents,
            seed,
        )?),
    }
}

fn sampler(cmd: SamplerCmd) -> Result<()> {
    match cmd {
        SamplerCmd::Unimax { plan, cap } => {
            let a = sampler::unimax_allocate(
                &parse_available(&plan.available)?,
                plan.budget,
                rational(&cap)?,
            )?;
            print_json(&a.report())
        }
        SamplerCmd::Proportional { plan } => print_json(
            &sampler::proportional_allocate(&parse_available(&plan.available)?, plan.budget)?
                .report(),
        ),
        SamplerCmd::Pairs { plan, cap } => {
            let avail = parse_available(&plan.available)?
                .into_iter()
                .map(|(k, v)| Ok((k.parse::<LangPair>()?, v)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let pa = sampler::pair_allocate(
                &avail,
                ParallelBudget::Sentences(plan.budget),
                rational(&cap)?,
            )?;
            print_json(
                &serde_json::json!({ "allocation": pa.allocation.report(), "directions": pa.directions }),
            )
        }
    }
}

fn instr(cmd: InstrCmd) -> Result<()> {
    match cmd {
        InstrCmd::Render { input } => {
            let chats: Vec<ChatExample> = jsonl::read(input)?;
            for c in &chats {
                println!("{}", serde_json::to_string(&instructions::render_chat(c)?)?);
            }
            Ok(())
        }
        InstrCmd::Trinst {
            bitext,
            per_direction,
            seed,
        } => {
            let mut pool = BitextPool::new();
            for p in jsonl::read::<ParallelPair>(bitext)? {
                pool.entry(p.direction()).or_default().push((p.src, p.tgt));
            }
            let sample = instructions::add_translation_instructions(&pool, per_direction, seed);
            for p in &sample.pairs {
                println!(
                    "{}",
                    serde_json::to_string(&instructions::render_translation(p)?)?
                );
            }
            eprintln!(
                "{}",
                serde_json::json!({ "total": sample.total(), "shortfalls": sample.shortfalls })
            );
            Ok(())
        }
        InstrCmd::Mixture {
            spec,
            datasets,
            csv,
        } => {
            let spec = MixtureSpec::from_toml(
                &fs::read_to_string(&spec).with_context(|| spec.display().to_string())?,
            )?;
            let mut data = BTreeMap::new();
            for d in &datasets {
                let (name, path) = d
                    .split_once('=')
                    .ok_or_else(|| anyhow!("expected NAME=PATH, got `{d}`"))?;
                data.insert(name.to_owned(), jsonl::read::<ChatExample>(path)?);
            }
            let mix = instructions::build_mixture(&spec, &data)?;
            if csv {
                print!("{}", mix.report.to_csv());
            } else {
                for e in &mix.examples {
                    println!("{}", serde_json::to_string(e)?);
                }
            }
            Ok(())
        }
        InstrCmd::CopyFilter { input, threshold } => {
            let items: Vec<TranslatedInstruction> = jsonl::read(input)?;
            let out = instructions::filter_copied_translations(items, threshold);
            for k in &out.kept {
                println!("{}", serde_json::to_string(k)?);
            }
            eprintln!(
                "{}",
                serde_json::json!({ "kept": out.kept.len(), "dropped": out.dropped.len() })
            );
            Ok(())
        }
    }
}

fn bench(cmd: BenchCmd) -> Result<()> {
    match cmd {
        BenchCmd::Filter {
            input,
            max_user_tokens,
        } => {
            for c in bench::filter_candidates(&jsonl::read(input)?, max_user_tokens)? {
                println!("{}", serde_json::to_string(&c)?);
            }
            Ok(())
        }
        BenchCmd::Curate {
            embeddings,
            state,
            thresholds,
            min_size,
            review,
        } => {
            let embs: Vec<Embedding> = jsonl::read(embeddings)?;
            let mut st = if state.exists() {
                CurationState::load(&state)?
            } else {
                CurationState::new(embs.iter().map(|e| e.id.clone()), thresholds, min_size)?
            };
            if let Some(r) = review {
                st.apply_review(&bench::read_worklist_tsv(&fs::read_to_string(&r)?)?)?;
            }
            let map: HashMap<String, Vec<f64>> = embs.into_iter().map(|e| (e.id, e.vec)).collect();
            let round = st.step(&map)?.map(|r| r.round);
            st.save(&state)?;
            match round {
                Some(r) => {
                    let texts: HashMap<String, String> =
                        map.keys().map(|k| (k.clone(), k.clone())).collect();
                    print!("{}", bench::write_worklist_tsv(&st.worklist(r, &texts)));
                }
                None => print_json(&st.kept_representatives())?,
            }
            Ok(())
        }
        BenchCmd::Finalize {
            input,
            per_category,
        } => {
            let items: Vec<MtBenchItem> = jsonl::read(input)?;
            let b = bench::finalize_benchmark(&items, per_category)?;
            for i in &b.items {
                println!("{}", serde_json::to_string(i)?);
            }
            eprintln!("{}", serde_json::to_string(&b.manifest)?);
            Ok(())
        }
        BenchCmd::Align { input } => {
            let set = bench::align_flores_extensions(&read_json::<AlignmentInputs>(&input)?)?;
            for i in &set.items {
                println!("{}", serde_json::to_string(i)?);
            }
            eprintln!("{}", serde_json::to_string(&set.counts)?);
            Ok(())
        }
    }
}

fn eval_cmd(cmd: EvalCmd) -> Result<()> {
    match cmd {
        EvalCmd::Bleu { input } => {
            print_json(&eval::corpus_bleu(&jsonl::read::<SegmentPair>(input)?)?)
        }
        EvalCmd::Ppl { input } => print_json(&eval::byte_ppl_by_lang(
            &jsonl::read::<LogprobDump>(input)?,
        )?),
        EvalCmd::Cka { a, b } => {
            let x = read_json::<EmbeddingMatrix>(&a)?.to_matrix()?;
            let y = read_json::<EmbeddingMatrix>(&b)?.to_matrix()?;
            print_json(&serde_json::json!({ "cka": eval::linear_cka(&x, &y)? }))
        }
        EvalCmd::Accuracy { input, iters, seed } => {
            let text = fs::read_to_string(&input).with_context(|| input.display().to_string())?;
            let scores = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    l.trim()
                        .parse::<f64>()
                        .with_context(|| format!("not a score: `{l}`"))
                })
                .collect::<Result<Vec<_>>>()?;
            print_json(&eval::accuracy_with_stderr(&scores, iters, seed)?)
        }
        EvalCmd::Prompt { input, mode } => {
            print!(
                "{}",
                eval::render_eval_prompt(&read_json::<PromptInput>(&input)?, mode, &[])?
            );
            Ok(())
        }
    }
}

fn annotate(cmd: AnnotateCmd) -> Result<()> {
    match cmd {
        AnnotateCmd::Serve {
            config,
            port,
            host,
            log,
        } => {
            let store = AnnotationStore::open(AnnotationConfig::load(config)?, log)?;
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            annotation::serve(Arc::new(Mutex::new(store)), addr)?;
            Ok(())
        }
        AnnotateCmd::Report {
            config,
            log,
            kind,
            group_by,
            csv,
        } => {
            let cfg = AnnotationConfig::load(config)?;
            if !log.exists() {
                bail!("event log {} does not exist", log.display());
            }
            let state = annotation::replay(&log)?;
            match kind {
                ReportKind::Ratings => {
                    let rows = annotation::aggregate_ratings(
                        &cfg,
                        &state,
                        &GroupKey::parse_list(&group_by)?,
                    );
                    if csv {
                        print!("{}", annotation::ratings_csv(&rows));
                        Ok(())
                    } else {
                        print_json(&rows)
                    }
                }
                ReportKind::Pairwise => {
                    let rows = cfg
                        .pairwise
                        .iter()
                        .map(|t| annotation::pairwise_report(&cfg, &state, &t.id))
                        .collect::<Result<Vec<_>, _>>()?;
                    if csv {
                        print!("{}", annotation::pairwise_csv(&rows));
                        Ok(())
                    } else {
                        print_json(&rows)
                    }
                }
                ReportKind::Qe => {
                    let rows = annotation::qe_summary(&state);
                    if csv {
                        print!("{}", annotation::qe_csv(&rows));
                        Ok(())
                    } else {
                        print_json(&rows)
                    }
                }
                ReportKind::Collection => {
                    let rows = annotation::collection_stats(&cfg, &state);
                    if csv {
                        print!("{}", annotation::collection_csv(&rows));
                        Ok(())
                    } else {
                        print_json(&rows)
                    }
                }
            }
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => pipeline::run_config_file(&config)
            .map_err(anyhow::Error::from)
            .and_then(|m| print_json(&serde_json::json!({ "name": m.name, "digest": m.digest, "steps": m.steps.len() }))),
        Command::Corpus(c) => corpus(c),
        Command::Sampler(c) => sampler(c),
        Command::Instr(c) => instr(c),
        Command::Bench(c) => bench(c),
        Command::Eval(c) => eval_cmd(c),
        Command::Annotate(c) => annotate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!(error = format!("{e:#}"), "command failed");
            ExitCode::FAILURE
        }
    }
}
