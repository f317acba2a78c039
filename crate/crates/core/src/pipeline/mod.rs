//! Config-driven end-to-end runs.
//!
//! A run executes the enabled steps in a fixed order, each writing into
//! `<output_dir>/<step>/`, and finishes with `manifest.json`: the echoed
//! config, input file hashes and a sha256 for every output file. A step that
//! fails has its directory moved under `quarantine/` and aborts the run.

mod config;

pub use config::{
    BenchConfig, EvalConfig, FormatConfig, HeldoutConfig, IngestConfig, PackConfig, PackFormat,
    PipelineConfig, PlanConfig, PoolConfig, Step,
};

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::{align_flores_extensions, flores_prompt, AlignmentInputs};
use crate::corpus::{carve_heldout, read_manifest, CorpusStore, Document, HeldoutSplit};
use crate::eval::{
    accuracy_with_stderr, byte_fallback_tokenize, byte_ppl_by_lang, corpus_bleu,
    render_eval_prompt, EvalReport, LogprobDump, SegmentPair, EOD,
};
use crate::instructions::{
    add_translation_instructions, render_chat, render_translation, BitextPool, ChatExample,
    ParallelPair,
};
use crate::lang::Lang;
use crate::sampler::{
    pack, proportional_allocate, sample_allocated, sample_categorical, unimax_allocate,
    write_packed_binary, write_packed_jsonl, Allocation, AllocationReport, Availability, DocIndex,
    Rational, SampleRun, SamplingMode,
};

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("missing seed: `{0}` must be set for a sampling step")]
    MissingSeed(String),
    #[error("`{field}` points to `{path}`, which does not exist")]
    MissingPath { field: String, path: String },
    #[error("step `{step}` failed: {source}")]
    Step {
        step: Step,
        #[source]
        source: BoxError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Name of the failing step, if a step failed.
    pub fn step(&self) -> Option<Step> {
        match self {
            Self::Step { step, .. } => Some(*step),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: Step,
    pub outputs: Vec<FileHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub steps: Vec<StepRecord>,
    /// sha256 over everything above.
    pub digest: String,
}

impl RunManifest {
    pub fn output(&self, path: &str) -> Option<&FileHash> {
        self.steps
            .iter()
            .flat_map(|s| &s.outputs)
            .find(|f| f.path == path)
    }
}

/// Per-pool planning result as written by the plan step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolPlan {
    pub pool: String,
    pub budget: u64,
    pub report: AllocationReport,
}

fn hash_file(root: &Path, path: &Path) -> Result<FileHash, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    Ok(FileHash {
        path: rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/"),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn hash_dir(root: &Path, dir: &Path) -> Result<Vec<FileHash>, PipelineError> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| PipelineError::io(&d, e))? {
            let p = entry.map_err(|e| PipelineError::io(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    files.iter().map(|f| hash_file(root, f)).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BoxError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Values handed from one step to the next.
#[derive(Default)]
struct RunState {
    store: Option<CorpusStore>,
    heldout: Vec<HeldoutSplit>,
    plans: Vec<(String, Allocation)>,
    samples: Vec<(String, SampleRun)>,
}

impl RunState {
    fn trainable(&self) -> Vec<&Document> {
        let held: HashSet<&str> = self
            .heldout
            .iter()
            .flat_map(|h| h.ids.iter().map(String::as_str))
            .collect();
        self.store
            .as_ref()
            .map(|s| {
                s.documents()
                    .iter()
                    .filter(|d| !held.contains(d.id.as_str()))
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Runs every enabled step and writes the manifest.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let root = config.output_root();
    fs::create_dir_all(&root).map_err(|e| PipelineError::io(&root, e))?;
    let mut state = RunState::default();
    let mut records = Vec::new();
    for step in config.enabled_steps() {
        let dir = root.join(step.name());
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        let started = Instant::now();
        tracing::info!(step = step.name(), "step started");
        if let Err(source) = run_step(step, config, &mut state, &dir) {
            tracing::error!(step = step.name(), error = %source, "step failed");
            quarantine(&root, step, &dir)?;
            return Err(PipelineError::Step { step, source });
        }
        let outputs = hash_dir(&root, &dir)?;
        tracing::info!(
            step = step.name(),
            files = outputs.len(),
            elapsed_ms = started.elapsed().as_millis() as u64,
            "step finished"
        );
        records.push(StepRecord { step, outputs });
    }

    let inputs = config
        .input_paths()
        .iter()
        .map(|(_, p)| hash_file(&config.base_dir, p))
        .collect::<Result<Vec<_>, _>>()?;
    let echoed = serde_json::to_value(config).expect("config serializes");
    let mut h = Sha256::new();
    h.update(
        serde_json::to_vec(&(&config.name, &echoed, &inputs, &records))
            .expect("manifest serializes"),
    );
    let manifest = RunManifest {
        name: config.name.clone(),
        config: echoed,
        inputs,
        steps: records,
        digest: hex::encode(h.finalize()),
    };
    let path = root.join("manifest.json");
    write_json(&path, &manifest).map_err(|e| PipelineError::Config(e.to_string()))?;
    tracing::info!(digest = %manifest.digest, "run complete");
    Ok(manifest)
}

fn quarantine(root: &Path, step: Step, dir: &Path) -> Result<(), PipelineError> {
    let q = root.join("quarantine");
    fs::create_dir_all(&q).map_err(|e| PipelineError::io(&q, e))?;
    let target = q.join(step.name());
    if target.exists() {
        fs::remove_dir_all(&target).map_err(|e| PipelineError::io(&target, e))?;
    }
    fs::rename(dir, &target).map_err(|e| PipelineError::io(dir, e))
}

fn run_step(
    step: Step,
    cfg: &PipelineConfig,
    state: &mut RunState,
    dir: &Path,
) -> Result<(), BoxError> {
    match step {
        Step::Ingest => ingest(cfg, state, dir),
        Step::Heldout => heldout(cfg, state, dir),
        Step::Plan => plan(cfg, state, dir),
        Step::Sample => sample(cfg, state, dir),
        Step::Pack => pack_step(cfg, state, dir),
        Step::Format => format(cfg, dir),
        Step::Bench => bench(cfg, dir),
        Step::Eval => eval(cfg, dir),
    }
}

fn ingest(cfg: &PipelineConfig, state: &mut RunState, dir: &Path) -> Result<(), BoxError> {
    let ic = cfg.ingest.as_ref().expect("validated");
    let sources = read_manifest(cfg.resolve(&ic.manifest))?;
    let mut store = CorpusStore::open(dir.join("corpus.jsonl"))?;
    let report = store.ingest(&sources)?;
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("stats.json"), &store.stats().rows())?;
    state.store = Some(store);
    Ok(())
}

fn heldout(cfg: &PipelineConfig, state: &mut RunState, dir: &Path) -> Result<(), BoxError> {
    let hc = cfg.heldout.as_ref().expect("validated");
    let seed = hc.seed.expect("validated");
    let store = state.store.as_ref().expect("ingest ran");
    for (&lang, &n) in &hc.documents {
        state.heldout.push(carve_heldout(store, lang, n, seed)?);
    }
    write_json(&dir.join("heldout.json"), &state.heldout)?;
    Ok(())
}

fn pool_budget(total: u64, share: Rational) -> u64 {
    (Rational::from_integer(total as i128) * share)
        .floor()
        .to_integer()
        .to_u64()
        .unwrap_or(u64::MAX)
}

fn plan(cfg: &PipelineConfig, state: &mut RunState, dir: &Path) -> Result<(), BoxError> {
    let pc = cfg.plan.as_ref().expect("validated");
    let trainable = state.trainable();
    let mut measured: BTreeMap<Lang, u64> = BTreeMap::new();
    for d in &trainable {
        *measured.entry(d.lang).or_default() += d.char_count;
    }
    let mut reports = Vec::new();
    for pool in &pc.pools {
        let budget = pool_budget(pc.budget, pool.share().expect("validated"));
        let available: BTreeMap<String, Availability> = pool
            .langs
            .iter()
            .map(|&l| {
                let a = pool
                    .available
                    .get(&l)
                    .copied()
                    .unwrap_or(Availability::Count(measured.get(&l).copied().unwrap_or(0)));
                (l.to_string(), a)
            })
            .collect();
        let allocation = match pool.mode {
            SamplingMode::Unimax => {
                unimax_allocate(&available, budget, pool.cap().expect("validated"))?
            }
            SamplingMode::Proportional => proportional_allocate(&available, budget)?,
            SamplingMode::Categorical => {
                // sampled directly from weights; nothing to plan
                continue;
            }
        };
        reports.push(PoolPlan {
            pool: pool.name.clone(),
            budget,
            report: allocation.report(),
        });
        state.plans.push((pool.name.clone(), allocation));
    }
    write_json(&dir.join("allocation.json"), &reports)?;
    Ok(())
}

#[derive(Serialize)]
struct SampleLine<'a> {
    pool: &'a str,
    id: &'a str,
    lang: Lang,
    epoch: u32,
}

fn sample(cfg: &PipelineConfig, state: &mut RunState, dir: &Path) -> Result<(), BoxError> {
    let pc = cfg.plan.as_ref().expect("validated");
    let index = DocIndex::from_documents(state.trainable());
    let mut consumption = BTreeMap::new();
    let mut samples = Vec::new();
    for pool in &pc.pools {
        let seed = pool.seed.expect("validated");
        let run = match pool.mode {
            SamplingMode::Categorical => {
                let budget = pool_budget(pc.budget, pool.share().expect("validated"));
                sample_categorical(
                    &index,
                    pool.weights.as_ref().expect("validated"),
                    budget,
                    pc.unit,
                    seed,
                )?
            }
            _ => {
                let (_, alloc) = state
                    .plans
                    .iter()
                    .find(|(n, _)| *n == pool.name)
                    .expect("planned");
                sample_allocated(&index, alloc, seed)?
            }
        };
        consumption.insert(pool.name.clone(), run.consumption.clone());
        samples.push((pool.name.clone(), run));
    }
    let mut out = String::new();
    for (pool, run) in &samples {
        for d in &run.docs {
            out.push_str(&serde_json::to_string(&SampleLine {
                pool,
                id: &d.id,
                lang: d.lang,
                epoch: d.epoch,
            })?);
            out.push('\n');
        }
    }
    fs::write(dir.join("sample.jsonl"), out)?;
    write_json(&dir.join("consumption.json"), &consumption)?;
    state.samples = samples;
    Ok(())
}

fn pack_step(cfg: &PipelineConfig, state: &mut RunState, dir: &Path) -> Result<(), BoxError> {
    let pc = cfg.pack.as_ref().expect("validated");
    let store = state.store.as_ref().expect("ingest ran");
    let mut docs = Vec::new();
    for (_, run) in &state.samples {
        for d in &run.docs {
            let doc = store
                .get(&d.id)
                .ok_or_else(|| format!("sampled id `{}` is not in the store", d.id))?;
            docs.push(byte_fallback_tokenize(&doc.text));
        }
    }
    let seqs = pack(&docs, pc.context_length, EOD)?;
    match pc.format {
        PackFormat::Binary => write_packed_binary(dir.join("train.bin"), &seqs)?,
        PackFormat::Jsonl => write_packed_jsonl(dir.join("train.jsonl"), &seqs)?,
    }
    let tokens: usize = seqs.iter().map(Vec::len).sum();
    write_json(
        &dir.join("summary.json"),
        &serde_json::json!({ "documents": docs.len(), "sequences": seqs.len(), "tokens": tokens, "context_length": pc.context_length }),
    )?;
    Ok(())
}

fn format(cfg: &PipelineConfig, dir: &Path) -> Result<(), BoxError> {
    let fc = cfg.format.as_ref().expect("validated");
    if let Some(bitext) = &fc.bitext {
        let pairs: Vec<ParallelPair> = crate::jsonl::read(cfg.resolve(bitext))?;
        let mut pool = BitextPool::new();
        for p in pairs {
            pool.entry(p.direction()).or_default().push((p.src, p.tgt));
        }
        let sample =
            add_translation_instructions(&pool, fc.per_direction, fc.seed.expect("validated"));
        let rendered = sample
            .pairs
            .iter()
            .map(render_translation)
            .collect::<Result<Vec<_>, _>>()?;
        crate::jsonl::write(dir.join("trinst.jsonl"), &rendered)?;
        write_json(
            &dir.join("trinst_counts.json"),
            &serde_json::json!({ "counts": sample.counts, "shortfalls": sample.shortfalls, "total": sample.total() }),
        )?;
    }
    if let Some(chats) = &fc.chats {
        let chats: Vec<ChatExample> = crate::jsonl::read(cfg.resolve(chats))?;
        let rendered = chats
            .iter()
            .map(render_chat)
            .collect::<Result<Vec<_>, _>>()?;
        crate::jsonl::write(dir.join("chat.jsonl"), &rendered)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PromptLine<'a> {
    id: &'a str,
    kind: &'a str,
    lang: Lang,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<Lang>,
    prompt: String,
}

fn bench(cfg: &PipelineConfig, dir: &Path) -> Result<(), BoxError> {
    let bc = cfg.bench.as_ref().expect("validated");
    let path = cfg.resolve(&bc.alignment);
    let inputs: AlignmentInputs = serde_json::from_slice(&fs::read(&path)?)?;
    let set = align_flores_extensions(&inputs)?;
    crate::jsonl::write(dir.join("aligned.jsonl"), &set.items)?;
    write_json(&dir.join("counts.json"), &set.counts)?;
    let mut prompts = Vec::new();
    for item in &set.items {
        if let Some(input) = item.prompt_input() {
            prompts.push(PromptLine {
                id: item_id(item),
                kind: item.kind(),
                lang: item.lang(),
                target: None,
                prompt: render_eval_prompt(&input, bc.prompt_mode, &[])?,
            });
        }
    }
    for dir_pair in &bc.directions {
        for item in set
            .items
            .iter()
            .filter(|i| i.kind() == "flores" && i.lang() == dir_pair.first)
        {
            let input = flores_prompt(item, dir_pair.second).expect("flores item");
            prompts.push(PromptLine {
                id: item_id(item),
                kind: "flores",
                lang: dir_pair.first,
                target: Some(dir_pair.second),
                prompt: render_eval_prompt(&input, bc.prompt_mode, &[])?,
            });
        }
    }
    crate::jsonl::write(dir.join("prompts.jsonl"), &prompts)?;
    Ok(())
}

fn item_id(item: &crate::bench::AlignedBenchItem) -> &str {
    use crate::bench::AlignedBenchItem::*;
    match item {
        Flores { id, .. } | Sib { id, .. } | Belebele { id, .. } => id,
    }
}

#[derive(Deserialize)]
struct ScoreLine {
    task: String,
    score: f64,
}

fn eval(cfg: &PipelineConfig, dir: &Path) -> Result<(), BoxError> {
    let ec = cfg.eval.as_ref().expect("validated");
    let mut reports: Vec<EvalReport> = Vec::new();
    if let Some(mt) = &ec.mt {
        let segs: Vec<SegmentPair> = crate::jsonl::read(cfg.resolve(mt))?;
        let bleu = corpus_bleu(&segs)?;
        reports.push(EvalReport {
            metric: "bleu".into(),
            score: bleu.score,
            stderr: 0.0,
            n: segs.len(),
            config: serde_json::json!({ "tokenize": "13a", "smooth": "exp", "precisions": bleu.precisions, "bp": bleu.bp }),
        });
    }
    if let Some(lp) = &ec.logprobs {
        let dumps: Vec<LogprobDump> = crate::jsonl::read(cfg.resolve(lp))?;
        for (lang, ppl) in byte_ppl_by_lang(&dumps)? {
            reports.push(EvalReport {
                metric: format!("byte_ppl.{lang}"),
                score: ppl,
                stderr: 0.0,
                n: dumps.iter().filter(|d| d.lang == lang).count(),
                config: serde_json::Value::Null,
            });
        }
    }
    if let Some(sc) = &ec.scores {
        let lines: Vec<ScoreLine> = crate::jsonl::read(cfg.resolve(sc))?;
        let mut by_task: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for l in &lines {
            by_task.entry(&l.task).or_default().push(l.score);
        }
        for (task, scores) in by_task {
            let mut r =
                accuracy_with_stderr(&scores, ec.bootstrap_iters, ec.seed.expect("validated"))?;
            r.metric = format!("accuracy.{task}");
            reports.push(r);
        }
    }
    write_json(&dir.join("report.json"), &reports)?;
    Ok(())
}

/// Loads a config file and runs it.
pub fn run_config_file(path: impl AsRef<Path>) -> Result<RunManifest, PipelineError> {
    run_pipeline(&PipelineConfig::load(path)?)
}

/// Path of the manifest a config writes.
pub fn manifest_path(config: &PipelineConfig) -> PathBuf {
    config.output_root().join("manifest.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        fs::write(dir.join(name), text).unwrap();
    }

    fn fixture(dir: &Path) -> String {
        let liv: String = (0..40)
            .map(|i| format!("Līvõ rāndaliz {i} jelābõd.\n"))
            .collect();
        let et: String = (0..60)
            .map(|i| format!("Eesti keele lause number {i} on siin.\n\n"))
            .collect();
        write(dir, "liv.txt", &liv);
        write(dir, "et.txt", &et);
        write(
            dir,
            "sources.toml",
            "[[source]]\npath = \"liv.txt\"\nlang = \"liv\"\nsource = \"liv-sent\"\ngranularity = \"sentence\"\n\n\
             [[source]]\npath = \"et.txt\"\nlang = \"et\"\nsource = \"et-web\"\ngranularity = \"document\"\n",
        );
        r#"
name = "unit"
output_dir = "out"

[ingest]
manifest = "sources.toml"

[heldout]
seed = 5
documents = { liv = 4 }

[plan]
budget = 4000

[[plan.pool]]
name = "xlr"
mode = "unimax"
share = "1/2"
cap = "4"
langs = ["liv"]
seed = 1

[[plan.pool]]
name = "support"
mode = "unimax"
share = "1/2"
cap = "4"
langs = ["et"]
seed = 2

[pack]
context_length = 256
"#
        .to_string()
    }

    #[test]
    fn identical_runs_identical_manifests() {
        let dir = tempfile::tempdir().unwrap();
        let text = fixture(dir.path());
        let cfg = PipelineConfig::from_toml(&text, dir.path()).unwrap();
        let a = run_pipeline(&cfg).unwrap();
        let b = run_pipeline(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.output("pack/train.bin").is_some());
        assert!(a.output("sample/sample.jsonl").is_some());
        let on_disk: RunManifest =
            serde_json::from_slice(&fs::read(manifest_path(&cfg)).unwrap()).unwrap();
        assert_eq!(on_disk.digest, a.digest);
    }

    #[test]
    fn missing_seed_names_field() {
        let dir = tempfile::tempdir().unwrap();
        let text = fixture(dir.path()).replace("seed = 2\n", "");
        let err = PipelineConfig::from_toml(&text, dir.path()).unwrap_err();
        assert!(err.to_string().contains("plan.pool.support.seed"), "{err}");
        let text = fixture(dir.path()).replace("seed = 5\n", "");
        let err = PipelineConfig::from_toml(&text, dir.path()).unwrap_err();
        assert!(err.to_string().contains("heldout.seed"), "{err}");
    }

    #[test]
    fn missing_input_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let text = fixture(dir.path()).replace("sources.toml", "nope.toml");
        let err = PipelineConfig::from_toml(&text, dir.path()).unwrap_err();
        assert!(
            matches!(err, PipelineError::MissingPath { ref field, .. } if field == "ingest.manifest")
        );
    }

    #[test]
    fn failing_step_is_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        // more held-out documents than exist
        let text = fixture(dir.path()).replace("liv = 4", "liv = 400");
        let cfg = PipelineConfig::from_toml(&text, dir.path()).unwrap();
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.step(), Some(Step::Heldout));
        assert!(dir.path().join("out/quarantine/heldout").is_dir());
        assert!(!dir.path().join("out/heldout").exists());
    }

    #[test]
    fn plan_only_with_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"
name = "plan"
output_dir = "out"

[plan]
budget = 3000

[[plan.pool]]
name = "p"
mode = "unimax"
cap = "1"
langs = ["liv", "en"]
available = { liv = 100, en = "uncapped" }
"#;
        let cfg = PipelineConfig::from_toml(text, dir.path()).unwrap();
        assert_eq!(cfg.enabled_steps(), vec![Step::Plan]);
        run_pipeline(&cfg).unwrap();
        let plans: Vec<PoolPlan> =
            serde_json::from_slice(&fs::read(dir.path().join("out/plan/allocation.json")).unwrap())
                .unwrap();
        assert_eq!(plans[0].report.allocations["liv"].allocated, 100);
        assert_eq!(plans[0].report.allocations["en"].allocated, 2900);
    }
}
