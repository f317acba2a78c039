use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::eval::PromptMode;
use crate::lang::{Lang, LangPair};
use crate::sampler::{parse_rational, Availability, BudgetUnit, Rational, SamplingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Ingest,
    Heldout,
    Plan,
    Sample,
    Pack,
    Format,
    Bench,
    Eval,
}

impl Step {
    pub const ORDER: [Step; 8] = [
        Step::Ingest,
        Step::Heldout,
        Step::Plan,
        Step::Sample,
        Step::Pack,
        Step::Format,
        Step::Bench,
        Step::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Step::Ingest => "ingest",
            Step::Heldout => "heldout",
            Step::Plan => "plan",
            Step::Sample => "sample",
            Step::Pack => "pack",
            Step::Format => "format",
            Step::Bench => "bench",
            Step::Eval => "eval",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    /// TOML list of `[[source]]` tables.
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeldoutConfig {
    pub seed: Option<u64>,
    /// Documents to reserve per language.
    pub documents: BTreeMap<Lang, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    pub name: String,
    pub mode: SamplingMode,
    /// Fraction of the plan budget, e.g. `"1/2"` or `"0.5"`.
    #[serde(default = "whole")]
    pub share: String,
    /// Epoch cap for Unimax.
    pub cap: Option<String>,
    pub langs: Vec<Lang>,
    /// Categorical draw probabilities.
    pub weights: Option<BTreeMap<Lang, f64>>,
    /// Planning-only availability overrides, a count or `"uncapped"`.
    #[serde(default)]
    pub available: BTreeMap<Lang, Availability>,
    pub seed: Option<u64>,
}

fn whole() -> String {
    "1".into()
}

impl PoolConfig {
    pub fn share(&self) -> Option<Rational> {
        parse_rational(&self.share)
            .filter(|r| *r > Rational::from_integer(0) && *r <= Rational::from_integer(1))
    }

    pub fn cap(&self) -> Option<Rational> {
        self.cap.as_deref().and_then(parse_rational)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub budget: u64,
    #[serde(default = "characters")]
    pub unit: BudgetUnit,
    #[serde(rename = "pool")]
    pub pools: Vec<PoolConfig>,
}

fn characters() -> BudgetUnit {
    BudgetUnit::Characters
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackFormat {
    Binary,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackConfig {
    pub context_length: usize,
    #[serde(default = "binary")]
    pub format: PackFormat,
}

fn binary() -> PackFormat {
    PackFormat::Binary
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormatConfig {
    /// JSON lines of `{src_lang, tgt_lang, src, tgt}`.
    pub bitext: Option<PathBuf>,
    #[serde(default)]
    pub per_direction: usize,
    /// JSON lines of chat examples to render as-is.
    pub chats: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// JSON alignment inputs.
    pub alignment: PathBuf,
    #[serde(default = "pretrained")]
    pub prompt_mode: PromptMode,
    /// Translation directions to render FLORES prompts for, e.g. `"vro-et"`.
    #[serde(default)]
    pub directions: Vec<LangPair>,
}

fn pretrained() -> PromptMode {
    PromptMode::Pretrained
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// JSON lines of `{candidate, references}`.
    pub mt: Option<PathBuf>,
    /// JSON lines of per-document token log-probabilities.
    pub logprobs: Option<PathBuf>,
    /// JSON lines of `{task, score}` with 0/1 scores.
    pub scores: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default = "iters")]
    pub bootstrap_iters: usize,
}

fn iters() -> usize {
    crate::eval::DEFAULT_BOOTSTRAP_ITERS
}

/// One run. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub name: String,
    pub output_dir: PathBuf,
    /// Steps to run; defaults to every configured section.
    pub steps: Option<Vec<Step>>,
    pub ingest: Option<IngestConfig>,
    pub heldout: Option<HeldoutConfig>,
    pub plan: Option<PlanConfig>,
    pub pack: Option<PackConfig>,
    pub format: Option<FormatConfig>,
    pub bench: Option<BenchConfig>,
    pub eval: Option<EvalConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        let mut cfg: Self =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new("")).to_owned())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_root(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Enabled steps in execution order. `sample` has no section of its own
    /// and runs whenever `plan` does and a corpus is ingested.
    pub fn enabled_steps(&self) -> Vec<Step> {
        let configured = |s: Step| match s {
            Step::Ingest => self.ingest.is_some(),
            Step::Heldout => self.heldout.is_some(),
            Step::Plan => self.plan.is_some(),
            Step::Sample => self.plan.is_some() && self.ingest.is_some(),
            Step::Pack => self.pack.is_some(),
            Step::Format => self.format.is_some(),
            Step::Bench => self.bench.is_some(),
            Step::Eval => self.eval.is_some(),
        };
        let chosen: BTreeSet<Step> = match &self.steps {
            Some(s) => s.iter().copied().collect(),
            None => Step::ORDER.into_iter().filter(|&s| configured(s)).collect(),
        };
        Step::ORDER
            .into_iter()
            .filter(|s| chosen.contains(s))
            .collect()
    }

    /// Input files the run reads, by config field.
    pub fn input_paths(&self) -> Vec<(String, PathBuf)> {
        let mut out = Vec::new();
        let steps = self.enabled_steps();
        let mut add = |field: &str, p: &Option<PathBuf>| {
            if let Some(p) = p {
                out.push((field.to_owned(), self.resolve(p)));
            }
        };
        if steps.contains(&Step::Ingest) {
            add(
                "ingest.manifest",
                &self.ingest.as_ref().map(|i| i.manifest.clone()),
            );
        }
        if steps.contains(&Step::Format) {
            let f = self.format.as_ref();
            add("format.bitext", &f.and_then(|f| f.bitext.clone()));
            add("format.chats", &f.and_then(|f| f.chats.clone()));
        }
        if steps.contains(&Step::Bench) {
            add(
                "bench.alignment",
                &self.bench.as_ref().map(|b| b.alignment.clone()),
            );
        }
        if steps.contains(&Step::Eval) {
            let e = self.eval.as_ref();
            add("eval.mt", &e.and_then(|e| e.mt.clone()));
            add("eval.logprobs", &e.and_then(|e| e.logprobs.clone()));
            add("eval.scores", &e.and_then(|e| e.scores.clone()));
        }
        out
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let steps = self.enabled_steps();
        let has = |s: Step| steps.contains(&s);
        let bad = |m: String| Err(PipelineError::Config(m));
        let section = |s: Step, present: bool| {
            if has(s) && !present {
                Err(PipelineError::Config(format!(
                    "step `{s}` is enabled but has no [{s}] section"
                )))
            } else {
                Ok(())
            }
        };
        section(Step::Ingest, self.ingest.is_some())?;
        section(Step::Heldout, self.heldout.is_some())?;
        section(Step::Plan, self.plan.is_some())?;
        section(Step::Sample, self.plan.is_some())?;
        section(Step::Pack, self.pack.is_some())?;
        section(Step::Format, self.format.is_some())?;
        section(Step::Bench, self.bench.is_some())?;
        section(Step::Eval, self.eval.is_some())?;
        for (step, needs) in [
            (Step::Heldout, Step::Ingest),
            (Step::Sample, Step::Ingest),
            (Step::Sample, Step::Plan),
            (Step::Pack, Step::Sample),
        ] {
            if has(step) && !has(needs) {
                return bad(format!("step `{step}` needs step `{needs}`"));
            }
        }

        if has(Step::Heldout) && self.heldout.as_ref().is_some_and(|h| h.seed.is_none()) {
            return Err(PipelineError::MissingSeed("heldout.seed".into()));
        }
        if let Some(plan) = self.plan.as_ref().filter(|_| has(Step::Plan)) {
            if plan.budget == 0 {
                return bad("plan.budget must be positive".into());
            }
            if plan.pools.is_empty() {
                return bad("plan needs at least one [[plan.pool]]".into());
            }
            let mut names = BTreeSet::new();
            for p in &plan.pools {
                let field = |f: &str| format!("plan.pool.{}.{f}", p.name);
                if !names.insert(&p.name) {
                    return bad(format!("duplicate pool `{}`", p.name));
                }
                if p.langs.is_empty() {
                    return bad(format!("{} is empty", field("langs")));
                }
                if p.share().is_none() {
                    return bad(format!(
                        "{} must be in (0, 1], got `{}`",
                        field("share"),
                        p.share
                    ));
                }
                match p.mode {
                    SamplingMode::Unimax if p.cap().is_none() => {
                        return bad(format!("{} is required for unimax", field("cap")));
                    }
                    SamplingMode::Categorical if p.weights.is_none() => {
                        return bad(format!("{} is required for categorical", field("weights")));
                    }
                    _ => {}
                }
                if p.mode != SamplingMode::Categorical && plan.unit != BudgetUnit::Characters {
                    return bad(format!(
                        "pool `{}`: only character budgets can be planned per language",
                        p.name
                    ));
                }
                if has(Step::Sample) && p.seed.is_none() {
                    return Err(PipelineError::MissingSeed(field("seed")));
                }
            }
        }
        if let Some(pack) = self.pack.as_ref().filter(|_| has(Step::Pack)) {
            if pack.context_length < 2 {
                return bad("pack.context_length must be at least 2".into());
            }
        }
        if let Some(f) = self.format.as_ref().filter(|_| has(Step::Format)) {
            if f.bitext.is_some() && f.seed.is_none() {
                return Err(PipelineError::MissingSeed("format.seed".into()));
            }
        }
        if let Some(e) = self.eval.as_ref().filter(|_| has(Step::Eval)) {
            if e.scores.is_some() && e.seed.is_none() {
                return Err(PipelineError::MissingSeed("eval.seed".into()));
            }
        }
        for (field, path) in self.input_paths() {
            if !path.is_file() {
                return Err(PipelineError::MissingPath {
                    field,
                    path: path.display().to_string(),
                });
            }
        }
        Ok(())
    }
}
