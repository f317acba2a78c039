//! Build an instruction-tuning mixture from several sources and add sampled
//! translation instructions from bitext.
//!
//!     cargo run -p xlr-forge --example instruction_mixture

use std::collections::BTreeMap;
use std::path::Path;

use xlr_forge::instructions::{
    add_translation_instructions, build_mixture, BitextPool, ChatExample, MixtureSpec, ParallelPair,
};
use xlr_forge::jsonl;

const SPEC: &str = r#"
seed = 7
[[item]]
dataset = "mini"
lang = "vro"
count = 5
[[item]]
dataset = "mini"
lang = "liv"
count = 5
[[item]]
dataset = "mini"
lang = "kpv"
count = 5
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mini = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini");
    let chats: Vec<ChatExample> = jsonl::read(mini.join("chats.jsonl"))?;
    let datasets = BTreeMap::from([("mini".to_string(), chats)]);
    let mix = build_mixture(&MixtureSpec::from_toml(SPEC)?, &datasets)?;
    print!("{}", mix.report.to_csv());

    let bitext: Vec<ParallelPair> = jsonl::read(mini.join("bitext.jsonl"))?;
    let mut pool = BitextPool::new();
    for p in bitext {
        let pair = xlr_forge::LangPair::new(p.src_lang, p.tgt_lang);
        pool.entry(pair).or_default().push((p.src, p.tgt));
    }
    let trinst = add_translation_instructions(&pool, 10, 7);
    for (pair, c) in &trinst.counts {
        println!("{pair}: {} forward, {} backward", c.forward, c.backward);
    }
    println!("{} translation instructions", trinst.total());
    Ok(())
}
