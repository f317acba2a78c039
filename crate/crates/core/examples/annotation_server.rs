//! Start the annotation service on an ephemeral port, collect a few ratings
//! over HTTP and read the reports.
//!
//!     cargo run -p xlr-forge --example annotation_server

use std::sync::{Arc, Mutex};

use serde_json::{json, Value};
use xlr_forge::annotation::{spawn, AnnotationConfig, AnnotationStore};

const CONFIG: &str = r#"
seed = 1

[[survey]]
id = "vro"
lang = "vro"
models = ["base", "tuned"]

[[survey.questions]]
id = "q1"
category = "general"
text = "Kuis sa elät?"
answers = { base = "Hää.", tuned = "Hää, aitäh küsümäst!" }

[[survey.questions]]
id = "q2"
category = "writing"
text = "Kirota lühikene luuletus."
answers = { base = "Mets.", tuned = "Mets om vaikne, tuul om tasane." }
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = AnnotationConfig::from_toml(CONFIG)?;
    let store = AnnotationStore::open(config, dir.path().join("events.jsonl"))?;
    let server = spawn(Arc::new(Mutex::new(store)), "127.0.0.1:0".parse()?)?;
    let url = server.url();
    println!("listening on {url}");

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    for annotator in ["anon-1", "anon-2"] {
        loop {
            let next: Value = agent
                .get(format!("{url}/survey/vro/next?annotator={annotator}"))
                .call()?
                .body_mut()
                .read_json()?;
            if next["done"] == true {
                break;
            }
            // the assignment shows an answer but never the model behind it
            let a = &next["assignment"];
            println!("{annotator} rates {}: {}", a["question_id"], a["answer"]);
            let body = json!({
                "v": 1,
                "annotator": annotator,
                "question_id": a["question_id"],
                "helpfulness": 4,
                "naturalness": 3,
            });
            agent
                .post(format!("{url}/survey/vro/rating"))
                .send_json(body)?;
        }
    }

    let blocked = agent
        .get(format!("{url}/reports/ratings?group_by=model"))
        .call()?;
    println!("per-model report before close: {}", blocked.status());
    agent
        .post(format!("{url}/survey/vro/close"))
        .send_json(json!({}))?;
    let report = agent
        .get(format!("{url}/reports/ratings?group_by=model"))
        .call()?
        .body_mut()
        .read_to_string()?;
    println!("after close: {report}");
    let collection = agent
        .get(format!("{url}/reports/collection"))
        .call()?
        .body_mut()
        .read_to_string()?;
    println!("collection: {collection}");
    Ok(())
}
