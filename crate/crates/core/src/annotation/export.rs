//! CSV renderings of the report tables.

use super::report::{AggregateRow, CollectionStats, PairwiseReport, QeSummary};

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

/// One line per group: the grouping columns that apply, then mean, stderr
/// and n for both scales.
pub fn ratings_csv(rows: &[AggregateRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let first = rows.first();
    let has_lang = first.is_some_and(|r| r.lang.is_some());
    let has_model = first.is_some_and(|r| r.model.is_some());
    let has_cat = first.is_some_and(|r| r.category.is_some());
    let mut header: Vec<&str> = Vec::new();
    if has_lang {
        header.push("lang");
    }
    if has_model {
        header.push("model");
    }
    if has_cat {
        header.push("category");
    }
    header.extend([
        "helpfulness_mean",
        "helpfulness_stderr",
        "helpfulness_n",
        "naturalness_mean",
        "naturalness_stderr",
        "naturalness_n",
    ]);
    w.write_record(&header).unwrap();
    for r in rows {
        let mut rec = Vec::new();
        if has_lang {
            rec.push(r.lang.map(|l| l.to_string()).unwrap_or_default());
        }
        if has_model {
            rec.push(r.model.clone().unwrap_or_default());
        }
        if has_cat {
            rec.push(r.category.map(|c| c.to_string()).unwrap_or_default());
        }
        for s in [&r.helpfulness, &r.naturalness] {
            rec.extend([opt(s.mean), opt(s.stderr), s.n.to_string()]);
        }
        w.write_record(&rec).unwrap();
    }
    finish(w)
}

/// Languages as columns, the three counts as rows.
pub fn collection_csv(stats: &[CollectionStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![String::new()];
    header.extend(stats.iter().map(|s| s.lang.code().to_uppercase()));
    w.write_record(&header).unwrap();
    let rows: [(&str, Box<dyn Fn(&CollectionStats) -> String>); 3] = [
        (
            "surveys submitted",
            Box::new(|s| s.surveys_submitted.to_string()),
        ),
        ("answers graded", Box::new(|s| s.answers_graded.to_string())),
        (
            "grades per question",
            Box::new(|s| format!("{:.2}", s.grades_per_question)),
        ),
    ];
    for (name, f) in rows {
        let mut rec = vec![name.to_string()];
        rec.extend(stats.iter().map(|s| f(s)));
        w.write_record(&rec).unwrap();
    }
    finish(w)
}

pub fn pairwise_csv(reports: &[PairwiseReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "task",
        "lang",
        "prefer_human",
        "prefer_machine",
        "tie",
        "agreement",
    ])
    .unwrap();
    for r in reports {
        w.write_record([
            r.task.clone(),
            r.lang.to_string(),
            r.prefer_human.to_string(),
            r.prefer_machine.to_string(),
            r.tie.to_string(),
            opt(r.agreement),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn qe_csv(rows: &[QeSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "system",
        "lang",
        "n",
        "fluency",
        "consistency",
        "incorrect_pct",
        "both_pct",
    ])
    .unwrap();
    for r in rows {
        w.write_record([
            r.system.clone(),
            r.lang.code().to_uppercase(),
            r.n.to_string(),
            r.fluency.to_string(),
            r.consistency.to_string(),
            r.incorrect_pct.to_string(),
            r.both_pct.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}
