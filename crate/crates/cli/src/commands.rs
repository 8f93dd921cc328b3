use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use morphlem::data::{categorize_tokens, read_conllu_file, write_conllu, Corpus};
use morphlem::eval::correlation::{write_correlation_csv, TABLE2_CSV};
use morphlem::eval::{
    accuracy_report, aggregate_patterns, correctness, correlation_study, edit_script,
    learning_curve, length_stats, paired_permutation_test, parse_language_rows, write_curve_csv,
    write_patterns_csv, EvalReport,
};
use morphlem::pipeline::{
    annotate, flat_lemmas, load_model, save_model, train_joint, JointTrainingConfig, TagSource,
};

use crate::{AnalyzeArgs, CorrelateArgs, CurveArgs, EvaluateArgs, Hyper, PredictArgs, TrainArgs};

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    inputs: Value,
    config: Value,
}

/// Writes `<output>.manifest.json` next to an output file.
fn write_manifest(output: &Path, command: &str, inputs: Value, config: Value) -> Result<PathBuf> {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    let path = PathBuf::from(name);
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        inputs,
        config,
    };
    fs::write(&path, serde_json::to_string_pretty(&m)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn read(path: &Path, split: &str) -> Result<Corpus> {
    read_conllu_file(path, split).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn training_config(h: &Hyper, source: TagSource, treebank: &Path) -> Result<JointTrainingConfig> {
    let mut c: JointTrainingConfig = match &h.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => JointTrainingConfig::default(),
    };
    c.source = source;
    c.treebank = Some(treebank.display().to_string());
    if let Some(s) = h.seed {
        c.seed = s;
    }
    if let Some(e) = h.tagger_epochs {
        c.tagger.epochs = e;
    }
    if let Some(e) = h.lemmatizer_epochs {
        c.lemmatizer.max_epochs = e;
    }
    if let Some(lr) = h.lr {
        c.tagger.lr = lr;
        c.lemmatizer.lr = lr;
    }
    c.tagger.validate()?;
    c.lemmatizer.validate()?;
    Ok(c)
}

fn source(gold: bool, kappa: usize) -> TagSource {
    if gold {
        TagSource::Gold
    } else {
        TagSource::Jackknife { kappa }
    }
}

pub fn train(a: TrainArgs) -> Result<()> {
    let train = read(&a.train, "train")?;
    let dev = a.dev.as_deref().map(|p| read(p, "dev")).transpose()?;
    let config = training_config(&a.hyper, source(a.gold_tags, a.kappa), &a.train)?;
    let trained = train_joint(&train, dev.as_ref(), &config)?;
    save_model(&trained.model, &a.model)?;
    if let Some(p) = &a.silver {
        let mut w = create(p)?;
        write_conllu(&trained.silver, &mut w)?;
        w.flush()?;
    }
    let inputs = json!({ "train": a.train, "dev": a.dev, "model": a.model, "silver": a.silver });
    write_manifest(
        &a.model,
        "jackknife-train",
        inputs,
        serde_json::to_value(&config)?,
    )?;
    let last = trained.lemmatizer_log.epochs.last();
    println!(
        "trained on {} sentences; lemmatizer epochs {}, final loss {:.4}",
        train.len(),
        trained.lemmatizer_log.epochs.len(),
        last.map_or(f64::NAN, |e| e.loss)
    );
    if let Some(ll) = last.and_then(|e| e.dev_log_likelihood) {
        println!("dev log-likelihood per token {ll:.4}");
    }
    println!("model written to {}", a.model.display());
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let test = read(&a.test, "test")?;
    let preds = model.predict_corpus(&test, a.crunch, a.beam)?;
    let mut w = create(&a.out)?;
    write_conllu(&annotate(&test, &preds)?, &mut w)?;
    w.flush()?;
    let inputs = json!({ "model": a.model, "test": a.test, "crunch": a.crunch, "beam": a.beam });
    write_manifest(
        &a.out,
        "predict",
        inputs,
        serde_json::to_value(&model.provenance)?,
    )?;
    println!("{} sentences written to {}", test.len(), a.out.display());
    Ok(())
}

fn predicted_lemmas(pred: &Corpus, gold: &Corpus) -> Result<Vec<String>> {
    let shape = |c: &Corpus| c.sentences.iter().map(|s| s.len()).collect::<Vec<_>>();
    if shape(pred) != shape(gold) {
        bail!("prediction and gold files differ in their sentence or token counts");
    }
    Ok(pred
        .tokens()
        .map(|t| t.lemma.clone().unwrap_or_else(|| "_".into()))
        .collect())
}

fn print_report(r: &EvalReport) {
    println!(
        "lemma accuracy {:.2}% ({}/{})",
        100.0 * r.accuracy(),
        r.correct,
        r.total
    );
    for c in &r.categories {
        match c.accuracy() {
            Some(acc) => println!(
                "  {:<18} {:6.2}% ({}/{})",
                c.category.name(),
                100.0 * acc,
                c.correct,
                c.count
            ),
            None => println!("  {:<18}      - (0)", c.category.name()),
        }
    }
    if let Some(p) = r.p_value {
        println!("paired permutation p = {p:.4}");
    }
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let gold = read(&a.test, "test")?;
    let train = read(&a.train, "train")?;
    let pred = predicted_lemmas(&read(&a.pred, "pred")?, &gold)?;
    let cats = categorize_tokens(&train, &gold);
    let mut report = accuracy_report(&pred, &gold, &cats)?;
    if let Some(b) = &a.baseline {
        let base = predicted_lemmas(&read(b, "baseline")?, &gold)?;
        let p = paired_permutation_test(
            &correctness(&pred, &gold)?,
            &correctness(&base, &gold)?,
            a.replicates,
            a.seed,
        )?;
        report.p_value = Some(p);
    }
    print_report(&report);
    if let Some(out) = &a.out {
        let mut w = csv::Writer::from_writer(create(out)?);
        w.write_record(["category", "correct", "count", "accuracy"])?;
        w.write_record([
            "all".into(),
            report.correct.to_string(),
            report.total.to_string(),
            format!("{:.6}", report.accuracy()),
        ])?;
        for c in &report.categories {
            let acc = c.accuracy().map_or(String::new(), |x| format!("{x:.6}"));
            w.write_record([
                c.category.name().into(),
                c.correct.to_string(),
                c.count.to_string(),
                acc,
            ])?;
        }
        if let Some(p) = report.p_value {
            w.write_record([
                "p_value".into(),
                String::new(),
                String::new(),
                format!("{p:.6}"),
            ])?;
        }
        w.flush()?;
        let inputs =
            json!({ "pred": a.pred, "test": a.test, "train": a.train, "baseline": a.baseline });
        write_manifest(
            out,
            "evaluate",
            inputs,
            json!({ "replicates": a.replicates, "seed": a.seed }),
        )?;
    }
    Ok(())
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    let gold = read(&a.test, "test")?;
    let pred = predicted_lemmas(&read(&a.pred, "pred")?, &gold)?;
    let gold_lemmas: Vec<&str> = gold
        .tokens()
        .map(|t| t.lemma.as_deref().unwrap_or("_"))
        .collect();
    let wrong: Vec<(&str, &str)> = pred
        .iter()
        .zip(&gold_lemmas)
        .filter(|(p, g)| p.as_str() != **g)
        .map(|(p, g)| (p.as_str(), *g))
        .collect();
    let scripts: Vec<_> = wrong.iter().map(|(p, g)| edit_script(p, g)).collect();
    let patterns = aggregate_patterns(&scripts);
    println!("{} errors out of {} tokens", wrong.len(), gold_lemmas.len());
    for (p, n) in patterns.iter().take(a.top) {
        println!("{n:6}  {p}");
    }
    if !wrong.is_empty() {
        let errs: Vec<&str> = wrong.iter().map(|(_, g)| *g).collect();
        let d = length_stats(&errs, &gold_lemmas)?;
        println!("wrongly predicted gold lemmata are {d:+.2} characters longer than average");
    }
    if let Some(out) = &a.out {
        write_patterns_csv(&patterns, create(out)?)?;
        write_manifest(
            out,
            "analyze-errors",
            json!({ "pred": a.pred, "test": a.test }),
            Value::Null,
        )?;
    }
    Ok(())
}

pub fn curve(a: CurveArgs) -> Result<()> {
    let train = read(&a.train, "train")?;
    let dev = a.dev.as_deref().map(|p| read(p, "dev")).transpose()?;
    let test = read(&a.test, "test")?;
    let config = training_config(&a.hyper, source(a.gold_tags, a.kappa), &a.train)?;
    let cats = categorize_tokens(&train, &test);
    let mut series = Vec::new();
    for (name, use_tags) in [("joint", true), ("no-tags", false)] {
        let mut c = config.clone();
        c.lemmatizer.use_tags = use_tags;
        let points = learning_curve(&train, &a.fractions, |part| {
            let m = train_joint(part, dev.as_ref(), &c)?.model;
            let preds = m.predict_corpus(&test, None, a.beam)?;
            accuracy_report(&flat_lemmas(&preds), &test, &cats)
        })?;
        for p in &points {
            println!(
                "{name:8} {:5.2} {:6} sentences  {:6.2}%",
                p.fraction,
                p.train_sentences,
                100.0 * p.report.accuracy()
            );
        }
        series.push((name.to_string(), points));
    }
    write_curve_csv(&series, create(&a.out)?)?;
    let inputs =
        json!({ "train": a.train, "dev": a.dev, "test": a.test, "fractions": a.fractions });
    write_manifest(
        &a.out,
        "learning-curve",
        inputs,
        serde_json::to_value(&config)?,
    )?;
    Ok(())
}

pub fn correlate(a: CorrelateArgs) -> Result<()> {
    let text = match &a.table {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => TABLE2_CSV.to_string(),
    };
    let r = correlation_study(&parse_language_rows(&text)?)?;
    println!("                 pearson  spearman");
    println!(
        "tags vs delta    {:7.3}  {:8.3}",
        r.tags_vs_delta.pearson, r.tags_vs_delta.spearman
    );
    println!(
        "tokens vs delta  {:7.3}  {:8.3}",
        r.tokens_vs_delta.pearson, r.tokens_vs_delta.spearman
    );
    if let Some(out) = &a.out {
        write_correlation_csv(&r, create(out)?)?;
        write_manifest(out, "correlate", json!({ "table": a.table }), Value::Null)?;
    }
    Ok(())
}
