use std::path::Path;
use std::process::{Command, Output};

use morphlem::data::write_conllu_string;
use morphlem::synthetic::{homograph_corpus, SyntheticConfig};

fn morphlem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphlem"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TINY: &str = r#"
seed = 3

[tagger]
char_dim = 4
char_hidden = 4
linear_dim = 4
word_layers = 1
word_hidden = 4
epochs = 1

[lemmatizer]
encoder_layers = 1
encoder_hidden = 4
decoder_hidden = 4
char_dim = 4
tag_dim = 2
emission_hidden = 4
max_epochs = 2
"#;

#[test]
fn help_lists_subcommands() {
    let o = morphlem(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for sub in [
        "jackknife-train",
        "predict",
        "evaluate",
        "analyze-errors",
        "learning-curve",
        "correlate",
    ] {
        assert!(text.contains(sub), "{sub}");
    }
    let o = morphlem(&["predict", "--help"]);
    assert!(stdout(&o).contains("--crunch"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(morphlem(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        morphlem(&["predict", "--model", "m"]).status.code(),
        Some(2)
    );
    assert_eq!(morphlem(&[]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let o = morphlem(&["correlate", "--table", "/nonexistent/table.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
}

#[test]
fn correlate_reports_shipped_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corr.csv");
    let o = morphlem(&["correlate", "--out", p(&out)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("0.206") && text.contains("-0.809") && text.contains("-0.845"),
        "{text}"
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("pair,pearson,spearman\ntags_vs_delta,0.206"));
    assert!(dir.path().join("corr.csv.manifest.json").exists());
}

#[test]
fn train_predict_evaluate_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = SyntheticConfig {
        sentences: 12,
        stems: 6,
        ..SyntheticConfig::default()
    };
    let write = |name: &str, sample: u64| {
        let path = d.join(name);
        std::fs::write(
            &path,
            write_conllu_string(&homograph_corpus(&synth, 1, sample).unwrap()),
        )
        .unwrap();
        path
    };
    let (train, dev, test) = (
        write("train.conllu", 0),
        write("dev.conllu", 1),
        write("test.conllu", 2),
    );
    let config = d.join("tiny.toml");
    std::fs::write(&config, TINY).unwrap();
    let model = d.join("model.bin");
    let silver = d.join("silver.conllu");

    let o = morphlem(&[
        "jackknife-train",
        "--train",
        p(&train),
        "--dev",
        p(&dev),
        "--kappa",
        "2",
        "--config",
        p(&config),
        "--model",
        p(&model),
        "--silver",
        p(&silver),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("model.bin.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "jackknife-train");
    assert_eq!(manifest["config"]["seed"], 3);
    assert_eq!(manifest["config"]["source"]["Jackknife"]["kappa"], 2);
    assert!(silver.exists());

    let pred = d.join("pred.conllu");
    let crunched = d.join("crunched.conllu");
    assert!(morphlem(&[
        "predict",
        "--model",
        p(&model),
        "--test",
        p(&test),
        "--out",
        p(&pred)
    ])
    .status
    .success());
    let o = morphlem(&[
        "predict",
        "--model",
        p(&model),
        "--test",
        p(&test),
        "--out",
        p(&crunched),
        "--crunch",
        "2",
    ]);
    assert!(o.status.success());
    let predicted = morphlem::data::read_conllu_file(&pred, "pred").unwrap();
    assert_eq!(predicted.len(), 12);
    assert!(predicted
        .tokens()
        .all(|t| t.lemma.is_some() && t.tag.is_some()));

    let report = d.join("report.csv");
    let o = morphlem(&[
        "evaluate",
        "--pred",
        p(&pred),
        "--test",
        p(&test),
        "--train",
        p(&train),
        "--baseline",
        p(&crunched),
        "--replicates",
        "200",
        "--out",
        p(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("lemma accuracy"));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("category,correct,count,accuracy\nall,"));
    assert!(csv.contains("\np_value,"));

    let patterns = d.join("patterns.csv");
    let o = morphlem(&[
        "analyze-errors",
        "--pred",
        p(&pred),
        "--test",
        p(&test),
        "--out",
        p(&patterns),
    ]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&patterns)
        .unwrap()
        .starts_with("pattern,count\n"));

    let curve = d.join("curve.csv");
    let o = morphlem(&[
        "learning-curve",
        "--train",
        p(&train),
        "--test",
        p(&test),
        "--fractions",
        "0.5,1.0",
        "--gold-tags",
        "--config",
        p(&config),
        "--out",
        p(&curve),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&curve).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains(",all,")).count(), 4);

    let o = morphlem(&[
        "evaluate",
        "--pred",
        p(&train),
        "--test",
        p(&test),
        "--train",
        p(&train),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
