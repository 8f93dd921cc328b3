//! Lemma accuracy on the generated corpora under the training regimes the
//! acceptance suite compares.
//!
//! `cargo run --release -p morphlem --example synthetic`

use morphlem::data::Corpus;
use morphlem::eval::correctness;
use morphlem::lemmatizer::LemmatizerConfig;
use morphlem::pipeline::{
    flat_lemmas, train_joint_with_tagger_data, JointModel, JointTrainingConfig, TagSource,
};
use morphlem::synthetic::{class_corpus, corrupt_stems, homograph_corpus, SyntheticConfig};
use morphlem::tagger::TaggerConfig;

fn accuracy(model: &JointModel, corpus: &Corpus, crunch: Option<usize>) -> f64 {
    let preds = model.predict_corpus(corpus, crunch, 2).unwrap();
    let ok = correctness(&flat_lemmas(&preds), corpus).unwrap();
    ok.iter().filter(|&&b| b).count() as f64 / ok.len() as f64
}

fn config(epochs: usize, lr: f64, source: TagSource, use_tags: bool) -> JointTrainingConfig {
    JointTrainingConfig {
        tagger: TaggerConfig {
            char_dim: 12,
            char_hidden: 12,
            linear_dim: 12,
            word_layers: 1,
            word_hidden: 12,
            dropout: 0.1,
            epochs,
            lr,
            ..TaggerConfig::default()
        },
        lemmatizer: LemmatizerConfig {
            encoder_layers: 1,
            encoder_hidden: 16,
            decoder_hidden: 16,
            char_dim: 8,
            tag_dim: 8,
            emission_hidden: 16,
            dropout: 0.1,
            lr: 0.01,
            batch_size: 10,
            max_epochs: 20,
            use_tags,
            ..LemmatizerConfig::default()
        },
        source,
        seed: 11,
        ..JointTrainingConfig::default()
    }
}

fn splits(
    generate: fn(&SyntheticConfig, u64, u64) -> morphlem::Result<Corpus>,
    stems: usize,
) -> [Corpus; 3] {
    let c = |sentences, sample| {
        let synth = SyntheticConfig {
            sentences,
            stems,
            ..SyntheticConfig::default()
        };
        generate(&synth, 7, sample).unwrap()
    };
    [c(400, 0), c(60, 1), c(100, 2)]
}

fn main() {
    let [train, dev, test] = splits(homograph_corpus, 60);
    println!("homograph corpus: {} training tokens", train.token_count());
    for use_tags in [true, false] {
        let m = train_joint_with_tagger_data(
            &train,
            &train,
            Some(&dev),
            &config(15, 0.005, TagSource::Gold, use_tags),
        )
        .unwrap()
        .model;
        println!("  tags {use_tags:5}: {:.4}", accuracy(&m, &test, None));
    }

    let (noisy, rate) = corrupt_stems(&train, &['b', 'd', 'g', 'k', 'l', 'm', 'n']);
    println!(
        "weak tagger, {:.1}% of content-word labels wrong",
        100.0 * rate
    );
    for source in [TagSource::Gold, TagSource::Jackknife { kappa: 10 }] {
        let m = train_joint_with_tagger_data(
            &train,
            &noisy,
            Some(&dev),
            &config(4, 0.001, source, true),
        )
        .unwrap()
        .model;
        print!("  {source:?}:");
        for k in [1, 2, 3, 6] {
            print!(
                "  k={k} dev {:.4} test {:.4}",
                accuracy(&m, &dev, Some(k)),
                accuracy(&m, &test, Some(k))
            );
        }
        println!();
    }

    let [train, dev, test] = splits(class_corpus, 150);
    println!("class corpus");
    for fraction in [0.1, 0.25, 1.0] {
        let part = train.prefix((train.len() as f64 * fraction).round() as usize);
        let acc = |use_tags| {
            let c = config(15, 0.005, TagSource::Gold, use_tags);
            accuracy(
                &train_joint_with_tagger_data(&part, &part, Some(&dev), &c)
                    .unwrap()
                    .model,
                &test,
                None,
            )
        };
        let (joint, ablated) = (acc(true), acc(false));
        println!(
            "  {fraction:4}: joint {joint:.4} ablated {ablated:.4} gap {:.4}",
            joint - ablated
        );
    }
}
