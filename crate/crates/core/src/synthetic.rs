//! Generated corpora where a form's lemma depends on its morphological tag.
//!
//! Every sentence opens with a cue word that fixes the part of speech of the
//! words after it. Content words are built from a shared pool of stems:
//!
//! | form      | tag                 | lemma      |
//! |-----------|---------------------|------------|
//! | stem+`a`  | NOUN Number=Sing    | stem+`a`   |
//! | stem+`as` | NOUN Number=Plur    | stem+`a`   |
//! | stem+`as` | VERB Tense=Pres     | stem+`ar`  |
//! | stem+`is` | VERB Tense=Past     | stem+`ar`  |
//!
//! so stem+`as` is a homograph whose lemma only the tag decides.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, MorphTag, Sentence, Token};
use crate::training::{derive_seed, rng_from_seed, SeededRng};
use crate::{Error, Result};

const CONSONANTS: &[char] = &['b', 'd', 'g', 'k', 'l', 'm', 'n', 'p', 't', 'v', 'z'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];
const NOUN_CUES: &[&str] = &["la", "le"];
const VERB_CUES: &[&str] = &["ti", "to"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub sentences: usize,
    pub stems: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Probability that a content word takes the ambiguous `as` form.
    pub homograph_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            sentences: 500,
            stems: 60,
            min_words: 3,
            max_words: 5,
            homograph_rate: 0.7,
        }
    }
}

fn tag(pairs: &[(&str, &str)]) -> MorphTag {
    MorphTag::from_pairs(pairs.iter().copied())
}

pub fn noun_sing() -> MorphTag {
    tag(&[("POS", "NOUN"), ("Number", "Sing")])
}

pub fn noun_plur() -> MorphTag {
    tag(&[("POS", "NOUN"), ("Number", "Plur")])
}

pub fn verb_pres() -> MorphTag {
    tag(&[("POS", "VERB"), ("Tense", "Pres")])
}

pub fn verb_past() -> MorphTag {
    tag(&[("POS", "VERB"), ("Tense", "Past")])
}

/// `n` distinct consonant-vowel-consonant stems.
pub fn stems(n: usize, rng: &mut SeededRng) -> Result<Vec<String>> {
    let max = CONSONANTS.len() * VOWELS.len() * CONSONANTS.len();
    if n == 0 || n > max {
        return Err(Error::OutOfRange {
            what: "stem count",
            value: n,
            min: 1,
            max,
        });
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s: String = [
            *CONSONANTS.choose(rng).expect("consonants"),
            *VOWELS.choose(rng).expect("vowels"),
            *CONSONANTS.choose(rng).expect("consonants"),
        ]
        .iter()
        .collect();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    Ok(out)
}

fn content_word(stem: &str, noun: bool, homograph: bool) -> Token {
    let (suffix, lemma, t) = match (noun, homograph) {
        (true, false) => ("a", format!("{stem}a"), noun_sing()),
        (true, true) => ("as", format!("{stem}a"), noun_plur()),
        (false, true) => ("as", format!("{stem}ar"), verb_pres()),
        (false, false) => ("is", format!("{stem}ar"), verb_past()),
    };
    Token::new(format!("{stem}{suffix}"), Some(&lemma), Some(t))
}

/// Sentences over a fixed stem pool; the same `seed` always gives the same
/// pool, so corpora drawn with different `sample_seed`s share vocabulary.
pub fn homograph_corpus(config: &SyntheticConfig, seed: u64, sample_seed: u64) -> Result<Corpus> {
    if config.min_words == 0 || config.max_words < config.min_words {
        return Err(Error::Config(format!(
            "sentence length range {}..={}",
            config.min_words, config.max_words
        )));
    }
    if !(0.0..=1.0).contains(&config.homograph_rate) {
        return Err(Error::Config(format!(
            "homograph rate {}",
            config.homograph_rate
        )));
    }
    let pool = stems(config.stems, &mut rng_from_seed(derive_seed(seed, 0)))?;
    let mut rng = rng_from_seed(derive_seed(seed, 1 + sample_seed));
    let sentences = (0..config.sentences)
        .map(|_| {
            let noun = rng.gen::<bool>();
            let cues = if noun { NOUN_CUES } else { VERB_CUES };
            let cue = *cues.choose(&mut rng).expect("cues");
            let cue_tag = tag(&[("POS", if noun { "DET" } else { "PART" })]);
            let mut tokens = vec![Token::new(cue, Some(cue), Some(cue_tag))];
            for _ in 0..rng.gen_range(config.min_words..=config.max_words) {
                let stem = pool.choose(&mut rng).expect("stems");
                let homograph = rng.gen_bool(config.homograph_rate);
                tokens.push(content_word(stem, noun, homograph));
            }
            Sentence::from_tokens(tokens)
        })
        .collect();
    Ok(Corpus::new(sentences))
}

pub fn class_tag(class: usize, plural: bool) -> MorphTag {
    let class = if class == 0 { "I" } else { "II" };
    tag(&[
        ("POS", "NOUN"),
        ("Class", class),
        ("Number", if plural { "Plur" } else { "Sing" }),
    ])
}

/// Noun-only variant with lexical classes. Every stem has a fixed class
/// (drawn with `seed`); the cue word `la` or `le` announces it. Class I
/// nouns inflect `a`/`as` with lemma stem+`a`, class II nouns `u`/`as` with
/// lemma stem+`u`, so a plural form hides its class unless the stem was
/// seen before or the tag is known.
pub fn class_corpus(config: &SyntheticConfig, seed: u64, sample_seed: u64) -> Result<Corpus> {
    if config.min_words == 0 || config.max_words < config.min_words {
        return Err(Error::Config(format!(
            "sentence length range {}..={}",
            config.min_words, config.max_words
        )));
    }
    let mut lex = rng_from_seed(derive_seed(seed, 0));
    let pool = stems(config.stems, &mut lex)?;
    let mut classes: [Vec<&str>; 2] = [Vec::new(), Vec::new()];
    for s in &pool {
        classes[usize::from(lex.gen::<bool>())].push(s);
    }
    if classes.iter().any(Vec::is_empty) {
        return Err(Error::Empty("noun class"));
    }
    let mut rng = rng_from_seed(derive_seed(seed, 1 + sample_seed));
    let sentences = (0..config.sentences)
        .map(|_| {
            let class = usize::from(rng.gen::<bool>());
            let cue = NOUN_CUES[class];
            let mut tokens = vec![Token::new(cue, Some(cue), Some(tag(&[("POS", "DET")])))];
            for _ in 0..rng.gen_range(config.min_words..=config.max_words) {
                let stem = classes[class].choose(&mut rng).expect("stems");
                let plural = rng.gen_bool(config.homograph_rate);
                let ending = if class == 0 { "a" } else { "u" };
                let form = if plural {
                    format!("{stem}as")
                } else {
                    format!("{stem}{ending}")
                };
                let lemma = format!("{stem}{ending}");
                tokens.push(Token::new(
                    form,
                    Some(&lemma),
                    Some(class_tag(class, plural)),
                ));
            }
            Sentence::from_tokens(tokens)
        })
        .collect();
    Ok(Corpus::new(sentences))
}

/// The stem of a generated content word.
pub fn stem_of(form: &str) -> Option<&str> {
    form.strip_suffix("as")
        .or_else(|| form.strip_suffix("is"))
        .or_else(|| form.strip_suffix('a'))
        .or_else(|| form.strip_suffix('u'))
        .filter(|s| s.chars().count() == 3)
}

/// The wrong tag [`corrupt_stems`] gives an unambiguous form: NOUN Sing
/// becomes VERB Past and VERB Past becomes NOUN Plur. Other tags are kept.
pub fn mislabel(tag: &MorphTag) -> MorphTag {
    if *tag == noun_sing() {
        verb_past()
    } else if *tag == verb_past() {
        noun_plur()
    } else {
        tag.clone()
    }
}

/// Systematic annotation noise: unambiguous forms (`a`, `is`) of stems
/// starting with one of `initials` get a [`mislabel`]led tag in every
/// sentence. Homographs and lemmas are untouched. Returns the relabelled
/// corpus and the fraction of content words that changed.
pub fn corrupt_stems(corpus: &Corpus, initials: &[char]) -> (Corpus, f64) {
    let mut out = corpus.clone();
    let (mut changed, mut content) = (0usize, 0usize);
    for t in out.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()) {
        let Some(stem) = stem_of(&t.form) else {
            continue;
        };
        content += 1;
        let hit = stem.chars().next().is_some_and(|c| initials.contains(&c));
        if let (true, Some(tag)) = (hit, &t.tag) {
            let m = mislabel(tag);
            changed += usize::from(m != *tag);
            t.tag = Some(m);
        }
    }
    (out, changed as f64 / content.max(1) as f64)
}
