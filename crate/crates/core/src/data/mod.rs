//! Treebank types: morphological tags, tokens, sentences and corpora.

mod conllu;
mod folds;
mod vocab;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use conllu::{parse_conllu, read_conllu_file, write_conllu, write_conllu_string};
pub use folds::{categorize_tokens, jackknife_folds, Category, Fold};
pub use vocab::{build_vocab, Alphabet, TagInventory, BOS, EOS, PAD, UNK};

/// Attribute key under which the part of speech is stored.
pub const POS_KEY: &str = "POS";

/// A bundle of `key=value` morphological attributes used as one label.
///
/// Attributes live in a sorted map, so equality, hashing and the canonical
/// string form are independent of the order the attributes were given in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MorphTag {
    attrs: BTreeMap<String, String>,
}

impl MorphTag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<K, V, I>(pairs: I) -> Self
    where
        K: Into<String>,
        V: Into<String>,
        I: IntoIterator<Item = (K, V)>,
    {
        MorphTag {
            attrs: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.attrs.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).map(String::as_str)
    }

    pub fn pos(&self) -> Option<&str> {
        self.get(POS_KEY)
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    /// Attributes as `Key=Value` strings, sorted by key.
    pub fn attributes(&self) -> impl Iterator<Item = String> + '_ {
        self.attrs.iter().map(|(k, v)| format!("{k}={v}"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.attrs.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// UPOS column value (`_` when absent).
    pub fn upos(&self) -> &str {
        self.pos().unwrap_or("_")
    }

    /// FEATS column value: non-POS attributes sorted by key, or `_`.
    pub fn feats(&self) -> String {
        let parts: Vec<String> = self
            .attrs
            .iter()
            .filter(|(k, _)| k.as_str() != POS_KEY)
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        if parts.is_empty() {
            "_".to_string()
        } else {
            parts.join("|")
        }
    }

    /// Parses the canonical `Key=Value|Key=Value` form produced by `Display`.
    pub fn parse_canonical(s: &str) -> Result<Self> {
        let mut tag = MorphTag::new();
        if s.is_empty() || s == "_" {
            return Ok(tag);
        }
        for part in s.split('|') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::MalformedFeature(part.to_string()))?;
            tag.insert(k, v);
        }
        Ok(tag)
    }
}

impl fmt::Display for MorphTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.attrs.is_empty() {
            return write!(f, "_");
        }
        let mut first = true;
        for (k, v) in &self.attrs {
            if !first {
                write!(f, "|")?;
            }
            first = false;
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Combines a UPOS value and a FEATS column into one tag `{POS=upos, ...}`.
pub fn bundle_tag(upos: &str, feats: &str) -> Result<MorphTag> {
    let mut tag = MorphTag::new();
    tag.insert(POS_KEY, upos);
    let feats = feats.trim();
    if feats.is_empty() || feats == "_" {
        return Ok(tag);
    }
    for pair in feats.split('|') {
        match pair.split_once('=') {
            Some((k, v)) if !k.is_empty() && !v.is_empty() => tag.insert(k, v),
            _ => return Err(Error::MalformedFeature(pair.to_string())),
        }
    }
    Ok(tag)
}

/// One syntactic word. Columns the models never read are kept verbatim so
/// that rewriting a file only changes the predicted columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: String,
    pub form: String,
    pub lemma: Option<String>,
    pub tag: Option<MorphTag>,
    pub xpos: String,
    pub head: String,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    /// A token with only the model-relevant fields set.
    pub fn new(form: impl Into<String>, lemma: Option<&str>, tag: Option<MorphTag>) -> Self {
        Token {
            id: "_".into(),
            form: form.into(),
            lemma: lemma.map(str::to_string),
            tag,
            xpos: "_".into(),
            head: "_".into(),
            deprel: "_".into(),
            deps: "_".into(),
            misc: "_".into(),
        }
    }
}

/// Raw line that is not part of the token sequence (multiword-token range
/// or empty node), remembered with the index of the token it precedes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraLine {
    pub before: usize,
    pub line: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub comments: Vec<String>,
    pub tokens: Vec<Token>,
    pub extra: Vec<ExtraLine>,
}

impl Sentence {
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        let mut s = Sentence {
            tokens,
            ..Default::default()
        };
        s.renumber();
        s
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.form.as_str())
    }

    /// Assigns IDs 1..n to tokens whose ID is unset.
    pub fn renumber(&mut self) {
        for (i, t) in self.tokens.iter_mut().enumerate() {
            if t.id == "_" {
                t.id = (i + 1).to_string();
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub file: Option<String>,
    pub split: Option<String>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Corpus {
            sentences,
            file: None,
            split: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    /// Sub-corpus made of the sentences at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Corpus {
        Corpus {
            sentences: indices.iter().map(|&i| self.sentences[i].clone()).collect(),
            file: self.file.clone(),
            split: self.split.clone(),
        }
    }

    /// The first `n` sentences.
    pub fn prefix(&self, n: usize) -> Corpus {
        Corpus {
            sentences: self.sentences[..n.min(self.len())].to_vec(),
            file: self.file.clone(),
            split: self.split.clone(),
        }
    }
}
