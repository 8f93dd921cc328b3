use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, MorphTag};
use crate::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
const SPECIALS: usize = 4;

/// Character inventory with four reserved indices (PAD, UNK, BOS, EOS)
/// followed by the characters in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<char>", into = "Vec<char>")]
pub struct Alphabet {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl From<Vec<char>> for Alphabet {
    fn from(chars: Vec<char>) -> Self {
        let mut a = Alphabet {
            chars: Vec::new(),
            index: HashMap::new(),
        };
        for c in chars {
            a.insert(c);
        }
        a
    }
}

impl From<Alphabet> for Vec<char> {
    fn from(a: Alphabet) -> Self {
        a.chars
    }
}

impl Alphabet {
    pub fn new() -> Self {
        Vec::new().into()
    }

    pub fn insert(&mut self, c: char) -> usize {
        if let Some(&i) = self.index.get(&c) {
            return i;
        }
        let i = SPECIALS + self.chars.len();
        self.chars.push(c);
        self.index.insert(c, i);
        i
    }

    /// Total number of indices, specials included.
    pub fn len(&self) -> usize {
        SPECIALS + self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Number of ordinary characters (without the specials).
    pub fn char_count(&self) -> usize {
        self.chars.len()
    }

    pub fn index_of(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    pub fn char_at(&self, index: usize) -> Option<char> {
        index
            .checked_sub(SPECIALS)
            .and_then(|i| self.chars.get(i))
            .copied()
    }

    pub fn encode(&self, s: &str) -> Vec<usize> {
        s.chars().map(|c| self.index_of(c)).collect()
    }

    /// Decodes ordinary character indices; specials are skipped.
    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter().filter_map(|&i| self.char_at(i)).collect()
    }

    /// Indices of the ordinary characters.
    pub fn char_indices(&self) -> std::ops::Range<usize> {
        SPECIALS..self.len()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::new()
    }
}

/// Ordered set of distinct tags with stable indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<MorphTag>", into = "Vec<MorphTag>")]
pub struct TagInventory {
    tags: Vec<MorphTag>,
    index: HashMap<MorphTag, usize>,
}

impl From<Vec<MorphTag>> for TagInventory {
    fn from(tags: Vec<MorphTag>) -> Self {
        let mut inv = TagInventory::default();
        for t in tags {
            inv.insert(t);
        }
        inv
    }
}

impl From<TagInventory> for Vec<MorphTag> {
    fn from(inv: TagInventory) -> Self {
        inv.tags
    }
}

impl TagInventory {
    pub fn insert(&mut self, tag: MorphTag) -> usize {
        if let Some(&i) = self.index.get(&tag) {
            return i;
        }
        let i = self.tags.len();
        self.index.insert(tag.clone(), i);
        self.tags.push(tag);
        i
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index_of(&self, tag: &MorphTag) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn tag(&self, index: usize) -> &MorphTag {
        &self.tags[index]
    }

    pub fn tags(&self) -> &[MorphTag] {
        &self.tags
    }
}

/// Alphabet over all forms and lemmata, and the inventory of gold tags, both
/// in first-occurrence order.
pub fn build_vocab(corpus: &Corpus) -> Result<(Alphabet, TagInventory)> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut alphabet = Alphabet::new();
    let mut tags = TagInventory::default();
    for t in corpus.tokens() {
        for c in t.form.chars() {
            alphabet.insert(c);
        }
        if let Some(l) = &t.lemma {
            for c in l.chars() {
                alphabet.insert(c);
            }
        }
        if let Some(tag) = &t.tag {
            tags.insert(tag.clone());
        }
    }
    Ok((alphabet, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Sentence, Token};

    #[test]
    fn alphabet_from_forms_and_lemmata() {
        let c = Corpus::new(vec![Sentence::from_tokens(vec![Token::new(
            "ab",
            Some("a"),
            None,
        )])]);
        let (a, tags) = build_vocab(&c).unwrap();
        assert_eq!(a.len(), 2 + 4);
        assert!(a.contains('a') && a.contains('b'));
        assert_eq!(a.index_of('z'), UNK);
        assert_eq!(a.encode("ba"), vec![5, 4]);
        assert_eq!(a.decode(&[BOS, 4, 5, EOS]), "ab");
        assert!(tags.is_empty());
        assert!(matches!(
            build_vocab(&Corpus::default()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn serde_keeps_indices() {
        let a: Alphabet = vec!['x', 'y'].into();
        let json = serde_json::to_string(&a).unwrap();
        let b: Alphabet = serde_json::from_str(&json).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.index_of('y'), 5);
    }
}
