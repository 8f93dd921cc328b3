use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{bundle_tag, Corpus, ExtraLine, Sentence, Token};
use crate::{Error, Result};

const COLUMNS: usize = 10;

/// Reads CoNLL-U text into a corpus.
///
/// Comment lines are kept with their sentence; multiword-token ranges
/// (`1-2`) and empty nodes (`5.1`) are kept aside and do not enter the token
/// sequence. Blocks that contain no token lines produce no sentence.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();

    let flush = |current: &mut Sentence, sentences: &mut Vec<Sentence>| {
        let s = std::mem::take(current);
        if !s.tokens.is_empty() {
            sentences.push(s);
        }
    };

    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            flush(&mut current, &mut sentences);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            current.comments.push(comment.to_string());
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "expected {COLUMNS} tab-separated columns, found {}",
                    cols.len()
                ),
            });
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            current.extra.push(ExtraLine {
                before: current.tokens.len(),
                line: line.to_string(),
            });
            continue;
        }
        if cols[1].is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty FORM".into(),
            });
        }
        let tag = if cols[3] == "_" && cols[5] == "_" {
            None
        } else {
            Some(bundle_tag(cols[3], cols[5]).map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?)
        };
        let lemma = (cols[2] != "_").then(|| cols[2].to_string());
        current.tokens.push(Token {
            id: id.to_string(),
            form: cols[1].to_string(),
            lemma,
            tag,
            xpos: cols[4].to_string(),
            head: cols[6].to_string(),
            deprel: cols[7].to_string(),
            deps: cols[8].to_string(),
            misc: cols[9].to_string(),
        });
    }
    flush(&mut current, &mut sentences);
    Ok(Corpus::new(sentences))
}

/// Parses a file, recording its path and the split name as provenance.
pub fn read_conllu_file(path: impl AsRef<Path>, split: &str) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    let mut corpus = parse_conllu(bytes.as_slice())?;
    corpus.file = Some(path.display().to_string());
    corpus.split = Some(split.to_string());
    Ok(corpus)
}

fn write_token<W: Write>(out: &mut W, t: &Token) -> std::io::Result<()> {
    let (upos, feats) = match &t.tag {
        Some(tag) => (tag.upos().to_string(), tag.feats()),
        None => ("_".to_string(), "_".to_string()),
    };
    writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        t.id,
        t.form,
        t.lemma.as_deref().unwrap_or("_"),
        upos,
        t.xpos,
        feats,
        t.head,
        t.deprel,
        t.deps,
        t.misc
    )
}

/// Writes a corpus as CoNLL-U (UPOS/FEATS from each token's tag, LEMMA
/// from its lemma).
pub fn write_conllu<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for s in &corpus.sentences {
        for c in &s.comments {
            writeln!(out, "#{c}")?;
        }
        let mut extra = s.extra.iter().peekable();
        for (i, t) in s.tokens.iter().enumerate() {
            while let Some(e) = extra.next_if(|e| e.before == i) {
                writeln!(out, "{}", e.line)?;
            }
            write_token(&mut out, t)?;
        }
        for e in extra {
            writeln!(out, "{}", e.line)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_conllu_string(corpus: &Corpus) -> String {
    let mut buf = Vec::new();
    write_conllu(corpus, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CoNLL-U output is UTF-8")
}
