use serde::{Deserialize, Serialize};

use super::EvalReport;
use crate::data::Corpus;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub train_sentences: usize,
    pub train_tokens: usize,
    pub report: EvalReport,
}

/// Number of leading sentences used for `fraction` of an `n`-sentence corpus.
pub fn prefix_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction {fraction} not in (0, 1]")));
    }
    let k = ((n as f64) * fraction).round() as usize;
    if k == 0 {
        return Err(Error::Empty("training prefix"));
    }
    Ok(k.min(n))
}

/// Trains on growing corpus prefixes and evaluates each run with
/// `train_and_eval(prefix)`.
pub fn learning_curve<F>(
    corpus: &Corpus,
    fractions: &[f64],
    mut train_and_eval: F,
) -> Result<Vec<CurvePoint>>
where
    F: FnMut(&Corpus) -> Result<EvalReport>,
{
    if fractions.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("fractions must be sorted".into()));
    }
    let sizes = fractions
        .iter()
        .map(|&f| prefix_size(corpus.len(), f))
        .collect::<Result<Vec<_>>>()?;
    fractions
        .iter()
        .zip(sizes)
        .map(|(&fraction, k)| {
            let train = corpus.prefix(k);
            let report = train_and_eval(&train)?;
            Ok(CurvePoint {
                fraction,
                train_sentences: k,
                train_tokens: train.token_count(),
                report,
            })
        })
        .collect()
}

/// One row per (system, fraction, category), plus an `all` row.
pub fn write_curve_csv<W: std::io::Write>(
    series: &[(String, Vec<CurvePoint>)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record([
        "system",
        "fraction",
        "train_sentences",
        "train_tokens",
        "category",
        "accuracy",
        "count",
    ])
    .map_err(io)?;
    for (system, points) in series {
        for p in points {
            let mut rows = vec![("all".to_string(), Some(p.report.accuracy()), p.report.total)];
            for c in &p.report.categories {
                rows.push((c.category.name().to_string(), c.accuracy(), c.count));
            }
            for (cat, acc, count) in rows {
                w.write_record([
                    system.clone(),
                    format!("{}", p.fraction),
                    p.train_sentences.to_string(),
                    p.train_tokens.to_string(),
                    cat,
                    acc.map_or(String::new(), |a| format!("{a:.6}")),
                    count.to_string(),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
