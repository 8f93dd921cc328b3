use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TABLE2_CSV: &str = include_str!("../../../../data/table2.csv");
pub const TABLE4_DEV_CSV: &str = include_str!("../../../../data/table4_dev.csv");
pub const TABLE5_TEST_CSV: &str = include_str!("../../../../data/table5_test.csv");
pub const TABLE6_MORPH_CSV: &str = include_str!("../../../../data/table6_morph.csv");

/// One language of the dev-set comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub language: String,
    pub tokens: f64,
    pub tags: f64,
    pub ours: f64,
    pub lematus: f64,
    /// Taken verbatim from the source table, not recomputed.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub pearson: f64,
    pub spearman: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub tags_vs_delta: Coefficients,
    pub tokens_vs_delta: Coefficients,
}

/// Per-language accuracies of the five systems in the dev/test tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub language: String,
    pub gold: f64,
    pub crunching: f64,
    pub jackknifing: f64,
    pub ch20: f64,
    pub silver: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
    /// The table's own AVERAGE row, if present.
    pub published_average: Option<ResultsRow>,
}

impl ResultsTable {
    pub const COLUMNS: [&'static str; 5] = ["gold", "crunching", "jackknifing", "ch20", "silver"];

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let get = |r: &ResultsRow| match name {
            "gold" => Some(r.gold),
            "crunching" => Some(r.crunching),
            "jackknifing" => Some(r.jackknifing),
            "ch20" => Some(r.ch20),
            "silver" => Some(r.silver),
            _ => None,
        };
        self.rows.iter().map(get).collect()
    }

    /// Mean of a column over the language rows.
    pub fn average(&self, name: &str) -> Option<f64> {
        let c = self.column(name)?;
        (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64)
    }
}

fn read_csv<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Parses `language,tokens,tags,ours,lematus,delta` rows.
pub fn parse_language_rows(text: &str) -> Result<Vec<LanguageRow>> {
    read_csv(text)
}

/// Parses `language,gold,crunching,jackknifing,ch20,silver` rows; a row named
/// `AVERAGE` is kept apart.
pub fn parse_results_table(text: &str) -> Result<ResultsTable> {
    let mut rows: Vec<ResultsRow> = read_csv(text)?;
    let avg = rows
        .iter()
        .position(|r| r.language.eq_ignore_ascii_case("average"));
    let published_average = avg.map(|i| rows.remove(i));
    Ok(ResultsTable {
        rows,
        published_average,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggingRow {
    pub language: String,
    pub f1: f64,
}

pub fn parse_tagging_table(text: &str) -> Result<Vec<TaggingRow>> {
    read_csv(text)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "correlation columns",
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant column".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

fn coefficients(x: &[f64], y: &[f64]) -> Result<Coefficients> {
    Ok(Coefficients {
        pearson: pearson(x, y)?,
        spearman: spearman(x, y)?,
    })
}

/// Correlations of tag count and token count with Δ.
pub fn correlation_study(rows: &[LanguageRow]) -> Result<CorrelationReport> {
    if rows.len() < 3 {
        return Err(Error::OutOfRange {
            what: "rows",
            value: rows.len(),
            min: 3,
            max: usize::MAX,
        });
    }
    let delta: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let tags: Vec<f64> = rows.iter().map(|r| r.tags).collect();
    let tokens: Vec<f64> = rows.iter().map(|r| r.tokens).collect();
    Ok(CorrelationReport {
        tags_vs_delta: coefficients(&tags, &delta)?,
        tokens_vs_delta: coefficients(&tokens, &delta)?,
    })
}

pub fn write_correlation_csv<W: std::io::Write>(report: &CorrelationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["pair", "pearson", "spearman"])
        .map_err(io)?;
    for (name, c) in [
        ("tags_vs_delta", report.tags_vs_delta),
        ("tokens_vs_delta", report.tokens_vs_delta),
    ] {
        w.write_record([
            name.to_string(),
            format!("{:.6}", c.pearson),
            format!("{:.6}", c.spearman),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 5.0]),
            vec![2.5, 4.0, 2.5, 1.0]
        );
    }

    #[test]
    fn linear_data() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.5, 7.0, 9.5];
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&x, &[1.0; 4]), Err(Error::Undefined(_))));
    }

    #[test]
    fn shipped_tables_parse() {
        assert_eq!(parse_language_rows(TABLE2_CSV).unwrap().len(), 20);
        let dev = parse_results_table(TABLE4_DEV_CSV).unwrap();
        assert_eq!(dev.rows.len(), 20);
        assert!(dev.published_average.is_some());
        assert_eq!(parse_tagging_table(TABLE6_MORPH_CSV).unwrap().len(), 21);
    }
}
