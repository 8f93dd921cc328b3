//! Accuracy breakdowns, significance, error mining, correlations over the
//! shipped result tables, and learning curves.

mod accuracy;
pub mod correlation;
mod curve;
mod edits;
mod permutation;

pub use accuracy::{accuracy_report, correctness, CategoryScore, EvalReport};
pub use correlation::{
    correlation_study, parse_language_rows, parse_results_table, pearson, spearman,
    CorrelationReport, LanguageRow, ResultsTable,
};
pub use curve::{learning_curve, prefix_size, write_curve_csv, CurvePoint};
pub use edits::{
    aggregate_patterns, edit_distance, edit_script, length_stats, write_patterns_csv, Edit, EditOp,
    EditScript, Pattern,
};
pub use permutation::{exact_permutation_p, paired_permutation_test};
