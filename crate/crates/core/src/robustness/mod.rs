//! Robustness evaluation under perturbed log messages, plus the string
//! metrics used to score it.

mod evaluate;
mod metrics;
mod perturb;

pub use evaluate::{
    class_template, evaluate, rows_to_csv, EvalError, EvalOptions, FailureExample,
    GoldMatchExtractor, LlmExtractor, MaskingExtractor, MetricLevel, PatternExtractor,
    RobustnessRow, MAX_FAILURE_EXAMPLES,
};
pub use metrics::{
    avg_similarity, lcs_len, levenshtein, levenshtein_norm, mean_similarity, wer_words,
    word_error_rate, MetricError,
};
pub use perturb::{
    add_word, perturb, substitute_char, substitute_delimiters, Inapplicable, Perturbation,
    PerturbationKind, UnknownKind, DELIMITER_PAIRS, EXTRA_WORDS,
};
