//! Scores generated summaries against references.
//!
//!     cargo run --example evaluate

use codesum::eval::{clipped_ngram_counts, evaluate, rouge_l};

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn main() {
    let refs: Vec<Vec<String>> = [
        "writes the json representation of this object to the given writer",
        "creates speex packet",
        "returns the number of elements in this array",
    ]
    .map(words)
    .to_vec();
    let hyps: Vec<Vec<String>> = [
        "writes the json representation of this value to the writer",
        "creates speex packet",
        "returns the size of this array",
    ]
    .map(words)
    .to_vec();
    let report = evaluate(&hyps, &refs).unwrap();
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    let (cand, reference) = (words("the the the the"), words("the cat sat down"));
    println!("clipped unigrams: {:?}", clipped_ngram_counts(&cand, &reference, 1));
    println!("rouge-l [a b c d] vs [a c d e]: {}", rouge_l(&words("a b c d"), &words("a c d e")));
}
