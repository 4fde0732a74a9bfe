//! Greedy decoding versus beam search on a hand-built two-step model
//! where the greedy first choice leads to a worse sequence.
//!
//!     cargo run --example beam_search

use std::collections::HashMap;

use codesum::corpus::{BOS, EOS};
use codesum::pipeline::{beam_search_with, greedy_decode_with, PipelineError, StepModel};

/// Next-token distributions keyed by the generated prefix.
struct Table(HashMap<Vec<usize>, Vec<f64>>);

impl StepModel for Table {
    type State = Vec<usize>;

    fn initial_state(&self) -> Vec<usize> {
        Vec::new()
    }

    fn step(&self, y_prev: usize, prefix: &Vec<usize>) -> Result<(Vec<f64>, Vec<usize>), PipelineError> {
        let mut next = prefix.clone();
        if y_prev != BOS {
            next.push(y_prev);
        }
        let dist = self.0.get(&next).cloned().unwrap_or_else(|| vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        Ok((dist, next))
    }
}

fn main() {
    let (a, b) = (4, 5);
    let table = Table(HashMap::from([
        (vec![], vec![0.0, 0.0, 0.0, 0.0, 0.6, 0.4]),
        (vec![a], vec![0.0, 0.0, 0.0, 0.5, 0.0, 0.5]),
        (vec![b], vec![0.0, 0.0, 0.0, 0.9, 0.1, 0.0]),
    ]));
    let greedy = greedy_decode_with(&table, 2).unwrap();
    println!("greedy: {greedy:?}");
    for width in 1..=3 {
        let best = beam_search_with(&table, width, 2).unwrap();
        println!(
            "beam {width}: {:?} p = {:.2}, per-token log p = {:.3}",
            best.token_ids,
            best.log_prob.exp(),
            best.score()
        );
    }
    assert_eq!(beam_search_with(&table, 2, 2).unwrap().token_ids, vec![b, EOS]);
}
