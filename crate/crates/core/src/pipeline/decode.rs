use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{OovMap, TrainingInstance, Vocabulary, BOS, EOS};
use crate::neuro::Array2;
use crate::topnn::{EncoderOutputs, ModelParams};

/// Anything that yields a next-token distribution given the previous token
/// and a decoder state.
pub trait StepModel {
    type State: Clone;
    fn initial_state(&self) -> Self::State;
    fn step(&self, y_prev: usize, state: &Self::State) -> Result<(Vec<f64>, Self::State), PipelineError>;
}

/// A trained network bound to one encoded source.
pub struct ModelStepper<'a> {
    params: &'a ModelParams,
    encoded: EncoderOutputs,
    copy_ids: &'a [usize],
    extended_size: usize,
}

impl<'a> ModelStepper<'a> {
    pub fn new(params: &'a ModelParams, inst: &'a TrainingInstance) -> Result<Self, PipelineError> {
        Ok(ModelStepper {
            params,
            encoded: params.encode(&inst.topic_ids, &inst.code_ids)?,
            copy_ids: &inst.copy_ids,
            extended_size: params.config.sum_vocab_size + inst.oov_map.len(),
        })
    }
}

impl StepModel for ModelStepper<'_> {
    type State = Array2;

    fn initial_state(&self) -> Array2 {
        self.encoded.code_final.clone()
    }

    fn step(&self, y_prev: usize, state: &Array2) -> Result<(Vec<f64>, Array2), PipelineError> {
        let out = self
            .params
            .decode_step(y_prev, state, &self.encoded, self.copy_ids, self.extended_size)?;
        Ok((out.final_dist, out.state))
    }
}

fn argmax_lowest(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > dist[best] {
            best = i;
        }
    }
    best
}

/// Generated IDs, without BOS, ending at EOS or after `max_len` tokens.
pub fn greedy_decode_with<M: StepModel>(model: &M, max_len: usize) -> Result<Vec<usize>, PipelineError> {
    let mut state = model.initial_state();
    let mut y = BOS;
    let mut out = Vec::new();
    while out.len() < max_len {
        let (dist, next) = model.step(y, &state)?;
        y = argmax_lowest(&dist);
        state = next;
        out.push(y);
        if y == EOS {
            break;
        }
    }
    Ok(out)
}

pub fn greedy_decode(params: &ModelParams, inst: &TrainingInstance, max_len: usize) -> Result<Vec<usize>, PipelineError> {
    greedy_decode_with(&ModelStepper::new(params, inst)?, max_len)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamHypothesis<S> {
    /// Generated IDs, without BOS.
    pub token_ids: Vec<usize>,
    pub log_prob: f64,
    pub state: S,
    pub finished: bool,
}

impl<S> BeamHypothesis<S> {
    /// Log-probability per generated token.
    pub fn score(&self) -> f64 {
        if self.token_ids.is_empty() {
            0.0
        } else {
            self.log_prob / self.token_ids.len() as f64
        }
    }

    /// Best first: higher score, then lexicographically smaller IDs.
    fn rank(&self, other: &Self) -> Ordering {
        other
            .score()
            .total_cmp(&self.score())
            .then_with(|| self.token_ids.cmp(&other.token_ids))
    }
}

/// Beam search ranked by length-normalized log-probability. Finished
/// hypotheses stay in the beam unchanged and compete with open ones.
pub fn beam_search_with<M: StepModel>(
    model: &M,
    beam: usize,
    max_len: usize,
) -> Result<BeamHypothesis<M::State>, PipelineError> {
    let beam = beam.max(1);
    let mut hyps = vec![BeamHypothesis {
        token_ids: Vec::new(),
        log_prob: 0.0,
        state: model.initial_state(),
        finished: false,
    }];
    for _ in 0..max_len {
        if hyps.iter().all(|h| h.finished) {
            break;
        }
        let mut next = Vec::new();
        for h in hyps {
            if h.finished {
                next.push(h);
                continue;
            }
            let y_prev = h.token_ids.last().copied().unwrap_or(BOS);
            let (dist, state) = model.step(y_prev, &h.state)?;
            for (tok, &p) in dist.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let mut ids = h.token_ids.clone();
                ids.push(tok);
                next.push(BeamHypothesis {
                    token_ids: ids,
                    log_prob: h.log_prob + p.ln(),
                    state: state.clone(),
                    finished: tok == EOS,
                });
            }
        }
        next.sort_by(|a, b| a.rank(b));
        next.truncate(beam);
        hyps = next;
    }
    hyps.sort_by(|a, b| a.rank(b));
    Ok(hyps.swap_remove(0))
}

pub fn beam_search(
    params: &ModelParams,
    inst: &TrainingInstance,
    beam: usize,
    max_len: usize,
) -> Result<Vec<usize>, PipelineError> {
    if beam <= 1 {
        return greedy_decode(params, inst, max_len);
    }
    Ok(beam_search_with(&ModelStepper::new(params, inst)?, beam, max_len)?.token_ids)
}

/// Decodes every instance in parallel; `beam <= 1` is greedy.
pub fn decode_instances(
    params: &ModelParams,
    instances: &[TrainingInstance],
    beam: usize,
    max_len: usize,
) -> Result<Vec<Vec<usize>>, PipelineError> {
    instances
        .par_iter()
        .map(|inst| beam_search(params, inst, beam, max_len))
        .collect()
}

/// Surface summary: vocabulary IDs through `sum_vocab`, extended IDs
/// through `oov_map`, with BOS and EOS dropped.
pub fn detokenize(ids: &[usize], sum_vocab: &Vocabulary, oov_map: &OovMap) -> Result<String, PipelineError> {
    let mut words = Vec::with_capacity(ids.len());
    for &id in ids {
        if id == BOS || id == EOS {
            continue;
        }
        let word = sum_vocab
            .token(id)
            .or_else(|| oov_map.token(id))
            .ok_or(PipelineError::UnknownId(id))?;
        words.push(word);
    }
    Ok(words.join(" "))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedSummary {
    pub method: String,
    pub summary: String,
}

/// JSON Lines, one object per line.
pub fn write_decoded(path: &Path, rows: &[DecodedSummary]) -> Result<(), PipelineError> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).map_err(|e| PipelineError::Format(e.to_string()))?);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

pub fn read_decoded(path: &Path) -> Result<Vec<DecodedSummary>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| PipelineError::Format(format!("line {}: {e}", i + 1))))
        .collect()
}
