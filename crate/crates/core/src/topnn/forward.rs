//! The network's forward pass, recorded on a [`Tape`].
//!
//! The traced functions here are shared by training (one tape per instance,
//! teacher forcing) and generation (one tape per decoder step, with the
//! encoder outputs and previous state fed back in as constants). Both paths
//! run the same primitive sequence, so their numbers agree bit for bit.

use super::{BoundParams, ModelConfig, ModelError, ModelParams};
use crate::corpus::{TrainingInstance, PAD, UNK};
use crate::neuro::{gru_step, Array2, Gradients, NodeId, Tape};

/// Encoder results as tape nodes.
#[derive(Clone, Debug)]
pub struct TracedSource {
    pub topic_states: Vec<NodeId>,
    pub topic_final: Option<NodeId>,
    pub code_states: Vec<NodeId>,
    pub code_final: NodeId,
    /// `hidden x T`, column j is `h_j`.
    pub memory: NodeId,
    /// `U_a · memory`, reused by every decoder step.
    pub keys: NodeId,
    pub mask: Vec<bool>,
}

/// One decoder step as tape nodes.
#[derive(Clone, Copy, Debug)]
pub struct TracedStep {
    pub state: NodeId,
    pub alpha: NodeId,
    pub context: NodeId,
    pub p_gen: NodeId,
    pub p_vocab: NodeId,
    pub final_dist: NodeId,
}

pub fn encode_topics_traced(
    tape: &mut Tape<'_>,
    p: &BoundParams,
    cfg: &ModelConfig,
    topic_ids: &[usize],
) -> Result<(Vec<NodeId>, NodeId), ModelError> {
    if topic_ids.len() != cfg.n_topics {
        return Err(ModelError::TopicCount {
            expected: cfg.n_topics,
            got: topic_ids.len(),
        });
    }
    let mut h = tape.constant(Array2::zeros(cfg.hidden_dim, 1));
    let mut states = Vec::with_capacity(topic_ids.len());
    for &t in topic_ids {
        if t > cfg.topic_count {
            return Err(ModelError::InvalidId {
                what: "topic",
                id: t,
                limit: cfg.topic_count + 1,
            });
        }
        let x = tape.row_as_column(p.e_topic, t)?;
        h = gru_step(tape, &p.enc_topic, x, h)?;
        states.push(h);
    }
    Ok((states, h))
}

/// Runs the code encoder from `init`. PAD positions carry the previous
/// state forward and are masked out of attention.
pub fn encode_code_traced(
    tape: &mut Tape<'_>,
    p: &BoundParams,
    cfg: &ModelConfig,
    code_ids: &[usize],
    init: NodeId,
) -> Result<(Vec<NodeId>, NodeId, Vec<bool>), ModelError> {
    if code_ids.is_empty() {
        return Err(ModelError::EmptyCode);
    }
    if code_ids.len() > cfg.max_code_len {
        return Err(ModelError::CodeTooLong {
            len: code_ids.len(),
            max: cfg.max_code_len,
        });
    }
    let mut h = init;
    let mut states = Vec::with_capacity(code_ids.len());
    let mut mask = Vec::with_capacity(code_ids.len());
    for &c in code_ids {
        if c >= cfg.code_vocab_size {
            return Err(ModelError::InvalidId {
                what: "code token",
                id: c,
                limit: cfg.code_vocab_size,
            });
        }
        if c != PAD {
            let x = tape.row_as_column(p.e_code, c)?;
            h = gru_step(tape, &p.enc_code, x, h)?;
        }
        states.push(h);
        mask.push(c != PAD);
    }
    if !mask.iter().any(|&m| m) {
        return Err(ModelError::EmptyCode);
    }
    Ok((states, h, mask))
}

pub fn encode_source_traced(
    tape: &mut Tape<'_>,
    p: &BoundParams,
    cfg: &ModelConfig,
    topic_ids: &[usize],
    code_ids: &[usize],
) -> Result<TracedSource, ModelError> {
    let (topic_states, topic_final, init) = if cfg.use_topics {
        let (states, fin) = encode_topics_traced(tape, p, cfg, topic_ids)?;
        (states, Some(fin), fin)
    } else {
        (Vec::new(), None, tape.constant(Array2::zeros(cfg.hidden_dim, 1)))
    };
    let (code_states, code_final, mask) = encode_code_traced(tape, p, cfg, code_ids, init)?;
    let memory = tape.concat_cols(&code_states)?;
    let keys = tape.matmul(p.u_a, memory)?;
    Ok(TracedSource {
        topic_states,
        topic_final,
        code_states,
        code_final,
        memory,
        keys,
        mask,
    })
}

/// Additive attention of `s_prev` over the source memory.
pub fn attention_traced(
    tape: &mut Tape<'_>,
    p: &BoundParams,
    s_prev: NodeId,
    memory: NodeId,
    keys: NodeId,
    mask: &[bool],
) -> Result<(NodeId, NodeId), ModelError> {
    let query = tape.matmul(p.w_a, s_prev)?;
    let pre = tape.add_column(keys, query)?;
    let act = tape.tanh(pre);
    let scores = tape.matmul(p.v_a, act)?;
    let scores = tape.transpose(scores);
    let alpha = tape.softmax(scores, Some(mask))?;
    let context = tape.matmul(memory, alpha)?;
    Ok((alpha, context))
}

/// One decoder step: attend with the previous state, advance the decoder
/// GRU on `[embed(y_prev); context]`, then mix the vocabulary distribution
/// with copy mass scattered onto `copy_ids` (the extended ID of each source
/// position).
#[allow(clippy::too_many_arguments)]
pub fn decode_step_traced(
    tape: &mut Tape<'_>,
    p: &BoundParams,
    cfg: &ModelConfig,
    y_prev: usize,
    s_prev: NodeId,
    memory: NodeId,
    keys: NodeId,
    mask: &[bool],
    copy_ids: &[usize],
    extended_size: usize,
) -> Result<TracedStep, ModelError> {
    if y_prev >= extended_size {
        return Err(ModelError::InvalidId {
            what: "previous output",
            id: y_prev,
            limit: extended_size,
        });
    }
    let emb_id = if y_prev < cfg.sum_vocab_size { y_prev } else { UNK };
    let emb = tape.row_as_column(p.e_sum, emb_id)?;
    let (alpha, context) = attention_traced(tape, p, s_prev, memory, keys, mask)?;
    let input = tape.concat_rows(&[emb, context])?;
    let state = gru_step(tape, &p.dec, input, s_prev)?;

    let features = tape.concat_rows(&[state, context])?;
    let logits = tape.matmul(p.w_out, features)?;
    let logits = tape.add(logits, p.b_out)?;
    let p_vocab = tape.softmax(logits, None)?;

    let gc = tape.matmul(p.w_c, context)?;
    let gs = tape.matmul(p.w_s, state)?;
    let gy = tape.matmul(p.w_y, emb)?;
    let g = tape.add(gc, gs)?;
    let g = tape.add(g, gy)?;
    let g = tape.add(g, p.b_ptr)?;
    let p_gen = tape.sigmoid(g);

    let generated = tape.scale_by(p_vocab, p_gen)?;
    let generated = tape.pad_rows(generated, extended_size)?;
    let p_copy = tape.one_minus(p_gen);
    let copied = tape.scale_by(alpha, p_copy)?;
    let copied = tape.scatter(copied, copy_ids, extended_size)?;
    let final_dist = tape.add(generated, copied)?;
    Ok(TracedStep {
        state,
        alpha,
        context,
        p_gen,
        p_vocab,
        final_dist,
    })
}

fn check_instance(cfg: &ModelConfig, inst: &TrainingInstance) -> Result<usize, ModelError> {
    let ext = cfg.sum_vocab_size + inst.oov_map.len();
    if inst.copy_ids.len() != inst.code_ids.len() {
        return Err(ModelError::Instance(format!(
            "{} copy ids for {} code ids",
            inst.copy_ids.len(),
            inst.code_ids.len()
        )));
    }
    if inst.summary_ids.len() < 2 {
        return Err(ModelError::Instance("summary needs at least BOS and one target".into()));
    }
    if let Some(&bad) = inst.copy_ids.iter().chain(&inst.summary_ids).find(|&&id| id >= ext) {
        return Err(ModelError::InvalidId {
            what: "extended token",
            id: bad,
            limit: ext,
        });
    }
    Ok(ext)
}

/// Per-step decoder outputs of a teacher-forced pass.
pub fn teacher_forced_traced(
    tape: &mut Tape<'_>,
    p: &BoundParams,
    cfg: &ModelConfig,
    inst: &TrainingInstance,
) -> Result<Vec<TracedStep>, ModelError> {
    let ext = check_instance(cfg, inst)?;
    let src = encode_source_traced(tape, p, cfg, &inst.topic_ids, &inst.code_ids)?;
    let mut s = src.code_final;
    let mut steps = Vec::with_capacity(inst.summary_ids.len() - 1);
    for &y_prev in &inst.summary_ids[..inst.summary_ids.len() - 1] {
        let step = decode_step_traced(
            tape,
            p,
            cfg,
            y_prev,
            s,
            src.memory,
            src.keys,
            &src.mask,
            &inst.copy_ids,
            ext,
        )?;
        s = step.state;
        steps.push(step);
    }
    Ok(steps)
}

/// Mean per-token negative log-likelihood of the gold summary under
/// teacher forcing.
pub fn forward_loss_traced(
    tape: &mut Tape<'_>,
    p: &BoundParams,
    cfg: &ModelConfig,
    inst: &TrainingInstance,
) -> Result<NodeId, ModelError> {
    let steps = teacher_forced_traced(tape, p, cfg, inst)?;
    let mut losses = Vec::with_capacity(steps.len());
    for (step, &gold) in steps.iter().zip(&inst.summary_ids[1..]) {
        losses.push(tape.cross_entropy(step.final_dist, gold)?);
    }
    let total = tape.add_n(&losses)?;
    Ok(tape.scale(total, 1.0 / losses.len() as f64))
}

/// Encoder outputs as plain arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderOutputs {
    pub topic_states: Vec<Array2>,
    /// `None` when topics are disabled.
    pub topic_final: Option<Array2>,
    pub code_states: Vec<Array2>,
    pub code_final: Array2,
    pub code_mask: Vec<bool>,
    pub(crate) memory: Array2,
    pub(crate) keys: Array2,
}

/// Everything one decoder step produces.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderStepOutput {
    pub state: Array2,
    pub alpha: Vec<f64>,
    pub context: Array2,
    pub p_gen: f64,
    pub p_vocab: Vec<f64>,
    /// Over the extended vocabulary.
    pub final_dist: Vec<f64>,
}

impl ModelParams {
    pub fn encode_topics(&self, topic_ids: &[usize]) -> Result<(Vec<Array2>, Array2), ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let (states, fin) = encode_topics_traced(&mut tape, &p, &self.config, topic_ids)?;
        Ok((
            states.iter().map(|&s| tape.value(s).clone()).collect(),
            tape.value(fin).clone(),
        ))
    }

    /// Code encoder started from `topic_final`; returns states, final state
    /// and the PAD mask.
    pub fn encode_code(
        &self,
        code_ids: &[usize],
        topic_final: &Array2,
    ) -> Result<(Vec<Array2>, Array2, Vec<bool>), ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let init = tape.constant(topic_final.clone());
        let (states, fin, mask) = encode_code_traced(&mut tape, &p, &self.config, code_ids, init)?;
        Ok((
            states.iter().map(|&s| tape.value(s).clone()).collect(),
            tape.value(fin).clone(),
            mask,
        ))
    }

    pub fn encode(&self, topic_ids: &[usize], code_ids: &[usize]) -> Result<EncoderOutputs, ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let src = encode_source_traced(&mut tape, &p, &self.config, topic_ids, code_ids)?;
        let v = |n: NodeId| tape.value(n).clone();
        Ok(EncoderOutputs {
            topic_states: src.topic_states.iter().map(|&n| v(n)).collect(),
            topic_final: src.topic_final.map(v),
            code_states: src.code_states.iter().map(|&n| v(n)).collect(),
            code_final: v(src.code_final),
            code_mask: src.mask,
            memory: v(src.memory),
            keys: v(src.keys),
        })
    }

    /// Attention weights and context for a decoder state over code states.
    pub fn attention(
        &self,
        s_prev: &Array2,
        code_states: &[Array2],
        code_mask: &[bool],
    ) -> Result<(Vec<f64>, Array2), ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let states: Vec<NodeId> = code_states.iter().map(|s| tape.constant(s.clone())).collect();
        let memory = tape.concat_cols(&states)?;
        let keys = tape.matmul(p.u_a, memory)?;
        let s = tape.constant(s_prev.clone());
        let (alpha, ctx) = attention_traced(&mut tape, &p, s, memory, keys, code_mask)?;
        Ok((tape.value(alpha).data().to_vec(), tape.value(ctx).clone()))
    }

    pub fn decode_step(
        &self,
        y_prev: usize,
        s_prev: &Array2,
        enc: &EncoderOutputs,
        copy_ids: &[usize],
        extended_size: usize,
    ) -> Result<DecoderStepOutput, ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let s = tape.constant(s_prev.clone());
        let memory = tape.constant(enc.memory.clone());
        let keys = tape.constant(enc.keys.clone());
        let step = decode_step_traced(
            &mut tape,
            &p,
            &self.config,
            y_prev,
            s,
            memory,
            keys,
            &enc.code_mask,
            copy_ids,
            extended_size,
        )?;
        Ok(DecoderStepOutput {
            state: tape.value(step.state).clone(),
            alpha: tape.value(step.alpha).data().to_vec(),
            context: tape.value(step.context).clone(),
            p_gen: tape.value(step.p_gen).data()[0],
            p_vocab: tape.value(step.p_vocab).data().to_vec(),
            final_dist: tape.value(step.final_dist).data().to_vec(),
        })
    }

    pub fn forward_loss(&self, inst: &TrainingInstance) -> Result<f64, ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let loss = forward_loss_traced(&mut tape, &p, &self.config, inst)?;
        Ok(tape.value(loss).data()[0])
    }

    /// Loss and its gradient for every array, in [`ModelParams::arrays`] order.
    pub fn loss_and_gradients(&self, inst: &TrainingInstance) -> Result<(f64, Gradients), ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let loss = forward_loss_traced(&mut tape, &p, &self.config, inst)?;
        let grads = tape.backward(loss)?;
        Ok((tape.value(loss).data()[0], grads))
    }

    /// Teacher-forced predictions: for each target position, whether the
    /// argmax of the final distribution equals the gold ID.
    pub fn teacher_forced_hits(&self, inst: &TrainingInstance) -> Result<Vec<bool>, ModelError> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let steps = teacher_forced_traced(&mut tape, &p, &self.config, inst)?;
        Ok(steps
            .iter()
            .zip(&inst.summary_ids[1..])
            .map(|(s, &gold)| tape.value(s.final_dist).argmax() == Some(gold))
            .collect())
    }
}

/// Pure form of the final mixture: `p_gen · P_vocab` padded to the extended
/// size plus `(1 − p_gen) · α` scattered by `copy_ids`.
pub fn mix_distribution(
    p_vocab: &[f64],
    alpha: &[f64],
    p_gen: f64,
    copy_ids: &[usize],
    extended_size: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; extended_size];
    for (o, &pv) in out.iter_mut().zip(p_vocab) {
        *o = p_gen * pv;
    }
    let mut copy = vec![0.0; extended_size];
    for (&id, &a) in copy_ids.iter().zip(alpha) {
        copy[id] += (1.0 - p_gen) * a;
    }
    out.iter_mut().zip(copy).for_each(|(o, c)| *o += c);
    out
}
