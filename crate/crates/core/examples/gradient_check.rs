//! Compares the tape's gradients of the full network loss with central
//! finite differences.
//!
//!     cargo run --release --example gradient_check

use codesum::corpus::{OovMap, TrainingInstance, BOS, EOS};
use codesum::neuro::{grad_check, NeuroError, NodeId, Tape};
use codesum::topnn::{forward_loss_traced, BoundParams, ModelConfig, ModelError, ModelParams};

fn main() {
    let config = ModelConfig {
        code_vocab_size: 16,
        sum_vocab_size: 10,
        topic_count: 4,
        n_topics: 3,
        embed_dim: 6,
        topic_embed_dim: 4,
        hidden_dim: 12,
        max_code_len: 8,
        max_sum_len: 6,
        use_topics: true,
    };
    let params = ModelParams::init(&config, 7).unwrap();
    let mut oov = OovMap::new(config.sum_vocab_size);
    let speex = oov.insert("speex");
    let inst = TrainingInstance {
        code_ids: vec![4, 5, 1, 6, 7, 8],
        topic_ids: vec![2, 0, 4],
        summary_ids: vec![BOS, 5, speex, 6, EOS],
        source_tokens: ["byte", "create", "speex", "packet", "(", ")"].map(String::from).to_vec(),
        copy_ids: vec![1, 5, speex, 6, 1, 1],
        oov_map: oov,
        class: "SpeexEncoder".into(),
        method: "createSpeexPacket".into(),
    };
    println!("{} parameters in {} arrays", params.parameter_count(), params.arrays().len());
    let err = grad_check(&params.to_arrays(), 1e-5, 200, 0, |tape: &mut Tape<'_>, nodes: &[NodeId]| {
        let bound = BoundParams::from_nodes(nodes).map_err(|_| NeuroError::Empty("params"))?;
        forward_loss_traced(tape, &bound, &config, &inst).map_err(|e| match e {
            ModelError::Neuro(n) => n,
            other => panic!("{other}"),
        })
    })
    .unwrap();
    println!("max relative error: {err:.3e}");
}
