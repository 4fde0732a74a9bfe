//! Trains on methods whose summaries name a field seen nowhere else, so
//! the only way to produce it is to copy it from the code. Prints p_gen at
//! each decoding step to show the switch from generating to copying.
//!
//!     cargo run --release --example copy_oov

use codesum::corpus::{Encoder, Vocabulary, BOS, EOS, UNK};
use codesum::pipeline::{detokenize, train, TrainConfig};
use codesum::synthetic::unique_oov_corpus;
use codesum::topnn::ModelConfig;

fn main() {
    let records = unique_oov_corpus(40, 3, 5, 1);
    let code_vocab = Vocabulary::build(records.iter().map(|r| &r.code), 200, 1).unwrap();
    // min_count 2 keeps every per-method field out of the summary vocabulary
    let sum_vocab = Vocabulary::build(records.iter().map(|r| &r.summary), 200, 2).unwrap();
    let enc = Encoder {
        code_vocab: &code_vocab,
        sum_vocab: &sum_vocab,
        n_topics: 3,
        null_topic: 5,
        max_code_len: 20,
        max_sum_len: 8,
    };
    let instances: Vec<_> = records.iter().map(|r| enc.encode(r)).collect();
    let config = ModelConfig {
        code_vocab_size: code_vocab.len(),
        sum_vocab_size: sum_vocab.len(),
        topic_count: 5,
        n_topics: 3,
        embed_dim: 32,
        topic_embed_dim: 16,
        hidden_dim: 64,
        max_code_len: 20,
        max_sum_len: 8,
        use_topics: true,
    };
    let train_config = TrainConfig {
        epochs: 150,
        batch_size: 5,
        learning_rate: 5e-3,
        ..Default::default()
    };
    let params = train(&config, &train_config, &instances, None).unwrap().params;

    for (r, inst) in records.iter().zip(&instances).take(4) {
        let enc_out = params.encode(&inst.topic_ids, &inst.code_ids).unwrap();
        let ext = config.sum_vocab_size + inst.oov_map.len();
        let (mut y, mut s) = (BOS, enc_out.code_final.clone());
        let mut ids = Vec::new();
        let mut switches = Vec::new();
        while ids.len() < 7 && y != EOS {
            let step = params.decode_step(y, &s, &enc_out, &inst.copy_ids, ext).unwrap();
            y = step.final_dist.iter().enumerate().fold(0, |b, (i, &p)| if p > step.final_dist[b] { i } else { b });
            switches.push(format!("{:.2}", step.p_gen));
            ids.push(y);
            s = step.state;
        }
        println!(
            "{}: \"{}\" ({} in summary vocab: {}, p_gen per step {:?})",
            r.method,
            detokenize(&ids, &sum_vocab, &inst.oov_map).unwrap(),
            r.summary[2],
            sum_vocab.lookup(&r.summary[2]) != UNK,
            switches
        );
    }
}
