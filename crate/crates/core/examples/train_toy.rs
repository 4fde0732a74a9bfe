//! Overfits the network on 50 generated methods and reports teacher-forced
//! accuracy and greedy reproduction.
//!
//!     cargo run --release --example train_toy

use codesum::corpus::{Encoder, Vocabulary};
use codesum::pipeline::{detokenize, greedy_decode, teacher_forced_accuracy, train, TrainConfig};
use codesum::synthetic::toy_summaries;
use codesum::topnn::ModelConfig;

fn main() {
    let records = toy_summaries(50, 3, 5, 0);
    let code_vocab = Vocabulary::build(records.iter().map(|r| &r.code), 200, 1).unwrap();
    let sum_vocab = Vocabulary::build(records.iter().map(|r| &r.summary), 200, 1).unwrap();
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
        epochs: 100,
        batch_size: 5,
        learning_rate: 5e-3,
        ..Default::default()
    };
    let out = train(&config, &train_config, &instances, None).unwrap();
    for l in out.losses.iter().filter(|l| l.epoch % 10 == 0) {
        println!("epoch {:>3}: {:.4}", l.epoch, l.mean_loss);
    }
    println!("teacher-forced accuracy: {:.3}", teacher_forced_accuracy(&out.params, &instances).unwrap());
    for (r, inst) in records.iter().zip(&instances).take(5) {
        let ids = greedy_decode(&out.params, inst, 7).unwrap();
        println!("{:<16} -> {}", r.method, detokenize(&ids, &sum_vocab, &inst.oov_map).unwrap());
    }
}
