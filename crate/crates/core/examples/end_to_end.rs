//! The whole pipeline on the bundled Java fixtures: extract, mine class
//! topics, build instances, train, checkpoint, reload and summarize.
//!
//!     cargo run --release --example end_to_end

use std::path::PathBuf;

use codesum::corpus::{build_records, class_topics, extract_dir, lda_document, Encoder, InstanceConfig, Vocabulary};
use codesum::pipeline::{beam_search, detokenize, train, TrainConfig};
use codesum::topics::{fit_gibbs, topic_top_words, LdaConfig};
use codesum::topnn::{load_checkpoint, save_checkpoint, ModelConfig};

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/java");
    let classes = extract_dir(&root).unwrap().classes;

    let docs: Vec<Vec<String>> = classes.iter().map(lda_document).collect();
    let lda_vocab = Vocabulary::build(&docs, 10_000, 1).unwrap();
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| d.iter().map(|t| lda_vocab.lookup(t)).collect()).collect();
    let lda = fit_gibbs(&encoded, lda_vocab, &LdaConfig::with_topics(4)).unwrap();
    for k in 0..4 {
        println!("topic {k}: {:?}", topic_top_words(&lda, k, 4));
    }

    let inst_config = InstanceConfig {
        n_topics: 3,
        max_code_len: 60,
        max_sum_len: 16,
        ..Default::default()
    };
    let (records, skipped) = build_records(&classes, &lda, &inst_config).unwrap();
    println!("{} instances, {} methods skipped", records.len(), skipped.total());

    let code_vocab = Vocabulary::build(records.iter().map(|r| &r.code), 5000, 1).unwrap();
    let sum_vocab = Vocabulary::build(records.iter().map(|r| &r.summary), 5000, 1).unwrap();
    let enc = Encoder {
        code_vocab: &code_vocab,
        sum_vocab: &sum_vocab,
        n_topics: 3,
        null_topic: lda.k(),
        max_code_len: 60,
        max_sum_len: 16,
    };
    let instances: Vec<_> = records.iter().map(|r| enc.encode(r)).collect();
    let config = ModelConfig {
        code_vocab_size: code_vocab.len(),
        sum_vocab_size: sum_vocab.len(),
        topic_count: lda.k(),
        n_topics: 3,
        embed_dim: 16,
        topic_embed_dim: 8,
        hidden_dim: 32,
        max_code_len: 60,
        max_sum_len: 16,
        use_topics: true,
    };
    let train_config = TrainConfig {
        epochs: 120,
        learning_rate: 0.01,
        ..Default::default()
    };
    let out = train(&config, &train_config, &instances, None).unwrap();
    println!("final mean loss {:.4}", out.losses.last().unwrap().mean_loss);

    let dir = tempfile_dir();
    let path = dir.join("model.json");
    save_checkpoint(&out.params, &path).unwrap();
    let params = load_checkpoint(&path).unwrap();
    assert_eq!(params, out.params);

    for class in classes.iter().filter(|c| c.class_name == "JsonValue" || c.class_name == "SpeexEncoder") {
        let topics = class_topics(class, &lda, &inst_config).unwrap();
        for m in &class.methods {
            let inst = enc.encode_source(&m.code_tokens, &topics);
            let ids = beam_search(&params, &inst, 3, 15).unwrap();
            println!("{}.{}: {}", class.class_name, m.method_name, detokenize(&ids, &sum_vocab, &inst.oov_map).unwrap());
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("codesum-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
