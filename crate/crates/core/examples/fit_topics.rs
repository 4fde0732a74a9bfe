//! Fits collapsed-Gibbs LDA to a corpus with two planted topics and
//! checks that the learned topics recover them.
//!
//!     cargo run --release --example fit_topics

use codesum::corpus::Vocabulary;
use codesum::synthetic::PlantedTopics;
use codesum::topics::{fit_gibbs_traced, infer_theta, top_n_topics, topic_top_words, LdaConfig};

fn main() {
    let planted = PlantedTopics::new(2, 12);
    let docs = planted.mixed_documents(200, 50, 1);
    let vocab = Vocabulary::build(&docs, 1000, 1).unwrap();
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| d.iter().map(|w| vocab.lookup(w)).collect()).collect();

    let config = LdaConfig {
        n_iterations: 300,
        ..LdaConfig::with_topics(2)
    };
    let (model, trace) = fit_gibbs_traced(&encoded, vocab, &config).unwrap();
    for (i, ll) in trace.iter().enumerate().filter(|(i, _)| i % 50 == 0) {
        println!("sweep {i:>3}: log-likelihood {ll:.1}");
    }
    for k in 0..2 {
        println!("topic {k}: {:?}", topic_top_words(&model, k, 5));
    }
    for (truth, doc) in planted.single_topic_documents(4, 30, 9) {
        let ids: Vec<usize> = model.encode_document(&doc);
        let theta = infer_theta(&model, &ids, 50, 0);
        println!("planted topic {truth}: inferred ranking {:?}", top_n_topics(&theta, 2).unwrap());
    }
}
