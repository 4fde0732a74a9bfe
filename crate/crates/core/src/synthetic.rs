//! Small generated corpora with known structure, for experiments and tests.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::InstanceRecord;

/// Topics over disjoint word sets with decaying weights, so each topic's
/// top words are known.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedTopics {
    /// `words[k]` is topic `k`'s vocabulary, heaviest first.
    pub words: Vec<Vec<String>>,
    /// Unnormalized weight of the i-th word of every topic.
    pub weights: Vec<f64>,
}

impl PlantedTopics {
    /// Word `i` of topic `k` is `t{k}w{i}` with weight `1 / (i + 1)`.
    pub fn new(k: usize, words_per_topic: usize) -> Self {
        PlantedTopics {
            words: (0..k)
                .map(|t| (0..words_per_topic).map(|i| format!("t{t}w{i}")).collect())
                .collect(),
            weights: (0..words_per_topic).map(|i| 1.0 / (i + 1) as f64).collect(),
        }
    }

    fn word(&self, topic: usize, rng: &mut impl Rng) -> String {
        let total: f64 = self.weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        for (i, w) in self.weights.iter().enumerate() {
            u -= w;
            if u < 0.0 {
                return self.words[topic][i].clone();
            }
        }
        self.words[topic].last().cloned().unwrap_or_default()
    }

    /// One document whose tokens come from topic `k` with probability
    /// `theta[k]`.
    pub fn document(&self, theta: &[f64], len: usize, rng: &mut impl Rng) -> Vec<String> {
        (0..len)
            .map(|_| {
                let mut u = rng.gen::<f64>();
                let mut topic = theta.len() - 1;
                for (k, &p) in theta.iter().enumerate() {
                    if u < p {
                        topic = k;
                        break;
                    }
                    u -= p;
                }
                self.word(topic, rng)
            })
            .collect()
    }

    /// Two-topic mixtures with a uniformly drawn share.
    pub fn mixed_documents(&self, n: usize, len: usize, seed: u64) -> Vec<Vec<String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let a: f64 = rng.gen();
                let mut theta = vec![0.0; self.words.len()];
                theta[0] = a;
                theta[1 % self.words.len()] += 1.0 - a;
                self.document(&theta, len, &mut rng)
            })
            .collect()
    }

    /// `(topic, document)` pairs, alternating topics.
    pub fn single_topic_documents(&self, n: usize, len: usize, seed: u64) -> Vec<(usize, Vec<String>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let topic = i % self.words.len();
                let mut theta = vec![0.0; self.words.len()];
                theta[topic] = 1.0;
                (topic, self.document(&theta, len, &mut rng))
            })
            .collect()
    }
}

const VERBS: [(&str, &str); 10] = [
    ("get", "returns"),
    ("set", "sets"),
    ("add", "adds"),
    ("remove", "removes"),
    ("find", "finds"),
    ("create", "creates"),
    ("update", "updates"),
    ("load", "loads"),
    ("save", "saves"),
    ("clear", "clears"),
];

const NOUNS: [&str; 12] = [
    "name", "value", "buffer", "user", "cache", "packet", "node", "file", "token", "index", "entry", "config",
];

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn method_code(verb: &str, noun: &str, field: &str) -> Vec<String> {
    match verb {
        "get" | "find" => words(&format!("public {noun} {verb} {field} ( ) {{ return this . {field} ; }}")),
        "set" | "update" => words(&format!(
            "public void {verb} {field} ( {noun} value ) {{ this . {field} = value ; }}"
        )),
        "add" | "remove" | "clear" => words(&format!("public void {verb} {field} ( ) {{ {field} . {verb} ( ) ; }}")),
        _ => words(&format!(
            "public void {verb} {field} ( ) throws io exception {{ store . {verb} ( {field} ) ; }}"
        )),
    }
}

fn topics_for(i: usize, n_topics: usize, topic_count: usize) -> Vec<usize> {
    (0..n_topics).map(|j| (i + j) % topic_count).collect()
}

/// `n` methods (at most 120) whose summary is "<verb>s the <noun>", one per
/// distinct verb/noun pair.
pub fn toy_summaries(n: usize, n_topics: usize, topic_count: usize, seed: u64) -> Vec<InstanceRecord> {
    let mut pairs: Vec<(usize, usize)> = (0..VERBS.len())
        .flat_map(|v| (0..NOUNS.len()).map(move |o| (v, o)))
        .collect();
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    pairs
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, (v, o))| {
            let (verb, gloss) = VERBS[v];
            let noun = NOUNS[o];
            InstanceRecord {
                code: method_code(verb, noun, noun),
                topics: topics_for(v, n_topics, topic_count),
                summary: words(&format!("{gloss} the {noun}")),
                class: format!("Toy{}", i / 5),
                method: format!("{verb}_{noun}"),
            }
        })
        .collect()
}

fn made_up_word(rng: &mut impl Rng) -> String {
    const C: &[u8] = b"bdfgklmnprstvz";
    const V: &[u8] = b"aeiou";
    (0..3)
        .flat_map(|_| [C[rng.gen_range(0..C.len())], V[rng.gen_range(0..V.len())]])
        .map(char::from)
        .collect()
}

/// `n` methods, each naming a field that appears nowhere else in the
/// corpus; every summary mentions that field, so it can only be produced
/// by copying.
pub fn unique_oov_corpus(n: usize, n_topics: usize, topic_count: usize, seed: u64) -> Vec<InstanceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reserved: HashSet<String> = VERBS
        .iter()
        .flat_map(|(a, b)| [a.to_string(), b.to_string()])
        .chain(NOUNS.iter().map(|s| s.to_string()))
        .collect();
    let mut seen = HashSet::new();
    (0..n)
        .map(|i| {
            let field = loop {
                let w = made_up_word(&mut rng);
                if !reserved.contains(&w) && seen.insert(w.clone()) {
                    break w;
                }
            };
            let (verb, gloss) = VERBS[i % VERBS.len()];
            let noun = NOUNS[(i / VERBS.len()) % NOUNS.len()];
            InstanceRecord {
                code: method_code(verb, noun, &field),
                topics: topics_for(i % VERBS.len(), n_topics, topic_count),
                summary: words(&format!("{gloss} the {field}")),
                class: format!("Unique{}", i / 5),
                method: format!("{verb}_{field}"),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_documents_stay_in_their_topic() {
        let p = PlantedTopics::new(2, 10);
        for (t, doc) in p.single_topic_documents(6, 40, 1) {
            assert!(doc.iter().all(|w| w.starts_with(&format!("t{t}w"))));
        }
        let docs = p.mixed_documents(5, 50, 2);
        assert_eq!(docs.len(), 5);
        assert!(docs.iter().all(|d| d.len() == 50));
    }

    #[test]
    fn toy_pairs_are_distinct() {
        let rs = toy_summaries(50, 3, 5, 0);
        let names: HashSet<_> = rs.iter().map(|r| r.method.clone()).collect();
        assert_eq!(names.len(), 50);
        assert!(rs.iter().all(|r| r.summary.len() == 3 && r.topics.len() == 3));
    }

    #[test]
    fn unique_fields_appear_once() {
        let rs = unique_oov_corpus(40, 3, 5, 0);
        for (i, r) in rs.iter().enumerate() {
            let field = &r.summary[2];
            assert!(r.code.contains(field));
            for (j, other) in rs.iter().enumerate() {
                if i != j {
                    assert!(!other.code.contains(field) && !other.summary.contains(field));
                }
            }
        }
    }
}
