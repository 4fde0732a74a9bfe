use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TopicError;
use crate::corpus::Vocabulary;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
    pub n_iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// `alpha = 50 / k`, `eta = 0.01`, 500 sweeps, seed 0.
    pub fn with_topics(k: usize) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k.max(1) as f64,
            eta: 0.01,
            n_iterations: 500,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        let bad = |m: &str| Err(TopicError::Config(m.to_owned()));
        if self.k < 1 {
            return bad("k must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if self.n_iterations < 1 {
            return bad("n_iterations must be at least 1");
        }
        Ok(())
    }
}

/// Fitted LDA state.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicModel {
    pub(crate) k: usize,
    pub(crate) alpha: f64,
    pub(crate) eta: f64,
    /// `k x |vocab|`, row-major; each row sums to one.
    pub(crate) beta: Vec<f64>,
    pub(crate) vocab: Vocabulary,
    /// Final topic label of every training token; empty for a loaded model.
    pub(crate) assignments: Vec<Vec<usize>>,
}

/// Per-document topic proportions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub theta: Vec<f64>,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn beta_row(&self, topic: usize) -> &[f64] {
        let v = self.vocab_size();
        &self.beta[topic * v..(topic + 1) * v]
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    /// Token IDs of a document under this model's vocabulary; unknown
    /// tokens are dropped.
    pub fn encode_document<T: AsRef<str>>(&self, tokens: &[T]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.vocab.get(t.as_ref())).collect()
    }

    /// θ of each training document from the retained assignments.
    pub fn training_thetas(&self) -> Vec<TopicDistribution> {
        self.assignments
            .iter()
            .map(|z| {
                let mut counts = vec![0usize; self.k];
                z.iter().for_each(|&t| counts[t] += 1);
                theta_from_counts(&counts, self.alpha)
            })
            .collect()
    }
}

fn theta_from_counts(counts: &[usize], alpha: f64) -> TopicDistribution {
    let n: usize = counts.iter().sum();
    let denom = n as f64 + counts.len() as f64 * alpha;
    TopicDistribution {
        theta: counts.iter().map(|&c| (c as f64 + alpha) / denom).collect(),
    }
}

/// Collapsed Gibbs sampler state.
struct Sampler<'d> {
    docs: &'d [Vec<usize>],
    k: usize,
    v: usize,
    alpha: f64,
    eta: f64,
    z: Vec<Vec<usize>>,
    doc_topic: Vec<usize>,
    topic_word: Vec<usize>,
    topic_total: Vec<usize>,
    weights: Vec<f64>,
}

impl<'d> Sampler<'d> {
    fn new(docs: &'d [Vec<usize>], v: usize, config: &LdaConfig, rng: &mut impl Rng) -> Self {
        let k = config.k;
        let mut s = Sampler {
            docs,
            k,
            v,
            alpha: config.alpha,
            eta: config.eta,
            z: Vec::with_capacity(docs.len()),
            doc_topic: vec![0; docs.len() * k],
            topic_word: vec![0; k * v],
            topic_total: vec![0; k],
            weights: vec![0.0; k],
        };
        for (d, doc) in docs.iter().enumerate() {
            let labels: Vec<usize> = doc.iter().map(|_| rng.gen_range(0..k)).collect();
            for (&w, &t) in doc.iter().zip(&labels) {
                s.doc_topic[d * k + t] += 1;
                s.topic_word[t * v + w] += 1;
                s.topic_total[t] += 1;
            }
            s.z.push(labels);
        }
        s
    }

    fn sweep(&mut self, rng: &mut impl Rng) {
        let (k, v) = (self.k, self.v);
        let v_eta = v as f64 * self.eta;
        for (d, doc) in self.docs.iter().enumerate() {
            for (n, &w) in doc.iter().enumerate() {
                let old = self.z[d][n];
                self.doc_topic[d * k + old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (self.doc_topic[d * k + t] as f64 + self.alpha)
                        * (self.topic_word[t * v + w] as f64 + self.eta)
                        / (self.topic_total[t] as f64 + v_eta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][n] = new;
                self.doc_topic[d * k + new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_total[new] += 1;
            }
        }
        debug_assert!(self.counts_consistent());
    }

    fn counts_consistent(&self) -> bool {
        let k = self.k;
        let docs_ok = self
            .docs
            .iter()
            .enumerate()
            .all(|(d, doc)| self.doc_topic[d * k..(d + 1) * k].iter().sum::<usize>() == doc.len());
        let topics_ok = (0..k).all(|t| {
            self.topic_word[t * self.v..(t + 1) * self.v].iter().sum::<usize>() == self.topic_total[t]
        });
        docs_ok && topics_ok
    }

    fn beta(&self) -> Vec<f64> {
        let v_eta = self.v as f64 * self.eta;
        let mut beta = Vec::with_capacity(self.k * self.v);
        for t in 0..self.k {
            let denom = self.topic_total[t] as f64 + v_eta;
            beta.extend(
                self.topic_word[t * self.v..(t + 1) * self.v]
                    .iter()
                    .map(|&c| (c as f64 + self.eta) / denom),
            );
        }
        beta
    }

    fn log_likelihood(&self) -> f64 {
        let beta = self.beta();
        let k = self.k;
        let mut ll = 0.0;
        for (d, doc) in self.docs.iter().enumerate() {
            let theta = theta_from_counts(&self.doc_topic[d * k..(d + 1) * k], self.alpha);
            ll += doc_log_likelihood(&beta, self.v, &theta.theta, doc);
        }
        ll
    }
}

fn doc_log_likelihood(beta: &[f64], v: usize, theta: &[f64], doc: &[usize]) -> f64 {
    doc.iter()
        .filter(|&&w| w < v)
        .map(|&w| {
            theta
                .iter()
                .enumerate()
                .map(|(t, th)| th * beta[t * v + w])
                .sum::<f64>()
                .ln()
        })
        .sum()
}

fn check_documents(docs: &[Vec<usize>], v: usize) -> Result<(), TopicError> {
    if docs.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    for (d, doc) in docs.iter().enumerate() {
        if let Some(&w) = doc.iter().find(|&&w| w >= v) {
            return Err(TopicError::TokenOutOfRange {
                document: d,
                token: w,
                vocab_size: v,
            });
        }
    }
    Ok(())
}

/// Fits LDA by collapsed Gibbs sampling. The point estimate comes from the
/// counts after the final sweep; `(documents, config)` fully determine it.
pub fn fit_gibbs(
    documents: &[Vec<usize>],
    vocab: Vocabulary,
    config: &LdaConfig,
) -> Result<TopicModel, TopicError> {
    fit_gibbs_inner(documents, vocab, config, false).map(|(m, _)| m)
}

/// Like [`fit_gibbs`], also returning the corpus log-likelihood under the
/// point estimate after every sweep.
pub fn fit_gibbs_traced(
    documents: &[Vec<usize>],
    vocab: Vocabulary,
    config: &LdaConfig,
) -> Result<(TopicModel, Vec<f64>), TopicError> {
    fit_gibbs_inner(documents, vocab, config, true)
}

fn fit_gibbs_inner(
    documents: &[Vec<usize>],
    vocab: Vocabulary,
    config: &LdaConfig,
    trace: bool,
) -> Result<(TopicModel, Vec<f64>), TopicError> {
    config.validate()?;
    let v = vocab.len();
    check_documents(documents, v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sampler = Sampler::new(documents, v, config, &mut rng);
    let mut lls = Vec::new();
    for _ in 0..config.n_iterations {
        sampler.sweep(&mut rng);
        if trace {
            lls.push(sampler.log_likelihood());
        }
    }
    let model = TopicModel {
        k: config.k,
        alpha: config.alpha,
        eta: config.eta,
        beta: sampler.beta(),
        vocab,
        assignments: sampler.z,
    };
    Ok((model, lls))
}

/// Infers θ for a held-out document by Gibbs sampling with β fixed.
/// Token IDs outside the model vocabulary are skipped.
pub fn infer_theta(model: &TopicModel, document: &[usize], n_iterations: usize, seed: u64) -> TopicDistribution {
    let (k, v) = (model.k, model.vocab_size());
    let doc: Vec<usize> = document.iter().copied().filter(|&w| w < v).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; k];
    let mut z: Vec<usize> = doc.iter().map(|_| rng.gen_range(0..k)).collect();
    z.iter().for_each(|&t| counts[t] += 1);
    let mut weights = vec![0.0; k];
    for _ in 0..n_iterations {
        for (n, &w) in doc.iter().enumerate() {
            counts[z[n]] -= 1;
            let mut total = 0.0;
            for (t, slot) in weights.iter_mut().enumerate() {
                total += (counts[t] as f64 + model.alpha) * model.beta[t * v + w];
                *slot = total;
            }
            let u = rng.gen::<f64>() * total;
            let t = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[n] = t;
            counts[t] += 1;
        }
    }
    theta_from_counts(&counts, model.alpha)
}

/// Indices of the `n` heaviest topics, heaviest first; ties go to the
/// lower index.
pub fn top_n_topics(theta: &TopicDistribution, n: usize) -> Result<Vec<usize>, TopicError> {
    let k = theta.theta.len();
    if n > k {
        return Err(TopicError::TooManyTopics { requested: n, k });
    }
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| theta.theta[b].total_cmp(&theta.theta[a]).then(a.cmp(&b)));
    idx.truncate(n);
    Ok(idx)
}

/// The `n` most probable words of a topic, lexicographic on ties.
pub fn topic_top_words(model: &TopicModel, topic: usize, n: usize) -> Vec<String> {
    let row = model.beta_row(topic);
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| {
        row[b]
            .total_cmp(&row[a])
            .then_with(|| model.vocab.token(a).cmp(&model.vocab.token(b)))
    });
    idx.into_iter()
        .take(n)
        .filter_map(|i| model.vocab.token(i).map(str::to_owned))
        .collect()
}

/// `Σ_d Σ_n log Σ_k θ_dk β_k,w_dn` with the given per-document θ.
pub fn corpus_log_likelihood(
    model: &TopicModel,
    documents: &[Vec<usize>],
    thetas: &[TopicDistribution],
) -> Result<f64, TopicError> {
    if documents.len() != thetas.len() {
        return Err(TopicError::ThetaCount {
            documents: documents.len(),
            thetas: thetas.len(),
        });
    }
    Ok(documents
        .iter()
        .zip(thetas)
        .map(|(doc, th)| doc_log_likelihood(&model.beta, model.vocab_size(), &th.theta, doc))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::build([words.iter().copied()], 100, 1).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(LdaConfig::with_topics(0).validate().is_err());
        let mut c = LdaConfig::with_topics(2);
        c.eta = 0.0;
        assert!(c.validate().is_err());
        c.eta = 0.1;
        c.n_iterations = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_word_single_topic_concentrates() {
        let v = vocab(&["x"]);
        let x = v.get("x").unwrap();
        let model = fit_gibbs(&[vec![x, x, x]], v, &LdaConfig::with_topics(1)).unwrap();
        assert!(model.beta_row(0)[x] > 0.9);
        assert_eq!(topic_top_words(&model, 0, 1), ["x"]);
        assert!(topic_top_words(&model, 0, 0).is_empty());
    }

    #[test]
    fn beta_rows_are_normalized_and_positive() {
        let v = vocab(&["a", "b", "c", "d"]);
        let docs = vec![vec![4, 5, 5, 6], vec![7, 7, 4], vec![]];
        let mut cfg = LdaConfig::with_topics(3);
        cfg.n_iterations = 20;
        let model = fit_gibbs(&docs, v, &cfg).unwrap();
        for t in 0..3 {
            let row = model.beta_row(t);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| p > 0.0));
        }
        assert_eq!(model.assignments()[2].len(), 0);
    }

    #[test]
    fn errors() {
        let v = vocab(&["a"]);
        assert_eq!(
            fit_gibbs(&[], v.clone(), &LdaConfig::with_topics(2)),
            Err(TopicError::EmptyCorpus)
        );
        assert!(matches!(
            fit_gibbs(&[vec![99]], v, &LdaConfig::with_topics(2)),
            Err(TopicError::TokenOutOfRange { token: 99, .. })
        ));
    }

    #[test]
    fn empty_document_infers_the_prior() {
        let v = vocab(&["a", "b"]);
        let mut cfg = LdaConfig::with_topics(4);
        cfg.n_iterations = 5;
        let model = fit_gibbs(&[vec![4, 5]], v, &cfg).unwrap();
        let theta = infer_theta(&model, &[], 10, 0);
        assert_eq!(theta.theta, vec![0.25; 4]);
        let theta = infer_theta(&model, &[4, 5, 5, 999], 50, 0);
        assert!((theta.theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn top_n_examples() {
        let th = |v: &[f64]| TopicDistribution { theta: v.to_vec() };
        assert_eq!(top_n_topics(&th(&[0.1, 0.6, 0.3]), 2).unwrap(), [1, 2]);
        assert_eq!(top_n_topics(&th(&[1.0 / 3.0; 3]), 3).unwrap(), [0, 1, 2]);
        assert_eq!(top_n_topics(&th(&[0.3, 0.5, 0.2]), 3).unwrap(), [1, 0, 2]);
        assert_eq!(
            top_n_topics(&th(&[0.5, 0.5]), 3),
            Err(TopicError::TooManyTopics { requested: 3, k: 2 })
        );
    }

    #[test]
    fn log_likelihood_closed_form_and_empty() {
        let v = vocab(&["x"]);
        let x = v.get("x").unwrap();
        let model = fit_gibbs(&[vec![x]], v, &LdaConfig::with_topics(1)).unwrap();
        let p = model.beta_row(0)[x];
        let one = TopicDistribution { theta: vec![1.0] };
        let ll = corpus_log_likelihood(&model, &[vec![x]], &[one]).unwrap();
        assert!((ll - p.ln()).abs() < 1e-15);
        assert_eq!(corpus_log_likelihood(&model, &[], &[]).unwrap(), 0.0);
    }
}
