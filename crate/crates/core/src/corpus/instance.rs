use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extract::RawClass;
use super::summary::{extract_summary, summary_tokens};
use super::vocab::{Vocabulary, BOS, EOS, UNK};
use super::CorpusError;
use crate::topics::{infer_theta, top_n_topics, TopicModel};

/// Methods with fewer code tokens are skipped.
pub const MIN_CODE_TOKENS: usize = 3;
/// Summaries with fewer tokens are skipped.
pub const MIN_SUMMARY_TOKENS: usize = 2;

const JAVA_KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long", "native",
    "new", "package", "private", "protected", "public", "return", "short", "static", "strictfp",
    "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try", "void",
    "volatile", "while", "true", "false", "null", "var", "record",
];

/// The bag of words LDA sees for a class: alphabetic subtokens of at least
/// two characters, Java keywords removed.
pub fn lda_document(class: &RawClass) -> Vec<String> {
    class
        .class_tokens
        .iter()
        .filter(|t| t.len() >= 2 && t.chars().all(char::is_alphabetic) && !JAVA_KEYWORDS.contains(&t.as_str()))
        .cloned()
        .collect()
}

/// One line of the instances file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub code: Vec<String>,
    pub topics: Vec<usize>,
    pub summary: Vec<String>,
    pub class: String,
    pub method: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SkipReport {
    pub no_summary: usize,
    pub short_code: usize,
    pub short_summary: usize,
}

impl SkipReport {
    pub fn total(&self) -> usize {
        self.no_summary + self.short_code + self.short_summary
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub n_topics: usize,
    pub max_code_len: usize,
    pub max_sum_len: usize,
    pub infer_iterations: usize,
    pub seed: u64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            n_topics: 10,
            max_code_len: 100,
            max_sum_len: 30,
            infer_iterations: 50,
            seed: 0,
        }
    }
}

/// Top topics of a class, inferred with the fitted model.
pub fn class_topics(class: &RawClass, model: &TopicModel, config: &InstanceConfig) -> Result<Vec<usize>, CorpusError> {
    let doc = model.encode_document(&lda_document(class));
    let theta = infer_theta(model, &doc, config.infer_iterations, config.seed);
    Ok(top_n_topics(&theta, config.n_topics)?)
}

/// Pairs every documented method with its summary and its class's topics.
/// Code is truncated to `max_code_len`; methods without a usable summary
/// or with degenerate code are counted in the report instead.
pub fn build_records(
    classes: &[RawClass],
    model: &TopicModel,
    config: &InstanceConfig,
) -> Result<(Vec<InstanceRecord>, SkipReport), CorpusError> {
    if config.n_topics > model.k() {
        return Err(CorpusError::Topic(crate::topics::TopicError::TooManyTopics {
            requested: config.n_topics,
            k: model.k(),
        }));
    }
    let per_class: Vec<Result<(Vec<InstanceRecord>, SkipReport), CorpusError>> = classes
        .par_iter()
        .map(|class| {
            let mut report = SkipReport::default();
            let mut records = Vec::new();
            let mut topics = None;
            for m in &class.methods {
                let Some(summary) = m.doc_comment.as_deref().and_then(extract_summary) else {
                    report.no_summary += 1;
                    continue;
                };
                if m.code_tokens.len() < MIN_CODE_TOKENS {
                    report.short_code += 1;
                    continue;
                }
                let summary = summary_tokens(&summary);
                if summary.len() < MIN_SUMMARY_TOKENS {
                    report.short_summary += 1;
                    continue;
                }
                let topics = match &topics {
                    Some(t) => t,
                    None => topics.insert(class_topics(class, model, config)?),
                };
                records.push(InstanceRecord {
                    code: m.code_tokens.iter().take(config.max_code_len).cloned().collect(),
                    topics: topics.clone(),
                    summary,
                    class: class.class_name.clone(),
                    method: m.method_name.clone(),
                });
            }
            Ok((records, report))
        })
        .collect();

    let mut records = Vec::new();
    let mut report = SkipReport::default();
    for r in per_class {
        let (rs, rep) = r?;
        records.extend(rs);
        report.no_summary += rep.no_summary;
        report.short_code += rep.short_code;
        report.short_summary += rep.short_summary;
    }
    Ok((records, report))
}

/// Source tokens absent from the summary vocabulary, numbered densely from
/// `base = |summary vocabulary|` in order of first occurrence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OovMap {
    base: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl OovMap {
    pub fn new(base: usize) -> Self {
        OovMap {
            base,
            ..Default::default()
        }
    }

    /// Extended ID of `token`, assigning the next free one if new.
    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return self.base + i;
        }
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), self.tokens.len() - 1);
        self.base + self.tokens.len() - 1
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|&i| self.base + i)
    }

    pub fn token(&self, ext_id: usize) -> Option<&str> {
        ext_id
            .checked_sub(self.base)
            .and_then(|i| self.tokens.get(i))
            .map(String::as_str)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Size of the extended vocabulary.
    pub fn extended_size(&self) -> usize {
        self.base + self.tokens.len()
    }
}

/// A method ready for the network.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingInstance {
    /// Code vocabulary IDs, OOV as UNK.
    pub code_ids: Vec<usize>,
    /// Exactly `n_topics` topic indices; the null topic pads short lists.
    pub topic_ids: Vec<usize>,
    /// BOS, extended summary IDs, EOS.
    pub summary_ids: Vec<usize>,
    pub source_tokens: Vec<String>,
    pub oov_map: OovMap,
    /// Per source position: the extended ID its token is copied as.
    pub copy_ids: Vec<usize>,
    pub class: String,
    pub method: String,
}

/// Vocabularies and length limits used to turn records into instances.
#[derive(Clone, Copy, Debug)]
pub struct Encoder<'v> {
    pub code_vocab: &'v Vocabulary,
    pub sum_vocab: &'v Vocabulary,
    pub n_topics: usize,
    /// Index of the null topic (the topic count K).
    pub null_topic: usize,
    pub max_code_len: usize,
    pub max_sum_len: usize,
}

impl Encoder<'_> {
    /// Source side only; used at generation time when there is no summary.
    pub fn encode_source(&self, code: &[String], topics: &[usize]) -> TrainingInstance {
        let source_tokens: Vec<String> = code.iter().take(self.max_code_len).cloned().collect();
        let code_ids = source_tokens.iter().map(|t| self.code_vocab.lookup(t)).collect();
        let mut oov_map = OovMap::new(self.sum_vocab.len());
        let copy_ids = source_tokens
            .iter()
            .map(|t| self.sum_vocab.get(t).unwrap_or_else(|| oov_map.insert(t)))
            .collect();
        let mut topic_ids: Vec<usize> = topics.iter().take(self.n_topics).copied().collect();
        topic_ids.resize(self.n_topics, self.null_topic);
        TrainingInstance {
            code_ids,
            topic_ids,
            summary_ids: vec![BOS, EOS],
            source_tokens,
            oov_map,
            copy_ids,
            class: String::new(),
            method: String::new(),
        }
    }

    pub fn encode(&self, record: &InstanceRecord) -> TrainingInstance {
        let mut inst = self.encode_source(&record.code, &record.topics);
        let keep = self.max_sum_len.saturating_sub(2);
        let mut summary_ids = Vec::with_capacity(keep + 2);
        summary_ids.push(BOS);
        summary_ids.extend(record.summary.iter().take(keep).map(|t| {
            self.sum_vocab
                .get(t)
                .or_else(|| inst.oov_map.get(t))
                .unwrap_or(UNK)
        }));
        summary_ids.push(EOS);
        inst.summary_ids = summary_ids;
        inst.class.clone_from(&record.class);
        inst.method.clone_from(&record.method);
        inst
    }
}

/// Records straight to instances; see [`build_records`] and [`Encoder`].
pub fn build_instances(
    classes: &[RawClass],
    model: &TopicModel,
    code_vocab: &Vocabulary,
    sum_vocab: &Vocabulary,
    config: &InstanceConfig,
) -> Result<(Vec<TrainingInstance>, SkipReport), CorpusError> {
    let (records, report) = build_records(classes, model, config)?;
    let enc = Encoder {
        code_vocab,
        sum_vocab,
        n_topics: config.n_topics,
        null_topic: model.k(),
        max_code_len: config.max_code_len,
        max_sum_len: config.max_sum_len,
    };
    Ok((records.iter().map(|r| enc.encode(r)).collect(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{extract_classes, RawMethod};
    use crate::topics::{fit_gibbs, LdaConfig, TopicDistribution};

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn vocab(s: &str) -> Vocabulary {
        Vocabulary::build([words(s)], 100, 1).unwrap()
    }

    #[test]
    fn topic_order_follows_weights() {
        let mut theta = vec![0.0; 8];
        theta[3] = 0.5;
        theta[0] = 0.3;
        theta[7] = 0.2;
        assert_eq!(top_n_topics(&TopicDistribution { theta }, 2).unwrap(), [3, 0]);
    }

    #[test]
    fn oov_tokens_get_dense_first_occurrence_ids() {
        let sum_vocab = vocab("creates a packet");
        let code_vocab = vocab("create packet ( )");
        let enc = Encoder {
            code_vocab: &code_vocab,
            sum_vocab: &sum_vocab,
            n_topics: 3,
            null_topic: 5,
            max_code_len: 10,
            max_sum_len: 10,
        };
        let rec = InstanceRecord {
            code: words("speex packet speex ogg"),
            topics: vec![2],
            summary: words("creates speex packet for ogg"),
            class: "C".into(),
            method: "create".into(),
        };
        let inst = enc.encode(&rec);
        let v = sum_vocab.len();
        assert_eq!(inst.oov_map.get("speex"), Some(v));
        assert_eq!(inst.oov_map.get("ogg"), Some(v + 1));
        assert_eq!(inst.oov_map.len(), 2);
        assert_eq!(inst.copy_ids, [v, sum_vocab.get("packet").unwrap(), v, v + 1]);
        assert_eq!(inst.code_ids, [UNK, code_vocab.get("packet").unwrap(), UNK, UNK]);
        assert_eq!(inst.topic_ids, [2, 5, 5]);
        assert_eq!(
            inst.summary_ids,
            [BOS, sum_vocab.get("creates").unwrap(), v, sum_vocab.get("packet").unwrap(), UNK, v + 1, EOS]
        );
        for &u in inst.code_ids.iter().filter(|&&c| c == UNK) {
            assert_eq!(u, UNK);
        }
        assert!(inst.copy_ids.iter().all(|&c| c < inst.oov_map.extended_size()));
    }

    #[test]
    fn summary_without_known_words_is_all_unk() {
        let sum_vocab = vocab("alpha beta");
        let code_vocab = vocab("x y");
        let enc = Encoder {
            code_vocab: &code_vocab,
            sum_vocab: &sum_vocab,
            n_topics: 1,
            null_topic: 1,
            max_code_len: 10,
            max_sum_len: 4,
        };
        let rec = InstanceRecord {
            code: words("x y z"),
            topics: vec![0],
            summary: words("gamma delta epsilon"),
            class: String::new(),
            method: String::new(),
        };
        assert_eq!(enc.encode(&rec).summary_ids, [BOS, UNK, UNK, EOS]);
    }

    #[test]
    fn records_skip_undocumented_and_degenerate_methods() {
        let src = r#"
class Store {
  /** Loads the json value from the given reader. */
  Value load(Reader reader) { return Json.parse(reader); }
  Value raw(Reader reader) { return null; }
  /** @return x */
  int x() { return x; }
  /** Ok. */
  int y() { return y; }
}
"#;
        let mut classes = extract_classes(src).unwrap();
        classes[0].methods.push(RawMethod {
            method_name: "tiny".into(),
            code_tokens: words("a b"),
            doc_comment: Some("/** Does tiny things. */".into()),
        });
        let docs_vocab = Vocabulary::build([lda_document(&classes[0])], 100, 1).unwrap();
        let doc = docs_vocab.tokens()[4..].iter().map(|t| docs_vocab.lookup(t)).collect();
        let mut cfg = LdaConfig::with_topics(3);
        cfg.n_iterations = 10;
        let model = fit_gibbs(&[doc], docs_vocab, &cfg).unwrap();
        let icfg = InstanceConfig {
            n_topics: 2,
            ..Default::default()
        };
        let (records, report) = build_records(&classes, &model, &icfg).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].method, "load");
        assert_eq!(records[0].summary, words("loads the json value from the given reader"));
        assert_eq!(records[0].topics.len(), 2);
        assert_eq!(report, SkipReport { no_summary: 3, short_code: 1, short_summary: 0 });

        let too_many = InstanceConfig { n_topics: 4, ..Default::default() };
        assert!(build_records(&classes, &model, &too_many).is_err());
    }

    #[test]
    fn lda_document_drops_keywords_and_punctuation() {
        let classes = extract_classes("class JsonValue { public void writeTo(Writer w) { w.write(1); } }").unwrap();
        assert_eq!(
            lda_document(&classes[0]),
            words("json value write to writer write")
        );
    }
}
