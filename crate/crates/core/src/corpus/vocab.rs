use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

/// Bidirectional token/ID map. IDs 0..4 are the reserved PAD, UNK, BOS and
/// EOS markers; unknown tokens look up as UNK.
///
/// Serializes as a JSON array of tokens in ID order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Ranks tokens by descending frequency (lexicographic on ties), drops
    /// those seen fewer than `min_count` times and keeps at most `max_size`
    /// entries including the reserved ones.
    pub fn build<I, D, T>(corpus: I, max_size: usize, min_count: usize) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        if max_size <= RESERVED.len() {
            return Err(CorpusError::VocabSize(max_size));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut seen_any = false;
        for doc in corpus {
            for tok in doc {
                seen_any = true;
                let tok = tok.as_ref();
                if RESERVED.contains(&tok) {
                    continue;
                }
                *counts.entry(tok.to_owned()).or_default() += 1;
            }
        }
        if !seen_any {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(_, n)| *n >= min_count.max(1))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_size - RESERVED.len());
        Self::from_tokens(
            RESERVED
                .iter()
                .map(|s| s.to_string())
                .chain(ranked.into_iter().map(|(t, _)| t))
                .collect(),
        )
    }

    /// Rebuilds from tokens in ID order; the first four must be the reserved
    /// markers and the rest unique.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, CorpusError> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED {
            return Err(CorpusError::InvalidVocabulary(
                "missing reserved <pad> <unk> <s> </s> prefix".into(),
            ));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(CorpusError::InvalidVocabulary(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// ID of `token`, or UNK.
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.tokens.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let tokens = Vec::<String>::deserialize(d)?;
        Vocabulary::from_tokens(tokens).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn corpus(counts: &[(&str, usize)]) -> Vec<Vec<String>> {
        counts.iter()
            .map(|(t, n)| vec![t.to_string(); *n])
            .collect()
    }

    #[test]
    fn frequency_then_lexicographic_with_min_count() {
        let v = Vocabulary::build(corpus(&[("c", 1), ("b", 3), ("a", 3)]), 6, 2).unwrap();
        assert_eq!(v.tokens(), ["<pad>", "<unk>", "<s>", "</s>", "a", "b"]);
    }

    #[test]
    fn truncates_to_max_size_including_reserved() {
        let v = Vocabulary::build(corpus(&[("a", 5), ("b", 4), ("c", 3)]), 6, 1).unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(v.get("c"), None);
    }

    #[test]
    fn single_token_gets_first_free_id() {
        let v = Vocabulary::build(corpus(&[("x", 1)]), 10, 1).unwrap();
        assert_eq!(v.get("x"), Some(4));
        assert_eq!(v.lookup("never-inserted"), UNK);
    }

    #[test]
    fn errors() {
        let empty: Vec<Vec<String>> = vec![vec![]];
        assert_eq!(Vocabulary::build(empty, 10, 1), Err(CorpusError::EmptyCorpus));
        assert_eq!(Vocabulary::build(corpus(&[("a", 1)]), 4, 1), Err(CorpusError::VocabSize(4)));
        assert!(Vocabulary::from_tokens(vec!["a".into()]).is_err());
    }

    #[test]
    fn json_is_token_array() {
        let v = Vocabulary::build(corpus(&[("json", 2)]), 10, 1).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["<pad>","<unk>","<s>","</s>","json"]"#);
        assert_eq!(serde_json::from_str::<Vocabulary>(&s).unwrap(), v);
    }

    proptest! {
        #[test]
        fn ids_round_trip(words in proptest::collection::vec("[a-z]{1,5}", 1..60), max in 5usize..40) {
            let v = Vocabulary::build([words.clone()], max, 1).unwrap();
            prop_assert!(v.len() <= max);
            for (id, t) in v.tokens().iter().enumerate() {
                prop_assert_eq!(v.get(t), Some(id));
                prop_assert_eq!(v.token(id), Some(t.as_str()));
            }
        }
    }
}
