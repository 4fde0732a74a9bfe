use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::neuro::{Array2, BoundGru, GruCell, GruDims, NodeId, Tape, GRU_PARAM_NAMES};

/// Uniform initialization range for every weight matrix.
pub const INIT_SCALE: f64 = 0.08;

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub code_vocab_size: usize,
    pub sum_vocab_size: usize,
    /// Number of LDA topics K; topic index K is the null pad.
    pub topic_count: usize,
    pub n_topics: usize,
    pub embed_dim: usize,
    pub topic_embed_dim: usize,
    pub hidden_dim: usize,
    pub max_code_len: usize,
    pub max_sum_len: usize,
    /// When false the topic encoder is bypassed and the code encoder starts
    /// from a zero state: a plain attentional pointer-generator.
    #[serde(default = "default_true")]
    pub use_topics: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("code_vocab_size", self.code_vocab_size),
            ("sum_vocab_size", self.sum_vocab_size),
            ("topic_count", self.topic_count),
            ("n_topics", self.n_topics),
            ("embed_dim", self.embed_dim),
            ("topic_embed_dim", self.topic_embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("max_code_len", self.max_code_len),
            ("max_sum_len", self.max_sum_len),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.n_topics > self.topic_count {
            return Err(ModelError::Config(format!(
                "n_topics {} exceeds topic_count {}",
                self.n_topics, self.topic_count
            )));
        }
        if self.code_vocab_size < 4 || self.sum_vocab_size < 4 {
            return Err(ModelError::Config("vocabularies must hold the 4 reserved tokens".into()));
        }
        Ok(())
    }

    /// Row index of the null-topic embedding.
    pub fn null_topic(&self) -> usize {
        self.topic_count
    }

    fn topic_gru(&self) -> GruDims {
        GruDims {
            input: self.topic_embed_dim,
            hidden: self.hidden_dim,
        }
    }

    fn code_gru(&self) -> GruDims {
        GruDims {
            input: self.embed_dim,
            hidden: self.hidden_dim,
        }
    }

    fn dec_gru(&self) -> GruDims {
        GruDims {
            input: self.embed_dim + self.hidden_dim,
            hidden: self.hidden_dim,
        }
    }
}

/// Every trainable array of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// `code_vocab x embed`
    pub e_code: Array2,
    /// `sum_vocab x embed`
    pub e_sum: Array2,
    /// `(K + 1) x topic_embed`; the last row embeds the null topic.
    pub e_topic: Array2,
    pub enc_topic: GruCell,
    pub enc_code: GruCell,
    /// Input is `[embed(y_prev); context]`.
    pub dec: GruCell,
    /// Attention: `e_j = v_a · tanh(W_a s + U_a h_j)`.
    pub w_a: Array2,
    pub u_a: Array2,
    pub v_a: Array2,
    /// `sum_vocab x 2·hidden` over `[s_i; c_i]`.
    pub w_out: Array2,
    pub b_out: Array2,
    /// Soft switch `p_gen = σ(w_c·c + w_s·s + w_y·y + b_ptr)`.
    pub w_c: Array2,
    pub w_s: Array2,
    pub w_y: Array2,
    pub b_ptr: Array2,
}

/// Node handles for a [`ModelParams`] bound to a tape.
#[derive(Clone, Copy, Debug)]
pub struct BoundParams {
    pub e_code: NodeId,
    pub e_sum: NodeId,
    pub e_topic: NodeId,
    pub enc_topic: BoundGru,
    pub enc_code: BoundGru,
    pub dec: BoundGru,
    pub w_a: NodeId,
    pub u_a: NodeId,
    pub v_a: NodeId,
    pub w_out: NodeId,
    pub b_out: NodeId,
    pub w_c: NodeId,
    pub w_s: NodeId,
    pub w_y: NodeId,
    pub b_ptr: NodeId,
}

/// Number of arrays in [`ModelParams::arrays`].
pub const PARAM_COUNT: usize = 3 + 3 * 9 + 9;

impl BoundParams {
    /// From nodes in [`ModelParams::arrays`] order.
    pub fn from_nodes(n: &[NodeId]) -> Result<Self, ModelError> {
        if n.len() != PARAM_COUNT {
            return Err(ModelError::ParamCount {
                expected: PARAM_COUNT,
                got: n.len(),
            });
        }
        let gru = |at: usize| BoundGru::from_nodes(n[at..at + 9].try_into().expect("9 nodes"));
        Ok(BoundParams {
            e_code: n[0],
            e_sum: n[1],
            e_topic: n[2],
            enc_topic: gru(3),
            enc_code: gru(12),
            dec: gru(21),
            w_a: n[30],
            u_a: n[31],
            v_a: n[32],
            w_out: n[33],
            b_out: n[34],
            w_c: n[35],
            w_s: n[36],
            w_y: n[37],
            b_ptr: n[38],
        })
    }
}

impl ModelParams {
    /// All-zero parameters with the shapes `config` implies.
    pub fn zeros(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let c = config;
        let h = c.hidden_dim;
        Ok(ModelParams {
            config: c.clone(),
            e_code: Array2::zeros(c.code_vocab_size, c.embed_dim),
            e_sum: Array2::zeros(c.sum_vocab_size, c.embed_dim),
            e_topic: Array2::zeros(c.topic_count + 1, c.topic_embed_dim),
            enc_topic: GruCell::zeros(c.topic_gru()),
            enc_code: GruCell::zeros(c.code_gru()),
            dec: GruCell::zeros(c.dec_gru()),
            w_a: Array2::zeros(h, h),
            u_a: Array2::zeros(h, h),
            v_a: Array2::zeros(1, h),
            w_out: Array2::zeros(c.sum_vocab_size, 2 * h),
            b_out: Array2::zeros(c.sum_vocab_size, 1),
            w_c: Array2::zeros(1, h),
            w_s: Array2::zeros(1, h),
            w_y: Array2::zeros(1, c.embed_dim),
            b_ptr: Array2::zeros(1, 1),
        })
    }

    /// Weights uniform in `(-0.08, 0.08)`, biases zero, every value rounded
    /// to the nearest `f32`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, a) in p.arrays_mut() {
            if is_bias(&name) {
                continue;
            }
            a.data_mut()
                .iter_mut()
                .for_each(|v| *v = rng.gen_range(-INIT_SCALE..INIT_SCALE) as f32 as f64);
        }
        Ok(p)
    }

    pub fn names(&self) -> Vec<String> {
        self.arrays().into_iter().map(|(n, _)| n).collect()
    }

    pub fn arrays(&self) -> Vec<(String, &Array2)> {
        let mut out: Vec<(String, &Array2)> = vec![
            ("e_code".into(), &self.e_code),
            ("e_sum".into(), &self.e_sum),
            ("e_topic".into(), &self.e_topic),
        ];
        for (prefix, cell) in [("enc_topic", &self.enc_topic), ("enc_code", &self.enc_code), ("dec", &self.dec)] {
            for (n, a) in GRU_PARAM_NAMES.iter().zip(cell.arrays()) {
                out.push((format!("{prefix}.{n}"), a));
            }
        }
        out.extend([
            ("w_a".into(), &self.w_a),
            ("u_a".into(), &self.u_a),
            ("v_a".into(), &self.v_a),
            ("w_out".into(), &self.w_out),
            ("b_out".into(), &self.b_out),
            ("w_c".into(), &self.w_c),
            ("w_s".into(), &self.w_s),
            ("w_y".into(), &self.w_y),
            ("b_ptr".into(), &self.b_ptr),
        ]);
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<(String, &mut Array2)> {
        let mut out: Vec<(String, &mut Array2)> = vec![
            ("e_code".into(), &mut self.e_code),
            ("e_sum".into(), &mut self.e_sum),
            ("e_topic".into(), &mut self.e_topic),
        ];
        for (prefix, cell) in [
            ("enc_topic", &mut self.enc_topic),
            ("enc_code", &mut self.enc_code),
            ("dec", &mut self.dec),
        ] {
            for (n, a) in GRU_PARAM_NAMES.iter().zip(cell.arrays_mut()) {
                out.push((format!("{prefix}.{n}"), a));
            }
        }
        out.extend([
            ("w_a".into(), &mut self.w_a),
            ("u_a".into(), &mut self.u_a),
            ("v_a".into(), &mut self.v_a),
            ("w_out".into(), &mut self.w_out),
            ("b_out".into(), &mut self.b_out),
            ("w_c".into(), &mut self.w_c),
            ("w_s".into(), &mut self.w_s),
            ("w_y".into(), &mut self.w_y),
            ("b_ptr".into(), &mut self.b_ptr),
        ]);
        out
    }

    /// Clones the arrays out in [`ModelParams::arrays`] order.
    pub fn to_arrays(&self) -> Vec<Array2> {
        self.arrays().into_iter().map(|(_, a)| a.clone()).collect()
    }

    /// Rebuilds from arrays in [`ModelParams::arrays`] order, checking every
    /// shape against `config`.
    pub fn from_arrays(config: &ModelConfig, arrays: Vec<Array2>) -> Result<Self, ModelError> {
        let mut p = Self::zeros(config)?;
        if arrays.len() != PARAM_COUNT {
            return Err(ModelError::ParamCount {
                expected: PARAM_COUNT,
                got: arrays.len(),
            });
        }
        for ((name, slot), a) in p.arrays_mut().into_iter().zip(arrays) {
            if slot.shape() != a.shape() {
                return Err(ModelError::ParamShape {
                    name,
                    expected: slot.shape(),
                    got: a.shape(),
                });
            }
            *slot = a;
        }
        Ok(p)
    }

    pub fn bind<'a>(&'a self, tape: &mut Tape<'a>) -> BoundParams {
        let nodes: Vec<NodeId> = self.arrays().into_iter().map(|(_, a)| tape.param(a)).collect();
        BoundParams::from_nodes(&nodes).expect("arrays() yields PARAM_COUNT entries")
    }

    pub fn parameter_count(&self) -> usize {
        self.arrays().iter().map(|(_, a)| a.len()).sum()
    }

    /// Rounds every value to the nearest `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        for (_, a) in self.arrays_mut() {
            a.data_mut().iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }
}

fn is_bias(name: &str) -> bool {
    let leaf = name.rsplit('.').next().unwrap_or(name);
    leaf.starts_with("b_")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_config() -> ModelConfig {
        ModelConfig {
            code_vocab_size: 9,
            sum_vocab_size: 7,
            topic_count: 5,
            n_topics: 3,
            embed_dim: 4,
            topic_embed_dim: 3,
            hidden_dim: 5,
            max_code_len: 8,
            max_sum_len: 6,
            use_topics: true,
        }
    }

    #[test]
    fn names_are_unique_and_complete() {
        let p = ModelParams::zeros(&tiny_config()).unwrap();
        let mut names = p.names();
        assert_eq!(names.len(), PARAM_COUNT);
        names.sort();
        names.dedup();
        assert_eq!(names.len(), PARAM_COUNT);
    }

    #[test]
    fn init_is_seeded_small_and_f32_exact() {
        let a = ModelParams::init(&tiny_config(), 7).unwrap();
        let b = ModelParams::init(&tiny_config(), 7).unwrap();
        assert_eq!(a, b);
        for (name, arr) in a.arrays() {
            for &v in arr.data() {
                assert!(v.abs() < INIT_SCALE);
                assert_eq!(v, v as f32 as f64);
                if is_bias(&name) {
                    assert_eq!(v, 0.0, "{name}");
                }
            }
        }
        assert_ne!(a, ModelParams::init(&tiny_config(), 8).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut c = tiny_config();
        c.n_topics = 6;
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.hidden_dim = 0;
        assert!(ModelParams::zeros(&c).is_err());
    }

    #[test]
    fn from_arrays_checks_shapes() {
        let p = ModelParams::init(&tiny_config(), 1).unwrap();
        let round = ModelParams::from_arrays(&tiny_config(), p.to_arrays()).unwrap();
        assert_eq!(round, p);
        let mut arrays = p.to_arrays();
        arrays[5] = Array2::zeros(1, 1);
        assert!(matches!(
            ModelParams::from_arrays(&tiny_config(), arrays),
            Err(ModelError::ParamShape { .. })
        ));
    }
}
