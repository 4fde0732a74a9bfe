use proptest::prelude::*;

use super::*;
use crate::corpus::{OovMap, TrainingInstance, BOS, EOS, PAD};
use crate::neuro::{cross_entropy, grad_check, Array2, NeuroError, NodeId, Tape};

fn config() -> ModelConfig {
    ModelConfig {
        code_vocab_size: 12,
        sum_vocab_size: 8,
        topic_count: 5,
        n_topics: 3,
        embed_dim: 4,
        topic_embed_dim: 3,
        hidden_dim: 6,
        max_code_len: 8,
        max_sum_len: 6,
        use_topics: true,
    }
}

/// Code `[5, 6, 7, 6]` whose source tokens are `[in-vocab, foo, bar, foo]`.
fn instance(summary: Vec<usize>) -> TrainingInstance {
    let mut oov = OovMap::new(8);
    let foo = oov.insert("foo");
    let bar = oov.insert("bar");
    TrainingInstance {
        code_ids: vec![5, 6, 7, 6],
        topic_ids: vec![0, 2, 5],
        summary_ids: summary,
        source_tokens: ["get", "foo", "bar", "foo"].map(String::from).to_vec(),
        oov_map: oov,
        copy_ids: vec![4, foo, bar, foo],
        class: "C".into(),
        method: "m".into(),
    }
}

fn to_neuro(e: ModelError) -> NeuroError {
    match e {
        ModelError::Neuro(n) => n,
        other => panic!("unexpected model error {other}"),
    }
}

/// Sets attention so that `e_j = ln(weights[j])` for unit-row code states:
/// `v_a = [2, 0, ..]`, `U_a = I`, `W_a = 0`, and `h_j[0] = atanh(ln w_j / 2)`.
fn pinned_attention(p: &mut ModelParams, weights: &[f64]) -> Vec<Array2> {
    let h = p.config.hidden_dim;
    p.w_a = Array2::zeros(h, h);
    p.u_a = Array2::identity(h);
    p.v_a = Array2::zeros(1, h);
    p.v_a.set(0, 0, 2.0);
    weights
        .iter()
        .map(|w| {
            let mut s = Array2::zeros(h, 1);
            s.set(0, 0, (w.ln() / 2.0).atanh());
            s
        })
        .collect()
}

fn outputs_from_states(p: &ModelParams, states: Vec<Array2>) -> EncoderOutputs {
    let refs: Vec<&Array2> = states.iter().collect();
    let memory = Array2::concat_cols(&refs).unwrap();
    let keys = p.u_a.matmul(&memory).unwrap();
    EncoderOutputs {
        topic_states: vec![],
        topic_final: None,
        code_final: states.last().unwrap().clone(),
        code_mask: vec![true; states.len()],
        code_states: states,
        memory,
        keys,
    }
}

#[test]
fn attention_matches_hand_set_scores() {
    let mut p = ModelParams::init(&config(), 1).unwrap();
    let states = pinned_attention(&mut p, &[1.0, 2.0, 3.0]);
    let s = Array2::filled(6, 1, 0.3);
    let (alpha, ctx) = p.attention(&s, &states, &[true; 3]).unwrap();
    for (a, want) in alpha.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
        assert!((a - want).abs() < 1e-12, "{alpha:?}");
    }
    let want0: f64 = states.iter().zip(&alpha).map(|(h, a)| a * h.get(0, 0)).sum();
    assert!((ctx.get(0, 0) - want0).abs() < 1e-12);
}

#[test]
fn attention_over_identical_states_is_uniform() {
    let p = ModelParams::init(&config(), 2).unwrap();
    let h = Array2::from_vec(6, 1, vec![0.1, -0.2, 0.3, 0.0, 0.5, -0.4]).unwrap();
    let (alpha, ctx) = p
        .attention(&Array2::filled(6, 1, 0.1), &vec![h.clone(); 4], &[true; 4])
        .unwrap();
    alpha.iter().for_each(|a| assert!((a - 0.25).abs() < 1e-15));
    for i in 0..6 {
        assert!((ctx.get(i, 0) - h.get(i, 0)).abs() < 1e-15);
    }
}

#[test]
fn attention_with_one_open_position_copies_it() {
    let p = ModelParams::init(&config(), 3).unwrap();
    let states: Vec<Array2> = (0..3).map(|i| Array2::filled(6, 1, i as f64 * 0.1)).collect();
    let (alpha, ctx) = p.attention(&Array2::zeros(6, 1), &states, &[false, true, false]).unwrap();
    assert_eq!(alpha, vec![0.0, 1.0, 0.0]);
    assert_eq!(ctx, states[1]);
    assert!(matches!(
        p.attention(&Array2::zeros(6, 1), &states, &[false; 3]),
        Err(ModelError::Neuro(NeuroError::AllMasked))
    ));
}

#[test]
fn topic_encoder_is_deterministic_and_order_sensitive() {
    let p = ModelParams::init(&config(), 4).unwrap();
    let null = p.config.null_topic();
    let a = p.encode_topics(&[null; 3]).unwrap();
    assert_eq!(a, p.encode_topics(&[null; 3]).unwrap());
    let (states, fin) = p.encode_topics(&[0, 2, 4]).unwrap();
    assert_eq!(states.len(), 3);
    assert_eq!(states[2], fin);
    let (_, permuted) = p.encode_topics(&[4, 2, 0]).unwrap();
    assert_ne!(fin, permuted);
    assert!(matches!(
        p.encode_topics(&[0, 1]),
        Err(ModelError::TopicCount { expected: 3, got: 2 })
    ));
    assert!(matches!(p.encode_topics(&[0, 1, 6]), Err(ModelError::InvalidId { .. })));
}

#[test]
fn code_encoder_chains_from_topic_state() {
    let cfg = config();
    let p = ModelParams::init(&cfg, 5).unwrap();
    let code = [4, 5, 6];
    let (_, zero_final, _) = p.encode_code(&code, &Array2::zeros(6, 1)).unwrap();
    let unchained = ModelParams {
        config: ModelConfig {
            use_topics: false,
            ..cfg
        },
        ..p.clone()
    };
    let out = unchained.encode(&[0, 1, 2], &code).unwrap();
    assert_eq!(out.code_final, zero_final);
    assert!(out.topic_final.is_none());

    let (_, other_final, _) = p.encode_code(&code, &Array2::filled(6, 1, 0.5)).unwrap();
    assert_ne!(zero_final, other_final);

    let (states, fin, mask) = p.encode_code(&[7], &Array2::zeros(6, 1)).unwrap();
    assert_eq!(states, vec![fin]);
    assert_eq!(mask, vec![true]);
    assert!(matches!(p.encode_code(&[], &Array2::zeros(6, 1)), Err(ModelError::EmptyCode)));
    assert!(matches!(
        p.encode_code(&[4; 9], &Array2::zeros(6, 1)),
        Err(ModelError::CodeTooLong { len: 9, max: 8 })
    ));
}

#[test]
fn padding_positions_are_masked_and_carry_state() {
    let p = ModelParams::init(&config(), 6).unwrap();
    let (states, fin, mask) = p.encode_code(&[4, 5, PAD, PAD], &Array2::zeros(6, 1)).unwrap();
    assert_eq!(mask, vec![true, true, false, false]);
    assert_eq!(states[3], states[1]);
    assert_eq!(fin, states[1]);
}

#[test]
fn saturated_switch_generates_only_from_vocabulary() {
    let mut p = ModelParams::init(&config(), 7).unwrap();
    p.b_ptr.set(0, 0, 60.0);
    let inst = instance(vec![BOS, 4, EOS]);
    let enc = p.encode(&inst.topic_ids, &inst.code_ids).unwrap();
    let out = p.decode_step(BOS, &enc.code_final, &enc, &inst.copy_ids, 10).unwrap();
    assert_eq!(out.p_gen, 1.0);
    assert_eq!(&out.final_dist[..8], &out.p_vocab[..]);
    assert_eq!(&out.final_dist[8..], &[0.0, 0.0]);
}

#[test]
fn closed_switch_copies_attention_mass() {
    let mut p = ModelParams::init(&config(), 8).unwrap();
    p.b_ptr.set(0, 0, -60.0);
    let states = pinned_attention(&mut p, &[0.5, 0.3, 0.2]);
    let enc = outputs_from_states(&p, states);
    let (foo, bar) = (8, 9);
    let out = p
        .decode_step(BOS, &Array2::zeros(6, 1), &enc, &[foo, bar, foo], 10)
        .unwrap();
    assert!(out.p_gen < 1e-20);
    assert!((out.final_dist[foo] - 0.7).abs() < 1e-12);
    assert!((out.final_dist[bar] - 0.3).abs() < 1e-12);
    assert!(out.final_dist[..8].iter().all(|&v| v < 1e-20));
}

#[test]
fn mixed_switch_splits_mass() {
    let cfg = ModelConfig {
        sum_vocab_size: 4,
        ..config()
    };
    let mut p = ModelParams::init(&cfg, 9).unwrap();
    p.w_out = Array2::zeros(4, 12);
    p.b_out = Array2::zeros(4, 1);
    p.w_c = Array2::zeros(1, 6);
    p.w_s = Array2::zeros(1, 6);
    p.w_y = Array2::zeros(1, 4);
    p.b_ptr.set(0, 0, (0.6f64 / 0.4).ln());
    let enc = outputs_from_states(&p, vec![Array2::filled(6, 1, 0.2)]);
    let out = p.decode_step(BOS, &Array2::zeros(6, 1), &enc, &[4], 5).unwrap();
    assert!((out.p_gen - 0.6).abs() < 1e-12);
    for &v in &out.final_dist[..4] {
        assert!((v - 0.15).abs() < 1e-12);
    }
    assert!((out.final_dist[4] - 0.4).abs() < 1e-12);
    let pure = mix_distribution(&[0.25; 4], &[1.0], 0.6, &[4], 5);
    for (a, b) in pure.iter().zip(&out.final_dist) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn decode_step_rejects_ids_outside_extended_vocabulary() {
    let p = ModelParams::init(&config(), 10).unwrap();
    let inst = instance(vec![BOS, EOS]);
    let enc = p.encode(&inst.topic_ids, &inst.code_ids).unwrap();
    assert!(p.decode_step(9, &enc.code_final, &enc, &inst.copy_ids, 10).is_ok());
    assert!(matches!(
        p.decode_step(10, &enc.code_final, &enc, &inst.copy_ids, 10),
        Err(ModelError::InvalidId { id: 10, .. })
    ));
}

#[test]
fn one_step_loss_is_one_cross_entropy() {
    let p = ModelParams::init(&config(), 11).unwrap();
    let inst = instance(vec![BOS, EOS]);
    let enc = p.encode(&inst.topic_ids, &inst.code_ids).unwrap();
    let out = p.decode_step(BOS, &enc.code_final, &enc, &inst.copy_ids, 10).unwrap();
    let loss = p.forward_loss(&inst).unwrap();
    assert!((loss - cross_entropy(&out.final_dist, EOS)).abs() < 1e-15);
}

#[test]
fn gradient_descent_learns_to_copy_an_oov_target() {
    let mut p = ModelParams::init(&config(), 12).unwrap();
    let inst = instance(vec![BOS, 9, EOS]);
    let first = p.forward_loss(&inst).unwrap();
    assert!(first.is_finite());
    let mut last = first;
    for _ in 0..30 {
        let (loss, grads) = p.loss_and_gradients(&inst).unwrap();
        assert!(loss <= last + 1e-12);
        last = loss;
        for ((_, a), g) in p.arrays_mut().into_iter().zip(grads.iter()) {
            a.data_mut().iter_mut().zip(g.data()).for_each(|(v, d)| *v -= 0.5 * d);
        }
    }
    assert!(last < 0.5 * first, "{first} -> {last}");
}

#[test]
fn full_model_gradients_match_finite_differences() {
    let p = ModelParams::init(&config(), 13).unwrap();
    let inst = instance(vec![BOS, 4, 9, EOS]);
    let cfg = p.config.clone();
    let err = grad_check(&p.to_arrays(), 1e-5, 200, 7, |tape: &mut Tape<'_>, nodes: &[NodeId]| {
        let bound = BoundParams::from_nodes(nodes).map_err(|_| NeuroError::Empty("params"))?;
        forward_loss_traced(tape, &bound, &cfg, &inst).map_err(to_neuro)
    })
    .unwrap();
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn zeroed_topic_path_equals_topic_free_model() {
    let mut p = ModelParams::init(&config(), 14).unwrap();
    p.e_topic = Array2::zeros(p.e_topic.rows(), p.e_topic.cols());
    for a in p.enc_topic.arrays_mut() {
        a.data_mut().fill(0.0);
    }
    let plain = ModelParams {
        config: ModelConfig {
            use_topics: false,
            ..p.config.clone()
        },
        ..p.clone()
    };
    let inst = instance(vec![BOS, 4, 8, EOS]);
    assert_eq!(
        p.forward_loss(&inst).unwrap().to_bits(),
        plain.forward_loss(&inst).unwrap().to_bits()
    );
    let a = p.encode(&inst.topic_ids, &inst.code_ids).unwrap();
    let b = plain.encode(&inst.topic_ids, &inst.code_ids).unwrap();
    assert_eq!(a.code_states, b.code_states);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let p = ModelParams::init(&config(), 15).unwrap();
    save_checkpoint(&p, &path).unwrap();
    assert!(blob_path(&path).exists());
    let q = load_checkpoint(&path).unwrap();
    assert_eq!(p, q);
    let inst = instance(vec![BOS, 4, 9, EOS]);
    assert_eq!(
        p.forward_loss(&inst).unwrap().to_bits(),
        q.forward_loss(&inst).unwrap().to_bits()
    );
}

#[test]
fn checkpoint_load_rejects_wrong_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&ModelParams::init(&config(), 16).unwrap(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut m: CheckpointManifest = serde_json::from_str(&text).unwrap();
    m.config.hidden_dim = 7;
    std::fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(ModelError::ParamShape { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decode_step_distribution_invariants(
        seed in 0u64..1000,
        code in prop::collection::vec(0usize..12, 1..8),
        y_prev in 0usize..10,
    ) {
        let p = ModelParams::init(&config(), seed).unwrap();
        let inst = instance(vec![BOS, EOS]);
        let copy: Vec<usize> = code.iter().map(|&c| if c % 3 == 0 { 8 + c % 2 } else { c % 8 }).collect();
        let enc = match p.encode(&inst.topic_ids, &code) {
            Ok(e) => e,
            Err(ModelError::EmptyCode) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let out = p.decode_step(y_prev, &enc.code_final, &enc, &copy, 10).unwrap();
        let total: f64 = out.final_dist.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(out.final_dist.iter().all(|&v| v >= 0.0));
        prop_assert!((0.0..=1.0).contains(&out.p_gen));
        for (a, &m) in out.alpha.iter().zip(&enc.code_mask) {
            if !m {
                prop_assert_eq!(*a, 0.0);
            }
        }
        for ext in 8..10 {
            let copied: f64 = copy.iter().zip(&out.alpha).filter(|(&c, _)| c == ext).map(|(_, a)| a).sum();
            prop_assert!((out.final_dist[ext] - (1.0 - out.p_gen) * copied).abs() < 1e-12);
        }
    }
}
