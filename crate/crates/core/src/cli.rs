//! The `codesum` command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data errors.
//! Results go to stdout; diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_records, class_topics, extract_dir, extract_file, lda_document, Encoder, InstanceConfig, InstanceRecord,
    RawClass, Vocabulary,
};
use crate::eval::{evaluate, EvalError};
use crate::pipeline::{beam_search, detokenize, train, write_loss_log, DecodedSummary, TrainConfig};
use crate::topics::{fit_gibbs, LdaConfig, TopicModel};
use crate::topnn::{load_checkpoint, save_checkpoint, ModelConfig};

pub const CODE_VOCAB_FILE: &str = "code_vocab.json";
pub const SUM_VOCAB_FILE: &str = "sum_vocab.json";
pub const MODEL_FILE: &str = "model.json";
pub const LOSS_FILE: &str = "loss.csv";
pub const RUN_CONFIG_FILE: &str = "run_config.json";

#[derive(Parser, Debug)]
#[command(name = "codesum", about = "Topic-guided pointer-generator code summarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract classes and documented methods from a Java source tree.
    Extract { src_dir: PathBuf, out: PathBuf },
    /// Fit an LDA topic model over the extracted classes.
    TrainLda {
        classes: PathBuf,
        model_out: PathBuf,
        #[arg(long, default_value_t = 50)]
        k: usize,
        /// Defaults to 50 / k.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50_000)]
        max_vocab: usize,
    },
    /// Pair methods with summaries and class topics.
    Build {
        classes: PathBuf,
        lda_model: PathBuf,
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        n_topics: usize,
        #[arg(long, default_value_t = 100)]
        max_code: usize,
        #[arg(long, default_value_t = 30)]
        max_sum: usize,
        #[arg(long, default_value_t = 50)]
        infer_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the network; writes vocabularies, model and loss log.
    Train {
        instances: PathBuf,
        ckpt_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Summarize every method of a Java file.
    Summarize {
        ckpt: PathBuf,
        lda_model: PathBuf,
        java_file: PathBuf,
        #[arg(long, default_value_t = 1)]
        beam: usize,
        #[arg(long, default_value_t = 50)]
        infer_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score hypothesis summaries against references.
    Eval { hyp: PathBuf, reference: PathBuf },
}

/// Everything `train` needs beyond the instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub code_vocab_size: usize,
    pub sum_vocab_size: usize,
    pub min_count: usize,
    /// LDA topic count; inferred from the largest topic ID when absent.
    pub topic_count: Option<usize>,
    pub embed_dim: usize,
    pub topic_embed_dim: usize,
    pub hidden_dim: usize,
    pub max_code_len: usize,
    pub max_sum_len: usize,
    pub use_topics: bool,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            code_vocab_size: 20_000,
            sum_vocab_size: 10_000,
            min_count: 1,
            topic_count: None,
            embed_dim: 64,
            topic_embed_dim: 32,
            hidden_dim: 128,
            max_code_len: 100,
            max_sum_len: 30,
            use_topics: true,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn data_at<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path).map_err(data_at(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn jsonl<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r).map_err(data)?);
        s.push('\n');
    }
    Ok(s)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(data_at(path))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(data_at(path))?;
    serde_json::from_str(&text).map_err(data_at(path))
}

/// Runs the CLI with the given arguments (program name first), writing to
/// the given streams. Returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let shown = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{shown}");
                return 1;
            }
            let _ = write!(out, "{shown}");
            return 0;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let (CliError::Usage(m) | CliError::Data(m)) = &e;
            let _ = writeln!(err, "error: {m}");
            e.code()
        }
    }
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Extract { src_dir, out: dest } => {
            if !src_dir.is_dir() {
                return Err(CliError::Data(format!("{} is not a directory", src_dir.display())));
            }
            let res = extract_dir(&src_dir).map_err(data)?;
            for (path, e) in &res.failures {
                let _ = writeln!(err, "skipped {}: {e}", path.display());
            }
            write_file(&dest, jsonl(&res.classes)?)?;
            let methods: usize = res.classes.iter().map(|c| c.methods.len()).sum();
            let _ = writeln!(out, "{} classes, {methods} methods", res.classes.len());
            Ok(())
        }
        Command::TrainLda {
            classes,
            model_out,
            k,
            alpha,
            eta,
            iters,
            seed,
            max_vocab,
        } => {
            let config = LdaConfig {
                k,
                alpha: alpha.unwrap_or(if k > 0 { 50.0 / k as f64 } else { 0.0 }),
                eta,
                n_iterations: iters,
                seed,
            };
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let classes: Vec<RawClass> = read_jsonl(&classes)?;
            let docs: Vec<Vec<String>> = classes.iter().map(lda_document).collect();
            let vocab = Vocabulary::build(&docs, max_vocab, 1).map_err(data)?;
            let encoded: Vec<Vec<usize>> = docs.iter().map(|d| d.iter().map(|t| vocab.lookup(t)).collect()).collect();
            let model = fit_gibbs(&encoded, vocab, &config).map_err(data)?;
            model.save(&model_out).map_err(data)?;
            let _ = writeln!(out, "fitted {k} topics over {} classes", classes.len());
            Ok(())
        }
        Command::Build {
            classes,
            lda_model,
            out: dest,
            n_topics,
            max_code,
            max_sum,
            infer_iters,
            seed,
        } => {
            if n_topics == 0 || max_code == 0 || max_sum < 3 {
                return Err(CliError::Usage("n-topics and max-code must be positive, max-sum at least 3".into()));
            }
            let classes: Vec<RawClass> = read_jsonl(&classes)?;
            let model = TopicModel::load(&lda_model).map_err(data)?;
            let config = InstanceConfig {
                n_topics,
                max_code_len: max_code,
                max_sum_len: max_sum,
                infer_iterations: infer_iters,
                seed,
            };
            let (records, report) = build_records(&classes, &model, &config).map_err(data)?;
            write_file(&dest, jsonl(&records)?)?;
            let _ = writeln!(
                out,
                "{} instances; skipped {} without summary, {} with short code, {} with short summary",
                records.len(),
                report.no_summary,
                report.short_code,
                report.short_summary
            );
            Ok(())
        }
        Command::Train {
            instances,
            ckpt_dir,
            config,
            epochs,
            seed,
            learning_rate,
        } => {
            let mut run: RunConfig = match &config {
                Some(p) => read_json(p)?,
                None => RunConfig::default(),
            };
            if let Some(e) = epochs {
                run.train.epochs = e;
            }
            if let Some(s) = seed {
                run.train.seed = s;
            }
            if let Some(lr) = learning_rate {
                run.train.learning_rate = lr;
            }
            run.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let records: Vec<InstanceRecord> = read_jsonl(&instances)?;
            train_command(&records, &run, &ckpt_dir, out)
        }
        Command::Summarize {
            ckpt,
            lda_model,
            java_file,
            beam,
            infer_iters,
            seed,
        } => {
            let rows = summarize_file(&ckpt, &lda_model, &java_file, beam, infer_iters, seed)?;
            let _ = write!(out, "{}", jsonl(&rows)?);
            Ok(())
        }
        Command::Eval { hyp, reference } => {
            let hyps: Vec<DecodedSummary> = read_jsonl(&hyp)?;
            let refs: Vec<DecodedSummary> = read_jsonl(&reference)?;
            if hyps.len() != refs.len() {
                return Err(data(EvalError::LengthMismatch {
                    candidates: hyps.len(),
                    references: refs.len(),
                }));
            }
            if let Some((index, (h, r))) = hyps.iter().zip(&refs).enumerate().find(|(_, (h, r))| h.method != r.method) {
                return Err(data(EvalError::Misaligned {
                    index,
                    hyp: h.method.clone(),
                    reference: r.method.clone(),
                }));
            }
            let split = |rows: &[DecodedSummary]| -> Vec<Vec<String>> {
                rows.iter()
                    .map(|r| r.summary.split_whitespace().map(str::to_owned).collect())
                    .collect()
            };
            let report = evaluate(&split(&hyps), &split(&refs)).map_err(data)?;
            let _ = writeln!(out, "{}", serde_json::to_string(&report).map_err(data)?);
            Ok(())
        }
    }
}

fn train_command(records: &[InstanceRecord], run: &RunConfig, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    if records.is_empty() {
        return Err(CliError::Data("no training instances".into()));
    }
    let code_vocab =
        Vocabulary::build(records.iter().map(|r| &r.code), run.code_vocab_size, run.min_count).map_err(data)?;
    let sum_vocab =
        Vocabulary::build(records.iter().map(|r| &r.summary), run.sum_vocab_size, run.min_count).map_err(data)?;
    let n_topics = records[0].topics.len();
    if n_topics == 0 || records.iter().any(|r| r.topics.len() != n_topics) {
        return Err(CliError::Data("every instance needs the same non-zero number of topics".into()));
    }
    let max_topic = records.iter().flat_map(|r| r.topics.iter()).max().copied().unwrap_or(0);
    let topic_count = run.topic_count.unwrap_or(max_topic + 1);
    if max_topic >= topic_count {
        return Err(CliError::Data(format!("topic id {max_topic} is not below topic_count {topic_count}")));
    }
    let config = ModelConfig {
        code_vocab_size: code_vocab.len(),
        sum_vocab_size: sum_vocab.len(),
        topic_count,
        n_topics,
        embed_dim: run.embed_dim,
        topic_embed_dim: run.topic_embed_dim,
        hidden_dim: run.hidden_dim,
        max_code_len: run.max_code_len,
        max_sum_len: run.max_sum_len,
        use_topics: run.use_topics,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let enc = Encoder {
        code_vocab: &code_vocab,
        sum_vocab: &sum_vocab,
        n_topics,
        null_topic: topic_count,
        max_code_len: run.max_code_len,
        max_sum_len: run.max_sum_len,
    };
    let instances: Vec<_> = records.iter().map(|r| enc.encode(r)).collect();

    fs::create_dir_all(dir).map_err(data_at(dir))?;
    let result = train(&config, &run.train, &instances, Some(&dir.join("checkpoints"))).map_err(data)?;
    write_file(&dir.join(CODE_VOCAB_FILE), pretty(&code_vocab)?)?;
    write_file(&dir.join(SUM_VOCAB_FILE), pretty(&sum_vocab)?)?;
    write_file(&dir.join(RUN_CONFIG_FILE), pretty(run)?)?;
    save_checkpoint(&result.params, &dir.join(MODEL_FILE)).map_err(data)?;
    write_loss_log(&dir.join(LOSS_FILE), &result.losses).map_err(data)?;
    if let Some(last) = result.losses.last() {
        let _ = writeln!(out, "trained {} epochs, final mean loss {:.6}", last.epoch, last.mean_loss);
    }
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(data)
}

/// The online phase: infer the class topics of each class in `java_file`,
/// encode every method and decode a summary for it.
fn summarize_file(
    ckpt: &Path,
    lda_model: &Path,
    java_file: &Path,
    beam: usize,
    infer_iters: usize,
    seed: u64,
) -> Result<Vec<DecodedSummary>, CliError> {
    let code_vocab: Vocabulary = read_json(&ckpt.join(CODE_VOCAB_FILE))?;
    let sum_vocab: Vocabulary = read_json(&ckpt.join(SUM_VOCAB_FILE))?;
    let params = load_checkpoint(&ckpt.join(MODEL_FILE)).map_err(data)?;
    let lda = TopicModel::load(lda_model).map_err(data)?;
    let cfg = &params.config;
    if lda.k() > cfg.topic_count {
        return Err(CliError::Data(format!(
            "topic model has {} topics but the network was trained with {}",
            lda.k(),
            cfg.topic_count
        )));
    }
    let classes = extract_file(java_file).map_err(data)?;
    let inst_config = InstanceConfig {
        n_topics: cfg.n_topics,
        max_code_len: cfg.max_code_len,
        max_sum_len: cfg.max_sum_len,
        infer_iterations: infer_iters,
        seed,
    };
    let enc = Encoder {
        code_vocab: &code_vocab,
        sum_vocab: &sum_vocab,
        n_topics: cfg.n_topics,
        null_topic: cfg.topic_count,
        max_code_len: cfg.max_code_len,
        max_sum_len: cfg.max_sum_len,
    };
    let mut rows = Vec::new();
    for class in &classes {
        let topics = class_topics(class, &lda, &inst_config).map_err(data)?;
        for m in class.methods.iter().filter(|m| !m.code_tokens.is_empty()) {
            let inst = enc.encode_source(&m.code_tokens, &topics);
            let ids = beam_search(&params, &inst, beam, cfg.max_sum_len - 1).map_err(data)?;
            rows.push(DecodedSummary {
                method: m.method_name.clone(),
                summary: detokenize(&ids, &sum_vocab, &inst.oov_map).map_err(data)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(std::iter::once("codesum").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        let (code, out, err) = run_capture(&["frobnicate"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(!err.is_empty());
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("summarize"));
    }

    #[test]
    fn zero_topics_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let classes = dir.path().join("c.jsonl");
        fs::write(&classes, "").unwrap();
        let model = dir.path().join("lda.json");
        let (code, _, err) = run_capture(&["train-lda", classes.to_str().unwrap(), model.to_str().unwrap(), "--k", "0"]);
        assert_eq!(code, 1);
        assert!(err.contains("k"), "{err}");
        assert!(!model.exists());
    }

    #[test]
    fn missing_input_is_a_data_error() {
        let (code, _, err) = run_capture(&["eval", "/nonexistent/h.jsonl", "/nonexistent/r.jsonl"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/h.jsonl"));
    }

    #[test]
    fn eval_of_identical_files_is_perfect() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.jsonl");
        fs::write(
            &p,
            "{\"method\":\"a\",\"summary\":\"returns the value\"}\n{\"method\":\"b\",\"summary\":\"sets x\"}\n",
        )
        .unwrap();
        let (code, out, _) = run_capture(&["eval", p.to_str().unwrap(), p.to_str().unwrap()]);
        assert_eq!(code, 0);
        let report: crate::eval::EvalReport = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(report.corpus_bleu4, 1.0);
        assert_eq!(report.exact_match_rate, 1.0);
        assert_eq!(report.n, 2);
    }

    #[test]
    fn run_config_defaults_fill_missing_fields() {
        let c: RunConfig = serde_json::from_str(r#"{"hidden_dim": 8, "train": {"epochs": 2}}"#).unwrap();
        assert_eq!(c.hidden_dim, 8);
        assert_eq!(c.train.epochs, 2);
        assert_eq!(c.train.learning_rate, 1e-3);
        assert_eq!(c.embed_dim, RunConfig::default().embed_dim);
    }
}
