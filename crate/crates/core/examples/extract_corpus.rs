//! Extracts documented methods from a Java tree and shows the summaries
//! and code subtokens the model would train on.
//!
//!     cargo run --example extract_corpus -- [java-dir]

use std::path::PathBuf;

use codesum::corpus::{extract_dir, extract_summary, split_identifier, summary_tokens};

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/java"));
    let out = extract_dir(&root).expect("readable source tree");
    for (path, err) in &out.failures {
        eprintln!("skipped {}: {err}", path.display());
    }
    println!("splitIdentifier examples: {:?} {:?}", split_identifier("createSpeexPacket"), split_identifier("parseHTTPResponse2"));
    for class in &out.classes {
        println!("\n{} ({} methods, {} class tokens)", class.class_name, class.methods.len(), class.class_tokens.len());
        for m in &class.methods {
            let summary = m.doc_comment.as_deref().and_then(extract_summary);
            match summary {
                Some(s) => println!("  {:<18} {:?}", m.method_name, summary_tokens(&s)),
                None => println!("  {:<18} (no usable summary)", m.method_name),
            }
        }
    }
}
