use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::lexer::{lex, Token, TokenKind};
use super::split::split_identifier;
use super::CorpusError;

/// One top-level class: its comment-free token bag and its methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawClass {
    pub path: String,
    pub class_name: String,
    pub class_tokens: Vec<String>,
    pub methods: Vec<RawMethod>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawMethod {
    pub method_name: String,
    pub code_tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_comment: Option<String>,
}

const TYPE_KEYWORDS: [&str; 4] = ["class", "interface", "enum", "record"];

/// Words that can precede `(` without naming a method.
const NOT_METHOD_NAMES: [&str; 9] = [
    "if", "for", "while", "switch", "catch", "synchronized", "return", "new", "try",
];

/// Normalized form of one lexical token: identifiers become lowercase
/// subtokens, literals become placeholders (strings keep their words),
/// punctuation is kept verbatim.
pub fn normalize_token(tok: &Token<'_>) -> Vec<String> {
    match tok.kind {
        TokenKind::Ident => split_identifier(tok.text),
        TokenKind::Number => vec!["<num>".to_owned()],
        TokenKind::Char => vec!["<chr>".to_owned()],
        TokenKind::Str => {
            let words: Vec<String> = tok
                .text
                .split(|c: char| !c.is_alphanumeric())
                .flat_map(split_identifier)
                .collect();
            if words.is_empty() {
                vec!["<str>".to_owned()]
            } else {
                words
            }
        }
        TokenKind::Punct => vec![tok.text.to_owned()],
        TokenKind::DocComment | TokenKind::Comment => Vec::new(),
    }
}

fn normalize_range(toks: &[Token<'_>]) -> Vec<String> {
    toks.iter().flat_map(normalize_token).collect()
}

/// For every brace token, the index of its partner.
fn match_braces(toks: &[Token<'_>]) -> Result<Vec<Option<usize>>, CorpusError> {
    let mut matching = vec![None; toks.len()];
    let mut stack = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if t.is_punct("{") {
            stack.push(i);
        } else if t.is_punct("}") {
            let Some(open) = stack.pop() else {
                return Err(CorpusError::UnbalancedBraces { offset: t.offset });
            };
            matching[open] = Some(i);
            matching[i] = Some(open);
        }
    }
    if let Some(&open) = stack.first() {
        return Err(CorpusError::UnbalancedBraces {
            offset: toks[open].offset,
        });
    }
    Ok(matching)
}

struct Parser<'t, 's> {
    toks: &'t [Token<'s>],
    matching: Vec<Option<usize>>,
}

impl<'s> Parser<'_, 's> {
    fn close_of(&self, open: usize) -> usize {
        self.matching[open].expect("braces are balanced")
    }

    fn prev_code(&self, i: usize) -> Option<&Token<'s>> {
        self.toks[..i].iter().rev().find(|t| !t.is_comment())
    }

    fn next_code(&self, i: usize) -> Option<&Token<'s>> {
        self.toks[i + 1..].iter().find(|t| !t.is_comment())
    }

    /// A type declaration keyword (`class Foo`), not `Foo.class`.
    fn declares_type(&self, i: usize) -> bool {
        let t = &self.toks[i];
        t.kind == TokenKind::Ident
            && TYPE_KEYWORDS.contains(&t.text)
            && !self.prev_code(i).is_some_and(|p| p.is_punct("."))
            && self.next_code(i).is_some_and(|n| n.kind == TokenKind::Ident)
    }

    fn open_brace_from(&self, i: usize, end: usize) -> Option<usize> {
        (i..end).find(|&j| self.toks[j].is_punct("{"))
    }

    fn classes(&self) -> Vec<RawClass> {
        let mut out = Vec::new();
        let mut i = 0;
        let mut depth = 0usize;
        while i < self.toks.len() {
            let t = &self.toks[i];
            if t.is_punct("{") {
                depth += 1;
            } else if t.is_punct("}") {
                depth = depth.saturating_sub(1);
            } else if depth == 0 && self.declares_type(i) {
                let name = self.next_code(i).expect("checked").text.to_owned();
                if let Some(open) = self.open_brace_from(i, self.toks.len()) {
                    let close = self.close_of(open);
                    let code: Vec<Token<'_>> = self.toks[i..=close]
                        .iter()
                        .filter(|t| !t.is_comment())
                        .cloned()
                        .collect();
                    let mut methods = Vec::new();
                    self.members(open + 1, close, &mut methods);
                    out.push(RawClass {
                        path: String::new(),
                        class_name: name,
                        class_tokens: normalize_range(&code),
                        methods,
                    });
                    i = close + 1;
                    continue;
                }
            }
            i += 1;
        }
        out
    }

    /// Walks the members of a type body `[start, end)`. Nested type bodies
    /// are walked too, so their methods land in the enclosing class.
    fn members(&self, start: usize, end: usize, out: &mut Vec<RawMethod>) {
        let mut i = start;
        let mut member_start: Option<usize> = None;
        let mut doc: Option<&str> = None;
        while i < end {
            let t = &self.toks[i];
            match t.kind {
                TokenKind::DocComment => {
                    if member_start.is_none() {
                        doc = Some(t.text);
                    }
                    i += 1;
                }
                TokenKind::Comment => i += 1,
                _ => {
                    let begin = *member_start.get_or_insert(i);
                    if t.is_punct(";") {
                        member_start = None;
                        doc = None;
                        i += 1;
                    } else if self.declares_type(i) {
                        if let Some(open) = self.open_brace_from(i, end) {
                            let close = self.close_of(open);
                            self.members(open + 1, close, out);
                            i = close + 1;
                        } else {
                            i = end;
                        }
                        member_start = None;
                        doc = None;
                    } else if t.is_punct("{") {
                        let close = self.close_of(i);
                        if let Some(name) = self.method_name(begin, i) {
                            let code: Vec<Token<'_>> = self.toks[begin..=close]
                                .iter()
                                .filter(|t| !t.is_comment())
                                .cloned()
                                .collect();
                            out.push(RawMethod {
                                method_name: name.to_owned(),
                                code_tokens: normalize_range(&code),
                                doc_comment: doc.map(str::to_owned),
                            });
                            member_start = None;
                            doc = None;
                        } else if self.is_initializer_block(begin, i) {
                            member_start = None;
                            doc = None;
                        }
                        i = close + 1;
                    } else {
                        i += 1;
                    }
                }
            }
        }
    }

    fn code_indices(&self, begin: usize, end: usize) -> Vec<usize> {
        (begin..end).filter(|&j| !self.toks[j].is_comment()).collect()
    }

    fn is_initializer_block(&self, begin: usize, brace: usize) -> bool {
        let idx = self.code_indices(begin, brace);
        idx.is_empty() || (idx.len() == 1 && self.toks[idx[0]].is_ident("static"))
    }

    /// Name of the method whose body opens at `brace`, if the member
    /// `[begin, brace)` is a method header `... name(...) [throws ...]`.
    fn method_name(&self, begin: usize, brace: usize) -> Option<&'s str> {
        let idx = self.code_indices(begin, brace);
        if idx.iter().any(|&j| self.toks[j].is_punct("=")) {
            return None;
        }
        let close_pos = idx.iter().rposition(|&j| self.toks[j].is_punct(")"))?;
        let tail = &idx[close_pos + 1..];
        if let Some((&first, rest)) = tail.split_first() {
            if !self.toks[first].is_ident("throws") {
                return None;
            }
            let ok = rest.iter().all(|&j| {
                let t = &self.toks[j];
                t.kind == TokenKind::Ident
                    || t.is_punct(".")
                    || t.is_punct(",")
                    || t.is_punct("<")
                    || t.is_punct(">")
            });
            if !ok {
                return None;
            }
        }
        let mut depth = 0i32;
        let mut open_pos = None;
        for p in (0..=close_pos).rev() {
            let t = &self.toks[idx[p]];
            if t.is_punct(")") {
                depth += 1;
            } else if t.is_punct("(") {
                depth -= 1;
                if depth == 0 {
                    open_pos = Some(p);
                    break;
                }
            }
        }
        let name_pos = open_pos?.checked_sub(1)?;
        let name = &self.toks[idx[name_pos]];
        if name.kind != TokenKind::Ident || NOT_METHOD_NAMES.contains(&name.text) {
            return None;
        }
        if name_pos > 0 && self.toks[idx[name_pos - 1]].is_ident("new") {
            return None;
        }
        Some(name.text)
    }
}

/// Extracts every top-level class of a Java-like source file.
pub fn extract_classes(source_text: &str) -> Result<Vec<RawClass>, CorpusError> {
    let toks = lex(source_text)?;
    let matching = match_braces(&toks)?;
    let parser = Parser {
        toks: &toks,
        matching,
    };
    Ok(parser.classes())
}

pub fn extract_file(path: &Path) -> Result<Vec<RawClass>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut classes = extract_classes(&text)?;
    let shown = path.display().to_string();
    for c in &mut classes {
        c.path.clone_from(&shown);
    }
    Ok(classes)
}

/// Result of walking a source tree.
#[derive(Debug, Default)]
pub struct ExtractOutput {
    pub classes: Vec<RawClass>,
    /// Files that failed to lex or had unbalanced braces.
    pub failures: Vec<(PathBuf, CorpusError)>,
}

/// Extracts all `.java` files under `root`. Files are processed in
/// parallel; the output is ordered by path regardless of scheduling.
pub fn extract_dir(root: &Path) -> Result<ExtractOutput, CorpusError> {
    let mut files = Vec::new();
    for entry in WalkDir::new(root) {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: root.to_path_buf(),
            message: e.to_string(),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "java") {
            files.push(entry.into_path());
        }
    }
    files.sort();
    let results: Vec<_> = files
        .par_iter()
        .map(|p| (p.clone(), extract_file(p)))
        .collect();
    let mut out = ExtractOutput::default();
    for (path, r) in results {
        match r {
            Ok(classes) => out.classes.extend(classes),
            Err(e) => out.failures.push((path, e)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSON_VALUE: &str = r#"
package com.eclipsesource.json;

import java.io.Writer;

/**
 * Represents a JSON value.
 */
public abstract class JsonValue implements Serializable {
  // cached
  protected static final String NULL = "null";

  /**
   * Writes the JSON representation of this value to the given writer in its minimal form, without
   * any additional whitespace.
   *
   * @param writer the writer to write this value to
   * @throws IOException if an I/O error occurs in the writer
   */
  public void writeTo(Writer writer) throws IOException {
    writeTo(writer, WriterConfig.MINIMAL);
  }

  public boolean isNull() {
    return false; /* never */
  }
}
"#;

    #[test]
    fn json_value_fixture() {
        let classes = extract_classes(JSON_VALUE).unwrap();
        assert_eq!(classes.len(), 1);
        let c = &classes[0];
        assert_eq!(c.class_name, "JsonValue");
        let names: Vec<&str> = c.methods.iter().map(|m| m.method_name.as_str()).collect();
        assert_eq!(names, ["writeTo", "isNull"]);
        let doc = c.methods[0].doc_comment.as_deref().unwrap();
        assert!(doc.contains("Writes the JSON representation"));
        assert!(c.methods[1].doc_comment.is_none());
        assert!(!c.class_tokens.iter().any(|t| t == "cached" || t == "never" || t == "represents"));
        assert_eq!(
            &c.methods[1].code_tokens,
            &["public", "boolean", "is", "null", "(", ")", "{", "return", "false", ";", "}"]
        );
    }

    #[test]
    fn empty_input_has_no_classes() {
        assert!(extract_classes("").unwrap().is_empty());
        assert!(extract_classes("package a.b; import c.D;").unwrap().is_empty());
    }

    #[test]
    fn unbalanced_braces_report_offset() {
        let src = "class A { void f() { }";
        assert_eq!(
            extract_classes(src).unwrap_err(),
            CorpusError::UnbalancedBraces { offset: 8 }
        );
        let src = "class A { } }";
        assert_eq!(
            extract_classes(src).unwrap_err(),
            CorpusError::UnbalancedBraces { offset: 12 }
        );
    }

    #[test]
    fn non_method_blocks_are_skipped() {
        let src = r#"
enum Mode { FAST { int k() { return 1; } }, SLOW;
  static { init(); }
  int[] table = { 1, 2 };
  Runnable r = new Runnable() { public void run() { } };
  Runnable l = () -> { go(); };
  /** Makes one. */
  Mode(int x) { }
  abstract int k();
  /** Gets it. */
  <T extends Comparable<T>> T pick(List<T> xs) throws IOException, java.io.EOFException {
    if (xs.isEmpty()) { return null; }
    return xs.get(0);
  }
  static class Inner {
    /** Inner thing. */
    void inner() {}
  }
}
class Second { void s() {} }
"#;
        let classes = extract_classes(src).unwrap();
        assert_eq!(classes.len(), 2);
        let names: Vec<&str> = classes[0].methods.iter().map(|m| m.method_name.as_str()).collect();
        assert_eq!(names, ["Mode", "pick", "inner"]);
        assert_eq!(classes[0].methods[1].doc_comment.as_deref(), Some("/** Gets it. */"));
        assert_eq!(classes[0].methods[2].doc_comment.as_deref(), Some("/** Inner thing. */"));
        assert_eq!(classes[1].class_name, "Second");
        assert!(classes[0].class_tokens.contains(&"inner".to_owned()));
    }

    #[test]
    fn class_literal_is_not_a_declaration() {
        let src = "class A { Class<?> k() { return B.class; } }";
        let classes = extract_classes(src).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].methods[0].method_name, "k");
    }

    #[test]
    fn string_literals_keep_their_words() {
        let src = r#"class A { String f() { return "speexPacket!"; } }"#;
        let m = &extract_classes(src).unwrap()[0].methods[0];
        assert!(m.code_tokens.windows(2).any(|w| w == ["speex", "packet"]));
    }

    #[test]
    fn extraction_is_deterministic() {
        assert_eq!(extract_classes(JSON_VALUE).unwrap(), extract_classes(JSON_VALUE).unwrap());
    }
}
