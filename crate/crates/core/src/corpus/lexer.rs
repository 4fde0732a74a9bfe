use super::CorpusError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
    /// `/** ... */`
    DocComment,
    /// `// ...` and `/* ... */`
    Comment,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token<'s> {
    pub kind: TokenKind,
    pub text: &'s str,
    pub offset: usize,
}

impl Token<'_> {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_ident(&self, s: &str) -> bool {
        self.kind == TokenKind::Ident && self.text == s
    }

    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::Comment | TokenKind::DocComment)
    }
}

const MULTI_PUNCT: [&str; 14] = [
    "->", "::", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=",
];

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

/// Tokenizes Java-like source. Comments are kept as tokens so the extractor
/// can pair doc comments with the declarations that follow them.
pub fn lex(src: &str) -> Result<Vec<Token<'_>>, CorpusError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if src[i..].starts_with("//") {
            let end = src[i..].find('\n').map_or(src.len(), |n| i + n);
            out.push(Token {
                kind: TokenKind::Comment,
                text: &src[start..end],
                offset: start,
            });
            i = end;
            continue;
        }
        if src[i..].starts_with("/*") {
            let Some(close) = src[i + 2..].find("*/") else {
                return Err(CorpusError::Lex {
                    offset: start,
                    message: "unterminated block comment".into(),
                });
            };
            let end = i + 2 + close + 2;
            let text = &src[start..end];
            let kind = if text.starts_with("/**") && text != "/**/" {
                TokenKind::DocComment
            } else {
                TokenKind::Comment
            };
            out.push(Token {
                kind,
                text,
                offset: start,
            });
            i = end;
            continue;
        }
        if src[i..].starts_with("\"\"\"") {
            let Some(close) = src[i + 3..].find("\"\"\"") else {
                return Err(CorpusError::Lex {
                    offset: start,
                    message: "unterminated text block".into(),
                });
            };
            let end = i + 3 + close + 3;
            out.push(Token {
                kind: TokenKind::Str,
                text: &src[start..end],
                offset: start,
            });
            i = end;
            continue;
        }
        if c == '"' || c == '\'' {
            let mut j = i + 1;
            loop {
                match bytes.get(j) {
                    None | Some(b'\n') => {
                        return Err(CorpusError::Lex {
                            offset: start,
                            message: "unterminated literal".into(),
                        })
                    }
                    Some(b'\\') => j += 2,
                    Some(&b) if b == c as u8 => break,
                    Some(_) => j += 1,
                }
            }
            let end = j + 1;
            let kind = if c == '"' { TokenKind::Str } else { TokenKind::Char };
            out.push(Token {
                kind,
                text: &src[start..end],
                offset: start,
            });
            i = end;
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while let Some(d) = src[j..].chars().next() {
                let exp_sign = (d == '+' || d == '-')
                    && matches!(bytes.get(j.wrapping_sub(1)), Some(b'e' | b'E' | b'p' | b'P'))
                    && !src[start..j].starts_with("0x");
                if d.is_ascii_alphanumeric() || d == '_' || d == '.' || exp_sign {
                    j += d.len_utf8();
                } else {
                    break;
                }
            }
            out.push(Token {
                kind: TokenKind::Number,
                text: &src[start..j],
                offset: start,
            });
            i = j;
            continue;
        }
        if is_ident_start(c) {
            let mut j = i;
            while let Some(d) = src[j..].chars().next() {
                if is_ident_continue(d) {
                    j += d.len_utf8();
                } else {
                    break;
                }
            }
            out.push(Token {
                kind: TokenKind::Ident,
                text: &src[start..j],
                offset: start,
            });
            i = j;
            continue;
        }
        let len = MULTI_PUNCT
            .iter()
            .find(|p| src[i..].starts_with(**p))
            .map_or(c.len_utf8(), |p| p.len());
        out.push(Token {
            kind: TokenKind::Punct,
            text: &src[start..start + len],
            offset: start,
        });
        i += len;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, &str)> {
        lex(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn separates_comments_literals_and_code() {
        let toks = kinds("/** doc */ int x = 0x1F; // tail\n/* c */ s = \"a\\\"b\"; c = '}';");
        assert_eq!(toks[0], (TokenKind::DocComment, "/** doc */"));
        assert_eq!(toks[1], (TokenKind::Ident, "int"));
        assert_eq!(toks[4], (TokenKind::Number, "0x1F"));
        assert_eq!(toks[6], (TokenKind::Comment, "// tail"));
        assert_eq!(toks[7], (TokenKind::Comment, "/* c */"));
        assert!(toks.contains(&(TokenKind::Str, "\"a\\\"b\"")));
        assert!(toks.contains(&(TokenKind::Char, "'}'")));
    }

    #[test]
    fn numbers_with_exponents_and_arrows() {
        let toks = kinds("x = 1.5e-3f; f = () -> y;");
        assert!(toks.contains(&(TokenKind::Number, "1.5e-3f")));
        assert!(toks.contains(&(TokenKind::Punct, "->")));
    }

    #[test]
    fn empty_block_comment_is_not_doc() {
        assert_eq!(kinds("/**/")[0].0, TokenKind::Comment);
    }

    #[test]
    fn unterminated_comment_reports_offset() {
        let err = lex("int a; /* open").unwrap_err();
        assert_eq!(err, CorpusError::Lex { offset: 7, message: "unterminated block comment".into() });
    }
}
