use super::split::split_identifier;

/// Reference summary of a doc comment: its first sentence with block tags,
/// inline tags and HTML removed, lowercased. `None` when fewer than two
/// alphabetic words remain.
pub fn extract_summary(doc_comment: &str) -> Option<String> {
    let body = doc_comment.trim();
    let body = body.strip_prefix("/**").unwrap_or(body);
    let body = body.strip_suffix("*/").unwrap_or(body);

    let mut lines = Vec::new();
    for line in body.lines() {
        let line = line.trim_start().trim_start_matches('*').trim();
        if line.starts_with('@') {
            break;
        }
        lines.push(line);
    }
    let text = strip_html(&unwrap_inline_tags(&lines.join(" ")));
    let text = text
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&nbsp;", " ")
        .replace("&amp;", "&");

    let sentence = first_sentence(&text);
    let sentence = sentence.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let sentence = sentence.trim_end_matches('.').trim_end().to_owned();

    let alphabetic = sentence
        .split_whitespace()
        .filter(|w| w.chars().any(char::is_alphabetic))
        .count();
    (alphabetic >= 2).then_some(sentence)
}

/// Summary words for the model: split on anything non-alphanumeric, then
/// into identifier subtokens. Punctuation is dropped.
pub fn summary_tokens(summary: &str) -> Vec<String> {
    summary
        .split(|c: char| !c.is_alphanumeric())
        .flat_map(split_identifier)
        .collect()
}

fn first_sentence(text: &str) -> &str {
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '.' && chars.peek().is_none_or(|&(_, n)| n.is_whitespace()) {
            return &text[..i];
        }
    }
    text
}

/// `{@code x}` → `x`, `{@link Foo#bar label}` → `label`, `{@link Foo#bar}` → `Foo bar`.
fn unwrap_inline_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("{@") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find('}') else {
            out.push_str(&rest[start..]);
            return out;
        };
        let inner = &after[..end];
        let mut parts = inner.splitn(2, char::is_whitespace);
        let tag = parts.next().unwrap_or("");
        let arg = parts.next().unwrap_or("").trim();
        let replaced = if tag.starts_with("link") {
            let mut ref_and_label = arg.splitn(2, char::is_whitespace);
            let reference = ref_and_label.next().unwrap_or("");
            match ref_and_label.next() {
                Some(label) => label.trim().to_owned(),
                None => reference.replace('#', " ").trim().to_owned(),
            }
        } else {
            arg.to_owned()
        };
        out.push_str(&replaced);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    out
}

fn strip_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_tag = false;
    for c in text.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_value_reference() {
        let doc = "/** Writes the json representation of this value to the given writer in its minimal form without any additional whitespace. */";
        assert_eq!(
            extract_summary(doc).as_deref(),
            Some("writes the json representation of this value to the given writer in its minimal form without any additional whitespace")
        );
    }

    #[test]
    fn tags_only_has_no_summary() {
        assert_eq!(extract_summary("/** @param x */"), None);
        assert_eq!(extract_summary("/** */"), None);
        assert_eq!(extract_summary("/** Ok. */"), None);
    }

    #[test]
    fn keeps_only_the_first_sentence() {
        assert_eq!(extract_summary("/** Creates X. Also does Y. */").as_deref(), Some("creates x"));
    }

    #[test]
    fn multiline_with_tags_and_markup() {
        let doc = "/**\n * Returns the {@code size} of the <b>backing</b> {@link java.util.List list}.\n *\n * @return the size\n */";
        assert_eq!(
            extract_summary(doc).as_deref(),
            Some("returns the size of the backing list")
        );
        let doc = "/**\n * Parses version 1.2 strings\n * @param s input\n */";
        assert_eq!(extract_summary(doc).as_deref(), Some("parses version 1.2 strings"));
    }

    #[test]
    fn summary_tokens_drop_punctuation() {
        assert_eq!(
            summary_tokens("creates the appropriate link speex packet, for oggPacket"),
            ["creates", "the", "appropriate", "link", "speex", "packet", "for", "ogg", "packet"]
        );
    }
}
