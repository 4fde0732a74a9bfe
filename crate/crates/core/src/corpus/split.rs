#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Upper,
    Lower,
    Digit,
}

fn classify(c: char) -> Option<Class> {
    if c.is_ascii_digit() || (c.is_numeric() && !c.is_alphabetic()) {
        Some(Class::Digit)
    } else if c.is_uppercase() {
        Some(Class::Upper)
    } else if c.is_alphanumeric() {
        Some(Class::Lower)
    } else {
        None
    }
}

/// Splits an identifier into lowercase subtokens at camelCase boundaries,
/// underscores (and any other non-alphanumeric character) and letter/digit
/// transitions. Acronym runs stay together: `HTMLParser` gives `html`, `parser`.
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut pieces: Vec<String> = Vec::new();
    let mut current: Vec<char> = Vec::new();
    let mut prev: Option<Class> = None;

    let flush = |current: &mut Vec<char>, pieces: &mut Vec<String>| {
        if !current.is_empty() {
            let s: String = current.drain(..).collect();
            pieces.push(s.to_lowercase());
        }
    };

    for c in ident.chars() {
        let Some(class) = classify(c) else {
            flush(&mut current, &mut pieces);
            prev = None;
            continue;
        };
        match (prev, class) {
            (Some(Class::Digit), Class::Upper | Class::Lower)
            | (Some(Class::Upper | Class::Lower), Class::Digit)
            | (Some(Class::Lower), Class::Upper) => flush(&mut current, &mut pieces),
            (Some(Class::Upper), Class::Lower) if current.len() >= 2 => {
                // "HTMLParser": the last capital starts the next word.
                let last = current.pop().expect("len >= 2");
                flush(&mut current, &mut pieces);
                current.push(last);
            }
            _ => {}
        }
        current.push(c);
        prev = Some(class);
    }
    flush(&mut current, &mut pieces);
    pieces
}
