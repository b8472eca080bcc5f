//! Output cleanup applied to system outputs before scoring.

const EOS: &str = "</s>";

/// Removes a terminal end-of-sequence marker together with the whitespace
/// around it. A run of trailing markers is removed as a whole so the
/// operation is idempotent; interior markers are left alone.
pub fn strip_terminal_eos(text: &str) -> String {
    let mut rest = text.trim_end();
    let mut stripped = false;
    while let Some(head) = rest.strip_suffix(EOS) {
        rest = head.trim_end();
        stripped = true;
    }
    if stripped {
        rest.to_string()
    } else {
        text.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Attach {
    /// Separated by a space on both sides.
    Free,
    /// Glued to the preceding token.
    Left,
    /// Glued to the following token.
    Right,
}

fn is_closing_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | ':' | ';' | '?' | '!' | ')' | ']' | '}' | '%' | '…'
    )
}

fn is_opening_punct(c: char) -> bool {
    matches!(c, '(' | '[' | '{' | '¿' | '¡' | '$' | '£')
}

/// Quote characters whose direction depends on the language.
fn directed_quote(c: char, lang: &str) -> Option<Attach> {
    let german = lang.eq_ignore_ascii_case("de");
    match c {
        '„' | '‚' | '«' => Some(Attach::Right),
        '»' => Some(Attach::Left),
        '“' | '‘' if german => Some(Attach::Left),
        '“' | '‘' => Some(Attach::Right),
        '”' | '’' => Some(Attach::Left),
        _ => None,
    }
}

fn is_clitic(token: &str, lang: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some('\'') | Some('’') => {
            let rest = chars.as_str();
            !rest.is_empty() && rest.chars().all(char::is_alphabetic)
        }
        _ => lang.eq_ignore_ascii_case("en") && token == "n't",
    }
}

/// Rule-based detokenizer for whitespace-tokenized German or English text.
///
/// Only whitespace is changed: the sequence of non-whitespace characters is
/// always preserved.
pub fn detokenize(text: &str, lang: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut glue_next = true;
    let mut double_open = false;
    let mut single_open = false;

    for token in text.split_whitespace() {
        let single_char = {
            let mut cs = token.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => Some(c),
                _ => None,
            }
        };
        let attach = match single_char {
            Some('"') => {
                double_open = !double_open;
                if double_open {
                    Attach::Right
                } else {
                    Attach::Left
                }
            }
            Some('\'') => {
                single_open = !single_open;
                if single_open {
                    Attach::Right
                } else {
                    Attach::Left
                }
            }
            Some(c) if is_opening_punct(c) => Attach::Right,
            Some(c) => directed_quote(c, lang).unwrap_or(if is_closing_punct(c) {
                Attach::Left
            } else {
                Attach::Free
            }),
            None if token.chars().all(is_closing_punct) => Attach::Left,
            None if is_clitic(token, lang) => Attach::Left,
            None => Attach::Free,
        };

        if !out.is_empty() && !glue_next && attach != Attach::Left {
            out.push(' ');
        }
        out.push_str(token);
        glue_next = attach == Attach::Right;
    }
    out
}
