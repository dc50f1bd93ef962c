//! Word tokenizer.
//!
//! Rules, applied to the lowercased text:
//!
//! * whitespace separates chunks;
//! * a word is a run of letters/digits, with `'` or `-` allowed between two
//!   word characters and `.`/`,` allowed between two digits (`3.5`, `1,000`);
//!   a leading `'` directly followed by a letter starts a word (`'em`);
//! * every other non-space character is a token on its own;
//! * `’` is read as `'`;
//! * contractions split Treebank-style: `don't` → `do n't`, `can't` → `ca n't`,
//!   `won't` → `wo n't`, and the clitics `'s 're 've 'll 'd 'm` split off.

const CLITICS: [&str; 6] = ["'s", "'re", "'ve", "'ll", "'d", "'m"];

pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text
        .chars()
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .flat_map(char::to_lowercase)
        .collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let starts_word = c.is_alphanumeric()
            || (c == '\'' && chars.get(i + 1).is_some_and(|n| n.is_alphabetic()));
        if !starts_word {
            tokens.push(c.to_string());
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        while i < chars.len() {
            let c = chars[i];
            if c.is_alphanumeric() {
                i += 1;
                continue;
            }
            let prev = chars[i - 1];
            let next = chars.get(i + 1).copied();
            let joins = match c {
                '\'' | '-' => prev.is_alphanumeric() && next.is_some_and(char::is_alphanumeric),
                '.' | ',' => prev.is_ascii_digit() && next.is_some_and(|n| n.is_ascii_digit()),
                _ => false,
            };
            if joins {
                i += 1;
            } else {
                break;
            }
        }
        let word: String = chars[start..i].iter().collect();
        split_contraction(word, &mut tokens);
    }
    tokens
}

fn split_contraction(word: String, out: &mut Vec<String>) {
    if let Some(stem) = word.strip_suffix("n't") {
        // "can't" and "won't" fall out as "ca"/"wo" like the Treebank.
        if !stem.is_empty() {
            out.push(stem.to_string());
            out.push("n't".to_string());
            return;
        }
    }
    for clitic in CLITICS {
        if let Some(stem) = word.strip_suffix(clitic) {
            if !stem.is_empty() && !stem.ends_with('\'') {
                out.push(stem.to_string());
                out.push(clitic.to_string());
                return;
            }
        }
    }
    out.push(word);
}
