//! The regular-expression fragment that string programs can build: literals, the `.` wildcard,
//! negated classes `[^…]` (from `rnot`), alternation `((a)|(b))` (from `ror`) and concatenation.

use crate::error::EvalError;

#[derive(Clone, Debug, PartialEq)]
enum Re {
    Char(char),
    Any,
    Class { negated: bool, chars: Vec<char> },
    Seq(Vec<Re>),
    Alt(Box<Re>, Box<Re>),
}

/// A compiled pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern(Re);

impl Pattern {
    pub fn compile(src: &str) -> Result<Pattern, EvalError> {
        let chars: Vec<char> = src.chars().collect();
        let mut pos = 0;
        let re = parse_alt(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(EvalError::runtime(format!("unbalanced `)` in regex {src:?}")));
        }
        Ok(Pattern(re))
    }

    /// Whether the pattern matches all of `s`.
    pub fn full_match(&self, s: &str) -> bool {
        let chars: Vec<char> = s.chars().collect();
        ends(&self.0, &chars, 0).contains(&chars.len())
    }

    /// Splits `s` at leftmost-longest non-empty matches, keeping the matched pieces and dropping
    /// empty pieces between them.
    pub fn split(&self, s: &str) -> Vec<String> {
        let chars: Vec<char> = s.chars().collect();
        let mut out = Vec::new();
        let mut piece_start = 0;
        let mut i = 0;
        while i < chars.len() {
            let end = ends(&self.0, &chars, i).into_iter().filter(|&e| e > i).max();
            match end {
                Some(e) => {
                    if piece_start < i {
                        out.push(chars[piece_start..i].iter().collect());
                    }
                    out.push(chars[i..e].iter().collect());
                    i = e;
                    piece_start = e;
                }
                None => i += 1,
            }
        }
        if piece_start < chars.len() {
            out.push(chars[piece_start..].iter().collect());
        }
        out
    }
}

/// All positions where a match of `re` starting at `i` can end, ascending and deduplicated.
fn ends(re: &Re, s: &[char], i: usize) -> Vec<usize> {
    match re {
        Re::Char(c) => {
            if s.get(i) == Some(c) {
                vec![i + 1]
            } else {
                vec![]
            }
        }
        Re::Any => {
            if i < s.len() {
                vec![i + 1]
            } else {
                vec![]
            }
        }
        Re::Class { negated, chars } => match s.get(i) {
            Some(c) if chars.contains(c) != *negated => vec![i + 1],
            _ => vec![],
        },
        Re::Seq(items) => {
            let mut cur = vec![i];
            for item in items {
                let mut next: Vec<usize> = cur.iter().flat_map(|&p| ends(item, s, p)).collect();
                next.sort_unstable();
                next.dedup();
                if next.is_empty() {
                    return next;
                }
                cur = next;
            }
            cur
        }
        Re::Alt(a, b) => {
            let mut out = ends(a, s, i);
            out.extend(ends(b, s, i));
            out.sort_unstable();
            out.dedup();
            out
        }
    }
}

fn parse_alt(c: &[char], pos: &mut usize) -> Result<Re, EvalError> {
    let mut left = parse_seq(c, pos)?;
    while c.get(*pos) == Some(&'|') {
        *pos += 1;
        let right = parse_seq(c, pos)?;
        left = Re::Alt(Box::new(left), Box::new(right));
    }
    Ok(left)
}

fn parse_seq(c: &[char], pos: &mut usize) -> Result<Re, EvalError> {
    let mut items = Vec::new();
    while let Some(&ch) = c.get(*pos) {
        match ch {
            '|' | ')' => break,
            '(' => {
                *pos += 1;
                let inner = parse_alt(c, pos)?;
                if c.get(*pos) != Some(&')') {
                    return Err(EvalError::runtime("unclosed `(` in regex"));
                }
                *pos += 1;
                items.push(inner);
            }
            '[' => {
                *pos += 1;
                let negated = c.get(*pos) == Some(&'^');
                if negated {
                    *pos += 1;
                }
                let start = *pos;
                while c.get(*pos).is_some_and(|&x| x != ']') {
                    *pos += 1;
                }
                if c.get(*pos) != Some(&']') || start == *pos {
                    return Err(EvalError::runtime("malformed character class in regex"));
                }
                let chars = c[start..*pos].to_vec();
                *pos += 1;
                items.push(Re::Class { negated, chars });
            }
            '.' => {
                *pos += 1;
                items.push(Re::Any);
            }
            other => {
                *pos += 1;
                items.push(Re::Char(other));
            }
        }
    }
    Ok(if items.len() == 1 {
        items.pop().unwrap()
    } else {
        Re::Seq(items)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(p: &str, s: &str) -> Vec<String> {
        Pattern::compile(p).unwrap().split(s)
    }

    #[test]
    fn split_keeps_delimiters() {
        assert_eq!(split("b", "abc"), vec!["a", "b", "c"]);
        assert_eq!(split(".", "abc"), vec!["a", "b", "c"]);
        assert_eq!(split("b", "bab"), vec!["b", "a", "b"]);
        assert_eq!(split("x", "abc"), vec!["abc"]);
        assert!(split(".", "").is_empty());
        assert_eq!(split("", "ab"), vec!["ab"]);
    }

    #[test]
    fn constructs() {
        let m = |p: &str, s: &str| Pattern::compile(p).unwrap().full_match(s);
        assert!(m(".", "x"));
        assert!(!m(".", "xy"));
        assert!(m("[^a]", "b"));
        assert!(!m("[^a]", "a"));
        assert!(m("((a)|(bc))", "bc"));
        assert!(m("((a)|(bc))", "a"));
        assert!(m("a.c", "abc"));
        assert!(m("", ""));
        assert_eq!(split("((a)|(b))", "cabd"), vec!["c", "a", "b", "d"]);
        assert_eq!(split("[^a]", "aab"), vec!["aa", "b"]);
    }

    #[test]
    fn malformed() {
        assert!(Pattern::compile("[^]").is_err());
        assert!(Pattern::compile("(a").is_err());
        assert!(Pattern::compile("a)").is_err());
    }
}
