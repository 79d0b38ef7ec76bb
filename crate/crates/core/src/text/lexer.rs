use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

const PUNCTS: &[&str] = &[
    "::", "->", "..", "&&", "||", "=>", "!=", "<=", ">=", ":=", "{", "}", "(", ")", "[", "]", ",",
    ";", ":", "/", "@", "=", "<", ">", "+", "-", "!", "'", "|",
];

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits text into tokens. Identifiers may contain inner hyphens
/// (`find-subscriber`, `ok-s`) as long as a letter follows each hyphen, so
/// subtraction of a name needs surrounding spaces.
pub fn lex(text: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            continue;
        }
        let (sl, sc) = (line, col);
        if ident_start(c) {
            let mut s = String::new();
            loop {
                while i < chars.len() && ident_char(chars[i]) {
                    s.push(chars[i]);
                    {
                        let ch = chars[i];
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
                if i + 1 < chars.len() && chars[i] == '-' && chars[i + 1].is_ascii_alphabetic() {
                    s.push('-');
                    advance(&mut i, &mut line, &mut col, '-');
                    continue;
                }
                break;
            }
            toks.push(Token {
                tok: Tok::Ident(s),
                span: SourceSpan::new(file, sl, sc, line, col),
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            let span = SourceSpan::new(file, sl, sc, line, col);
            let n = s
                .parse::<i64>()
                .map_err(|_| ParseError::new(span.clone(), "integer literal out of range"))?;
            toks.push(Token {
                tok: Tok::Int(n),
                span,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                for ch in p.chars() {
                    advance(&mut i, &mut line, &mut col, ch);
                }
                toks.push(Token {
                    tok: Tok::Punct(p),
                    span: SourceSpan::new(file, sl, sc, line, col),
                });
            }
            None => {
                return Err(ParseError::new(
                    SourceSpan::new(file, sl, sc, sl, sc + 1),
                    format!("unexpected character `{c}`"),
                ))
            }
        }
    }
    toks.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(file, line, col, line, col),
    });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Tok> {
        lex(s, "t").unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn hyphenated_identifiers() {
        assert_eq!(
            kinds("find-subscriber -> ok-s x-1"),
            vec![
                Tok::Ident("find-subscriber".into()),
                Tok::Punct("->"),
                Tok::Ident("ok-s".into()),
                Tok::Ident("x".into()),
                Tok::Punct("-"),
                Tok::Int(1),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_primes() {
        assert_eq!(
            kinds("l' // trailing\n# whole line\n::"),
            vec![
                Tok::Ident("l".into()),
                Tok::Punct("'"),
                Tok::Punct("::"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn bad_character_has_span() {
        let e = lex("std $", "f").unwrap_err();
        assert_eq!((e.span.start_line, e.span.start_col), (1, 5));
    }
}
