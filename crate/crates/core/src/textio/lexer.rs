//! Tokenizer for the text format.

use crate::diag::{Diagnostic, Span};

#[derive(Clone, PartialEq, Debug)]
pub enum Tok {
    /// `@name`
    Global(String),
    /// `%name`
    Local(String),
    /// Keywords, opcodes, and type names.
    Ident(String),
    /// Decimal integer, possibly negative.
    Int(String),
    /// A number directly followed by a unit, e.g. `2ns`, `1d`, `1.5ps`.
    TimePart(String, String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Colon,
    Dollar,
    Star,
    Arrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Global(n) => format!("`@{}`", n),
            Tok::Local(n) => format!("`%{}`", n),
            Tok::Ident(s) | Tok::Int(s) => format!("`{}`", s),
            Tok::TimePart(n, u) => format!("`{}{}`", n, u),
            Tok::Str(s) => format!("\"{}\"", s),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Dollar => "`$`".into(),
            Tok::Star => "`*`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

pub fn tokenize(text: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let bytes = text.as_bytes();
    let mut out = vec![];
    let mut i = 0;
    let take_while = |mut j: usize, f: &dyn Fn(char) -> bool| {
        while j < bytes.len() && f(bytes[j] as char) {
            j += 1;
        }
        j
    };
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == ';' {
            i = take_while(i, &|c| c != '\n');
            continue;
        }
        let start = i;
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Equals),
            ':' => Some(Tok::Colon),
            '$' => Some(Tok::Dollar),
            '*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, Span::new(i, i + 1)));
            i += 1;
            continue;
        }
        if c == '-' && bytes.get(i + 1) == Some(&b'>') {
            out.push((Tok::Arrow, Span::new(i, i + 2)));
            i += 2;
            continue;
        }
        if c == '@' || c == '%' {
            let end = take_while(i + 1, &is_name_char);
            if end == i + 1 {
                return Err(Diagnostic::error(
                    Some(Span::new(i, i + 1)),
                    format!("expected a name after `{}`", c),
                ));
            }
            let name = text[i + 1..end].to_string();
            let tok = if c == '@' {
                Tok::Global(name)
            } else {
                Tok::Local(name)
            };
            out.push((tok, Span::new(start, end)));
            i = end;
            continue;
        }
        if c == '"' {
            let end = take_while(i + 1, &|c| c != '"' && c != '\n');
            if end >= bytes.len() || bytes[end] != b'"' {
                return Err(Diagnostic::error(
                    Some(Span::new(i, end)),
                    "unterminated string literal",
                ));
            }
            out.push((Tok::Str(text[i + 1..end].to_string()), Span::new(i, end + 1)));
            i = end + 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && bytes.get(i + 1).map_or(false, u8::is_ascii_digit)) {
            let mut end = take_while(i + 1, &|c| c.is_ascii_digit());
            if end + 1 < bytes.len()
                && bytes[end] == b'.'
                && (bytes[end + 1] as char).is_ascii_digit()
            {
                end = take_while(end + 1, &|c| c.is_ascii_digit());
            }
            let num = text[i..end].to_string();
            let uend = take_while(end, &|c| c.is_ascii_alphabetic());
            if uend > end {
                out.push((
                    Tok::TimePart(num, text[end..uend].to_string()),
                    Span::new(start, uend),
                ));
            } else if num.contains('.') {
                return Err(Diagnostic::error(
                    Some(Span::new(start, end)),
                    "fractional number without a time unit",
                ));
            } else {
                out.push((Tok::Int(num), Span::new(start, end)));
            }
            i = uend;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let end = take_while(i, &is_name_char);
            out.push((Tok::Ident(text[i..end].to_string()), Span::new(start, end)));
            i = end;
            continue;
        }
        let ch = text[i..].chars().next().unwrap();
        return Err(Diagnostic::error(
            Some(Span::new(i, i + ch.len_utf8())),
            format!("unexpected character `{}`", ch),
        ));
    }
    out.push((Tok::Eof, Span::new(text.len(), text.len())));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn basic() {
        assert_eq!(
            toks("%x = add i32 %a, %b ; sum\n"),
            vec![
                Tok::Local("x".into()),
                Tok::Equals,
                Tok::Ident("add".into()),
                Tok::Ident("i32".into()),
                Tok::Local("a".into()),
                Tok::Comma,
                Tok::Local("b".into()),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks("const time 2ns 1d -> i1$"),
            vec![
                Tok::Ident("const".into()),
                Tok::Ident("time".into()),
                Tok::TimePart("2".into(), "ns".into()),
                Tok::TimePart("1".into(), "d".into()),
                Tok::Arrow,
                Tok::Ident("i1".into()),
                Tok::Dollar,
                Tok::Eof
            ]
        );
        assert_eq!(toks("-5")[0], Tok::Int("-5".into()));
    }

    #[test]
    fn errors_carry_spans() {
        let e = tokenize("ok\n  #").unwrap_err();
        assert_eq!(e.span, Some(Span::new(5, 6)));
        assert!(tokenize("\"01").is_err());
    }
}
