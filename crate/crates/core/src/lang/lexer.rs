//! Hand-written lexer producing a flat token stream with source positions.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    IntLit(i64),
    FloatLit(f64),
    KwFunc,
    KwIf,
    KwElse,
    KwWhile,
    KwRead,
    KwPrint,
    KwReturn,
    KwInt,
    KwFloat,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    AndAnd,
    OrOr,
    Bang,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

pub fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let bytes = source.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! err {
        ($($arg:tt)*) => {
            return Err(ParseError::Syntax { line, col, msg: format!($($arg)*) })
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok| {
            tokens.push(Token {
                tok,
                line: tl,
                col: tc,
            })
        };

        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '#' => {
                // line comment
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                push(Tok::LParen);
                i += 1;
                col += 1;
            }
            ')' => {
                push(Tok::RParen);
                i += 1;
                col += 1;
            }
            '{' => {
                push(Tok::LBrace);
                i += 1;
                col += 1;
            }
            '}' => {
                push(Tok::RBrace);
                i += 1;
                col += 1;
            }
            ',' => {
                push(Tok::Comma);
                i += 1;
                col += 1;
            }
            ':' => {
                push(Tok::Colon);
                i += 1;
                col += 1;
            }
            ';' => {
                push(Tok::Semi);
                i += 1;
                col += 1;
            }
            '+' => {
                push(Tok::Plus);
                i += 1;
                col += 1;
            }
            '-' => {
                push(Tok::Minus);
                i += 1;
                col += 1;
            }
            '*' => {
                push(Tok::Star);
                i += 1;
                col += 1;
            }
            '/' => {
                push(Tok::Slash);
                i += 1;
                col += 1;
            }
            '%' => {
                push(Tok::Percent);
                i += 1;
                col += 1;
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(Tok::EqEq);
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Assign);
                    i += 1;
                    col += 1;
                }
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(Tok::NotEq);
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Bang);
                    i += 1;
                    col += 1;
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(Tok::Le);
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Lt);
                    i += 1;
                    col += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(Tok::Ge);
                    i += 2;
                    col += 2;
                } else {
                    push(Tok::Gt);
                    i += 1;
                    col += 1;
                }
            }
            '&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    push(Tok::AndAnd);
                    i += 2;
                    col += 2;
                } else {
                    err!("expected `&&`");
                }
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    push(Tok::OrOr);
                    i += 2;
                    col += 2;
                } else {
                    err!("expected `||`");
                }
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let mut is_float = false;
                if i < bytes.len() && bytes[i] == b'.' {
                    is_float = true;
                    i += 1;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    is_float = true;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &source[start..i];
                if is_float {
                    match text.parse::<f64>() {
                        Ok(v) if v.is_finite() => push(Tok::FloatLit(v)),
                        _ => err!("invalid float literal `{text}`"),
                    }
                } else {
                    match text.parse::<i64>() {
                        Ok(v) => push(Tok::IntLit(v)),
                        Err(_) => err!("integer literal `{text}` out of range"),
                    }
                }
                col += (i - start) as u32;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let ch = bytes[i] as char;
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text = &source[start..i];
                let tok = match text {
                    "func" => Tok::KwFunc,
                    "if" => Tok::KwIf,
                    "else" => Tok::KwElse,
                    "while" => Tok::KwWhile,
                    "read" => Tok::KwRead,
                    "print" => Tok::KwPrint,
                    "return" => Tok::KwReturn,
                    "int" => Tok::KwInt,
                    "float" => Tok::KwFloat,
                    _ => Tok::Ident(text.to_string()),
                };
                push(tok);
                col += (i - start) as u32;
            }
            _ => err!("unexpected character `{c}`"),
        }
    }

    Ok(tokens)
}
