use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Number(f64),
    /// `["key"]` or `[key]`
    Projection(String),
    /// `[:n]`
    Slice(usize),
    NoneLit,
    All,
    Avg,
    Star,
    Minus,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semicolon,
    Newline,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::Projection(k) => write!(f, "projection [\"{k}\"]"),
            TokenKind::Slice(n) => write!(f, "slice [:{n}]"),
            TokenKind::NoneLit => f.write_str("None"),
            TokenKind::All => f.write_str("ALL"),
            TokenKind::Avg => f.write_str("AVG"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::LBracket => f.write_str("`[`"),
            TokenKind::RBracket => f.write_str("`]`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Semicolon => f.write_str("`;`"),
            TokenKind::Newline => f.write_str("newline"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the token's first character.
    pub offset: usize,
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, byte_ahead: usize) -> Option<char> {
        self.src.get(self.pos + byte_ahead..)?.chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_inline_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() && c != '\n' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if is_ident_char(c)) {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn string(&mut self, quote: char) -> Result<String, ParseError> {
        let start = self.pos;
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(ParseError::new(
                        "unterminated string literal",
                        start,
                        format!("closing {quote}"),
                    ))
                }
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c) => out.push(c),
                    None => {
                        return Err(ParseError::new(
                            "unterminated string literal",
                            start,
                            format!("closing {quote}"),
                        ))
                    }
                },
                Some(c) if c == quote => return Ok(out),
                Some(c) => out.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some(c) if c.is_ascii_digit()) {
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| ParseError::new("invalid number", start, "number"))
    }

    /// After `[`: recognise `["key"]`, `[key]` and `[:n]`. Returns `None`
    /// (position restored) when the bracket opens a condition list.
    fn bracket_form(&mut self) -> Result<Option<TokenKind>, ParseError> {
        let open = self.pos;
        self.bump();
        self.skip_inline_ws();
        let kind = match self.peek() {
            Some(':') => {
                self.bump();
                self.skip_inline_ws();
                let at = self.pos;
                if !matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    return Err(ParseError::new("malformed slice", at, "digits after `[:`"));
                }
                let n = self.number()?;
                if n.fract() != 0.0 {
                    return Err(ParseError::new("slice bound must be an integer", at, "integer"));
                }
                Some(TokenKind::Slice(n as usize))
            }
            Some(q @ ('"' | '\'')) => Some(TokenKind::Projection(self.string(q)?)),
            Some(c) if is_ident_start(c) => {
                let id = self.ident();
                Some(TokenKind::Projection(id))
            }
            _ => None,
        };
        if kind.is_some() {
            self.skip_inline_ws();
            if self.peek() == Some(']') {
                self.bump();
                return Ok(kind);
            }
            if matches!(kind, Some(TokenKind::Slice(_))) {
                return Err(ParseError::new("malformed slice", self.pos, "`]`"));
            }
        }
        self.pos = open;
        Ok(None)
    }
}

/// Split source text into tokens. Never panics; reports the first lexical
/// error with its byte offset.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer { src: source, pos: 0 };
    let mut out = Vec::new();
    loop {
        lx.skip_inline_ws();
        let offset = lx.pos;
        let Some(c) = lx.peek() else { break };
        let kind = match c {
            '\n' => {
                lx.bump();
                TokenKind::Newline
            }
            '(' => {
                lx.bump();
                TokenKind::LParen
            }
            ')' => {
                lx.bump();
                TokenKind::RParen
            }
            ']' => {
                lx.bump();
                TokenKind::RBracket
            }
            ',' => {
                lx.bump();
                TokenKind::Comma
            }
            ';' => {
                lx.bump();
                TokenKind::Semicolon
            }
            '-' => {
                lx.bump();
                TokenKind::Minus
            }
            '*' => {
                lx.bump();
                TokenKind::Star
            }
            '[' => match lx.bracket_form()? {
                Some(k) => k,
                None => {
                    lx.bump();
                    TokenKind::LBracket
                }
            },
            '"' | '\'' => TokenKind::Str(lx.string(c)?),
            c if c.is_ascii_digit() => TokenKind::Number(lx.number()?),
            c if is_ident_start(c) => {
                let id = lx.ident();
                match id.as_str() {
                    "None" => TokenKind::NoneLit,
                    "ALL" => TokenKind::All,
                    "AVG" => TokenKind::Avg,
                    _ => TokenKind::Ident(id),
                }
            }
            other => {
                return Err(ParseError::new(
                    format!("unexpected character {other:?}"),
                    offset,
                    "identifier, literal or punctuation",
                ))
            }
        };
        out.push(Token { kind, offset });
    }
    Ok(out)
}
