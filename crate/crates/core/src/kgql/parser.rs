//! Hand-written recursive descent parser. Grammar reference lives in
//! `docs/kgql-grammar.md`.

use super::ast::*;
use super::dialect::{Dialect, MovieDialect};
use super::token::{is_ident_char, tokenize, Token, TokenKind};
use super::ParseError;

pub fn parse_program(source: &str) -> Result<QueryProgram, ParseError> {
    parse_program_with(source, &MovieDialect)
}

pub fn parse_program_with(source: &str, dialect: &dyn Dialect) -> Result<QueryProgram, ParseError> {
    let filtered = strip_prose_lines(source, dialect);
    let tokens = tokenize(&filtered)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
        dialect,
        end: source.len(),
    };
    p.program()
}

fn starts_statement(line: &str, dialect: &dyn Dialect) -> bool {
    let word: String = line.trim_start().chars().take_while(|c| is_ident_char(*c)).collect();
    matches!(word.as_str(), "ALL" | "AVG") || word.eq_ignore_ascii_case("sort") || dialect.function(&word).is_some()
}

/// Blank out lines that do not open a statement while no bracket or quote is
/// pending. Byte offsets are preserved so errors still point into `source`.
fn strip_prose_lines(source: &str, dialect: &dyn Dialect) -> String {
    let mut out = String::with_capacity(source.len());
    let mut depth: i64 = 0;
    let mut quote: Option<char> = None;
    let mut awaiting_paren = false;
    for line in source.split_inclusive('\n') {
        let continuing = depth > 0 || quote.is_some() || (awaiting_paren && line.trim_start().starts_with('('));
        if !continuing && !line.trim().is_empty() && !starts_statement(line, dialect) {
            for c in line.chars() {
                if c == '\n' {
                    out.push('\n');
                } else {
                    out.extend(std::iter::repeat_n(' ', c.len_utf8()));
                }
            }
            continue;
        }
        let mut escaped = false;
        for c in line.chars() {
            match quote {
                Some(q) => {
                    if escaped {
                        escaped = false;
                    } else if c == '\\' {
                        escaped = true;
                    } else if c == q {
                        quote = None;
                    }
                }
                None => match c {
                    '"' | '\'' => quote = Some(c),
                    '(' | '[' => depth += 1,
                    ')' | ']' => depth -= 1,
                    _ => {}
                },
            }
        }
        if depth < 0 {
            depth = 0;
        }
        if !line.trim().is_empty() {
            awaiting_paren = depth == 0 && quote.is_none() && line.trim_end().chars().last().is_some_and(is_ident_char);
        }
        out.push_str(line);
    }
    out
}

struct Parser<'d> {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    dialect: &'d dyn Dialect,
    end: usize,
}

impl Parser<'_> {
    fn skip_nested_newlines(&mut self) {
        if self.depth > 0 {
            while matches!(self.tokens.get(self.pos), Some(t) if t.kind == TokenKind::Newline) {
                self.pos += 1;
            }
        }
    }

    fn peek(&mut self) -> Option<&TokenKind> {
        self.skip_nested_newlines();
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&mut self) -> usize {
        self.skip_nested_newlines();
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn next(&mut self) -> Option<Token> {
        self.skip_nested_newlines();
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&mut self, message: impl Into<String>, expected: impl Into<String>) -> ParseError {
        let offset = self.offset();
        ParseError::new(message, offset, expected)
    }

    fn unexpected(&mut self, expected: &str) -> ParseError {
        let found = match self.peek() {
            Some(k) => k.to_string(),
            None => "end of input".to_string(),
        };
        self.error(format!("unexpected {found}"), expected)
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&kind) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn open(&mut self, kind: TokenKind, what: &str) -> Result<(), ParseError> {
        while matches!(self.tokens.get(self.pos), Some(t) if t.kind == TokenKind::Newline) {
            self.pos += 1;
        }
        self.expect(kind, what)?;
        self.depth += 1;
        Ok(())
    }

    fn close(&mut self, kind: TokenKind, what: &str) -> Result<(), ParseError> {
        self.expect(kind, what)?;
        self.depth -= 1;
        Ok(())
    }

    fn is_separator(kind: Option<&TokenKind>) -> bool {
        matches!(kind, Some(TokenKind::Semicolon | TokenKind::Newline))
    }

    fn program(&mut self) -> Result<QueryProgram, ParseError> {
        let mut statements = Vec::new();
        loop {
            while Self::is_separator(self.peek()) {
                self.next();
            }
            if self.peek().is_none() {
                break;
            }
            let at = self.offset();
            let stmt = self.statement()?;
            if let StatementKind::Sort(_) = stmt.kind {
                if statements.is_empty() && !self.dialect.sort_may_lead() {
                    return Err(ParseError::new(
                        "sort must follow an API call",
                        at,
                        "API call before sort",
                    ));
                }
            }
            statements.push(stmt);
            if !(self.peek().is_none() || Self::is_separator(self.peek())) {
                return Err(self.unexpected("`;` or newline"));
            }
        }
        if statements.is_empty() {
            return Err(ParseError::new("empty program", 0, "API call"));
        }
        Ok(QueryProgram { statements })
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let mut modifiers = Modifiers::default();
        loop {
            match self.peek() {
                Some(TokenKind::All) => modifiers.all = true,
                Some(TokenKind::Avg) => modifiers.avg = true,
                _ => break,
            }
            self.next();
        }
        let kind = match self.peek().cloned() {
            Some(TokenKind::Ident(name)) if name.eq_ignore_ascii_case("sort") => {
                self.next();
                StatementKind::Sort(self.sort_body()?)
            }
            Some(TokenKind::Ident(name)) => match self.dialect.function(&name) {
                Some(sig) => {
                    self.next();
                    StatementKind::Call(self.call_body(sig.name, sig.entity_args)?)
                }
                None => return Err(self.error(format!("unknown function `{name}`"), "API function or sort")),
            },
            _ => return Err(self.unexpected("API function or sort")),
        };
        let mut projection = None;
        loop {
            match self.peek().cloned() {
                Some(TokenKind::Projection(key)) if projection.is_none() => {
                    if key.trim().is_empty() {
                        return Err(self.error("empty projection key", "key name"));
                    }
                    self.next();
                    projection = Some(if key == "len" {
                        Projection::Len
                    } else {
                        Projection::Key(key)
                    });
                }
                Some(TokenKind::Slice(n)) if modifiers.slice.is_none() => {
                    if n == 0 {
                        return Err(self.error("slice bound must be at least 1", "[:n] with n >= 1"));
                    }
                    self.next();
                    modifiers.slice = Some(n);
                }
                _ => break,
            }
        }
        Ok(Statement {
            kind,
            projection,
            modifiers,
        })
    }

    fn call_body(&mut self, function: &'static str, arity: usize) -> Result<ApiCall, ParseError> {
        self.open(TokenKind::LParen, "`(`")?;
        let mut args = Vec::with_capacity(arity);
        let mut conditions = Vec::new();
        for i in 0..arity {
            if i > 0 {
                if self.peek() != Some(&TokenKind::Comma) {
                    return Err(self.error(format!("{function} expects {arity} entity argument(s)"), "`,`"));
                }
                self.next();
            }
            args.push(self.entity_arg(function, arity)?);
        }
        if self.peek() == Some(&TokenKind::Comma) {
            self.next();
            let slot_ok =
                matches!(self.peek(), Some(TokenKind::NoneLit | TokenKind::LBracket)) || self.is_condition_start();
            if !slot_ok {
                return Err(self.error(
                    format!("{function} takes {arity} entity argument(s) and an optional condition"),
                    "condition, condition list or None",
                ));
            }
            conditions = self.condition_slot()?;
        }
        if self.peek() != Some(&TokenKind::RParen) {
            return Err(self.error(
                format!("{function} takes {arity} entity argument(s) and an optional condition"),
                "`)`",
            ));
        }
        self.close(TokenKind::RParen, "`)`")?;
        Ok(ApiCall {
            function: function.to_string(),
            args,
            conditions,
        })
    }

    fn entity_arg(&mut self, function: &str, arity: usize) -> Result<Arg, ParseError> {
        match self.peek().cloned() {
            Some(TokenKind::NoneLit) => {
                self.next();
                Ok(Arg::None)
            }
            Some(TokenKind::Star) => {
                self.next();
                Ok(Arg::Star)
            }
            Some(TokenKind::Str(s)) => {
                self.next();
                Ok(Arg::Value(s))
            }
            Some(TokenKind::Ident(_) | TokenKind::Number(_)) => {
                if self.is_condition_start() {
                    return Err(self.error(
                        format!("{function} expects {arity} entity argument(s) before the condition"),
                        "entity name",
                    ));
                }
                Ok(Arg::Value(self.bare_run()))
            }
            _ => Err(self.unexpected("entity name, None or *")),
        }
    }

    fn is_condition_start(&mut self) -> bool {
        self.skip_nested_newlines();
        match (self.tokens.get(self.pos), self.tokens.get(self.pos + 1)) {
            (
                Some(Token {
                    kind: TokenKind::Ident(n),
                    ..
                }),
                Some(Token {
                    kind: TokenKind::LParen,
                    ..
                }),
            ) => CmpOp::from_name(n).is_some(),
            _ => false,
        }
    }

    /// Consecutive bare identifiers/numbers joined by single spaces.
    fn bare_run(&mut self) -> String {
        let mut words = Vec::new();
        while let Some(TokenKind::Ident(_) | TokenKind::Number(_)) = self.tokens.get(self.pos).map(|t| &t.kind) {
            match self.next().map(|t| t.kind) {
                Some(TokenKind::Ident(s)) => words.push(s),
                Some(TokenKind::Number(n)) => words.push(n.to_string()),
                _ => unreachable!(),
            }
        }
        words.join(" ")
    }

    fn condition_slot(&mut self) -> Result<Vec<Condition>, ParseError> {
        match self.peek() {
            Some(TokenKind::NoneLit) => {
                self.next();
                Ok(Vec::new())
            }
            Some(TokenKind::LBracket) => {
                self.open(TokenKind::LBracket, "`[`")?;
                let mut out = Vec::new();
                if self.peek() != Some(&TokenKind::RBracket) {
                    out.push(self.condition()?);
                    while self.peek() == Some(&TokenKind::Comma) {
                        self.next();
                        out.push(self.condition()?);
                    }
                }
                self.close(TokenKind::RBracket, "`,` or `]`")?;
                Ok(out)
            }
            _ => Ok(vec![self.condition()?]),
        }
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let op = match self.peek().cloned() {
            Some(TokenKind::Ident(name)) => match CmpOp::from_name(&name) {
                Some(op) => op,
                None => return Err(self.error(format!("unknown comparison `{name}`"), "eq, neq, ge or le")),
            },
            _ => return Err(self.unexpected("condition (eq, neq, ge, le)")),
        };
        self.next();
        self.open(TokenKind::LParen, "`(`")?;
        let key = self.key()?;
        self.expect(TokenKind::Comma, "`,`")?;
        let value = self.literal()?;
        self.close(TokenKind::RParen, "`)`")?;
        Ok(Condition { op, key, value })
    }

    fn key(&mut self) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(TokenKind::Ident(k) | TokenKind::Str(k)) if !k.is_empty() => {
                self.next();
                Ok(k)
            }
            _ => Err(self.unexpected("key name")),
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        match self.peek().cloned() {
            Some(TokenKind::Str(s)) => {
                self.next();
                Ok(Literal::Str(s))
            }
            Some(TokenKind::Minus) => {
                self.next();
                match self.next().map(|t| t.kind) {
                    Some(TokenKind::Number(n)) => Ok(Literal::Number(-n)),
                    _ => {
                        self.pos -= 1;
                        Err(self.unexpected("number after `-`"))
                    }
                }
            }
            Some(TokenKind::Number(n)) => {
                let next_is_word = matches!(
                    self.tokens.get(self.pos + 1).map(|t| &t.kind),
                    Some(TokenKind::Ident(_) | TokenKind::Number(_))
                );
                if next_is_word {
                    Ok(Literal::Str(self.bare_run()))
                } else {
                    self.next();
                    Ok(Literal::Number(n))
                }
            }
            Some(TokenKind::Ident(_)) => {
                let run = self.bare_run();
                Ok(match run.as_str() {
                    "true" | "True" => Literal::Bool(true),
                    "false" | "False" => Literal::Bool(false),
                    _ => Literal::Str(run),
                })
            }
            _ => Err(self.unexpected("value")),
        }
    }

    fn sort_body(&mut self) -> Result<SortSpec, ParseError> {
        self.open(TokenKind::LParen, "`(`")?;
        let single_key = matches!(self.peek(), Some(TokenKind::Minus))
            || (matches!(self.peek(), Some(TokenKind::Ident(_) | TokenKind::Str(_)))
                && !self.is_condition_start()
                && matches!(self.tokens.get(self.pos + 1).map(|t| &t.kind), Some(TokenKind::RParen)));
        let conditions = if single_key {
            Vec::new()
        } else {
            let c = self.condition_slot()?;
            self.expect(TokenKind::Comma, "`,` then sort key")?;
            c
        };
        let descending = if self.peek() == Some(&TokenKind::Minus) {
            self.next();
            true
        } else {
            false
        };
        let key = self.key()?;
        self.close(TokenKind::RParen, "`)`")?;
        Ok(SortSpec {
            conditions,
            key,
            descending,
        })
    }
}
