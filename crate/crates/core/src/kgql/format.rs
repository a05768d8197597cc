//! Canonical text form: quoted strings, `, ` between arguments, one
//! statement per line, modifiers in the order `ALL AVG`.

use std::fmt::Write;

use super::ast::*;
use super::token::{is_ident_char, is_ident_start};

pub fn format_program(program: &QueryProgram) -> String {
    program
        .statements
        .iter()
        .map(format_statement)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn format_statement(stmt: &Statement) -> String {
    let mut out = String::new();
    if stmt.modifiers.all {
        out.push_str("ALL ");
    }
    if stmt.modifiers.avg {
        out.push_str("AVG ");
    }
    match &stmt.kind {
        StatementKind::Call(call) => {
            out.push_str(&call.function);
            out.push('(');
            let mut parts: Vec<String> = call.args.iter().map(format_arg).collect();
            if !call.conditions.is_empty() {
                parts.push(format_conditions(&call.conditions));
            }
            out.push_str(&parts.join(", "));
            out.push(')');
        }
        StatementKind::Sort(sort) => {
            out.push_str("sort(");
            if sort.conditions.is_empty() {
                out.push_str("None");
            } else {
                out.push_str(&format_conditions(&sort.conditions));
            }
            out.push_str(", ");
            if sort.descending {
                out.push('-');
            }
            out.push_str(&format_key(&sort.key));
            out.push(')');
        }
    }
    if let Some(p) = &stmt.projection {
        let _ = write!(out, "[{}]", quote(p.name()));
    }
    if let Some(n) = stmt.modifiers.slice {
        let _ = write!(out, "[:{n}]");
    }
    out
}

fn format_arg(arg: &Arg) -> String {
    match arg {
        Arg::Value(s) => quote(s),
        Arg::None => "None".to_string(),
        Arg::Star => "*".to_string(),
    }
}

fn format_conditions(conds: &[Condition]) -> String {
    let inner: Vec<String> = conds.iter().map(format_condition).collect();
    format!("[{}]", inner.join(", "))
}

pub fn format_condition(c: &Condition) -> String {
    format!("{}({}, {})", c.op.name(), format_key(&c.key), format_literal(&c.value))
}

fn format_literal(v: &Literal) -> String {
    match v {
        Literal::Str(s) => quote(s),
        Literal::Number(n) => n.to_string(),
        Literal::Bool(b) => b.to_string(),
    }
}

fn is_plain_key(k: &str) -> bool {
    let mut chars = k.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c))
        && chars.all(is_ident_char)
        && !matches!(k, "None" | "ALL" | "AVG")
}

fn format_key(k: &str) -> String {
    if is_plain_key(k) {
        k.to_string()
    } else {
        quote(k)
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
