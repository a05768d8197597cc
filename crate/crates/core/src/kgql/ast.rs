use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryProgram {
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub kind: StatementKind,
    pub projection: Option<Projection>,
    pub modifiers: Modifiers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    Call(ApiCall),
    Sort(SortSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiCall {
    /// Canonical (lowercase) function name, validated against a dialect.
    pub function: String,
    /// Entity arguments only; the condition slot lives in `conditions`.
    pub args: Vec<Arg>,
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arg {
    Value(String),
    /// `None`: the argument is unconstrained.
    None,
    /// `*`: the projected values of the previous statement.
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Eq,
    Neq,
    Ge,
    Le,
}

impl CmpOp {
    pub const ALL: [CmpOp; 4] = [CmpOp::Eq, CmpOp::Neq, CmpOp::Ge, CmpOp::Le];

    pub fn name(self) -> &'static str {
        match self {
            CmpOp::Eq => "eq",
            CmpOp::Neq => "neq",
            CmpOp::Ge => "ge",
            CmpOp::Le => "le",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Neq => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eq" => Some(CmpOp::Eq),
            "neq" => Some(CmpOp::Neq),
            "ge" => Some(CmpOp::Ge),
            "le" => Some(CmpOp::Le),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Literal {
    Str(String),
    Number(f64),
    Bool(bool),
}

impl std::fmt::Display for Literal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Literal::Str(s) => f.write_str(s),
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub op: CmpOp,
    pub key: String,
    pub value: Literal,
}

impl Condition {
    pub fn new(op: CmpOp, key: impl Into<String>, value: Literal) -> Self {
        Self {
            op,
            key: key.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortSpec {
    pub conditions: Vec<Condition>,
    pub key: String,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    Key(String),
    Len,
}

impl Projection {
    pub fn name(&self) -> &str {
        match self {
            Projection::Key(k) => k,
            Projection::Len => "len",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modifiers {
    pub all: bool,
    pub avg: bool,
    pub slice: Option<usize>,
}
