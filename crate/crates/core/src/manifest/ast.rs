/// One piece of a (possibly interpolated) string literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrPart {
    Lit(String),
    /// A `$x` or `${x}` hole referencing a variable.
    Var(String),
}

/// Attribute values as they appear in source.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// String with interpolation holes (single-quoted strings and barewords
    /// have a single `Lit` part).
    Str(Vec<StrPart>),
    Num(i64),
    Array(Vec<Value>),
    Var(String),
    /// A resource reference such as `File['/a']`, used by `before`/`require`.
    Ref(String, Box<Value>),
}

impl Value {
    pub fn literal_str(s: impl Into<String>) -> Value {
        Value::Str(vec![StrPart::Lit(s.into())])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub value: Value,
    pub line: u32,
}

/// Title expression: a string (possibly interpolated) or a variable.
pub type TitleExpr = Value;

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceDecl {
    pub rtype: String,
    pub title: TitleExpr,
    pub attrs: Vec<Attribute>,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefineDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: Manifest,
    pub line: u32,
}

/// `Type1['t1'] -> Type2['t2']`: the right side depends on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyDecl {
    pub from_rtype: String,
    pub from_title: TitleExpr,
    pub to_rtype: String,
    pub to_title: TitleExpr,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Resource(ResourceDecl),
    Define(DefineDecl),
    Dependency(DependencyDecl),
}

/// A parsed manifest. Declaration order is preserved for error reporting
/// only; the semantics is order-insensitive.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub items: Vec<Item>,
}
