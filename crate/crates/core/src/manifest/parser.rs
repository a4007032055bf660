//! Recursive-descent parser for the manifest surface syntax.

use thiserror::Error;

use super::ast::*;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, col {col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("line {line}: duplicate attribute {name:?}")]
    DuplicateAttribute { line: u32, name: String },
    #[error("line {line}, col {col}: unsupported feature: {what}")]
    Unsupported { line: u32, col: u32, what: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    /// Single-quoted: no interpolation.
    SqStr(String),
    /// Double-quoted: interpolation holes resolved.
    DqStr(Vec<StrPart>),
    Num(i64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Colon,
    Comma,
    Semi,
    Arrow,
    FatArrow,
    /// `<|`, the start of a resource collector.
    CollectorOpen,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

type Spanned = (Tok, u32, u32);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'#') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn var_name(&mut self) -> Result<String, ParseError> {
        let mut name = String::new();
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                name.push(b as char);
                self.bump();
            } else {
                break;
            }
        }
        if name.is_empty() {
            return Err(self.err("expected variable name after '$'"));
        }
        Ok(name)
    }

    fn next(&mut self) -> Result<Spanned, ParseError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(b) = self.peek() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = match b {
            b'{' => {
                self.bump();
                Tok::LBrace
            }
            b'}' => {
                self.bump();
                Tok::RBrace
            }
            b'[' => {
                self.bump();
                Tok::LBracket
            }
            b']' => {
                self.bump();
                Tok::RBracket
            }
            b'(' => {
                self.bump();
                Tok::LParen
            }
            b')' => {
                self.bump();
                Tok::RParen
            }
            b':' => {
                self.bump();
                Tok::Colon
            }
            b',' => {
                self.bump();
                Tok::Comma
            }
            b';' => {
                self.bump();
                Tok::Semi
            }
            b'-' if self.peek2() == Some(b'>') => {
                self.bump();
                self.bump();
                Tok::Arrow
            }
            b'-' => {
                self.bump();
                match self.peek() {
                    Some(d) if d.is_ascii_digit() => {
                        let n = self.number()?;
                        Tok::Num(-n)
                    }
                    _ => return Err(self.err("unexpected '-'")),
                }
            }
            b'=' if self.peek2() == Some(b'>') => {
                self.bump();
                self.bump();
                Tok::FatArrow
            }
            b'<' if self.peek2() == Some(b'|') => {
                self.bump();
                self.bump();
                Tok::CollectorOpen
            }
            b'$' => {
                self.bump();
                Tok::Var(self.var_name()?)
            }
            b'\'' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err("unterminated string")),
                        Some(b'\'') => break,
                        Some(b'\\') => match self.bump() {
                            Some(c) => s.push(c as char),
                            None => return Err(self.err("unterminated string")),
                        },
                        Some(c) => s.push(c as char),
                    }
                }
                Tok::SqStr(s)
            }
            b'"' => {
                self.bump();
                Tok::DqStr(self.interpolated_string()?)
            }
            d if d.is_ascii_digit() => Tok::Num(self.number()?),
            c if c.is_ascii_alphabetic() || c == b'_' || c == b'/' || c == b'.' => {
                let mut s = String::new();
                while let Some(b) = self.peek() {
                    if b.is_ascii_alphanumeric()
                        || b == b'_'
                        || b == b'/'
                        || b == b'.'
                        || b == b'-' && self.peek2() != Some(b'>')
                    {
                        s.push(b as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(self.err(format!("unexpected character {:?}", other as char))),
        };
        Ok((tok, line, col))
    }

    fn number(&mut self) -> Result<i64, ParseError> {
        let mut n: i64 = 0;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() {
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add((b - b'0') as i64))
                    .ok_or_else(|| self.err("number too large"))?;
                self.bump();
            } else {
                break;
            }
        }
        Ok(n)
    }

    fn interpolated_string(&mut self) -> Result<Vec<StrPart>, ParseError> {
        let mut parts: Vec<StrPart> = Vec::new();
        let mut lit = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string")),
                Some(b'"') => break,
                Some(b'\\') => match self.bump() {
                    Some(b'n') => lit.push('\n'),
                    Some(b't') => lit.push('\t'),
                    Some(c) => lit.push(c as char),
                    None => return Err(self.err("unterminated string")),
                },
                Some(b'$') => {
                    if !lit.is_empty() {
                        parts.push(StrPart::Lit(std::mem::take(&mut lit)));
                    }
                    let name = if self.peek() == Some(b'{') {
                        self.bump();
                        let n = self.var_name()?;
                        if self.bump() != Some(b'}') {
                            return Err(self.err("expected '}' closing interpolation"));
                        }
                        n
                    } else {
                        self.var_name()?
                    };
                    parts.push(StrPart::Var(name));
                }
                Some(c) => lit.push(c as char),
            }
        }
        if !lit.is_empty() || parts.is_empty() {
            parts.push(StrPart::Lit(lit));
        }
        Ok(parts)
    }
}

pub struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: Spanned,
}

/// Parses manifest source text into an AST.
pub fn parse(src: &str) -> Result<Manifest, ParseError> {
    let mut lexer = Lexer::new(src);
    let lookahead = lexer.next()?;
    let mut parser = Parser { lexer, lookahead };
    parser.manifest(true)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.lookahead.0
    }

    fn advance(&mut self) -> Result<Spanned, ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.lookahead, next))
    }

    fn err_here(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.lookahead.1,
            col: self.lookahead.2,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Spanned, ParseError> {
        if *self.peek() == tok {
            self.advance()
        } else {
            Err(self.err_here(format!("expected {what}, found {:?}", self.peek())))
        }
    }

    fn manifest(&mut self, top: bool) -> Result<Manifest, ParseError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::RBrace if !top => break,
                _ => items.push(self.item()?),
            }
        }
        Ok(Manifest { items })
    }

    fn item(&mut self) -> Result<Item, ParseError> {
        match self.peek().clone() {
            Tok::Ident(word) if word == "define" => {
                let (_, line, _) = self.advance()?;
                self.define_decl(line).map(Item::Define)
            }
            Tok::Ident(word) if word == "class" || word == "node" => {
                Err(self.unsupported(&format!("'{word}' blocks")))
            }
            Tok::Ident(name) => {
                let (_, line, col) = self.advance()?;
                match self.peek() {
                    Tok::LBrace => {
                        self.advance()?;
                        self.resource_decl(name, line).map(Item::Resource)
                    }
                    Tok::LBracket => self.dependency_decl(name, line).map(Item::Dependency),
                    Tok::CollectorOpen => Err(ParseError::Unsupported {
                        line,
                        col,
                        what: "resource collectors".to_string(),
                    }),
                    _ => Err(self.err_here("expected '{' or '[' after resource type name")),
                }
            }
            _ => Err(self.err_here("expected a resource declaration, define, or dependency")),
        }
    }

    fn unsupported(&self, what: &str) -> ParseError {
        ParseError::Unsupported {
            line: self.lookahead.1,
            col: self.lookahead.2,
            what: what.to_string(),
        }
    }

    fn define_decl(&mut self, line: u32) -> Result<DefineDecl, ParseError> {
        let name = match self.advance()? {
            (Tok::Ident(n), _, _) => n,
            _ => return Err(self.err_here("expected define name")),
        };
        let mut params = Vec::new();
        if *self.peek() == Tok::LParen {
            self.advance()?;
            loop {
                match self.peek().clone() {
                    Tok::RParen => {
                        self.advance()?;
                        break;
                    }
                    Tok::Var(v) => {
                        self.advance()?;
                        params.push(v);
                        if *self.peek() == Tok::Comma {
                            self.advance()?;
                        }
                    }
                    _ => return Err(self.err_here("expected parameter or ')'")),
                }
            }
        }
        self.expect(Tok::LBrace, "'{'")?;
        let body = self.manifest(false)?;
        self.expect(Tok::RBrace, "'}'")?;
        Ok(DefineDecl {
            name: name.to_lowercase(),
            params,
            body,
            line,
        })
    }

    fn resource_decl(&mut self, rtype: String, line: u32) -> Result<ResourceDecl, ParseError> {
        let title = self.title_expr()?;
        self.expect(Tok::Colon, "':'")?;
        let mut attrs: Vec<Attribute> = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.advance()?;
                    break;
                }
                Tok::Comma | Tok::Semi => {
                    self.advance()?;
                }
                Tok::Ident(name) => {
                    let (_, aline, _) = self.advance()?;
                    self.expect(Tok::FatArrow, "'=>'")?;
                    let value = self.value()?;
                    if attrs.iter().any(|a| a.name == name) {
                        return Err(ParseError::DuplicateAttribute { line: aline, name });
                    }
                    attrs.push(Attribute {
                        name,
                        value,
                        line: aline,
                    });
                }
                _ => return Err(self.err_here("expected attribute name or '}'")),
            }
        }
        Ok(ResourceDecl {
            rtype: rtype.to_lowercase(),
            title,
            attrs,
            line,
        })
    }

    fn dependency_decl(&mut self, from_rtype: String, line: u32) -> Result<DependencyDecl, ParseError> {
        let from_title = self.bracketed_title()?;
        self.expect(Tok::Arrow, "'->'")?;
        let to_rtype = match self.advance()? {
            (Tok::Ident(n), _, _) => n,
            _ => return Err(self.err_here("expected resource type name after '->'")),
        };
        self.expect(Tok::LBracket, "'['")?;
        let to_title = self.bracketed_title()?;
        Ok(DependencyDecl {
            from_rtype: from_rtype.to_lowercase(),
            from_title,
            to_rtype: to_rtype.to_lowercase(),
            to_title,
            line,
        })
    }

    /// Parses `title ']'` — the caller has already consumed `'['`.
    fn bracketed_title(&mut self) -> Result<TitleExpr, ParseError> {
        if *self.peek() == Tok::LBracket {
            self.advance()?;
        }
        let t = self.title_expr()?;
        self.expect(Tok::RBracket, "']'")?;
        Ok(t)
    }

    fn title_expr(&mut self) -> Result<TitleExpr, ParseError> {
        match self.advance()? {
            (Tok::SqStr(s), _, _) => Ok(Value::literal_str(s)),
            (Tok::DqStr(parts), _, _) => Ok(Value::Str(parts)),
            (Tok::Var(v), _, _) => Ok(Value::Var(v)),
            _ => Err(self.err_here("expected title string")),
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.advance()? {
            (Tok::SqStr(s), _, _) => Ok(Value::literal_str(s)),
            (Tok::DqStr(parts), _, _) => Ok(Value::Str(parts)),
            (Tok::Num(n), _, _) => Ok(Value::Num(n)),
            (Tok::Var(v), _, _) => Ok(Value::Var(v)),
            (Tok::LBracket, _, _) => {
                let mut items = Vec::new();
                loop {
                    if *self.peek() == Tok::RBracket {
                        self.advance()?;
                        break;
                    }
                    items.push(self.value()?);
                    if *self.peek() == Tok::Comma {
                        self.advance()?;
                    }
                }
                Ok(Value::Array(items))
            }
            // Either a bareword value or a resource reference `Type['t']`.
            (Tok::Ident(word), _, _) => {
                if *self.peek() == Tok::LBracket {
                    self.advance()?;
                    let title = self.title_expr()?;
                    self.expect(Tok::RBracket, "']'")?;
                    Ok(Value::Ref(word.to_lowercase(), Box::new(title)))
                } else {
                    Ok(Value::literal_str(word))
                }
            }
            _ => Err(self.err_here("expected a value")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_package() {
        let m = parse("package{'vim': ensure => present}").unwrap();
        assert_eq!(m.items.len(), 1);
        match &m.items[0] {
            Item::Resource(r) => {
                assert_eq!(r.rtype, "package");
                assert_eq!(r.title, Value::literal_str("vim"));
                assert_eq!(r.attrs.len(), 1);
                assert_eq!(r.attrs[0].value, Value::literal_str("present"));
            }
            other => panic!("unexpected item {other:?}"),
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse("").unwrap(), Manifest::default());
        assert_eq!(parse("  # just a comment\n").unwrap(), Manifest::default());
    }

    #[test]
    fn defines_with_deps() {
        let src = r#"
        define cpp() {
          package{'m4': ensure => present }
          package{'make': ensure => present }
          package{'gcc': ensure => present }
          Package['m4'] -> Package['make']
          Package['make'] -> Package['gcc']
        }
        define ocaml() {
          package{'make': ensure => present }
          package{'m4': ensure => present }
          package{'ocaml': ensure => present }
          Package['make'] -> Package['m4']
          Package['m4'] -> Package['ocaml']
        }
        "#;
        let m = parse(src).unwrap();
        assert_eq!(m.items.len(), 2);
        for item in &m.items {
            let Item::Define(d) = item else {
                panic!("expected define")
            };
            let resources = d
                .body
                .items
                .iter()
                .filter(|i| matches!(i, Item::Resource(_)))
                .count();
            let deps = d
                .body
                .items
                .iter()
                .filter(|i| matches!(i, Item::Dependency(_)))
                .count();
            assert_eq!((resources, deps), (3, 2));
        }
    }

    #[test]
    fn interpolation_and_metaparams() {
        let src = r#"
        define myuser($title) {
          user {"$title": ensure => present, managehome => true }
          file {"/home/${title}/.vimrc": content => "syntax on" }
          User["$title"] -> File["/home/${title}/.vimrc"]
        }
        package{'A-1': before => File['/a'] }
        "#;
        let m = parse(src).unwrap();
        assert_eq!(m.items.len(), 2);
        let Item::Resource(r) = &m.items[1] else {
            panic!()
        };
        assert_eq!(
            r.attrs[0].value,
            Value::Ref("file".into(), Box::new(Value::literal_str("/a")))
        );
    }

    #[test]
    fn duplicate_attribute_rejected() {
        let err = parse("file{'/a': ensure => present, ensure => absent}").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateAttribute { .. }));
    }

    #[test]
    fn collector_unsupported() {
        let err = parse("File<| owner == 'carol' |> { mode => 'go-rwx' }").unwrap_err();
        assert!(matches!(err, ParseError::Unsupported { .. }));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse("file{'/a' ensure => present}").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
