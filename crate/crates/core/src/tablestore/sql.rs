//! Lexer and recursive-descent parser for the SQL subset.
//!
//! ```text
//! query      := SELECT select_list FROM table_ref join* [WHERE expr] [GROUP BY col_ref (',' col_ref)*] [';']
//! select_list:= '*' | item (',' item)*
//! item       := (agg '(' ('*' | col_ref) ')' | col_ref) [[AS] ident]
//! agg        := COUNT | SUM | AVG | MIN | MAX
//! table_ref  := ident [[AS] ident]
//! join       := [INNER] JOIN table_ref ON col_ref '=' col_ref (AND col_ref '=' col_ref)*
//! expr       := conj (OR conj)*
//! conj       := neg (AND neg)*
//! neg        := NOT neg | '(' expr ')' | operand cmp operand | operand IS [NOT] NULL
//! cmp        := '=' | '!=' | '<>' | '<' | '<=' | '>' | '>='
//! operand    := col_ref | number | 'string' | TRUE | FALSE | NULL | DATE 'YYYY-MM-DD'
//! col_ref    := ident ['.' ident]
//! ```

use crate::error::{LakeError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Keyword(Kw),
    Number(String),
    Str(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Semicolon,
    Op(CmpOp),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kw {
    Select,
    From,
    Join,
    Inner,
    On,
    Where,
    Group,
    By,
    As,
    And,
    Or,
    Not,
    Is,
    Null,
    True,
    False,
    Date,
}

fn keyword(word: &str) -> Option<Kw> {
    Some(match word.to_ascii_uppercase().as_str() {
        "SELECT" => Kw::Select,
        "FROM" => Kw::From,
        "JOIN" => Kw::Join,
        "INNER" => Kw::Inner,
        "ON" => Kw::On,
        "WHERE" => Kw::Where,
        "GROUP" => Kw::Group,
        "BY" => Kw::By,
        "AS" => Kw::As,
        "AND" => Kw::And,
        "OR" => Kw::Or,
        "NOT" => Kw::Not,
        "IS" => Kw::Is,
        "NULL" => Kw::Null,
        "TRUE" => Kw::True,
        "FALSE" => Kw::False,
        "DATE" => Kw::Date,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    fn from_name(name: &str) -> Option<AggFunc> {
        Some(match name.to_ascii_uppercase().as_str() {
            "COUNT" => AggFunc::Count,
            "SUM" => AggFunc::Sum,
            "AVG" => AggFunc::Avg,
            "MIN" => AggFunc::Min,
            "MAX" => AggFunc::Max,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Sum => "sum",
            AggFunc::Avg => "avg",
            AggFunc::Min => "min",
            AggFunc::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColRef {
    pub qualifier: Option<String>,
    pub name: String,
    pub pos: usize,
}

impl std::fmt::Display for ColRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Str(String),
    Bool(bool),
    Null,
    Date(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Column(ColRef),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Cmp(Operand, CmpOp, Operand),
    IsNull { operand: Operand, negated: bool },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Star,
    Column {
        col: ColRef,
        alias: Option<String>,
    },
    Aggregate {
        func: AggFunc,
        /// `None` for `COUNT(*)`.
        arg: Option<ColRef>,
        alias: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRef {
    pub name: String,
    pub alias: Option<String>,
    pub pos: usize,
}

impl TableRef {
    pub fn binding(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinClause {
    pub table: TableRef,
    pub on: Vec<(ColRef, ColRef)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectStmt {
    pub items: Vec<SelectItem>,
    pub from: TableRef,
    pub joins: Vec<JoinClause>,
    pub filter: Option<Expr>,
    pub group_by: Vec<ColRef>,
}

fn syntax(pos: usize, msg: impl Into<String>) -> LakeError {
    LakeError::SqlSyntax { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            ',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            '.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                out.push((Tok::Dot, start));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, start));
                i += 1;
            }
            ';' => {
                out.push((Tok::Semicolon, start));
                i += 1;
            }
            '=' => {
                out.push((Tok::Op(CmpOp::Eq), start));
                i += 1;
            }
            '!' if bytes.get(i + 1) == Some(&b'=') => {
                out.push((Tok::Op(CmpOp::Ne), start));
                i += 2;
            }
            '<' => {
                let (op, len) = match bytes.get(i + 1) {
                    Some(b'=') => (CmpOp::Le, 2),
                    Some(b'>') => (CmpOp::Ne, 2),
                    _ => (CmpOp::Lt, 1),
                };
                out.push((Tok::Op(op), start));
                i += len;
            }
            '>' => {
                let (op, len) = match bytes.get(i + 1) {
                    Some(b'=') => (CmpOp::Ge, 2),
                    _ => (CmpOp::Gt, 1),
                };
                out.push((Tok::Op(op), start));
                i += len;
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(syntax(start, "unterminated string literal")),
                        Some(b'\'') if bytes.get(i + 1) == Some(&b'\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some(b'\'') => {
                            i += 1;
                            break;
                        }
                        Some(_) => {
                            let ch = text[i..].chars().next().expect("in bounds");
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                out.push((Tok::Str(s), start));
            }
            '"' => {
                let end = text[i + 1..]
                    .find('"')
                    .ok_or_else(|| syntax(start, "unterminated quoted identifier"))?;
                out.push((Tok::Ident(text[i + 1..i + 1 + end].to_string()), start));
                i += end + 2;
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let mut j = i + 1;
                while j < bytes.len()
                    && (bytes[j].is_ascii_digit()
                        || bytes[j] == b'.'
                        || bytes[j] == b'e'
                        || bytes[j] == b'E'
                        || ((bytes[j] == b'-' || bytes[j] == b'+') && matches!(bytes[j - 1], b'e' | b'E')))
                {
                    j += 1;
                }
                let lit = &text[i..j];
                if lit == "-" {
                    return Err(syntax(start, "unexpected '-'"));
                }
                out.push((Tok::Number(lit.to_string()), start));
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = &text[i..j];
                out.push((
                    keyword(word)
                        .map(Tok::Keyword)
                        .unwrap_or_else(|| Tok::Ident(word.to_string())),
                    start,
                ));
                i = j;
            }
            other => return Err(syntax(start, format!("unexpected character '{other}'"))),
        }
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat_kw(&mut self, kw: Kw) -> bool {
        if self.peek() == &Tok::Keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: Kw) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("{kw:?}").to_uppercase()))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, wanted: &str) -> LakeError {
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            t => format!("{t:?}"),
        };
        syntax(self.pos(), format!("expected {wanted}, found {found}"))
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn col_ref(&mut self) -> Result<ColRef> {
        let pos = self.pos();
        let first = self.ident()?;
        if *self.peek() == Tok::Dot {
            self.next();
            let name = self.ident()?;
            Ok(ColRef {
                qualifier: Some(first),
                name,
                pos,
            })
        } else {
            Ok(ColRef {
                qualifier: None,
                name: first,
                pos,
            })
        }
    }

    fn alias(&mut self) -> Result<Option<String>> {
        if self.eat_kw(Kw::As) {
            return self.ident().map(Some);
        }
        if let Tok::Ident(s) = self.peek().clone() {
            self.next();
            return Ok(Some(s));
        }
        Ok(None)
    }

    fn table_ref(&mut self) -> Result<TableRef> {
        let pos = self.pos();
        let name = self.ident()?;
        let alias = self.alias()?;
        Ok(TableRef { name, alias, pos })
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        if let Tok::Ident(name) = self.peek().clone() {
            if let Some(func) = AggFunc::from_name(&name) {
                if self.toks.get(self.at + 1).map(|t| &t.0) == Some(&Tok::LParen) {
                    self.next();
                    self.next();
                    let arg = if *self.peek() == Tok::Star {
                        if func != AggFunc::Count {
                            return Err(syntax(self.pos(), "only COUNT accepts '*'"));
                        }
                        self.next();
                        None
                    } else {
                        Some(self.col_ref()?)
                    };
                    self.expect(Tok::RParen, "')'")?;
                    let alias = self.alias()?;
                    return Ok(SelectItem::Aggregate { func, arg, alias });
                }
            }
        }
        let col = self.col_ref()?;
        let alias = self.alias()?;
        Ok(SelectItem::Column { col, alias })
    }

    fn operand(&mut self) -> Result<Operand> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(_) => Ok(Operand::Column(self.col_ref()?)),
            Tok::Number(n) => {
                self.next();
                if let Ok(i) = n.parse::<i64>() {
                    Ok(Operand::Literal(Literal::Int(i)))
                } else {
                    n.parse::<f64>()
                        .map(|r| Operand::Literal(Literal::Real(r)))
                        .map_err(|_| syntax(pos, format!("bad number '{n}'")))
                }
            }
            Tok::Str(s) => {
                self.next();
                Ok(Operand::Literal(Literal::Str(s)))
            }
            Tok::Keyword(Kw::True) => {
                self.next();
                Ok(Operand::Literal(Literal::Bool(true)))
            }
            Tok::Keyword(Kw::False) => {
                self.next();
                Ok(Operand::Literal(Literal::Bool(false)))
            }
            Tok::Keyword(Kw::Null) => {
                self.next();
                Ok(Operand::Literal(Literal::Null))
            }
            Tok::Keyword(Kw::Date) => {
                self.next();
                match self.next() {
                    Tok::Str(s) => Ok(Operand::Literal(Literal::Date(s))),
                    _ => Err(syntax(pos, "DATE must be followed by a string literal")),
                }
            }
            _ => Err(self.unexpected("column or literal")),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut left = self.conj()?;
        while self.eat_kw(Kw::Or) {
            let right = self.conj()?;
            left = Expr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn conj(&mut self) -> Result<Expr> {
        let mut left = self.neg()?;
        while self.eat_kw(Kw::And) {
            let right = self.neg()?;
            left = Expr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn neg(&mut self) -> Result<Expr> {
        if self.eat_kw(Kw::Not) {
            return Ok(Expr::Not(Box::new(self.neg()?)));
        }
        if *self.peek() == Tok::LParen {
            self.next();
            let e = self.expr()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(e);
        }
        let left = self.operand()?;
        if self.eat_kw(Kw::Is) {
            let negated = self.eat_kw(Kw::Not);
            self.expect_kw(Kw::Null)?;
            return Ok(Expr::IsNull { operand: left, negated });
        }
        let Tok::Op(op) = *self.peek() else {
            return Err(self.unexpected("comparison operator"));
        };
        self.next();
        let right = self.operand()?;
        Ok(Expr::Cmp(left, op, right))
    }

    fn statement(&mut self) -> Result<SelectStmt> {
        self.expect_kw(Kw::Select)?;
        let mut items = Vec::new();
        if *self.peek() == Tok::Star {
            self.next();
            items.push(SelectItem::Star);
        } else {
            loop {
                items.push(self.select_item()?);
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.next();
            }
        }
        self.expect_kw(Kw::From)?;
        let from = self.table_ref()?;
        let mut joins = Vec::new();
        loop {
            let inner = self.eat_kw(Kw::Inner);
            if !self.eat_kw(Kw::Join) {
                if inner {
                    return Err(self.unexpected("JOIN"));
                }
                break;
            }
            let table = self.table_ref()?;
            self.expect_kw(Kw::On)?;
            let mut on = Vec::new();
            loop {
                let l = self.col_ref()?;
                self.expect(Tok::Op(CmpOp::Eq), "'='")?;
                let r = self.col_ref()?;
                on.push((l, r));
                if !self.eat_kw(Kw::And) {
                    break;
                }
            }
            joins.push(JoinClause { table, on });
        }
        let filter = if self.eat_kw(Kw::Where) {
            Some(self.expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_kw(Kw::Group) {
            self.expect_kw(Kw::By)?;
            loop {
                group_by.push(self.col_ref()?);
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.next();
            }
        }
        if *self.peek() == Tok::Semicolon {
            self.next();
        }
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("end of statement"));
        }
        Ok(SelectStmt {
            items,
            from,
            joins,
            filter,
            group_by,
        })
    }
}

/// Parses one SELECT statement of the subset grammar.
pub fn parse_statement(text: &str) -> Result<SelectStmt> {
    let toks = lex(text)?;
    Parser { toks, at: 0 }.statement()
}
