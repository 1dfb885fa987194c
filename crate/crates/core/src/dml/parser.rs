use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::lexer::{Keyword, Lexer, Token, TokenKind};
use super::{DmlOptions, ParseError, Statement};
use crate::cost::Plan;
use crate::expr::{Assignment, BinaryOp, CmpOp, Comparison, Expr, Predicate};
use crate::value::{Column, ColumnType, Value};

/// Nesting limit for parentheses and unary minus.
const MAX_DEPTH: usize = 128;

const STATEMENT_START: [&str; 8] = [
    "CREATE", "DROP", "LOAD", "INSERT", "SELECT", "UPDATE", "DELETE", "COMPACT",
];

/// Parses exactly one statement, optionally followed by `;`.
pub fn parse(text: &str) -> Result<Statement, ParseError> {
    let mut p = Parser::new(text)?;
    let stmt = p.statement()?;
    p.eat(&TokenKind::Semicolon)?;
    p.expect_eof()?;
    Ok(stmt)
}

/// Parses a `;`-separated script in full.
pub fn parse_script(text: &str) -> Result<Vec<(Statement, u32, u32)>, ParseError> {
    ScriptParser::new(text).collect()
}

/// Statement-at-a-time parsing of a script. Yields each statement with the
/// line and column where it starts. Stops after the first error.
pub struct ScriptParser<'a> {
    parser: Result<Parser<'a>, Option<ParseError>>,
}

impl<'a> ScriptParser<'a> {
    pub fn new(text: &'a str) -> Self {
        ScriptParser {
            parser: Parser::new(text).map_err(Some),
        }
    }
}

impl Iterator for ScriptParser<'_> {
    type Item = Result<(Statement, u32, u32), ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        let p = match &mut self.parser {
            Ok(p) => p,
            Err(e) => return e.take().map(Err),
        };
        let result = (|| {
            while p.eat(&TokenKind::Semicolon)? {}
            if p.at(&TokenKind::Eof) {
                return Ok(None);
            }
            let (line, col) = (p.tok.span.line, p.tok.span.col);
            let stmt = p.statement()?;
            if !p.eat(&TokenKind::Semicolon)? && !p.at(&TokenKind::Eof) {
                return Err(p.unexpected(&["`;`"]));
            }
            Ok(Some((stmt, line, col)))
        })();
        match result {
            Ok(Some(item)) => Some(Ok(item)),
            Ok(None) => None,
            Err(e) => {
                self.parser = Err(None);
                Some(Err(e))
            }
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Token,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(text);
        let tok = lexer.next_token()?;
        Ok(Parser {
            lexer,
            tok,
            depth: 0,
        })
    }

    fn advance(&mut self) -> Result<Token, ParseError> {
        let next = self.lexer.next_token()?;
        Ok(core::mem::replace(&mut self.tok, next))
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.tok.kind == kind
    }

    fn eat(&mut self, kind: &TokenKind) -> Result<bool, ParseError> {
        if self.at(kind) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> Result<bool, ParseError> {
        self.eat(&TokenKind::Keyword(kw))
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError {
            line: self.tok.span.line,
            col: self.tok.span.col,
            message: format!("unexpected {}", self.tok.kind.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.tok.span.line,
            col: self.tok.span.col,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    fn expect(&mut self, kind: &TokenKind, name: &str) -> Result<(), ParseError> {
        if self.eat(kind)? {
            Ok(())
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> Result<(), ParseError> {
        if self.eat_kw(kw)? {
            Ok(())
        } else {
            Err(self.unexpected(&[kw.as_str()]))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at(&TokenKind::Eof) {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        if let TokenKind::Ident(_) = self.tok.kind {
            let TokenKind::Ident(name) = self.advance()?.kind else {
                unreachable!()
            };
            Ok(name)
        } else {
            Err(self.unexpected(&["identifier"]))
        }
    }

    /// Identifier matched case-insensitively against a contextual word.
    fn at_word(&self, word: &str) -> bool {
        matches!(&self.tok.kind, TokenKind::Ident(s) if s.eq_ignore_ascii_case(word))
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let TokenKind::Keyword(kw) = self.tok.kind else {
            return Err(self.unexpected(&STATEMENT_START));
        };
        match kw {
            Keyword::Create => self.create(),
            Keyword::Drop => {
                self.advance()?;
                self.expect_kw(Keyword::Table)?;
                Ok(Statement::Drop {
                    table: self.ident()?,
                })
            }
            Keyword::Load => {
                self.advance()?;
                let table = self.ident()?;
                self.expect_kw(Keyword::From)?;
                let TokenKind::Str(_) = self.tok.kind else {
                    return Err(self.unexpected(&["string"]));
                };
                let TokenKind::Str(path) = self.advance()?.kind else {
                    unreachable!()
                };
                Ok(Statement::Load { table, path })
            }
            Keyword::Insert => self.insert(),
            Keyword::Select => self.select(),
            Keyword::Update => self.update(),
            Keyword::Delete => {
                self.advance()?;
                self.expect_kw(Keyword::From)?;
                let table = self.ident()?;
                let predicate = self.where_clause()?;
                let options = self.with_clause()?;
                Ok(Statement::Delete {
                    table,
                    predicate,
                    options,
                })
            }
            Keyword::Compact => {
                self.advance()?;
                Ok(Statement::Compact {
                    table: self.ident()?,
                })
            }
            _ => Err(self.unexpected(&STATEMENT_START)),
        }
    }

    fn create(&mut self) -> Result<Statement, ParseError> {
        self.advance()?;
        self.expect_kw(Keyword::Table)?;
        let table = self.ident()?;
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut columns = Vec::new();
        loop {
            let name = self.ident()?;
            let ty = match &self.tok.kind {
                TokenKind::Ident(t) => ColumnType::from_name(t),
                _ => None,
            }
            .ok_or_else(|| self.unexpected(&["INT64", "FLOAT64", "UTF8", "BOOL"]))?;
            self.advance()?;
            columns.push(Column::new(name, ty));
            if !self.eat(&TokenKind::Comma)? {
                break;
            }
        }
        self.expect(&TokenKind::RParen, "`)`")?;
        Ok(Statement::Create { table, columns })
    }

    fn insert(&mut self) -> Result<Statement, ParseError> {
        self.advance()?;
        self.expect_kw(Keyword::Into)?;
        let table = self.ident()?;
        self.expect_kw(Keyword::Values)?;
        let mut rows = Vec::new();
        loop {
            self.expect(&TokenKind::LParen, "`(`")?;
            let mut row = Vec::new();
            loop {
                row.push(self.literal()?);
                if !self.eat(&TokenKind::Comma)? {
                    break;
                }
            }
            self.expect(&TokenKind::RParen, "`)`")?;
            rows.push(row);
            if !self.eat(&TokenKind::Comma)? {
                break;
            }
        }
        Ok(Statement::Insert { table, rows })
    }

    fn select(&mut self) -> Result<Statement, ParseError> {
        self.advance()?;
        let columns = if self.eat(&TokenKind::Star)? {
            None
        } else {
            let mut cols = vec![self.ident().map_err(|_| self.unexpected(&["`*`", "identifier"]))?];
            while self.eat(&TokenKind::Comma)? {
                cols.push(self.ident()?);
            }
            Some(cols)
        };
        self.expect_kw(Keyword::From)?;
        let table = self.ident()?;
        let predicate = self.where_clause()?;
        Ok(Statement::Select {
            table,
            columns,
            predicate,
        })
    }

    fn update(&mut self) -> Result<Statement, ParseError> {
        self.advance()?;
        let table = self.ident()?;
        self.expect_kw(Keyword::Set)?;
        let mut assignments = Vec::new();
        loop {
            let column = self.ident()?;
            self.expect(&TokenKind::Eq, "`=`")?;
            let value = self.expr()?;
            assignments.push(Assignment { column, value });
            if !self.eat(&TokenKind::Comma)? {
                break;
            }
        }
        let predicate = self.where_clause()?;
        let options = self.with_clause()?;
        Ok(Statement::Update {
            table,
            assignments,
            predicate,
            options,
        })
    }

    fn where_clause(&mut self) -> Result<Option<Predicate>, ParseError> {
        if self.eat_kw(Keyword::Where)? {
            self.predicate().map(Some)
        } else {
            Ok(None)
        }
    }

    fn with_clause(&mut self) -> Result<DmlOptions, ParseError> {
        let mut opts = DmlOptions::default();
        if !self.eat_kw(Keyword::With)? {
            return Ok(opts);
        }
        loop {
            let (line, col) = (self.tok.span.line, self.tok.span.col);
            let duplicate = |name: &str| ParseError {
                line,
                col,
                message: format!("option {name} given twice"),
                expected: Vec::new(),
            };
            if self.at_word("ratio") {
                self.advance()?;
                self.expect(&TokenKind::Eq, "`=`")?;
                let r = match self.literal()? {
                    Value::Int(i) => i as f64,
                    Value::Float(x) => x,
                    _ => return Err(self.error_at(line, col, "RATIO must be a number")),
                };
                if opts.ratio.replace(r).is_some() {
                    return Err(duplicate("RATIO"));
                }
            } else if self.at_word("k") {
                self.advance()?;
                self.expect(&TokenKind::Eq, "`=`")?;
                let k = match self.tok.kind {
                    TokenKind::Int(k) => u32::try_from(k)
                        .map_err(|_| self.error_here("K out of range"))?,
                    _ => return Err(self.unexpected(&["integer"])),
                };
                self.advance()?;
                if opts.k.replace(k).is_some() {
                    return Err(duplicate("K"));
                }
            } else if self.at_word("plan") {
                self.advance()?;
                self.expect(&TokenKind::Eq, "`=`")?;
                let plan = if self.at_word("edit") {
                    Plan::Edit
                } else if self.at_word("overwrite") {
                    Plan::Overwrite
                } else {
                    return Err(self.unexpected(&["EDIT", "OVERWRITE"]));
                };
                self.advance()?;
                if opts.plan.replace(plan).is_some() {
                    return Err(duplicate("PLAN"));
                }
            } else {
                return Err(self.unexpected(&["RATIO", "K", "PLAN"]));
            }
            if !self.eat(&TokenKind::Comma)? {
                return Ok(opts);
            }
        }
    }

    fn error_at(&self, line: u32, col: u32, message: &str) -> ParseError {
        ParseError {
            line,
            col,
            message: message.to_string(),
            expected: Vec::new(),
        }
    }

    /// Literal with an optional leading minus on numbers.
    fn literal(&mut self) -> Result<Value, ParseError> {
        const EXPECTED: [&str; 6] = ["number", "string", "TRUE", "FALSE", "NULL", "`-`"];
        let negative = self.eat(&TokenKind::Minus)?;
        let value = match &self.tok.kind {
            TokenKind::Int(n) => int_literal(*n, negative).ok_or_else(|| self.error_here("integer literal out of range"))?,
            TokenKind::Float(x) => Value::Float(if negative { -x } else { *x }),
            _ if negative => return Err(self.unexpected(&["number"])),
            TokenKind::Str(s) => Value::Str(s.clone()),
            TokenKind::Keyword(Keyword::True) => Value::Bool(true),
            TokenKind::Keyword(Keyword::False) => Value::Bool(false),
            TokenKind::Keyword(Keyword::Null) => Value::Null,
            _ => return Err(self.unexpected(&EXPECTED)),
        };
        self.advance()?;
        Ok(value)
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        let mut any = vec![self.conjunction()?];
        while self.eat_kw(Keyword::Or)? {
            any.push(self.conjunction()?);
        }
        Ok(Predicate { any })
    }

    fn conjunction(&mut self) -> Result<Vec<Comparison>, ParseError> {
        let mut all = vec![self.comparison()?];
        while self.eat_kw(Keyword::And)? {
            all.push(self.comparison()?);
        }
        Ok(all)
    }

    fn comparison(&mut self) -> Result<Comparison, ParseError> {
        let left = self.expr()?;
        let op = match self.tok.kind {
            TokenKind::Eq => CmpOp::Eq,
            TokenKind::Ne => CmpOp::Ne,
            TokenKind::Lt => CmpOp::Lt,
            TokenKind::Le => CmpOp::Le,
            TokenKind::Gt => CmpOp::Gt,
            TokenKind::Ge => CmpOp::Ge,
            _ => {
                return Err(self.unexpected(&[
                    "`=`", "`!=`", "`<`", "`<=`", "`>`", "`>=`", "`+`", "`-`", "`*`", "`/`",
                ]))
            }
        };
        self.advance()?;
        let right = self.expr()?;
        Ok(Comparison { left, op, right })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.term()?;
        loop {
            let op = match self.tok.kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(left),
            };
            self.advance()?;
            let right = self.term()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.tok.kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => return Ok(left),
            };
            self.advance()?;
            let right = self.unary()?;
            left = Expr::binary(op, left, right);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.depth >= MAX_DEPTH {
            return Err(self.error_here("expression nested too deeply"));
        }
        self.depth += 1;
        let result = self.unary_inner();
        self.depth -= 1;
        result
    }

    fn unary_inner(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&TokenKind::Minus)? {
            // A minus directly applied to a number folds into the literal.
            if let TokenKind::Int(n) = self.tok.kind {
                let v = int_literal(n, true)
                    .ok_or_else(|| self.error_here("integer literal out of range"))?;
                self.advance()?;
                return Ok(Expr::Literal(v));
            }
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Literal(Value::Int(i)) => match i.checked_neg() {
                    Some(n) => Expr::Literal(Value::Int(n)),
                    None => Expr::Neg(Box::new(Expr::Literal(Value::Int(i)))),
                },
                Expr::Literal(Value::Float(x)) => Expr::Literal(Value::Float(-x)),
                other => Expr::Neg(Box::new(other)),
            });
        }
        match &self.tok.kind {
            TokenKind::Ident(_) => Ok(Expr::Column(self.ident()?)),
            TokenKind::LParen => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Int(n) => {
                let v = int_literal(*n, false)
                    .ok_or_else(|| self.error_here("integer literal out of range"))?;
                self.advance()?;
                Ok(Expr::Literal(v))
            }
            TokenKind::Float(_)
            | TokenKind::Str(_)
            | TokenKind::Keyword(Keyword::True | Keyword::False | Keyword::Null) => {
                Ok(Expr::Literal(self.literal()?))
            }
            _ => Err(self.unexpected(&[
                "identifier",
                "number",
                "string",
                "TRUE",
                "FALSE",
                "NULL",
                "`(`",
                "`-`",
            ])),
        }
    }
}

fn int_literal(magnitude: u64, negative: bool) -> Option<Value> {
    let signed = if negative {
        0i128 - i128::from(magnitude)
    } else {
        i128::from(magnitude)
    };
    i64::try_from(signed).ok().map(Value::Int)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn rt(text: &str) -> String {
        let stmt = parse(text).unwrap();
        let printed = stmt.to_string();
        assert_eq!(parse(&printed).unwrap(), stmt, "reparse of {printed}");
        printed
    }

    #[test]
    fn delete_with_predicate() {
        let s = parse("DELETE FROM t WHERE a = 1").unwrap();
        assert_eq!(
            s,
            Statement::Delete {
                table: "t".into(),
                predicate: Some(Predicate::single(Comparison {
                    left: Expr::column("a"),
                    op: CmpOp::Eq,
                    right: Expr::lit(Value::Int(1)),
                })),
                options: DmlOptions::default(),
            }
        );
    }

    #[test]
    fn grid_style_update() {
        let s = parse("UPDATE t SET qryhs = 0 WHERE rq = '2014-01-01'").unwrap();
        let Statement::Update {
            table,
            assignments,
            predicate,
            ..
        } = s
        else {
            panic!()
        };
        assert_eq!(table, "t");
        assert_eq!(assignments.len(), 1);
        assert_eq!(assignments[0].column, "qryhs");
        assert_eq!(assignments[0].value, Expr::lit(Value::Int(0)));
        assert!(predicate.is_some());
    }

    #[test]
    fn precedence_golden() {
        assert_eq!(rt("select * from t where a + b * c = (a + b) * c"), "SELECT * FROM t WHERE a + b * c = (a + b) * c");
        assert_eq!(rt("SELECT a FROM t WHERE a - b - c > a - (b - c)"), "SELECT a FROM t WHERE a - b - c > a - (b - c)");
        assert_eq!(rt("SELECT a FROM t WHERE a / b * c = 1"), "SELECT a FROM t WHERE a / b * c = 1");
        let p = parse("SELECT * FROM t WHERE a = 1 OR b = 2 AND c = 3").unwrap();
        let Statement::Select { predicate: Some(p), .. } = p else { panic!() };
        assert_eq!(p.any.len(), 2);
        assert_eq!(p.any[0].len(), 1);
        assert_eq!(p.any[1].len(), 2);
        let e = parse("UPDATE t SET a = 1 + 2 * 3").unwrap();
        let Statement::Update { assignments, .. } = e else { panic!() };
        assert_eq!(
            assignments[0].value,
            Expr::binary(
                BinaryOp::Add,
                Expr::lit(Value::Int(1)),
                Expr::binary(BinaryOp::Mul, Expr::lit(Value::Int(2)), Expr::lit(Value::Int(3)))
            )
        );
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(rt("UPDATE t SET a = -5"), "UPDATE t SET a = -5");
        assert_eq!(rt("UPDATE t SET a = a - -5"), "UPDATE t SET a = a - -5");
        assert_eq!(rt("UPDATE t SET a = -(5)"), "UPDATE t SET a = -5");
        assert_eq!(rt("UPDATE t SET a = -(-a)"), "UPDATE t SET a = -(-a)");
        assert_eq!(
            rt("INSERT INTO t VALUES (-9223372036854775808, -0.0)"),
            "INSERT INTO t VALUES (-9223372036854775808, -0.0)"
        );
        assert!(parse("INSERT INTO t VALUES (9223372036854775808)").is_err());
    }

    #[test]
    fn all_statement_forms_roundtrip() {
        for s in [
            "CREATE TABLE t (a INT64, b float, c STRING, d boolean)",
            "DROP TABLE t",
            "LOAD t FROM '/tmp/x''s.csv'",
            "INSERT INTO t VALUES (1, 2.5, 'x', TRUE), (NULL, -1.0, '', FALSE)",
            "SELECT a, b FROM t",
            "SELECT * FROM t WHERE a >= 1 AND b <> 2",
            "UPDATE t SET a = a + 1, b = 0 WHERE c = 'x' WITH RATIO = 0.01, K = 30, PLAN = EDIT",
            "DELETE FROM t WITH plan = overwrite",
            "COMPACT t",
        ] {
            rt(s);
        }
        assert_eq!(
            rt("create table T (A int)"),
            "CREATE TABLE t (a INT64)"
        );
    }

    #[test]
    fn options() {
        let s = parse("DELETE FROM t WITH K = 3, RATIO = 1, PLAN = OVERWRITE").unwrap();
        let Statement::Delete { options, .. } = s else { panic!() };
        assert_eq!(options.k, Some(3));
        assert_eq!(options.ratio, Some(1.0));
        assert_eq!(options.plan, Some(Plan::Overwrite));
        assert!(parse("DELETE FROM t WITH K = 3, K = 4").is_err());
        assert!(parse("DELETE FROM t WITH K = 1.5").is_err());
        assert!(parse("DELETE FROM t WITH PLAN = FAST").is_err());
    }

    #[test]
    fn errors_are_positioned() {
        let e = parse("SELECT * FROM").unwrap_err();
        assert_eq!((e.line, e.col), (1, 14));
        assert_eq!(e.expected, ["identifier"]);

        let e = parse("UPDATE t\nSET a 1").unwrap_err();
        assert_eq!((e.line, e.col), (2, 7));
        assert_eq!(e.expected, ["`=`"]);

        let e = parse("FROB t").unwrap_err();
        assert_eq!(e.expected.len(), 8);
        assert!(e.to_string().starts_with("1:1: unexpected identifier `frob`; expected CREATE"));

        assert!(parse("SELECT * FROM t WHERE a").is_err());
        assert!(parse("SELECT * FROM t extra").is_err());
        assert!(parse("UPDATE t SET").is_err());
        assert!(parse("CREATE TABLE t (a blob)").is_err());
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let mut s = String::from("UPDATE t SET a = ");
        for _ in 0..10_000 {
            s.push('(');
        }
        s.push('1');
        let e = parse(&s).unwrap_err();
        assert!(e.message.contains("nested"));
        let minus: String = core::iter::repeat_n("- ", 10_000).collect();
        assert!(parse(&(String::from("UPDATE t SET a = ") + &minus + "a")).is_err());
    }

    #[test]
    fn script_statements() {
        let text = "CREATE TABLE t (a INT64);\n-- comment\nINSERT INTO t VALUES (1);;\nSELECT * FROM t";
        let stmts = parse_script(text).unwrap();
        assert_eq!(stmts.len(), 3);
        assert_eq!((stmts[1].1, stmts[1].2), (3, 1));

        let bad = "CREATE TABLE t (a INT64);\nINSERT INTO t VALUES (1);\nSELECT FROM t;";
        let mut it = ScriptParser::new(bad);
        assert!(it.next().unwrap().is_ok());
        assert!(it.next().unwrap().is_ok());
        let e = it.next().unwrap().unwrap_err();
        assert_eq!(e.line, 3);
        assert!(it.next().is_none());

        assert!(parse_script("SELECT * FROM t SELECT * FROM u").is_err());
    }
}
