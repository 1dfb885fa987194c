use alloc::borrow::ToOwned;
use alloc::string::String;

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Create,
    Table,
    Drop,
    Load,
    From,
    Insert,
    Into,
    Values,
    Select,
    Update,
    Set,
    Where,
    With,
    Delete,
    Compact,
    And,
    Or,
    True,
    False,
    Null,
}

impl Keyword {
    const ALL: [(Keyword, &'static str); 20] = [
        (Keyword::Create, "CREATE"),
        (Keyword::Table, "TABLE"),
        (Keyword::Drop, "DROP"),
        (Keyword::Load, "LOAD"),
        (Keyword::From, "FROM"),
        (Keyword::Insert, "INSERT"),
        (Keyword::Into, "INTO"),
        (Keyword::Values, "VALUES"),
        (Keyword::Select, "SELECT"),
        (Keyword::Update, "UPDATE"),
        (Keyword::Set, "SET"),
        (Keyword::Where, "WHERE"),
        (Keyword::With, "WITH"),
        (Keyword::Delete, "DELETE"),
        (Keyword::Compact, "COMPACT"),
        (Keyword::And, "AND"),
        (Keyword::Or, "OR"),
        (Keyword::True, "TRUE"),
        (Keyword::False, "FALSE"),
        (Keyword::Null, "NULL"),
    ];

    pub fn as_str(self) -> &'static str {
        Self::ALL.iter().find(|(k, _)| *k == self).unwrap().1
    }

    fn lookup(word: &str) -> Option<Keyword> {
        Self::ALL
            .iter()
            .find(|(_, s)| s.eq_ignore_ascii_case(word))
            .map(|(k, _)| *k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    /// Lower-cased identifier.
    Ident(String),
    /// Unsigned integer literal; the sign is a separate token.
    Int(u64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => k.as_str().to_owned(),
            TokenKind::Ident(s) => alloc::format!("identifier `{s}`"),
            TokenKind::Int(_) | TokenKind::Float(_) => "number".to_owned(),
            TokenKind::Str(_) => "string".to_owned(),
            TokenKind::LParen => "`(`".to_owned(),
            TokenKind::RParen => "`)`".to_owned(),
            TokenKind::Comma => "`,`".to_owned(),
            TokenKind::Semicolon => "`;`".to_owned(),
            TokenKind::Star => "`*`".to_owned(),
            TokenKind::Plus => "`+`".to_owned(),
            TokenKind::Minus => "`-`".to_owned(),
            TokenKind::Slash => "`/`".to_owned(),
            TokenKind::Eq => "`=`".to_owned(),
            TokenKind::Ne => "`!=`".to_owned(),
            TokenKind::Lt => "`<`".to_owned(),
            TokenKind::Le => "`<=`".to_owned(),
            TokenKind::Gt => "`>`".to_owned(),
            TokenKind::Ge => "`>=`".to_owned(),
            TokenKind::Eof => "end of input".to_owned(),
        }
    }
}

/// Byte range of a token plus the 1-based line and column (in characters)
/// of its first character.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') if self.peek_second() == Some('-') => {
                    while self.peek_char().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn error(&self, line: u32, col: u32, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            message: message.into(),
            expected: alloc::vec::Vec::new(),
        }
    }

    pub fn next_token(&mut self) -> Result<Token, ParseError> {
        self.skip_trivia();
        let (start, line, col) = (self.pos, self.line, self.col);
        let Some(c) = self.bump() else {
            return Ok(Token {
                kind: TokenKind::Eof,
                span: Span {
                    start,
                    end: start,
                    line,
                    col,
                },
            });
        };
        let kind = match c {
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            ';' => TokenKind::Semicolon,
            '*' => TokenKind::Star,
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '/' => TokenKind::Slash,
            '=' => TokenKind::Eq,
            '!' => {
                if self.peek_char() == Some('=') {
                    self.bump();
                    TokenKind::Ne
                } else {
                    return Err(self.error(line, col, "unexpected character `!`"));
                }
            }
            '<' => match self.peek_char() {
                Some('=') => {
                    self.bump();
                    TokenKind::Le
                }
                Some('>') => {
                    self.bump();
                    TokenKind::Ne
                }
                _ => TokenKind::Lt,
            },
            '>' => {
                if self.peek_char() == Some('=') {
                    self.bump();
                    TokenKind::Ge
                } else {
                    TokenKind::Gt
                }
            }
            '\'' => self.string(line, col)?,
            c if c.is_ascii_digit() => self.number(start, line, col)?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                while self
                    .peek_char()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    self.bump();
                }
                let word = &self.src[start..self.pos];
                match Keyword::lookup(word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Ident(word.to_ascii_lowercase()),
                }
            }
            other => {
                return Err(self.error(line, col, alloc::format!("unexpected character {other:?}")))
            }
        };
        Ok(Token {
            kind,
            span: Span {
                start,
                end: self.pos,
                line,
                col,
            },
        })
    }

    fn string(&mut self, line: u32, col: u32) -> Result<TokenKind, ParseError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, col, "unterminated string literal")),
                Some('\'') => {
                    if self.peek_char() == Some('\'') {
                        self.bump();
                        s.push('\'');
                    } else {
                        return Ok(TokenKind::Str(s));
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn digits(&mut self) -> usize {
        let mut n = 0;
        while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            n += 1;
        }
        n
    }

    fn number(&mut self, start: usize, line: u32, col: u32) -> Result<TokenKind, ParseError> {
        self.digits();
        let mut is_float = false;
        if self.peek_char() == Some('.') && self.peek_second().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            self.digits();
            is_float = true;
        }
        if matches!(self.peek_char(), Some('e' | 'E')) {
            let save = self.clone();
            self.bump();
            if matches!(self.peek_char(), Some('+' | '-')) {
                self.bump();
            }
            if self.digits() == 0 {
                *self = save;
            } else {
                is_float = true;
            }
        }
        if self
            .peek_char()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        {
            return Err(self.error(line, col, "malformed number literal"));
        }
        let text = &self.src[start..self.pos];
        if is_float {
            match text.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(TokenKind::Float(x)),
                _ => Err(self.error(line, col, "float literal out of range")),
            }
        } else {
            text.parse::<u64>()
                .map(TokenKind::Int)
                .map_err(|_| self.error(line, col, "integer literal out of range"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn kinds(src: &str) -> Vec<TokenKind> {
        let mut lx = Lexer::new(src);
        let mut out = Vec::new();
        loop {
            let t = lx.next_token().unwrap();
            if t.kind == TokenKind::Eof {
                return out;
            }
            out.push(t.kind);
        }
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert_eq!(
            kinds("select SeLeCt Foo"),
            [
                TokenKind::Keyword(Keyword::Select),
                TokenKind::Keyword(Keyword::Select),
                TokenKind::Ident("foo".into())
            ]
        );
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(
            kinds("1 2.5 3e2 1.5e-3 'it''s'"),
            [
                TokenKind::Int(1),
                TokenKind::Float(2.5),
                TokenKind::Float(300.0),
                TokenKind::Float(0.0015),
                TokenKind::Str("it's".into()),
            ]
        );
        assert!(Lexer::new("1e999").next_token().is_err());
        assert!(Lexer::new("99999999999999999999").next_token().is_err());
        assert!(Lexer::new("'open").next_token().is_err());
        assert!(Lexer::new("7e").next_token().is_err());
    }

    #[test]
    fn operators_and_comments() {
        assert_eq!(
            kinds("a<=b -- trailing\n<> != >= - -"),
            [
                TokenKind::Ident("a".into()),
                TokenKind::Le,
                TokenKind::Ident("b".into()),
                TokenKind::Ne,
                TokenKind::Ne,
                TokenKind::Ge,
                TokenKind::Minus,
                TokenKind::Minus,
            ]
        );
    }

    #[test]
    fn spans_cover_tokens() {
        let src = "UPDATE t\n  SET a = 'x y'";
        let mut lx = Lexer::new(src);
        let mut last = 0;
        loop {
            let t = lx.next_token().unwrap();
            assert!(src[last..t.span.start].chars().all(char::is_whitespace));
            last = t.span.end;
            if t.kind == TokenKind::Eof {
                break;
            }
        }
        assert_eq!(last, src.len());
        let mut lx = Lexer::new(src);
        for _ in 0..2 {
            lx.next_token().unwrap();
        }
        let set = lx.next_token().unwrap();
        assert_eq!((set.span.line, set.span.col), (2, 3));
    }
}
