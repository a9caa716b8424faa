//! Tokenizer shared by the problem, trace and ground-program readers.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Dot,
    DotDot,
    Semi,
    Bar,
    Colon,
    If,
    Question,
    Minus,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Var(s) => return f.write_str(s),
            Tok::Int(v) => return write!(f, "{v}"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Semi => ";",
            Tok::Bar => "|",
            Tok::Colon => ":",
            Tok::If => ":-",
            Tok::Question => "?",
            Tok::Minus => "-",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

/// A parse failure with a 1-based source position.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Splits `src` into tokens; `%` starts a comment running to end of line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            adv(1, &mut i, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let push = |tok: Tok, out: &mut Vec<Token>| out.push(Token { tok, line: tl, col: tc });
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            col += i - start;
            let s: String = chars[start..i].iter().collect();
            let tok = if c.is_ascii_uppercase() || c == '_' { Tok::Var(s) } else { Tok::Ident(s) };
            push(tok, &mut out);
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<i64>().map_err(|_| SyntaxError {
                line: tl,
                col: tc,
                message: format!("integer {s} out of range"),
            })?;
            push(Tok::Int(v), &mut out);
            continue;
        }
        let (tok, n) = match (c, next) {
            (':', Some('-')) => (Tok::If, 2),
            ('.', Some('.')) => (Tok::DotDot, 2),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            (';', _) => (Tok::Semi, 1),
            ('|', _) => (Tok::Bar, 1),
            (':', _) => (Tok::Colon, 1),
            ('?', _) => (Tok::Question, 1),
            ('-', _) => (Tok::Minus, 1),
            ('=', _) => (Tok::Eq, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            _ => {
                return Err(SyntaxError { line: tl, col: tc, message: format!("unexpected character '{c}'") });
            }
        };
        push(tok, &mut out);
        adv(n, &mut i, &mut col);
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Checks that the first non-blank line of `src` is exactly `header`.
pub fn expect_header(src: &str, header: &str) -> Result<(), SyntaxError> {
    for (n, l) in src.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        if l == header {
            return Ok(());
        }
        return Err(SyntaxError { line: n + 1, col: 1, message: format!("expected header line `{header}`") });
    }
    Err(SyntaxError { line: 1, col: 1, message: format!("expected header line `{header}`") })
}

/// Cursor over a token vector.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Cursor {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        let t = &self.toks[self.pos];
        SyntaxError { line: t.line, col: t.col, message: message.into() }
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok) -> Result<(), SyntaxError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{t}', found '{}'", self.peek())))
        }
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    pub fn eat_ident(&mut self, s: &str) -> bool {
        if self.is_ident(s) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => Err(self.error(format!("expected a name, found '{t}'"))),
        }
    }

    pub fn mark(&self) -> usize {
        self.pos
    }

    pub fn reset(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub fn tokens(&self) -> &[Token] {
        &self.toks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let t = tokenize("a(X) :- not b.\n  % c\n1 {p; q} 1.").unwrap();
        let kinds: Vec<Tok> = t.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(kinds[0], Tok::Ident("a".into()));
        assert_eq!(kinds[2], Tok::Var("X".into()));
        assert_eq!(kinds[4], Tok::If);
        let one = t.iter().find(|t| t.tok == Tok::Int(1)).unwrap();
        assert_eq!((one.line, one.col), (3, 1));
    }

    #[test]
    fn ranges_and_comparisons() {
        let kinds: Vec<Tok> = tokenize("0..2 != <= >=").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(kinds, vec![Tok::Int(0), Tok::DotDot, Tok::Int(2), Tok::Ne, Tok::Le, Tok::Ge, Tok::Eof]);
    }

    #[test]
    fn bad_character() {
        let e = tokenize("a.\n  #").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
    }
}
