//! Recursive-descent parser for the ASCII formula syntax.
//!
//! ```text
//! f    := f '->' f | f 'or' f | f 'and' f | f 'until_[a,b]' f
//!       | 'not' f | 'alw_[a,b]' f | 'ev_[a,b]' f | 'true' | 'false'
//!       | atom | '(' f ')'
//! atom := expr REL number | number REL expr
//! expr := channel | number | expr ('+'|'-'|'*') expr | 'abs' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Binding from loosest to tightest: `->` (right associative), `or`, `and`,
//! `until`, then the prefix operators. `b` may be `inf`; `alw`/`ev` without a
//! bracket mean `[0,inf]`. Implication is desugared to `not a or b`.

use thiserror::Error;

use super::ast::{Atom, Expr, Formula, Interval, Relation};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Rel(Relation),
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(v) => format!("number {v}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Rel(r) => format!("`{}`", r.symbol()),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| ParseError { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit))
        {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| err(l0, c0, format!("malformed number `{s}`")))?;
            Tok::Num(v)
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                (',', _) => (Tok::Comma, 1),
                ('+', _) => (Tok::Plus, 1),
                ('*', _) => (Tok::Star, 1),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('-', _) => (Tok::Minus, 1),
                ('<', Some('=')) => (Tok::Rel(Relation::Le), 2),
                ('<', _) => (Tok::Rel(Relation::Lt), 1),
                ('>', Some('=')) => (Tok::Rel(Relation::Ge), 2),
                ('>', _) => (Tok::Rel(Relation::Gt), 1),
                ('=', Some('=')) => (Tok::Rel(Relation::Eq), 2),
                ('=', _) => return Err(err(l0, c0, "single `=`; equality is written `==`".into())),
                _ => return Err(err(l0, c0, format!("unexpected character `{c}`"))),
            };
            i += width;
            tok
        };
        col += i - start;
        out.push(Spanned {
            tok,
            line: l0,
            col: c0,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "not", "and", "or", "true", "false", "abs", "inf", "alw", "alw_", "ev", "ev_", "until",
    "until_",
];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            col: s.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::or(Formula::not(lhs), rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut f = self.conjunction()?;
        while self.is_kw("or") {
            self.bump();
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut f = self.until()?;
        while self.is_kw("and") {
            self.bump();
            f = Formula::and(f, self.until()?);
        }
        Ok(f)
    }

    fn until(&mut self) -> PResult<Formula> {
        let mut f = self.unary()?;
        loop {
            if self.is_kw("until_") {
                self.bump();
                let i = self.interval()?;
                f = Formula::until(i, f, self.unary()?);
            } else if self.is_kw("until") {
                self.bump();
                f = Formula::until(Interval::unbounded(), f, self.unary()?);
            } else {
                return Ok(f);
            }
        }
    }

    fn unary(&mut self) -> PResult<Formula> {
        if let Tok::Ident(kw) = self.peek().clone() {
            match kw.as_str() {
                "not" => {
                    self.bump();
                    return Ok(Formula::not(self.unary()?));
                }
                "alw_" | "ev_" => {
                    self.bump();
                    let i = self.interval()?;
                    let f = self.unary()?;
                    return Ok(if kw == "alw_" {
                        Formula::always(i, f)
                    } else {
                        Formula::eventually(i, f)
                    });
                }
                "alw" | "ev" => {
                    self.bump();
                    let f = self.unary()?;
                    let i = Interval::unbounded();
                    return Ok(if kw == "alw" {
                        Formula::always(i, f)
                    } else {
                        Formula::eventually(i, f)
                    });
                }
                "true" => {
                    self.bump();
                    return Ok(Formula::truth());
                }
                "false" => {
                    self.bump();
                    return Ok(Formula::False);
                }
                _ => {}
            }
        }
        if *self.peek() == Tok::LParen {
            // Either a parenthesized formula or an atom whose expression starts
            // with a parenthesis; try the atom first and keep the deeper error.
            let save = self.pos;
            match self.atom() {
                Ok(a) => return Ok(a),
                Err(atom_err) => {
                    let atom_pos = self.pos;
                    self.pos = save;
                    self.bump();
                    let res = self.formula().and_then(|f| {
                        self.expect(Tok::RParen)?;
                        Ok(f)
                    });
                    return match res {
                        Ok(f) => Ok(f),
                        Err(_) if atom_pos > self.pos => Err(atom_err),
                        Err(e) => Err(e),
                    };
                }
            }
        }
        self.atom()
    }

    fn interval(&mut self) -> PResult<Interval> {
        self.expect(Tok::LBracket)?;
        let lo = self.bound()?;
        self.expect(Tok::Comma)?;
        let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
        let hi = self.bound()?;
        self.expect(Tok::RBracket)?;
        Interval::new(lo, hi).ok_or_else(|| ParseError {
            line,
            col,
            message: if lo == hi {
                format!("singular interval [{lo},{hi}]")
            } else {
                format!("invalid interval [{lo},{hi}]; need 0 <= a < b")
            },
        })
    }

    fn bound(&mut self) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(v)
            }
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                Ok(f64::INFINITY)
            }
            t => Err(self.error_here(format!("expected interval bound, found {}", t.describe()))),
        }
    }

    fn atom(&mut self) -> PResult<Formula> {
        let lhs = self.expr()?;
        let rel = match self.peek() {
            Tok::Rel(r) => *r,
            t => {
                return Err(self.error_here(format!(
                    "expected comparison operator, found {}",
                    t.describe()
                )))
            }
        };
        self.bump();
        let rhs_pos = self.pos;
        let rhs = self.expr()?;
        let lhs_const = lhs.channels().is_empty();
        let rhs_const = rhs.channels().is_empty();
        let no_channels = |_: &str| -> usize { unreachable!("constant expression") };
        if rhs_const {
            let bound = rhs.eval_row(&[], &no_channels);
            Ok(Formula::Atom(Atom::new(lhs, rel, bound)))
        } else if lhs_const {
            let bound = lhs.eval_row(&[], &no_channels);
            Ok(Formula::Atom(Atom::new(rhs, rel.flipped(), bound)))
        } else {
            let s = &self.toks[rhs_pos];
            Err(ParseError {
                line: s.line,
                col: s.col,
                message: "one side of a comparison must be a number".into(),
            })
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    e = Expr::Add(Box::new(e), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    e = Expr::Sub(Box::new(e), Box::new(self.term()?));
                }
                _ => return Ok(e),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            e = Expr::Mul(Box::new(e), Box::new(self.factor()?));
        }
        Ok(e)
    }

    fn factor(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                if let Tok::Num(v) = *self.peek() {
                    self.bump();
                    return Ok(Expr::Const(-v));
                }
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "abs" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Abs(Box::new(e)))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Expr::Channel(s))
            }
            t => Err(self.error_here(format!("expected expression, found {}", t.describe()))),
        }
    }
}

/// Parses a formula from its concrete syntax.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek().describe())));
    }
    Ok(f)
}
