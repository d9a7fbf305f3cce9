//! Text format for k-expressions.
//!
//! ```text
//! expr  := leaf | union
//! leaf  := "(" "v" IDENT NAT [ ":" BITS ] ")"
//! union := "(" "u" expr expr ops ")"
//! ops   := "[" [ op { ";" op } ] "]"
//! op    := "j" NAT NAT | "r" NAT NAT
//! ```
//!
//! `#` starts a comment running to end of line. Ops apply left to right.
//! Identifiers start with a letter or `_` and continue with letters,
//! digits, or `_`. `BITS` is a string of `0`/`1` with bit `t` (bit 1 is
//! the leftmost) marking membership in probe set `t`; all masked leaves
//! must agree on the mask width, and a file either masks every leaf or
//! none.

use std::collections::HashSet;

use super::{DecoratorOp, KExpr, Mask, MAX_LABEL};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected end of input (expected {0})")]
    UnexpectedEof(&'static str),
    #[error("expected {expected}, found {found:?}")]
    UnexpectedToken { expected: &'static str, found: String },
    #[error("label {0} out of range (must be 1..={MAX_LABEL})")]
    LabelOutOfRange(u64),
    #[error("join with equal labels {0}")]
    JoinSelf(u16),
    #[error("relabel with equal labels {0}")]
    RelabelSelf(u16),
    #[error("duplicate vertex identifier {0:?}")]
    DuplicateVertex(String),
    #[error("mask must consist of 0/1 characters, found {0:?}")]
    BadMask(String),
    #[error("mask width {found} conflicts with earlier width {expected}")]
    InconsistentMaskWidth { expected: u16, found: u16 },
    #[error("leaf {0:?} has no mask but earlier leaves do")]
    MissingMask(String),
    #[error("mask wider than 65535 bits")]
    MaskTooWide,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Colon,
    Word(String),
    Num(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::LBracket => "[".into(),
            Tok::RBracket => "]".into(),
            Tok::Semi => ";".into(),
            Tok::Colon => ":".into(),
            Tok::Word(w) => w.clone(),
            Tok::Num(n) => n.clone(),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(input: &str) -> Result<(Vec<Spanned>, (u32, u32)), ParseError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = input.chars().peekable();
    while let Some(&ch) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match ch {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    bump(&mut chars);
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' | ')' | '[' | ']' | ';' | ':' => {
                let tok = match bump(&mut chars) {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ';' => Tok::Semi,
                    _ => Tok::Colon,
                };
                out.push(Spanned { tok, line: tl, col: tc });
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Num(s), line: tl, col: tc });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Word(s), line: tl, col: tc });
            }
            c => {
                return Err(ParseError { line: tl, col: tc, kind: ParseErrorKind::UnexpectedChar(c) })
            }
        }
    }
    Ok((out, (line, col)))
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (u32, u32),
    seen: HashSet<String>,
    mask_width: Option<u16>,
    first_unmasked: Option<(u32, u32, String)>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn err_at(&self, line: u32, col: u32, kind: ParseErrorKind) -> ParseError {
        ParseError { line, col, kind }
    }

    fn eof_err(&self, expected: &'static str) -> ParseError {
        ParseError { line: self.end.0, col: self.end.1, kind: ParseErrorKind::UnexpectedEof(expected) }
    }

    fn next(&mut self, expected: &'static str) -> PResult<Spanned> {
        let t = self.toks.get(self.pos).ok_or_else(|| self.eof_err(expected))?;
        let t = Spanned { tok: t.tok.clone(), line: t.line, col: t.col };
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> PResult<()> {
        let t = self.toks.get(self.pos).ok_or_else(|| self.eof_err(expected))?;
        if t.tok == want {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err_at(
                t.line,
                t.col,
                ParseErrorKind::UnexpectedToken { expected, found: t.tok.describe() },
            ))
        }
    }

    fn peek_is(&self, want: &Tok) -> bool {
        self.toks.get(self.pos).map(|t| &t.tok == want).unwrap_or(false)
    }

    fn nat_label(&mut self) -> PResult<u16> {
        let t = self.toks.get(self.pos).ok_or_else(|| self.eof_err("a label"))?;
        let (line, col) = (t.line, t.col);
        match &t.tok {
            Tok::Num(raw) => {
                self.pos += 1;
                let v: u64 = raw.parse().unwrap_or(u64::MAX);
                if v < 1 || v > MAX_LABEL as u64 {
                    return Err(self.err_at(line, col, ParseErrorKind::LabelOutOfRange(v)));
                }
                Ok(v as u16)
            }
            other => Err(self.err_at(
                line,
                col,
                ParseErrorKind::UnexpectedToken { expected: "a label", found: other.describe() },
            )),
        }
    }

    /// Parses a complete leaf after its `(` has been consumed and the `v`
    /// keyword recognized.
    fn leaf_tail(&mut self) -> PResult<KExpr> {
        let t = self.next("a vertex identifier")?;
        let (line, col) = (t.line, t.col);
        let vertex = match &t.tok {
            Tok::Word(w) => w.clone(),
            other => {
                let found = other.describe();
                return Err(self.err_at(
                    line,
                    col,
                    ParseErrorKind::UnexpectedToken { expected: "a vertex identifier", found },
                ));
            }
        };
        if !self.seen.insert(vertex.clone()) {
            return Err(self.err_at(line, col, ParseErrorKind::DuplicateVertex(vertex)));
        }
        let label = self.nat_label()?;
        let mask = if self.peek_is(&Tok::Colon) {
            self.pos += 1;
            let t = self.next("a mask bit string")?;
            let (mline, mcol) = (t.line, t.col);
            let raw = match &t.tok {
                Tok::Num(raw) => raw.clone(),
                other => {
                    let found = other.describe();
                    return Err(self.err_at(
                        mline,
                        mcol,
                        ParseErrorKind::UnexpectedToken { expected: "a mask bit string", found },
                    ));
                }
            };
            if raw.len() > super::MAX_MASK_WIDTH as usize {
                return Err(self.err_at(mline, mcol, ParseErrorKind::MaskTooWide));
            }
            let mask = Mask::from_bit_str(&raw)
                .ok_or_else(|| self.err_at(mline, mcol, ParseErrorKind::BadMask(raw.clone())))?;
            match self.mask_width {
                Some(w) if w != mask.width() => {
                    return Err(self.err_at(
                        mline,
                        mcol,
                        ParseErrorKind::InconsistentMaskWidth { expected: w, found: mask.width() },
                    ))
                }
                None => self.mask_width = Some(mask.width()),
                _ => {}
            }
            Some(mask)
        } else {
            None
        };
        self.expect(Tok::RParen, ")")?;
        if mask.is_none() && self.first_unmasked.is_none() {
            self.first_unmasked = Some((line, col, vertex.clone()));
        }
        Ok(KExpr::Create { vertex, label, mask })
    }

    fn ops(&mut self) -> PResult<Vec<DecoratorOp>> {
        self.expect(Tok::LBracket, "[")?;
        let mut ops = Vec::new();
        if self.peek_is(&Tok::RBracket) {
            self.pos += 1;
            return Ok(ops);
        }
        loop {
            let t = self.next("an op (j or r)")?;
            let (line, col) = (t.line, t.col);
            let tag = match &t.tok {
                Tok::Word(w) if w == "j" || w == "r" => w.clone(),
                other => {
                    let found = other.describe();
                    return Err(self.err_at(
                        line,
                        col,
                        ParseErrorKind::UnexpectedToken { expected: "an op (j or r)", found },
                    ));
                }
            };
            let i = self.nat_label()?;
            let j = self.nat_label()?;
            if i == j {
                let kind = if tag == "j" {
                    ParseErrorKind::JoinSelf(i)
                } else {
                    ParseErrorKind::RelabelSelf(i)
                };
                return Err(self.err_at(line, col, kind));
            }
            ops.push(if tag == "j" { DecoratorOp::Join(i, j) } else { DecoratorOp::Relabel(i, j) });
            let t = self.next("; or ]")?;
            match t.tok {
                Tok::Semi => continue,
                Tok::RBracket => break,
                ref other => {
                    let (line, col, found) = (t.line, t.col, other.describe());
                    return Err(self.err_at(
                        line,
                        col,
                        ParseErrorKind::UnexpectedToken { expected: "; or ]", found },
                    ));
                }
            }
        }
        Ok(ops)
    }

    fn expr(&mut self) -> PResult<KExpr> {
        // Open union nodes awaiting children, innermost last.
        struct Open {
            left: Option<KExpr>,
        }
        let mut frames: Vec<Open> = Vec::new();
        loop {
            self.expect(Tok::LParen, "(")?;
            let t = self.next("v or u")?;
            let (line, col) = (t.line, t.col);
            let mut done: KExpr = match &t.tok {
                Tok::Word(w) if w == "v" => self.leaf_tail()?,
                Tok::Word(w) if w == "u" => {
                    frames.push(Open { left: None });
                    continue;
                }
                other => {
                    let found = other.describe();
                    return Err(self.err_at(
                        line,
                        col,
                        ParseErrorKind::UnexpectedToken { expected: "v or u", found },
                    ));
                }
            };
            loop {
                match frames.last_mut() {
                    None => return Ok(done),
                    Some(f) if f.left.is_none() => {
                        f.left = Some(done);
                        break;
                    }
                    Some(f) => {
                        let left = f.left.take().unwrap();
                        let ops = self.ops()?;
                        self.expect(Tok::RParen, ")")?;
                        frames.pop();
                        done = KExpr::union(left, done, ops);
                    }
                }
            }
        }
    }
}

/// Parses one k-expression; the whole input must be consumed (aside from
/// whitespace and comments).
pub fn parse(input: &str) -> Result<KExpr, ParseError> {
    let (toks, end) = lex(input)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end,
        seen: HashSet::new(),
        mask_width: None,
        first_unmasked: None,
    };
    let expr = p.expr()?;
    if let Some(t) = p.toks.get(p.pos) {
        return Err(ParseError {
            line: t.line,
            col: t.col,
            kind: ParseErrorKind::UnexpectedToken {
                expected: "end of input",
                found: t.tok.describe(),
            },
        });
    }
    if let (Some(_), Some((line, col, name))) = (p.mask_width, p.first_unmasked) {
        return Err(ParseError { line, col, kind: ParseErrorKind::MissingMask(name) });
    }
    Ok(expr)
}
