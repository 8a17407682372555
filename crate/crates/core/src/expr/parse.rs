//! Text grammar for expressions, shared by the CLI and proof serialization.
//!
//! ```text
//! expr     := product ( "/" product )*
//! product  := factor ( "*" factor )*
//! factor   := "1" | term | sum | "(" expr ")"
//! sum      := "sum_" "{" name ( ":" name )? "}" factor
//! term     := "P" "(" names ( "|" cond )? ")"
//! cond     := "do" "(" names ")" ( "," names )? | names
//! names    := name ( "," name )*
//! ```

use crate::error::{Error, Result};
use crate::graph::NodeSet;

use super::Expr;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Pipe,
    Comma,
    Star,
    Slash,
    Colon,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Lexer> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, co) = (line, col);
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
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '(' | ')' | '{' | '}' | '|' | ',' | '*' | '/' | ':' => {
                bump(&mut chars);
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '|' => Tok::Pipe,
                    ',' => Tok::Comma,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    _ => Tok::Colon,
                };
                toks.push((t, l, co));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(name), l, co));
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        digits.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Int(digits), l, co));
            }
            other => {
                return Err(Error::ExprParse {
                    line: l,
                    col: co,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(Lexer { toks, pos: 0 })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|&(_, l, c)| (l, c + 1))
                    .unwrap_or((1, 1))
            })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::ExprParse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(format!("expected {what}")))
            }
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn names(&mut self) -> Result<NodeSet> {
        let mut set = NodeSet::new();
        set.insert(self.ident("a variable name")?);
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            set.insert(self.ident("a variable name")?);
        }
        Ok(set)
    }
}

fn parse_term(lx: &mut Lexer) -> Result<Expr> {
    // The leading `P` identifier has already been consumed.
    lx.expect(Tok::LParen, "`(` after P")?;
    let outcome = lx.names()?;
    let mut do_set = NodeSet::new();
    let mut given = NodeSet::new();
    if lx.peek() == Some(&Tok::Pipe) {
        lx.pos += 1;
        let is_do = matches!(lx.peek(), Some(Tok::Ident(s)) if s == "do");
        if is_do {
            lx.pos += 1;
            lx.expect(Tok::LParen, "`(` after do")?;
            do_set = lx.names()?;
            lx.expect(Tok::RParen, "`)` closing do(...)")?;
            if lx.peek() == Some(&Tok::Comma) {
                lx.pos += 1;
                given = lx.names()?;
            }
        } else {
            given = lx.names()?;
        }
    }
    lx.expect(Tok::RParen, "`)` closing P(...)")?;
    Ok(Expr::Term {
        outcome,
        do_set,
        given,
    })
}

fn parse_sum(lx: &mut Lexer) -> Result<Expr> {
    // The leading `sum_` identifier has already been consumed.
    lx.expect(Tok::LBrace, "`{` after sum_")?;
    let var = lx.ident("a bound variable name")?;
    let range = if lx.peek() == Some(&Tok::Colon) {
        lx.pos += 1;
        lx.ident("a range column name")?
    } else {
        var.clone()
    };
    lx.expect(Tok::RBrace, "`}` closing the sum binder")?;
    let body = parse_factor(lx)?;
    Ok(Expr::Sum {
        var,
        range,
        body: Box::new(body),
    })
}

fn parse_factor(lx: &mut Lexer) -> Result<Expr> {
    match lx.peek().cloned() {
        Some(Tok::Ident(s)) if s == "P" => {
            lx.pos += 1;
            parse_term(lx)
        }
        Some(Tok::Ident(s)) if s == "sum_" || s == "sum" => {
            lx.pos += 1;
            parse_sum(lx)
        }
        Some(Tok::Int(d)) if d == "1" => {
            lx.pos += 1;
            Ok(Expr::one())
        }
        Some(Tok::LParen) => {
            lx.pos += 1;
            let e = parse_expr_inner(lx)?;
            lx.expect(Tok::RParen, "`)`")?;
            Ok(e)
        }
        _ => Err(lx.err("expected `P(`, `sum_{`, `1` or `(`")),
    }
}

fn parse_product(lx: &mut Lexer) -> Result<Expr> {
    let mut factors = vec![parse_factor(lx)?];
    while lx.peek() == Some(&Tok::Star) {
        lx.pos += 1;
        factors.push(parse_factor(lx)?);
    }
    Ok(if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Product(factors)
    })
}

fn parse_expr_inner(lx: &mut Lexer) -> Result<Expr> {
    let mut e = parse_product(lx)?;
    while lx.peek() == Some(&Tok::Slash) {
        lx.pos += 1;
        let den = parse_product(lx)?;
        e = Expr::quotient(e, den);
    }
    Ok(e)
}

/// Parses the expression text grammar.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut lx = lex(text)?;
    let e = parse_expr_inner(&mut lx)?;
    if lx.peek().is_some() {
        return Err(lx.err("trailing input after expression"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;

    #[test]
    fn parses_terms() {
        for text in ["P(Y)", "P(Y|X)", "P(Y|do(X))", "P(Y|do(X),Z)", "P(Y,Z|do(W,X),A,B)"] {
            let e = parse_expr(text).unwrap();
            assert_eq!(e.to_string(), text, "round trip of {text}");
        }
    }

    #[test]
    fn parses_sum_product_quotient() {
        let text = "sum_{Z} (P(Y|X,Z) * P(Z))";
        let e = parse_expr(text).unwrap();
        assert_eq!(e.to_string(), text);

        let q = parse_expr("(P(Y,Z|X)) / (P(Z|X))").unwrap();
        assert!(matches!(q, Expr::Quotient(..)));

        let ranged = parse_expr("sum_{_0:Z} (P(Y|X,_0) * P(_0))").unwrap();
        match &ranged {
            Expr::Sum { var, range, .. } => {
                assert_eq!(var, "_0");
                assert_eq!(range, "Z");
            }
            other => panic!("expected sum, got {other:?}"),
        }
        assert_eq!(ranged.to_string(), "sum_{_0:Z} (P(Y|X,_0) * P(_0))");
    }

    #[test]
    fn display_parse_round_trip_on_printed_forms() {
        let exprs = [
            Expr::sum(
                "Z",
                Expr::product(vec![
                    Expr::term(node_set(["Y"]), node_set(["X", "Z"])),
                    Expr::term(node_set(["Z"]), node_set::<[&str; 0], &str>([])),
                ]),
            ),
            Expr::quotient(
                Expr::term(node_set(["Y", "Z"]), node_set(["X"])),
                Expr::term(node_set(["Z"]), node_set(["X"])),
            ),
            Expr::one(),
        ];
        for e in exprs {
            let text = e.to_string();
            let back = parse_expr(&text).unwrap();
            assert_eq!(back, e, "round trip of `{text}`");
        }
    }

    #[test]
    fn errors_carry_positions() {
        match parse_expr("sum_{Z} P(Y Q)") {
            Err(Error::ExprParse { line, col, .. }) => {
                assert_eq!(line, 1);
                assert!(col > 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
