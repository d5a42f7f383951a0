//! Precedence-climbing parser for expressions.
//!
//! Levels, loosest first: `=>`/`implies` (right associative), `or`,
//! `&`/`and`, comparisons (non-associative), `+ - \/ ^`, `* / /\`, then
//! postfix `->op(...)`, indexing and navigation.

use super::{BinOp, CollOp, Expr, Literal};
use crate::lexer::{Cursor, SyntaxError, Tok};

/// Words that cannot start an identifier path.
pub const RESERVED: &[&str] =
    &["or", "and", "implies", "true", "false", "do", "then", "else", "for", "while", "if", "skip", "return"];

pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let e = ExprParser::new(&mut cur).parse()?;
    cur.expect_eof()?;
    Ok(e)
}

/// Parses one expression from a shared cursor, stopping at the first token
/// that cannot continue it.
pub struct ExprParser<'c> {
    cur: &'c mut Cursor,
}

impl<'c> ExprParser<'c> {
    pub fn new(cur: &'c mut Cursor) -> Self {
        ExprParser { cur }
    }

    pub fn parse(&mut self) -> Result<Expr, SyntaxError> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.cur.peek() {
            Tok::Ident(w) => match w.as_str() {
                "implies" => BinOp::Implies,
                "or" => BinOp::Or,
                "and" => BinOp::And,
                _ => return None,
            },
            Tok::Punct(p) => match *p {
                "=>" => BinOp::Implies,
                "&" => BinOp::And,
                "=" => BinOp::Eq,
                "/=" => BinOp::Neq,
                ">" => BinOp::Gt,
                "<" => BinOp::Lt,
                "<:" => BinOp::Subset,
                "<=" => BinOp::Le,
                ">=" => BinOp::Ge,
                ":" => BinOp::In,
                "/:" => BinOp::NotIn,
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                "\\/" => BinOp::Union,
                "/\\" => BinOp::Intersect,
                "^" => BinOp::Concat,
                _ => return None,
            },
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.postfix()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.cur.bump();
            let next_min = if op.is_right_assoc() { prec } else { prec + 1 };
            let rhs = self.binary(next_min)?;
            lhs = Expr::binary(op, lhs, rhs);
            if op.is_comparison() && self.peek_binop().is_some_and(BinOp::is_comparison) {
                return Err(self.cur.error("comparison operators do not chain; add parentheses"));
            }
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.primary()?;
        loop {
            if self.cur.eat_punct("->") {
                let name_tok = self.cur.token().clone();
                let name = self.cur.expect_ident()?;
                let op = CollOp::from_name(&name).ok_or_else(|| {
                    SyntaxError::new(name_tok.line, name_tok.col, format!("unknown `->` operator {name}"))
                })?;
                self.cur.expect_punct("(")?;
                let (mut var, mut body) = (None, None);
                if op.has_body() {
                    if let (Tok::Ident(v), Tok::Punct("|")) = (self.cur.peek(), self.cur.peek_at(1)) {
                        if !op.allows_variable() {
                            return Err(self.cur.error(format!("->{name} does not bind a variable")));
                        }
                        var = Some(v.clone());
                        self.cur.bump();
                        self.cur.bump();
                    }
                    body = Some(Box::new(self.parse()?));
                }
                self.cur.expect_punct(")")?;
                e = Expr::Collection { op, source: Box::new(e), var, body };
            } else if self.cur.is_punct(".") && matches!(self.cur.peek_at(1), Tok::Ident(_)) {
                self.cur.bump();
                let feature = self.cur.expect_ident()?;
                e = e.navigate(&feature);
            } else {
                return Ok(e);
            }
        }
    }

    fn list(&mut self, close: &str) -> Result<Vec<Expr>, SyntaxError> {
        let mut items = Vec::new();
        if self.cur.eat_punct(close) {
            return Ok(items);
        }
        loop {
            items.push(self.parse()?);
            if self.cur.eat_punct(close) {
                return Ok(items);
            }
            self.cur.expect_punct(",")?;
        }
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        match self.cur.peek().clone() {
            Tok::Punct("(") => {
                self.cur.bump();
                let e = self.parse()?;
                self.cur.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("{") => {
                self.cur.bump();
                Ok(Expr::SetLit(self.list("}")?))
            }
            Tok::Punct("-") => match self.cur.peek_at(1).clone() {
                Tok::Int(i) => {
                    self.cur.bump();
                    self.cur.bump();
                    Ok(Expr::Lit(Literal::Int(-i)))
                }
                Tok::Real(r) => {
                    self.cur.bump();
                    self.cur.bump();
                    Ok(Expr::Lit(Literal::Real(-r)))
                }
                _ => Err(self.cur.unexpected("expression")),
            },
            Tok::Str(s) => {
                self.cur.bump();
                Ok(Expr::Lit(Literal::Str(s)))
            }
            Tok::Int(i) => {
                self.cur.bump();
                Ok(Expr::Lit(Literal::Int(i)))
            }
            Tok::Real(r) => {
                self.cur.bump();
                Ok(Expr::Lit(Literal::Real(r)))
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.cur.bump();
                Ok(Expr::Lit(Literal::Bool(w == "true")))
            }
            Tok::Ident(w) if w == "Sequence" && matches!(self.cur.peek_at(1), Tok::Punct("{")) => {
                self.cur.bump();
                self.cur.bump();
                Ok(Expr::SeqLit(self.list("}")?))
            }
            Tok::Ident(w) if RESERVED.contains(&w.as_str()) => Err(self.cur.unexpected("expression")),
            Tok::Ident(_) => self.path(),
            _ => Err(self.cur.unexpected("expression")),
        }
    }

    fn path(&mut self) -> Result<Expr, SyntaxError> {
        let mut path = vec![self.cur.expect_ident()?];
        let mut at_pre = false;
        loop {
            if path.len() == 1 && !at_pre && self.cur.is_punct("@pre") {
                self.cur.bump();
                at_pre = true;
            } else if self.cur.is_punct(".") && matches!(self.cur.peek_at(1), Tok::Ident(_)) {
                self.cur.bump();
                path.push(self.cur.expect_ident()?);
            } else {
                break;
            }
        }
        if self.cur.is_punct("(") {
            if at_pre {
                return Err(self.cur.error("`@pre` cannot be applied to a call"));
            }
            self.cur.bump();
            let args = self.list(")")?;
            return Ok(Expr::Call { name: path.join("."), args });
        }
        if self.cur.is_punct("[") {
            if at_pre || path.len() > 1 {
                return Err(self.cur.error("indexing applies to a plain class name"));
            }
            self.cur.bump();
            let key = self.parse()?;
            if self.cur.is_punct(",") {
                return Err(self.cur.error("an index takes a single key expression"));
            }
            self.cur.expect_punct("]")?;
            return Ok(Expr::Index { class: path.remove(0), key: Box::new(key) });
        }
        Ok(Expr::Ident { path, at_pre })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn index_expression() {
        assert_eq!(
            p("RealFigure[f.name]"),
            Expr::Index { class: "RealFigure".into(), key: Box::new(Expr::ident("f.name")) }
        );
    }

    #[test]
    fn select_without_variable() {
        assert_eq!(
            p("FigureDescriptor->select(actualFigure : fg.figures1)"),
            Expr::Collection {
                op: CollOp::Select,
                source: Box::new(Expr::ident("FigureDescriptor")),
                var: None,
                body: Some(Box::new(Expr::binary(BinOp::In, Expr::ident("actualFigure"), Expr::ident("fg.figures1")))),
            }
        );
    }

    #[test]
    fn empty_set() {
        assert_eq!(p("{}"), Expr::SetLit(vec![]));
        assert_eq!(p("Sequence{1, 2}"), Expr::SeqLit(vec![Expr::Lit(Literal::Int(1)), Expr::Lit(Literal::Int(2))]));
    }

    #[test]
    fn precedence_matches_parenthesized_forms() {
        let cases = [
            ("a => b & c", "a => (b & c)"),
            ("a => b => c", "a => (b => c)"),
            ("a or b & c", "a or (b & c)"),
            ("a & b or c", "(a & b) or c"),
            ("a = b & c : d", "(a = b) & (c : d)"),
            ("a + b * c", "a + (b * c)"),
            ("a - b - c", "(a - b) - c"),
            ("a \\/ b /\\ c", "a \\/ (b /\\ c)"),
            ("a ^ b \\/ c", "(a ^ b) \\/ c"),
            ("x.y->size() + 1 > 2", "((x.y->size()) + 1) > 2"),
            ("a implies b and c", "a => (b & c)"),
        ];
        for (plain, bracketed) in cases {
            assert_eq!(p(plain), p(bracketed), "{plain}");
        }
        assert_eq!(
            p("a => b & c"),
            Expr::binary(
                BinOp::Implies,
                Expr::ident("a"),
                Expr::binary(BinOp::And, Expr::ident("b"), Expr::ident("c"))
            )
        );
    }

    #[test]
    fn postfix_forms() {
        assert_eq!(
            p("RealFigure[name].children"),
            Expr::Nav {
                source: Box::new(Expr::Index { class: "RealFigure".into(), key: Box::new(Expr::ident("name")) }),
                feature: "children".into()
            }
        );
        assert_eq!(
            p("Figure@pre.referencingElements"),
            Expr::Ident { path: vec!["Figure".into(), "referencingElements".into()], at_pre: true }
        );
        assert!(matches!(p("c.cleanModel()"), Expr::Call { name, args } if name == "c.cleanModel" && args.is_empty()));
        assert!(matches!(p("-3"), Expr::Lit(Literal::Int(-3))));
        assert!(matches!(p("E->exists(x | x.k = 1)"), Expr::Collection { var: Some(v), .. } if v == "x"));
    }

    #[test]
    fn errors_have_positions() {
        let e = parse_expr("a->frobnicate()").unwrap_err();
        assert_eq!((e.line, e.col), (1, 4));
        assert!(e.message.contains("unknown `->` operator"));
        assert!(parse_expr("a = b = c").is_err());
        assert!(parse_expr("a->select(x | x)").is_err());
        assert!(parse_expr("a.b@pre").is_err());
        assert!(parse_expr("E[1, 2]").is_err());
        assert!(parse_expr("do").is_err());
        assert!(parse_expr("(a").is_err());
        assert!(parse_expr("").is_err());
    }
}
