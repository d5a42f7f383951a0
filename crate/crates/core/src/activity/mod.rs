//! Structured activities: the imperative target language of the constraint
//! compiler.
//!
//! ```text
//! stmt   ::= single [";" stmt]
//! single ::= "while" expr "do" single
//!          | "for" IDENT ":" expr "do" single
//!          | "if" expr "then" single ["else" basic]
//!          | IDENT ":" IDENT
//!          | basic
//! basic  ::= expr ":=" expr | "skip" | "return" expr | "(" stmt ")" | call
//! ```

mod interp;

pub use interp::{exec_stmt, ExecError, Interpreter, Operation, DEFAULT_BUDGET};

use crate::expr::{print_expr, CollOp, Expr, ExprParser};
use crate::lexer::{Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    /// Iterates `var` over a snapshot of `range`.
    For {
        var: String,
        range: Expr,
        body: Box<Stmt>,
    },
    If {
        cond: Expr,
        then: Box<Stmt>,
        otherwise: Box<Stmt>,
    },
    Seq(Box<Stmt>, Box<Stmt>),
    Create {
        var: String,
        class: String,
    },
    Assign {
        lhs: Expr,
        rhs: Expr,
    },
    Skip,
    Return(Expr),
    /// An operation call, or `x->isDeleted()` to delete objects.
    Call(Expr),
}

impl Stmt {
    /// Right-nested sequence of `items`; `Skip` when empty.
    pub fn seq(items: impl IntoIterator<Item = Stmt>) -> Stmt {
        let mut items: Vec<Stmt> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else { return Stmt::Skip };
        while let Some(s) = items.pop() {
            acc = Stmt::Seq(Box::new(s), Box::new(acc));
        }
        acc
    }

    pub fn if_then(cond: Expr, then: Stmt, otherwise: Stmt) -> Stmt {
        Stmt::If { cond, then: Box::new(then), otherwise: Box::new(otherwise) }
    }

    pub fn for_each(var: &str, range: Expr, body: Stmt) -> Stmt {
        Stmt::For { var: var.to_string(), range, body: Box::new(body) }
    }

    pub fn fail(message: &str) -> Stmt {
        Stmt::Call(Expr::Call { name: "fail".into(), args: vec![Expr::str(message)] })
    }

    fn is_basic(&self) -> bool {
        matches!(self, Stmt::Assign { .. } | Stmt::Skip | Stmt::Return(_) | Stmt::Call(_))
    }
}

impl std::fmt::Display for Stmt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&print_stmt(self))
    }
}

pub fn parse_stmt(text: &str) -> Result<Stmt, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let s = StmtParser { cur: &mut cur }.stmt()?;
    cur.expect_eof()?;
    Ok(s)
}

struct StmtParser<'c> {
    cur: &'c mut Cursor,
}

impl StmtParser<'_> {
    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        ExprParser::new(self.cur).parse()
    }

    fn stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let first = self.single()?;
        if self.cur.eat_punct(";") {
            Ok(Stmt::Seq(Box::new(first), Box::new(self.stmt()?)))
        } else {
            Ok(first)
        }
    }

    fn single(&mut self) -> Result<Stmt, SyntaxError> {
        if self.cur.eat_keyword("while") {
            let cond = self.expr()?;
            self.cur.expect_keyword("do")?;
            return Ok(Stmt::While { cond, body: Box::new(self.single()?) });
        }
        if self.cur.eat_keyword("for") {
            let var = self.cur.expect_ident()?;
            self.cur.expect_punct(":")?;
            let range = self.expr()?;
            self.cur.expect_keyword("do")?;
            return Ok(Stmt::For { var, range, body: Box::new(self.single()?) });
        }
        if self.cur.eat_keyword("if") {
            let cond = self.expr()?;
            self.cur.expect_keyword("then")?;
            let then = self.single()?;
            let otherwise = if self.cur.eat_keyword("else") { self.basic()? } else { Stmt::Skip };
            return Ok(Stmt::if_then(cond, then, otherwise));
        }
        if let (Tok::Ident(var), Tok::Punct(":"), Tok::Ident(class)) =
            (self.cur.peek(), self.cur.peek_at(1), self.cur.peek_at(2))
        {
            let ends = matches!(self.cur.peek_at(3), Tok::Punct(";" | ")") | Tok::Eof)
                || matches!(self.cur.peek_at(3), Tok::Ident(w) if w == "else");
            if ends {
                let s = Stmt::Create { var: var.clone(), class: class.clone() };
                for _ in 0..3 {
                    self.cur.bump();
                }
                return Ok(s);
            }
        }
        self.basic()
    }

    fn basic(&mut self) -> Result<Stmt, SyntaxError> {
        if self.cur.eat_keyword("skip") {
            return Ok(Stmt::Skip);
        }
        if self.cur.eat_keyword("return") {
            return Ok(Stmt::Return(self.expr()?));
        }
        if self.cur.eat_punct("(") {
            let s = self.stmt()?;
            self.cur.expect_punct(")")?;
            return Ok(s);
        }
        let start = self.cur.token().clone();
        let lhs = self.expr()?;
        if self.cur.eat_punct(":=") {
            let assignable = match &lhs {
                Expr::Ident { path, at_pre } => !at_pre || path.len() > 1,
                Expr::Nav { .. } => true,
                _ => false,
            };
            if !assignable {
                return Err(SyntaxError::new(start.line, start.col, format!("cannot assign to {lhs}")));
            }
            return Ok(Stmt::Assign { lhs, rhs: self.expr()? });
        }
        match lhs {
            Expr::Call { .. } | Expr::Collection { op: CollOp::IsDeleted, .. } => Ok(Stmt::Call(lhs)),
            _ => Err(SyntaxError::new(start.line, start.col, format!("expected a statement, found expression {lhs}"))),
        }
    }
}

/// Renders a statement over several lines with two-space indentation. The
/// output reparses to the same tree.
pub fn print_stmt(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(s, Level::Stmt, 0, &mut out);
    out
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Basic,
    Single,
    Stmt,
}

fn indent(depth: usize, out: &mut String) {
    out.push('\n');
    out.push_str(&"  ".repeat(depth));
}

fn write_stmt(s: &Stmt, level: Level, depth: usize, out: &mut String) {
    let needs = match s {
        Stmt::Seq(..) => Level::Stmt,
        s if s.is_basic() => Level::Basic,
        _ => Level::Single,
    };
    if needs > level {
        out.push('(');
        write_stmt(s, Level::Stmt, depth, out);
        out.push(')');
        return;
    }
    match s {
        Stmt::Seq(a, b) => {
            write_stmt(a, Level::Single, depth, out);
            out.push_str(" ;");
            indent(depth, out);
            write_stmt(b, Level::Stmt, depth, out);
        }
        Stmt::While { cond, body } => {
            out.push_str(&format!("while {} do", print_expr(cond)));
            indent(depth + 1, out);
            write_stmt(body, Level::Single, depth + 1, out);
        }
        Stmt::For { var, range, body } => {
            out.push_str(&format!("for {var} : {} do", print_expr(range)));
            indent(depth + 1, out);
            write_stmt(body, Level::Single, depth + 1, out);
        }
        Stmt::If { cond, then, otherwise } => {
            out.push_str(&format!("if {} then", print_expr(cond)));
            indent(depth + 1, out);
            write_stmt(then, Level::Single, depth + 1, out);
            indent(depth, out);
            out.push_str("else ");
            write_stmt(otherwise, Level::Basic, depth + 1, out);
        }
        Stmt::Create { var, class } => out.push_str(&format!("{var} : {class}")),
        Stmt::Assign { lhs, rhs } => out.push_str(&format!("{} := {}", print_expr(lhs), print_expr(rhs))),
        Stmt::Skip => out.push_str("skip"),
        Stmt::Return(e) => out.push_str(&format!("return {}", print_expr(e))),
        Stmt::Call(e) => out.push_str(&print_expr(e)),
    }
}
