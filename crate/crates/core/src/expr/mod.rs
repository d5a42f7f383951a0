//! The constraint expression language: a set-theoretic OCL subset.
//!
//! Binary logical and set operators are written infix (`&`, `or`, `=>`,
//! `\/`, `/\`, `^`); collection operations use the `->op(...)` postfix form.
//! Identifiers may be dotted navigation paths, and the head of a path may
//! carry `@pre` to read the pre-state of the model.

mod analysis;
mod eval;
mod parser;
mod printer;

pub(crate) use analysis::{class_name, resolve_feature, writable_target};
pub use analysis::{frames, free_vars, read_frames, static_type, FrameItem, Frames, StaticType, TypeCtx};
pub use eval::{evaluate, evaluate_boolean, Env, EvalError};
pub use parser::{parse_expr, ExprParser, RESERVED};
pub use printer::print_expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Implies,
    Or,
    And,
    Eq,
    Neq,
    Gt,
    Lt,
    Subset,
    Le,
    Ge,
    In,
    NotIn,
    Add,
    Sub,
    Mul,
    Div,
    Union,
    Intersect,
    Concat,
}

impl BinOp {
    pub const ALL: [BinOp; 19] = [
        BinOp::Implies,
        BinOp::Or,
        BinOp::And,
        BinOp::Eq,
        BinOp::Neq,
        BinOp::Gt,
        BinOp::Lt,
        BinOp::Subset,
        BinOp::Le,
        BinOp::Ge,
        BinOp::In,
        BinOp::NotIn,
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Union,
        BinOp::Intersect,
        BinOp::Concat,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Implies => "=>",
            BinOp::Or => "or",
            BinOp::And => "&",
            BinOp::Eq => "=",
            BinOp::Neq => "/=",
            BinOp::Gt => ">",
            BinOp::Lt => "<",
            BinOp::Subset => "<:",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::In => ":",
            BinOp::NotIn => "/:",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Union => "\\/",
            BinOp::Intersect => "/\\",
            BinOp::Concat => "^",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq
            | BinOp::Neq
            | BinOp::Gt
            | BinOp::Lt
            | BinOp::Subset
            | BinOp::Le
            | BinOp::Ge
            | BinOp::In
            | BinOp::NotIn => 4,
            BinOp::Add | BinOp::Sub | BinOp::Union | BinOp::Concat => 5,
            BinOp::Mul | BinOp::Div | BinOp::Intersect => 6,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        self == BinOp::Implies
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollOp {
    Any,
    Size,
    IsDeleted,
    Exists,
    Exists1,
    ForAll,
    Select,
    Reject,
}

impl CollOp {
    pub const ALL: [CollOp; 8] = [
        CollOp::Any,
        CollOp::Size,
        CollOp::IsDeleted,
        CollOp::Exists,
        CollOp::Exists1,
        CollOp::ForAll,
        CollOp::Select,
        CollOp::Reject,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollOp::Any => "any",
            CollOp::Size => "size",
            CollOp::IsDeleted => "isDeleted",
            CollOp::Exists => "exists",
            CollOp::Exists1 => "exists1",
            CollOp::ForAll => "forAll",
            CollOp::Select => "select",
            CollOp::Reject => "reject",
        }
    }

    pub fn from_name(s: &str) -> Option<CollOp> {
        CollOp::ALL.into_iter().find(|op| op.name() == s)
    }

    pub fn has_body(self) -> bool {
        !matches!(self, CollOp::Any | CollOp::Size | CollOp::IsDeleted)
    }

    pub fn allows_variable(self) -> bool {
        matches!(self, CollOp::Exists | CollOp::Exists1 | CollOp::ForAll)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Real(f64),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Collection {
        op: CollOp,
        source: Box<Expr>,
        var: Option<String>,
        body: Option<Box<Expr>>,
    },
    SetLit(Vec<Expr>),
    SeqLit(Vec<Expr>),
    /// `name(args)`; the name may be dotted.
    Call {
        name: String,
        args: Vec<Expr>,
    },
    /// `E[key]`: key-based instance lookup.
    Index {
        class: String,
        key: Box<Expr>,
    },
    /// Dotted path `a.b.c`; `at_pre` reads the head in the pre-state.
    Ident {
        path: Vec<String>,
        at_pre: bool,
    },
    /// Navigation from a non-identifier source, e.g. `E[k].children`.
    Nav {
        source: Box<Expr>,
        feature: String,
    },
    Lit(Literal),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn ident(path: &str) -> Expr {
        Expr::Ident { path: path.split('.').map(str::to_string).collect(), at_pre: false }
    }

    pub fn str(s: &str) -> Expr {
        Expr::Lit(Literal::Str(s.to_string()))
    }

    /// Appends a navigation step, folding into a dotted path when possible.
    pub fn navigate(self, feature: &str) -> Expr {
        match self {
            Expr::Ident { mut path, at_pre } => {
                path.push(feature.to_string());
                Expr::Ident { path, at_pre }
            }
            other => Expr::Nav { source: Box::new(other), feature: feature.to_string() },
        }
    }

    /// Splits a navigation expression into its source and last feature.
    pub fn split_last(&self) -> Option<(Expr, &str)> {
        match self {
            Expr::Ident { path, at_pre } if path.len() > 1 => {
                let (last, init) = path.split_last()?;
                Some((Expr::Ident { path: init.to_vec(), at_pre: *at_pre }, last))
            }
            Expr::Nav { source, feature } => Some(((**source).clone(), feature)),
            _ => None,
        }
    }

    /// Left-to-right conjuncts of a `&` chain.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::Binary { op: BinOp::And, lhs, rhs } => {
                let mut v = lhs.conjuncts();
                v.extend(rhs.conjuncts());
                v
            }
            e => vec![e],
        }
    }

    /// Visits this expression and every subexpression, outermost first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expr::Collection { source, body, .. } => {
                source.walk(f);
                if let Some(b) = body {
                    b.walk(f);
                }
            }
            Expr::SetLit(items) | Expr::SeqLit(items) | Expr::Call { args: items, .. } => {
                items.iter().for_each(|e| e.walk(f))
            }
            Expr::Index { key, .. } => key.walk(f),
            Expr::Nav { source, .. } => source.walk(f),
            Expr::Ident { .. } | Expr::Lit(_) => {}
        }
    }

    /// Whether `name` occurs as a path head that is not shadowed by an inner
    /// quantifier binding the same name.
    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Expr::Ident { path, .. } => path[0] == name,
            Expr::Binary { lhs, rhs, .. } => lhs.mentions(name) || rhs.mentions(name),
            Expr::Collection { source, var, body, .. } => {
                source.mentions(name)
                    || (var.as_deref() != Some(name) && body.as_ref().is_some_and(|b| b.mentions(name)))
            }
            Expr::SetLit(items) | Expr::SeqLit(items) | Expr::Call { args: items, .. } => {
                items.iter().any(|e| e.mentions(name))
            }
            Expr::Index { key, .. } => key.mentions(name),
            Expr::Nav { source, .. } => source.mentions(name),
            Expr::Lit(_) => false,
        }
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&print_expr(self))
    }
}
