use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinOp, CollOp, Expr, Literal};
use crate::model::{Model, ModelError};
use crate::value::{ObjId, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound identifier {0}")]
    Unbound(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Type(String),
    #[error("attribute {feature} of {object} is unset")]
    Unset { object: String, feature: String },
    #[error("->any() applied to an empty collection")]
    AnyOnEmpty,
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("call to unregistered operation {0}")]
    UnknownOperation(String),
}

/// Evaluation context. Unqualified identifiers resolve against, in order:
/// variable bindings, features of the implicit self object(s) (innermost
/// first), and class names (which denote their extent).
#[derive(Debug, Clone)]
pub struct Env<'a> {
    pub model: &'a Model,
    /// Pre-state snapshot read by `x@pre`; the live model when absent.
    pub pre_model: Option<&'a Model>,
    pub bindings: BTreeMap<String, Value>,
    pub self_object: Option<ObjId>,
}

impl<'a> Env<'a> {
    pub fn new(model: &'a Model) -> Self {
        Env { model, pre_model: None, bindings: BTreeMap::new(), self_object: None }
    }

    pub fn with_pre(mut self, pre: &'a Model) -> Self {
        self.pre_model = Some(pre);
        self
    }

    pub fn bind(mut self, name: &str, value: Value) -> Self {
        self.bindings.insert(name.to_string(), value);
        self
    }

    pub fn with_self(mut self, o: ObjId) -> Self {
        self.self_object = Some(o);
        self
    }
}

pub fn evaluate(e: &Expr, env: &Env) -> Result<Value, EvalError> {
    Evaluator { env, stack: Vec::new() }.eval(e)
}

pub fn evaluate_boolean(e: &Expr, env: &Env) -> Result<bool, EvalError> {
    let v = evaluate(e, env)?;
    v.as_bool().ok_or_else(|| EvalError::Type(format!("expected a boolean from {e}, got {}", v.kind_name())))
}

enum Frame {
    Bind(String, Value),
    SelfObj(ObjId),
}

struct Evaluator<'e, 'a> {
    env: &'e Env<'a>,
    stack: Vec<Frame>,
}

fn type_error(what: impl Into<String>) -> EvalError {
    EvalError::Type(what.into())
}

impl Evaluator<'_, '_> {
    fn model(&self, at_pre: bool) -> &Model {
        match (at_pre, self.env.pre_model) {
            (true, Some(pre)) => pre,
            _ => self.env.model,
        }
    }

    fn selves(&self) -> impl Iterator<Item = ObjId> + '_ {
        let inner = self.stack.iter().rev().filter_map(|f| match f {
            Frame::SelfObj(o) => Some(*o),
            Frame::Bind(..) => None,
        });
        inner.chain(self.env.self_object)
    }

    fn head(&self, name: &str, at_pre: bool) -> Result<Value, EvalError> {
        let bound = self.stack.iter().rev().find_map(|f| match f {
            Frame::Bind(n, v) if n == name => Some(v),
            _ => None,
        });
        if let Some(v) = bound.or_else(|| self.env.bindings.get(name)) {
            return Ok(v.clone());
        }
        let model = self.model(at_pre);
        for o in self.selves() {
            let class = model.class_of(o).or_else(|| self.env.pre_model.and_then(|p| p.class_of(o)));
            let Some(class) = class else { continue };
            if model.metamodel().lookup_feature(class, name).is_some() {
                return self.read(model, o, name);
            }
        }
        if model.metamodel().has_class(name) {
            return Ok(Value::Set(model.extent(name)?.into_iter().map(Value::Obj).collect()));
        }
        Err(EvalError::Unbound(name.to_string()))
    }

    /// Feature read; an object absent from `model` has no feature values.
    fn read(&self, model: &Model, o: ObjId, feature: &str) -> Result<Value, EvalError> {
        if !model.contains(o) {
            return Ok(Value::empty_set());
        }
        model.read_feature(o, feature)?.ok_or_else(|| EvalError::Unset {
            object: model.label(o).unwrap_or_default().to_string(),
            feature: feature.to_string(),
        })
    }

    fn navigate(&self, v: Value, feature: &str) -> Result<Value, EvalError> {
        match v {
            Value::Obj(o) => self.read(self.env.model, o, feature),
            Value::Set(items) | Value::Seq(items) if items.is_empty() => Ok(Value::Set(items)),
            Value::Set(items) => Ok(Value::set_from(self.flat_map(items, feature)?)),
            Value::Seq(items) => Ok(Value::Seq(self.flat_map(items, feature)?)),
            other => Err(type_error(format!("cannot navigate .{feature} from a {}", other.kind_name()))),
        }
    }

    fn flat_map(&self, items: Vec<Value>, feature: &str) -> Result<Vec<Value>, EvalError> {
        let mut out = Vec::new();
        for item in items {
            match self.navigate(item, feature)? {
                Value::Set(inner) | Value::Seq(inner) => out.extend(inner),
                v => out.push(v),
            }
        }
        Ok(out)
    }

    fn boolean(&mut self, e: &Expr) -> Result<bool, EvalError> {
        let v = self.eval(e)?;
        v.as_bool().ok_or_else(|| type_error(format!("expected a boolean from {e}, got {}", v.kind_name())))
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, EvalError> {
        match e {
            Expr::Lit(l) => Ok(match l {
                Literal::Str(s) => Value::Str(s.clone()),
                Literal::Int(i) => Value::Int(*i),
                Literal::Real(r) => Value::Real(*r),
                Literal::Bool(b) => Value::Bool(*b),
            }),
            Expr::Ident { path, at_pre } => {
                let mut v = self.head(&path[0], *at_pre)?;
                for seg in &path[1..] {
                    v = self.navigate(v, seg)?;
                }
                Ok(v)
            }
            Expr::Nav { source, feature } => {
                let v = self.eval(source)?;
                self.navigate(v, feature)
            }
            Expr::Index { class, key } => {
                let k = self.eval(key)?;
                Ok(self.env.model.key_lookup(class, &k)?)
            }
            Expr::SetLit(items) => Ok(Value::set_from(self.eval_all(items)?)),
            Expr::SeqLit(items) => Ok(Value::Seq(self.eval_all(items)?)),
            Expr::Call { name, .. } => Err(EvalError::UnknownOperation(name.clone())),
            Expr::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs),
            Expr::Collection { op, source, var, body } => {
                let src = self.eval(source)?;
                self.collection(*op, src, var.as_deref(), body.as_deref())
            }
        }
    }

    fn eval_all(&mut self, items: &[Expr]) -> Result<Vec<Value>, EvalError> {
        items.iter().map(|i| self.eval(i)).collect()
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr) -> Result<Value, EvalError> {
        match op {
            BinOp::Implies => return Ok(Value::Bool(!self.boolean(lhs)? || self.boolean(rhs)?)),
            BinOp::Or => return Ok(Value::Bool(self.boolean(lhs)? || self.boolean(rhs)?)),
            BinOp::And => return Ok(Value::Bool(self.boolean(lhs)? && self.boolean(rhs)?)),
            _ => {}
        }
        let a = self.eval(lhs)?;
        let b = self.eval(rhs)?;
        let mismatch = || {
            type_error(format!("operator {} does not apply to {} and {}", op.symbol(), a.kind_name(), b.kind_name()))
        };
        let coll = |v: &Value| v.as_collection().map(<[Value]>::to_vec);
        Ok(match op {
            BinOp::Eq => Value::Bool(a == b),
            BinOp::Neq => Value::Bool(a != b),
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
                use std::cmp::Ordering::*;
                let ord = a.compare(&b).ok_or_else(mismatch)?;
                Value::Bool(match op {
                    BinOp::Lt => ord == Less,
                    BinOp::Gt => ord == Greater,
                    BinOp::Le => ord != Greater,
                    _ => ord != Less,
                })
            }
            BinOp::In | BinOp::NotIn => {
                let items = b.as_collection().ok_or_else(mismatch)?;
                Value::Bool(items.contains(&a) == (op == BinOp::In))
            }
            BinOp::Subset => {
                let (xs, ys) = (coll(&a).ok_or_else(mismatch)?, coll(&b).ok_or_else(mismatch)?);
                Value::Bool(xs.iter().all(|x| ys.contains(x)))
            }
            BinOp::Union => match (&a, &b) {
                (Value::Seq(x), Value::Seq(y)) => Value::Seq(x.iter().chain(y).cloned().collect()),
                _ => {
                    let (xs, ys) = (coll(&a).ok_or_else(mismatch)?, coll(&b).ok_or_else(mismatch)?);
                    Value::set_from(xs.into_iter().chain(ys))
                }
            },
            BinOp::Intersect => {
                let (xs, ys) = (coll(&a).ok_or_else(mismatch)?, coll(&b).ok_or_else(mismatch)?);
                let kept: Vec<Value> = xs.into_iter().filter(|x| ys.contains(x)).collect();
                if matches!(a, Value::Seq(_)) {
                    Value::Seq(kept)
                } else {
                    Value::Set(kept)
                }
            }
            BinOp::Concat => {
                let (xs, ys) = (coll(&a).ok_or_else(mismatch)?, coll(&b).ok_or_else(mismatch)?);
                Value::Seq(xs.into_iter().chain(ys).collect())
            }
            BinOp::Sub if a.is_collection() => {
                let (xs, ys) = (coll(&a).ok_or_else(mismatch)?, coll(&b).ok_or_else(mismatch)?);
                let kept: Vec<Value> = xs.into_iter().filter(|x| !ys.contains(x)).collect();
                if matches!(a, Value::Seq(_)) {
                    Value::Seq(kept)
                } else {
                    Value::Set(kept)
                }
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => arithmetic(op, &a, &b).ok_or_else(mismatch)??,
            BinOp::Implies | BinOp::Or | BinOp::And => unreachable!("handled above"),
        })
    }

    fn collection(
        &mut self,
        op: CollOp,
        src: Value,
        var: Option<&str>,
        body: Option<&Expr>,
    ) -> Result<Value, EvalError> {
        if op == CollOp::IsDeleted {
            let gone = |v: &Value| v.as_obj().is_some_and(|o| !self.env.model.contains(o));
            return match &src {
                Value::Obj(_) => Ok(Value::Bool(gone(&src))),
                Value::Set(items) | Value::Seq(items) => Ok(Value::Bool(items.iter().all(gone))),
                other => Err(type_error(format!("->isDeleted() applies to objects, not {}", other.kind_name()))),
            };
        }
        if op == CollOp::Size {
            if let Value::Str(s) = &src {
                return Ok(Value::Int(s.chars().count() as i64));
            }
        }
        let is_seq = matches!(src, Value::Seq(_));
        let items = match src {
            Value::Set(items) | Value::Seq(items) => items,
            other => {
                return Err(type_error(format!("->{}() applies to collections, not {}", op.name(), other.kind_name())))
            }
        };
        match op {
            CollOp::Size => return Ok(Value::Int(items.len() as i64)),
            CollOp::Any => return items.into_iter().next().ok_or(EvalError::AnyOnEmpty),
            _ => {}
        }
        let body = body.expect("parser guarantees a body");
        let mut kept = Vec::new();
        let mut hits = 0usize;
        for item in items {
            let frame = match (var, &item) {
                (Some(v), _) => Some(Frame::Bind(v.to_string(), item.clone())),
                (None, Value::Obj(o)) => Some(Frame::SelfObj(*o)),
                (None, _) => None,
            };
            let pushed = frame.is_some();
            if let Some(f) = frame {
                self.stack.push(f);
            }
            let result = self.boolean(body);
            if pushed {
                self.stack.pop();
            }
            let holds = result?;
            match op {
                CollOp::Exists if holds => return Ok(Value::Bool(true)),
                CollOp::ForAll if !holds => return Ok(Value::Bool(false)),
                CollOp::Exists1 if holds => {
                    hits += 1;
                    if hits > 1 {
                        return Ok(Value::Bool(false));
                    }
                }
                CollOp::Select if holds => kept.push(item),
                CollOp::Reject if !holds => kept.push(item),
                _ => {}
            }
        }
        Ok(match op {
            CollOp::Exists => Value::Bool(false),
            CollOp::ForAll => Value::Bool(true),
            CollOp::Exists1 => Value::Bool(hits == 1),
            _ if is_seq => Value::Seq(kept),
            _ => Value::Set(kept),
        })
    }
}

/// `None` when the operands are not numbers (or strings for `+`).
fn arithmetic(op: BinOp, a: &Value, b: &Value) -> Option<Result<Value, EvalError>> {
    match (a, b) {
        (Value::Str(x), Value::Str(y)) if op == BinOp::Add => Some(Ok(Value::Str(format!("{x}{y}")))),
        (Value::Int(x), Value::Int(y)) => Some(
            match op {
                BinOp::Add => x.checked_add(*y),
                BinOp::Sub => x.checked_sub(*y),
                BinOp::Mul => x.checked_mul(*y),
                _ if *y == 0 => return Some(Err(EvalError::DivisionByZero)),
                _ => x.checked_div(*y),
            }
            .map(Value::Int)
            .ok_or(EvalError::Overflow),
        ),
        (Value::Int(_) | Value::Real(_), Value::Int(_) | Value::Real(_)) => {
            let to_f = |v: &Value| match v {
                Value::Int(i) => *i as f64,
                Value::Real(r) => *r,
                _ => unreachable!(),
            };
            let (x, y) = (to_f(a), to_f(b));
            Some(match op {
                BinOp::Add => Ok(Value::Real(x + y)),
                BinOp::Sub => Ok(Value::Real(x - y)),
                BinOp::Mul => Ok(Value::Real(x * y)),
                _ if y == 0.0 => Err(EvalError::DivisionByZero),
                _ => Ok(Value::Real(x / y)),
            })
        }
        _ => None,
    }
}
