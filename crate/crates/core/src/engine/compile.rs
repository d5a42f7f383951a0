//! Translation of constraints into activities.
//!
//! A scoped constraint becomes
//!
//! ```text
//! for self : Scope do
//!   for v1 : range1 do ... if antecedent then <succedent> else skip
//! ```
//!
//! where the succedent is realized clause by clause:
//!
//! * `A & B` runs A then B; `A => B` runs B when A holds.
//! * `lhs = rhs` assigns when `lhs` is a feature, and is checked otherwise.
//! * `e : coll` inserts into `coll` when it is a many-valued feature.
//! * `E->exists1(v | v.key = k & P)` looks `v` up by key, creating it when
//!   missing, then realizes P.
//! * `E->exists(v | P)` and other `exists1` forms create a witness only when
//!   none exists.
//! * `x->isDeleted()` deletes.

use log::warn;

use super::{Constraint, EngineError, Phase, SELF};
use crate::activity::Stmt;
use crate::expr::{
    class_name, frames, read_frames, static_type, writable_target, BinOp, CollOp, Expr, FrameItem, Frames, StaticType,
    TypeCtx,
};
use crate::metamodel::{Feature, Metamodel};

/// The typing context inside the innermost quantifier loop.
pub(crate) fn constraint_ctx(c: &Constraint, mm: &Metamodel) -> TypeCtx {
    let mut ctx = TypeCtx::default();
    if let Some(s) = &c.scope {
        ctx = ctx.with_var(SELF, StaticType::object(s));
    }
    for (v, range) in &c.quantifiers {
        let t = static_type(range, mm, &ctx).map(|t| StaticType { many: false, ..t });
        ctx = ctx.with_var(v, t.unwrap_or(StaticType { class: None, many: false }));
    }
    ctx
}

pub fn compile_constraint(c: &Constraint, mm: &Metamodel) -> Result<Phase, EngineError> {
    let ctx = constraint_ctx(c, mm);
    let mut body = Realizer { c, mm }.realize(&c.succedent, &ctx)?;
    if let Some(a) = &c.antecedent {
        body = Stmt::if_then(a.clone(), body, Stmt::Skip);
    }
    for (v, range) in c.quantifiers.iter().rev() {
        body = Stmt::for_each(v, range.clone(), body);
    }
    if let Some(s) = &c.scope {
        body = Stmt::for_each(SELF, Expr::ident(s), body);
    }

    let mut fr = frames(&c.succedent, mm, &ctx);
    if let Some(a) = &c.antecedent {
        fr.merge(read_frames(a, mm, &ctx));
    }
    for (_, range) in &c.quantifiers {
        fr.merge(read_frames(range, mm, &ctx));
    }
    if let Some(s) = &c.scope {
        fr.reads.insert(FrameItem::extent(s));
    }
    Ok(Phase { constraint: c.clone(), activity: body, frames: fr })
}

struct Realizer<'a> {
    c: &'a Constraint,
    mm: &'a Metamodel,
}

impl Realizer<'_> {
    fn unsupported(&self, e: &Expr, reason: &str) -> EngineError {
        EngineError::Unsupported { constraint: self.c.name.clone(), subterm: e.to_string(), reason: reason.to_string() }
    }

    fn check(&self, e: &Expr) -> Stmt {
        Stmt::if_then(e.clone(), Stmt::Skip, Stmt::fail(&format!("{}: {e} does not hold", self.c.name)))
    }

    fn realize(&self, e: &Expr, ctx: &TypeCtx) -> Result<Stmt, EngineError> {
        match e {
            Expr::Binary { op: BinOp::And, lhs, rhs } => {
                Ok(Stmt::seq([self.realize(lhs, ctx)?, self.realize(rhs, ctx)?]))
            }
            Expr::Binary { op: BinOp::Implies, lhs, rhs } => {
                Ok(Stmt::if_then((**lhs).clone(), self.realize(rhs, ctx)?, Stmt::Skip))
            }
            Expr::Binary { op: BinOp::Eq, lhs, rhs } => match writable_target(lhs, self.mm, ctx) {
                Some(_) => Ok(Stmt::Assign { lhs: (**lhs).clone(), rhs: (**rhs).clone() }),
                None => Ok(self.check(e)),
            },
            Expr::Binary { op: BinOp::In, lhs, rhs } => match writable_target(rhs, self.mm, ctx) {
                Some((_, f)) if matches!(f.feature, Feature::Role(r) if r.is_many()) => Ok(Stmt::Assign {
                    lhs: (**rhs).clone(),
                    rhs: Expr::binary(BinOp::Union, (**rhs).clone(), Expr::SetLit(vec![(**lhs).clone()])),
                }),
                _ => Ok(self.check(e)),
            },
            Expr::Collection { op: op @ (CollOp::Exists | CollOp::Exists1), source, var, body: Some(body) } => {
                let Some(class) = class_name(source, self.mm, ctx) else {
                    return Ok(self.check(e));
                };
                let Some(v) = var else {
                    return Err(self.unsupported(e, "creation needs a named variable, as in E->exists(v | ...)"));
                };
                if self.mm.class(class).is_some_and(|d| d.is_abstract) {
                    return Err(self.unsupported(e, "cannot create instances of an abstract class"));
                }
                let inner = ctx.clone().with_var(v, StaticType::object(class));
                if *op == CollOp::Exists1 {
                    if let Some(stmt) = self.keyed(class, v, body, &inner)? {
                        return Ok(stmt);
                    }
                }
                let witness = Expr::Collection {
                    op: CollOp::Exists,
                    source: source.clone(),
                    var: Some(v.clone()),
                    body: Some(body.clone()),
                };
                let create =
                    Stmt::seq([Stmt::Create { var: v.clone(), class: class.to_string() }, self.realize(body, &inner)?]);
                Ok(Stmt::if_then(witness, Stmt::Skip, create))
            }
            Expr::Collection { op: CollOp::IsDeleted, .. } => Ok(Stmt::Call(e.clone())),
            _ => Err(self.unsupported(e, "no update realizes this form")),
        }
    }

    /// `E->exists1(v | v.key = k & rest)`: look up by key or create.
    fn keyed(&self, class: &str, v: &str, body: &Expr, ctx: &TypeCtx) -> Result<Option<Stmt>, EngineError> {
        let Some((_, key)) = self.mm.key_attribute(class) else { return Ok(None) };
        let conjuncts = body.conjuncts();
        let Expr::Binary { op: BinOp::Eq, lhs, rhs: k } = conjuncts[0] else { return Ok(None) };
        let is_key = matches!(&**lhs, Expr::Ident { path, at_pre: false } if path.len() == 2 && path[0] == v && path[1] == key.name);
        if !is_key || k.mentions(v) {
            return Ok(None);
        }
        let lookup = Expr::Collection {
            op: CollOp::Exists,
            source: Box::new(Expr::ident(class)),
            var: Some(v.to_string()),
            body: Some(Box::new(conjuncts[0].clone())),
        };
        let found = Stmt::Assign { lhs: Expr::ident(v), rhs: Expr::Index { class: class.to_string(), key: k.clone() } };
        let create = Stmt::seq([
            Stmt::Create { var: v.to_string(), class: class.to_string() },
            Stmt::Assign { lhs: (**lhs).clone(), rhs: (**k).clone() },
        ]);
        let mut steps = vec![Stmt::if_then(lookup, found, create)];
        for rest in &conjuncts[1..] {
            steps.push(self.realize(rest, ctx)?);
        }
        Ok(Some(Stmt::seq(steps)))
    }
}

/// Execution order of a list of phases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseOrder {
    /// Indices into the input list.
    pub order: Vec<usize>,
    /// Set when the dependencies were cyclic and declaration order was used.
    pub cyclic: bool,
}

/// Stable topological order: a phase that writes something another reads
/// runs first; otherwise declaration order is kept.
pub fn order_phases(frames: &[&Frames]) -> PhaseOrder {
    let n = frames.len();
    let edges: Vec<Vec<bool>> =
        (0..n).map(|p| (0..n).map(|q| p != q && frames[p].feeds(frames[q])).collect()).collect();
    let mut indegree: Vec<usize> = (0..n).map(|q| (0..n).filter(|&p| edges[p][q]).count()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let Some(next) = (0..n).find(|&i| !done[i] && indegree[i] == 0) else {
            warn!("phase dependencies are cyclic; using declaration order");
            return PhaseOrder { order: (0..n).collect(), cyclic: true };
        };
        done[next] = true;
        order.push(next);
        for q in 0..n {
            if edges[next][q] {
                indegree[q] -= 1;
            }
        }
    }
    PhaseOrder { order, cyclic: false }
}
