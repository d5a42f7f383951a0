//! Static analysis: free variables, shallow typing, and read/write frames.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{BinOp, CollOp, Expr};
use crate::metamodel::{Feature, Metamodel, ResolvedFeature};

/// What is statically known about an expression's value. `class` is `None`
/// for data values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticType {
    pub class: Option<String>,
    pub many: bool,
}

impl StaticType {
    pub fn object(class: &str) -> Self {
        StaticType { class: Some(class.to_string()), many: false }
    }

    pub fn extent(class: &str) -> Self {
        StaticType { class: Some(class.to_string()), many: true }
    }

    fn data(many: bool) -> Self {
        StaticType { class: None, many }
    }
}

/// Typing context: bound variables and the implicit-self classes of the
/// enclosing bodies, innermost last.
#[derive(Debug, Clone, Default)]
pub struct TypeCtx {
    pub vars: BTreeMap<String, StaticType>,
    pub selves: Vec<String>,
}

impl TypeCtx {
    pub fn with_var(mut self, name: &str, t: StaticType) -> Self {
        self.vars.insert(name.to_string(), t);
        self
    }

    pub fn with_self(mut self, class: &str) -> Self {
        self.selves.push(class.to_string());
        self
    }

    /// Context for the body of `source->op(...)`.
    pub(crate) fn enter(&self, var: Option<&str>, source: Option<StaticType>) -> TypeCtx {
        let mut inner = self.clone();
        let element = source.map(|t| StaticType { many: false, ..t });
        match var {
            Some(v) => {
                match element {
                    Some(t) => inner.vars.insert(v.to_string(), t),
                    None => inner.vars.insert(v.to_string(), StaticType::data(false)),
                };
            }
            None => {
                if let Some(StaticType { class: Some(c), .. }) = element {
                    inner.selves.push(c);
                }
            }
        }
        inner
    }
}

/// Resolves `feature` on `class`, falling back to the first subclass that
/// declares it (navigation over a supertype-typed end may reach subtype
/// features).
pub(crate) fn resolve_feature<'m>(mm: &'m Metamodel, class: &str, feature: &str) -> Option<ResolvedFeature<'m>> {
    mm.lookup_feature(class, feature)
        .or_else(|| mm.subclasses(class).into_iter().find_map(|s| mm.lookup_feature(s, feature)))
}

fn feature_type(f: &ResolvedFeature, many_source: bool) -> StaticType {
    match f.feature {
        Feature::Attribute(_) => StaticType::data(many_source),
        Feature::Role(r) => StaticType { class: Some(r.target.clone()), many: many_source || r.is_many() },
    }
}

/// How an unqualified identifier resolves.
enum Head<'m> {
    Var(StaticType),
    SelfFeature(ResolvedFeature<'m>),
    Class(&'m str),
    Unknown,
}

fn resolve_head<'m>(mm: &'m Metamodel, ctx: &TypeCtx, name: &str) -> Head<'m> {
    if let Some(t) = ctx.vars.get(name) {
        return Head::Var(t.clone());
    }
    for s in ctx.selves.iter().rev() {
        if let Some(f) = resolve_feature(mm, s, name) {
            return Head::SelfFeature(f);
        }
    }
    match mm.class(name) {
        Some(c) => Head::Class(&c.name),
        None => Head::Unknown,
    }
}

pub fn static_type(e: &Expr, mm: &Metamodel, ctx: &TypeCtx) -> Option<StaticType> {
    match e {
        Expr::Ident { path, .. } => {
            let mut t = match resolve_head(mm, ctx, &path[0]) {
                Head::Var(t) => t,
                Head::SelfFeature(f) => feature_type(&f, false),
                Head::Class(c) => StaticType::extent(c),
                Head::Unknown => return None,
            };
            for seg in &path[1..] {
                t = navigate_type(mm, &t, seg)?;
            }
            Some(t)
        }
        Expr::Nav { source, feature } => navigate_type(mm, &static_type(source, mm, ctx)?, feature),
        Expr::Index { class, key } => {
            let many = matches!(**key, Expr::SetLit(_)) || static_type(key, mm, ctx).is_some_and(|t| t.many);
            Some(StaticType { class: Some(class.clone()), many })
        }
        Expr::Collection { op, source, .. } => match op {
            CollOp::Select | CollOp::Reject => static_type(source, mm, ctx),
            CollOp::Any => static_type(source, mm, ctx).map(|t| StaticType { many: false, ..t }),
            _ => Some(StaticType::data(false)),
        },
        Expr::SetLit(items) | Expr::SeqLit(items) => {
            let class = items.first().and_then(|i| static_type(i, mm, ctx)).and_then(|t| t.class);
            Some(StaticType { class, many: true })
        }
        Expr::Binary { op: BinOp::Union | BinOp::Intersect | BinOp::Sub | BinOp::Concat, lhs, rhs } => {
            let t = static_type(lhs, mm, ctx).or_else(|| static_type(rhs, mm, ctx))?;
            Some(t)
        }
        Expr::Binary { .. } | Expr::Lit(_) => Some(StaticType::data(false)),
        Expr::Call { .. } => None,
    }
}

fn navigate_type(mm: &Metamodel, t: &StaticType, feature: &str) -> Option<StaticType> {
    let f = resolve_feature(mm, t.class.as_deref()?, feature)?;
    Some(feature_type(&f, t.many))
}

/// Path heads not bound by an enclosing quantifier and not class names.
/// Heads inside a variable-free body that name a feature of the iterated
/// class refer to the element and are not free.
pub fn free_vars(e: &Expr, mm: &Metamodel) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(e, mm, &TypeCtx::default(), &mut out);
    out
}

fn collect_free(e: &Expr, mm: &Metamodel, ctx: &TypeCtx, out: &mut BTreeSet<String>) {
    match e {
        Expr::Ident { path, .. } => {
            if let Head::Unknown = resolve_head(mm, ctx, &path[0]) {
                out.insert(path[0].clone());
            }
        }
        Expr::Collection { source, var, body, .. } => {
            collect_free(source, mm, ctx, out);
            if let Some(b) = body {
                collect_free(b, mm, &ctx.enter(var.as_deref(), static_type(source, mm, ctx)), out);
            }
        }
        Expr::Binary { lhs, rhs, .. } => {
            collect_free(lhs, mm, ctx, out);
            collect_free(rhs, mm, ctx, out);
        }
        Expr::SetLit(items) | Expr::SeqLit(items) | Expr::Call { args: items, .. } => {
            items.iter().for_each(|i| collect_free(i, mm, ctx, out))
        }
        Expr::Index { key, .. } => collect_free(key, mm, ctx, out),
        Expr::Nav { source, .. } => collect_free(source, mm, ctx, out),
        Expr::Lit(_) => {}
    }
}

/// A unit of model state: a class extent or a feature, the latter named by
/// its declaring class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameItem {
    Extent(String),
    Feature(String, String),
}

impl FrameItem {
    pub fn feature(class: &str, feature: &str) -> Self {
        FrameItem::Feature(class.to_string(), feature.to_string())
    }

    pub fn extent(class: &str) -> Self {
        FrameItem::Extent(class.to_string())
    }
}

impl fmt::Display for FrameItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameItem::Extent(c) => f.write_str(c),
            FrameItem::Feature(c, n) => write!(f, "{c}.{n}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Frames {
    pub writes: BTreeSet<FrameItem>,
    pub reads: BTreeSet<FrameItem>,
}

impl Frames {
    pub fn merge(&mut self, other: Frames) {
        self.writes.extend(other.writes);
        self.reads.extend(other.reads);
    }

    /// Whether `self` writes something `other` reads.
    pub fn feeds(&self, other: &Frames) -> bool {
        self.writes.iter().any(|w| other.reads.contains(w))
    }
}

/// Frames of a constraint succedent: the left side of `=` in update
/// position, the target of a `:` insertion into a many-end, classes whose
/// instances `exists`/`exists1` may create, and everything `->isDeleted()`
/// removes are written; every other feature or extent mentioned is read.
pub fn frames(e: &Expr, mm: &Metamodel, ctx: &TypeCtx) -> Frames {
    let mut fr = Frames::default();
    FrameWalk { mm, fr: &mut fr }.update(e, ctx);
    fr
}

/// Frames of an expression evaluated purely for its value.
pub fn read_frames(e: &Expr, mm: &Metamodel, ctx: &TypeCtx) -> Frames {
    let mut fr = Frames::default();
    FrameWalk { mm, fr: &mut fr }.read(e, ctx);
    fr
}

/// The writable location denoted by `lhs`, if any: its source expression,
/// the declaring class and the feature.
pub(crate) fn writable_target<'m>(lhs: &Expr, mm: &'m Metamodel, ctx: &TypeCtx) -> Option<(Expr, ResolvedFeature<'m>)> {
    if let Expr::Ident { path, at_pre } = lhs {
        if path.len() == 1 {
            return match resolve_head(mm, ctx, &path[0]) {
                Head::SelfFeature(f) if !at_pre => Some((Expr::ident("self"), f)),
                _ => None,
            };
        }
    }
    let (src, feature) = lhs.split_last()?;
    let t = static_type(&src, mm, ctx)?;
    let f = resolve_feature(mm, t.class.as_deref()?, feature)?;
    Some((src, f))
}

/// If `e` is a plain class name, that class.
pub(crate) fn class_name<'m>(e: &Expr, mm: &'m Metamodel, ctx: &TypeCtx) -> Option<&'m str> {
    match e {
        Expr::Ident { path, at_pre: false } if path.len() == 1 => match resolve_head(mm, ctx, &path[0]) {
            Head::Class(c) => Some(c),
            _ => None,
        },
        _ => None,
    }
}

struct FrameWalk<'m, 'f> {
    mm: &'m Metamodel,
    fr: &'f mut Frames,
}

impl FrameWalk<'_, '_> {
    fn update(&mut self, e: &Expr, ctx: &TypeCtx) {
        match e {
            Expr::Binary { op: BinOp::And, lhs, rhs } => {
                self.update(lhs, ctx);
                self.update(rhs, ctx);
            }
            Expr::Binary { op: BinOp::Implies, lhs, rhs } => {
                self.read(lhs, ctx);
                self.update(rhs, ctx);
            }
            Expr::Binary { op: BinOp::Eq, lhs, rhs } => match writable_target(lhs, self.mm, ctx) {
                Some((src, f)) => {
                    self.fr.writes.insert(FrameItem::feature(f.owner, f.feature.name()));
                    self.read(&src, ctx);
                    self.read(rhs, ctx);
                }
                None => self.read(e, ctx),
            },
            Expr::Binary { op: BinOp::In, lhs, rhs } => match writable_target(rhs, self.mm, ctx) {
                Some((src, f)) if matches!(f.feature, Feature::Role(r) if r.is_many()) => {
                    self.fr.writes.insert(FrameItem::feature(f.owner, f.feature.name()));
                    self.read(&src, ctx);
                    self.read(lhs, ctx);
                }
                _ => self.read(e, ctx),
            },
            Expr::Collection { op: CollOp::Exists | CollOp::Exists1, source, var, body: Some(body) } => {
                match class_name(source, self.mm, ctx) {
                    Some(class) => {
                        self.fr.writes.insert(FrameItem::extent(class));
                        let inner = ctx.enter(var.as_deref(), Some(StaticType::extent(class)));
                        self.update(body, &inner);
                    }
                    None => self.read(e, ctx),
                }
            }
            Expr::Collection { op: CollOp::IsDeleted, source, .. } => {
                match static_type(source, self.mm, ctx).and_then(|t| t.class) {
                    Some(class) => {
                        self.fr.writes.insert(FrameItem::extent(&class));
                        for (owner, role) in self.mm.roles_targeting(&class) {
                            self.fr.writes.insert(FrameItem::feature(owner, &role.name));
                        }
                        // Deleting an object also drops its own links.
                        for f in self.mm.all_features(&class) {
                            if let Feature::Role(r) = f.feature {
                                self.fr.writes.insert(FrameItem::feature(f.owner, &r.name));
                            }
                        }
                        if class_name(source, self.mm, ctx).is_none() {
                            self.read(source, ctx);
                        }
                    }
                    None => self.read(e, ctx),
                }
            }
            _ => self.read(e, ctx),
        }
    }

    fn read(&mut self, e: &Expr, ctx: &TypeCtx) {
        match e {
            Expr::Ident { path, .. } => {
                let mut t = match resolve_head(self.mm, ctx, &path[0]) {
                    Head::Var(t) => Some(t),
                    Head::SelfFeature(f) => {
                        self.fr.reads.insert(FrameItem::feature(f.owner, f.feature.name()));
                        Some(feature_type(&f, false))
                    }
                    Head::Class(c) => {
                        self.fr.reads.insert(FrameItem::extent(c));
                        Some(StaticType::extent(c))
                    }
                    Head::Unknown => None,
                };
                for seg in &path[1..] {
                    t = t.and_then(|t| self.read_step(&t, seg));
                }
            }
            Expr::Nav { source, feature } => {
                self.read(source, ctx);
                if let Some(t) = static_type(source, self.mm, ctx) {
                    self.read_step(&t, feature);
                }
            }
            Expr::Index { class, key } => {
                self.fr.reads.insert(FrameItem::extent(class));
                if let Some((owner, attr)) = self.mm.key_attribute(class) {
                    self.fr.reads.insert(FrameItem::feature(owner, &attr.name));
                }
                self.read(key, ctx);
            }
            Expr::Collection { source, var, body, .. } => {
                self.read(source, ctx);
                if let Some(b) = body {
                    self.read(b, &ctx.enter(var.as_deref(), static_type(source, self.mm, ctx)));
                }
            }
            Expr::Binary { lhs, rhs, .. } => {
                self.read(lhs, ctx);
                self.read(rhs, ctx);
            }
            Expr::SetLit(items) | Expr::SeqLit(items) | Expr::Call { args: items, .. } => {
                items.iter().for_each(|i| self.read(i, ctx))
            }
            Expr::Lit(_) => {}
        }
    }

    fn read_step(&mut self, t: &StaticType, feature: &str) -> Option<StaticType> {
        let f = resolve_feature(self.mm, t.class.as_deref()?, feature)?;
        self.fr.reads.insert(FrameItem::feature(f.owner, f.feature.name()));
        Some(feature_type(&f, t.many))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::metamodel::parse_metamodel;

    fn mm() -> Metamodel {
        parse_metamodel(
            "class Figure { attr name : string key; ref children : Figure [*]; ref referencingElements : DiagramElement [*]; }
             abstract class Figure1 {}
             class RealFigure extends Figure1 { attr name : string key; ref children : RealFigure [*]; }
             class FigureDescriptor { ref actualFigure : RealFigure [1]; ref accessors : ChildAccess [*]; }
             class ChildAccess {}
             class FigureGallery { ref figures : Figure [*]; ref figures1 : RealFigure [*]; ref descriptors : FigureDescriptor [*]; }
             abstract class DiagramElement { ref figure : FigureDescriptor [1]; }
             class Node extends DiagramElement {}
             class DiagramLabel extends DiagramElement { ref accessor : ChildAccess [1]; }",
        )
        .unwrap()
    }

    fn items(v: &[&str]) -> BTreeSet<FrameItem> {
        v.iter()
            .map(|s| match s.split_once('.') {
                Some((c, f)) => FrameItem::feature(c, f),
                None => FrameItem::extent(s),
            })
            .collect()
    }

    #[test]
    fn free_variables() {
        let mm = mm();
        let c1 = parse_expr(
            "RealFigure->exists1(rf | rf.name = f.name & FigureDescriptor->exists1(fd | fd.actualFigure = rf))",
        )
        .unwrap();
        assert_eq!(free_vars(&c1, &mm), BTreeSet::from(["f".to_string()]));
        assert!(free_vars(&parse_expr("{}").unwrap(), &mm).is_empty());
        assert_eq!(
            free_vars(&parse_expr("rf.name = f.name").unwrap(), &mm),
            BTreeSet::from(["f".to_string(), "rf".to_string()])
        );
        let sel = parse_expr("FigureDescriptor->select(actualFigure : g)").unwrap();
        assert_eq!(free_vars(&sel, &mm), BTreeSet::from(["g".to_string()]));
    }

    #[test]
    fn c1_frames() {
        let mm = mm();
        let ctx = TypeCtx::default().with_self("Figure");
        let c1 = parse_expr(
            "RealFigure->exists1(rf | rf.name = name & FigureDescriptor->exists1(fd | fd.actualFigure = rf))",
        )
        .unwrap();
        let fr = frames(&c1, &mm, &ctx);
        assert_eq!(
            fr.writes,
            items(&["RealFigure", "RealFigure.name", "FigureDescriptor", "FigureDescriptor.actualFigure"])
        );
        assert_eq!(fr.reads, items(&["Figure.name"]));
    }

    #[test]
    fn c3_reads_what_it_writes() {
        let mm = mm();
        let ctx = TypeCtx::default().with_var("fg", StaticType::object("FigureGallery"));
        let c3 = parse_expr(
            "fg.figures1 = RealFigure[fg.figures.name] & fg.descriptors = FigureDescriptor->select(actualFigure : fg.figures1)",
        )
        .unwrap();
        let fr = frames(&c3, &mm, &ctx);
        assert_eq!(fr.writes, items(&["FigureGallery.figures1", "FigureGallery.descriptors"]));
        assert!(fr.reads.contains(&FrameItem::feature("FigureGallery", "figures1")));
        assert!(fr.reads.contains(&FrameItem::feature("FigureDescriptor", "actualFigure")));
        assert!(fr.reads.contains(&FrameItem::extent("RealFigure")));
    }

    #[test]
    fn trivial_and_subtype_features() {
        let mm = mm();
        let fr = frames(&parse_expr("1 = 1").unwrap(), &mm, &TypeCtx::default());
        assert_eq!(fr, Frames::default());
        let ctx = TypeCtx::default().with_var("d", StaticType::object("DiagramElement"));
        let fr = frames(&parse_expr("ChildAccess->exists(ca | d.accessor = ca)").unwrap(), &mm, &ctx);
        assert_eq!(fr.writes, items(&["ChildAccess", "DiagramLabel.accessor"]));
    }

    #[test]
    fn deletion_writes_incoming_roles() {
        let mm = mm();
        let fr = frames(&parse_expr("Figure->isDeleted()").unwrap(), &mm, &TypeCtx::default());
        assert!(fr.writes.contains(&FrameItem::extent("Figure")));
        assert!(fr.writes.contains(&FrameItem::feature("FigureGallery", "figures")));
        assert!(fr.writes.contains(&FrameItem::feature("Figure", "children")));
        assert!(fr.reads.is_empty());
    }

    #[test]
    fn static_types() {
        let mm = mm();
        let ctx = TypeCtx::default().with_self("FigureGallery");
        let t = static_type(&parse_expr("figures.children").unwrap(), &mm, &ctx).unwrap();
        assert_eq!(t, StaticType::extent("Figure"));
        let t = static_type(&parse_expr("RealFigure[\"a\"]").unwrap(), &mm, &ctx).unwrap();
        assert_eq!(t, StaticType::object("RealFigure"));
        let t = static_type(&parse_expr("RealFigure[figures.name]").unwrap(), &mm, &ctx).unwrap();
        assert_eq!(t, StaticType::extent("RealFigure"));
    }
}
