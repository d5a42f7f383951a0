//! Use-case files.
//!
//! ```text
//! usecase ::= "usecase" IDENT "{" ("assume" expr ";")* ("constraint" IDENT ":" scope "::" expr ";")* "}"
//! scope   ::= IDENT (";" IDENT ":" expr)* | "$global"
//! ```

use super::{Constraint, EngineError, UseCase, SELF};
use crate::expr::{static_type, BinOp, Expr, ExprParser, StaticType, TypeCtx};
use crate::lexer::{Cursor, SyntaxError};
use crate::metamodel::Metamodel;

pub fn parse_usecases(mm: &Metamodel, text: &str) -> Result<Vec<UseCase>, EngineError> {
    let mut cur = Cursor::new(text)?;
    let mut out: Vec<UseCase> = Vec::new();
    while !cur.at_eof() {
        let uc = usecase(mm, &mut cur)?;
        if out.iter().any(|u| u.name == uc.name) {
            return Err(EngineError::Invalid(format!("duplicate use case {}", uc.name)));
        }
        out.push(uc);
    }
    Ok(out)
}

fn usecase(mm: &Metamodel, cur: &mut Cursor) -> Result<UseCase, EngineError> {
    cur.expect_keyword("usecase")?;
    let name = cur.expect_ident()?;
    cur.expect_punct("{")?;
    let mut assumptions = Vec::new();
    while cur.eat_keyword("assume") {
        let (line, col) = (cur.token().line, cur.token().col);
        let e = ExprParser::new(cur).parse()?;
        cur.expect_punct(";")?;
        let e = Qualifier { mm, scope: None }
            .rewrite(&e, &TypeCtx::default())
            .map_err(|m| SyntaxError::new(line, col, m))?;
        assumptions.push(e);
    }
    let mut constraints: Vec<Constraint> = Vec::new();
    while cur.eat_keyword("constraint") {
        let c = constraint(mm, cur)?;
        if constraints.iter().any(|k| k.name == c.name) {
            return Err(EngineError::Invalid(format!("use case {name}: duplicate constraint {}", c.name)));
        }
        constraints.push(c);
    }
    cur.expect_punct("}")?;
    Ok(UseCase { name, assumptions, constraints })
}

fn constraint(mm: &Metamodel, cur: &mut Cursor) -> Result<Constraint, EngineError> {
    let name = cur.expect_ident()?;
    cur.expect_punct(":")?;
    let scope_tok = cur.token().clone();
    let scope_name = cur.expect_ident()?;
    let at = |line: usize, col: usize, msg: String| EngineError::Syntax(SyntaxError::new(line, col, msg));
    let scope = if scope_name == "$global" {
        None
    } else {
        let class = mm
            .class(&scope_name)
            .ok_or_else(|| at(scope_tok.line, scope_tok.col, format!("{name}: unknown scope class {scope_name}")))?;
        Some(class.name.clone())
    };
    let q = Qualifier { mm, scope: scope.as_deref() };
    let mut ctx = TypeCtx::default();
    if let Some(s) = &scope {
        ctx = ctx.with_var(SELF, StaticType::object(s));
    }
    let mut quantifiers = Vec::new();
    while cur.eat_punct(";") {
        if scope.is_none() {
            return Err(cur.error(format!("{name}: a $global constraint takes no quantifiers")).into());
        }
        let var_tok = cur.token().clone();
        let var = cur.expect_ident()?;
        if var == SELF || quantifiers.iter().any(|(v, _)| *v == var) {
            return Err(at(var_tok.line, var_tok.col, format!("{name}: variable {var} is already bound")));
        }
        cur.expect_punct(":")?;
        let (line, col) = (cur.token().line, cur.token().col);
        let range = ExprParser::new(cur).parse()?;
        let range = q.rewrite(&range, &ctx).map_err(|m| at(line, col, format!("{name}: {m}")))?;
        let elem = static_type(&range, mm, &ctx)
            .filter(|t| t.class.is_some())
            .map(|t| StaticType { many: false, ..t })
            .ok_or_else(|| at(line, col, format!("{name}: range of {var} must be a collection of objects")))?;
        ctx = ctx.with_var(&var, elem);
        quantifiers.push((var, range));
    }
    cur.expect_punct("::")?;
    let (line, col) = (cur.token().line, cur.token().col);
    let body = ExprParser::new(cur).parse()?;
    cur.expect_punct(";")?;
    let body = q.rewrite(&body, &ctx).map_err(|m| at(line, col, format!("{name}: {m}")))?;
    let (antecedent, succedent) = match body {
        Expr::Binary { op: BinOp::Implies, lhs, rhs } => (Some(*lhs), *rhs),
        other => (None, other),
    };
    Ok(Constraint { name, scope, quantifiers, antecedent, succedent })
}

/// Rewrites unqualified scope features to `self.feature` and rejects
/// identifiers that resolve to nothing. Inside a body without a bound
/// variable, features of the iterated element take precedence.
struct Qualifier<'m> {
    mm: &'m Metamodel,
    scope: Option<&'m str>,
}

impl Qualifier<'_> {
    fn rewrite(&self, e: &Expr, ctx: &TypeCtx) -> Result<Expr, String> {
        Ok(match e {
            Expr::Ident { path, at_pre } => {
                let head = &path[0];
                let element_feature =
                    ctx.selves.iter().any(|c| crate::expr::resolve_feature(self.mm, c, head).is_some());
                if ctx.vars.contains_key(head) || element_feature {
                    e.clone()
                } else if let Some(f) = self.scope.and_then(|s| crate::expr::resolve_feature(self.mm, s, head)) {
                    if *at_pre {
                        return Err(format!("`@pre` cannot apply to the scope feature {}", f.feature.name()));
                    }
                    let mut qualified = vec![SELF.to_string()];
                    qualified.extend(path.iter().cloned());
                    Expr::Ident { path: qualified, at_pre: false }
                } else if self.mm.has_class(head) {
                    e.clone()
                } else {
                    return Err(format!("unbound identifier {head}"));
                }
            }
            Expr::Binary { op, lhs, rhs } => Expr::binary(*op, self.rewrite(lhs, ctx)?, self.rewrite(rhs, ctx)?),
            Expr::Collection { op, source, var, body } => {
                let source = self.rewrite(source, ctx)?;
                let body = match body {
                    Some(b) => {
                        let inner = ctx.enter(var.as_deref(), static_type(&source, self.mm, ctx));
                        Some(Box::new(self.rewrite(b, &inner)?))
                    }
                    None => None,
                };
                Expr::Collection { op: *op, source: Box::new(source), var: var.clone(), body }
            }
            Expr::SetLit(items) => Expr::SetLit(self.rewrite_all(items, ctx)?),
            Expr::SeqLit(items) => Expr::SeqLit(self.rewrite_all(items, ctx)?),
            Expr::Call { name, args } => Expr::Call { name: name.clone(), args: self.rewrite_all(args, ctx)? },
            Expr::Index { class, key } => {
                if !self.mm.has_class(class) {
                    return Err(format!("unknown class {class}"));
                }
                if self.mm.key_attribute(class).is_none() {
                    return Err(format!("class {class} has no key attribute"));
                }
                Expr::Index { class: class.clone(), key: Box::new(self.rewrite(key, ctx)?) }
            }
            Expr::Nav { source, feature } => {
                Expr::Nav { source: Box::new(self.rewrite(source, ctx)?), feature: feature.clone() }
            }
            Expr::Lit(_) => e.clone(),
        })
    }

    fn rewrite_all(&self, items: &[Expr], ctx: &TypeCtx) -> Result<Vec<Expr>, String> {
        items.iter().map(|i| self.rewrite(i, ctx)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::metamodel::parse_metamodel;

    fn mm() -> Metamodel {
        parse_metamodel(
            "class Figure { attr name : string key; ref children : Figure [*]; ref referencingElements : Node [*]; }
             class RealFigure { attr name : string key; ref children : RealFigure [*]; }
             class FigureDescriptor { ref actualFigure : RealFigure [1]; }
             class Gallery { ref figures : Figure [*]; ref figures1 : RealFigure [*]; ref descriptors : FigureDescriptor [*]; }
             class Node { ref figure : FigureDescriptor [1]; }",
        )
        .unwrap()
    }

    #[test]
    fn qualifies_scope_features() {
        let ucs = parse_usecases(
            &mm(),
            "usecase t {
               assume RealFigure = {};
               constraint C2 : Figure :: RealFigure[name].children = RealFigure[children.name];
               constraint C3 : Gallery ::
                 figures1 = RealFigure[figures.name] & descriptors = FigureDescriptor->select(actualFigure : figures1);
               constraint C4 : Figure; fd : FigureDescriptor; d : referencingElements ::
                 fd.actualFigure = RealFigure[name] => d.figure = fd;
             }",
        )
        .unwrap();
        let uc = &ucs[0];
        assert_eq!(uc.assumptions, vec![parse_expr("RealFigure = {}").unwrap()]);
        assert_eq!(
            uc.constraints[0].succedent,
            parse_expr("RealFigure[self.name].children = RealFigure[self.children.name]").unwrap()
        );
        assert_eq!(
            uc.constraints[1].succedent,
            parse_expr(
                "self.figures1 = RealFigure[self.figures.name] & self.descriptors = FigureDescriptor->select(actualFigure : self.figures1)"
            )
            .unwrap()
        );
        let c4 = &uc.constraints[2];
        assert_eq!(c4.quantifiers[1], ("d".to_string(), parse_expr("self.referencingElements").unwrap()));
        assert_eq!(c4.antecedent, Some(parse_expr("fd.actualFigure = RealFigure[self.name]").unwrap()));
        assert_eq!(c4.succedent, parse_expr("d.figure = fd").unwrap());
        assert_eq!(c4.scope.as_deref(), Some("Figure"));
    }

    #[test]
    fn global_and_empty() {
        assert!(parse_usecases(&mm(), "").unwrap().is_empty());
        let ucs = parse_usecases(&mm(), "usecase c { constraint k : $global :: Figure->isDeleted(); }").unwrap();
        assert_eq!(ucs[0].constraints[0].scope, None);
    }

    #[test]
    fn rejections() {
        for (src, want) in [
            ("usecase u { constraint C : Nowhere :: 1 = 1; }", "unknown scope class Nowhere"),
            ("usecase u { constraint C : Figure :: Nowhere[name] = 1; }", "unknown class Nowhere"),
            ("usecase u { constraint C : Figure :: x.name = name; }", "unbound identifier x"),
            ("usecase u { constraint C : Figure :: 1 = 1; constraint C : Figure :: 1 = 1; }", "duplicate constraint"),
            ("usecase u { constraint C : $global :: name = \"a\"; }", "unbound identifier name"),
            ("usecase u { constraint C : Figure; d : name :: 1 = 1; }", "collection of objects"),
            ("usecase u { constraint C : Figure :: name@pre = \"a\"; }", "@pre"),
            ("usecase u { constraint C : Figure :: 1 = 1 }", "expected `;`"),
        ] {
            let err = parse_usecases(&mm(), src).unwrap_err().to_string();
            assert!(err.contains(want), "{src}: {err}");
        }
    }
}
