//! The line-oriented model file format:
//!
//! ```text
//! f1 : Figure              object creation
//! f2 : f1.children         insert f2 into the many-valued role f1.children
//! f1.name = "f1"           attribute value, or single-valued role when the
//! fd1.actualFigure = rf1   right-hand side is a bare object label
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use super::{Model, ModelError};
use crate::lexer::{tokenize, Tok, Token};
use crate::metamodel::{Feature, Metamodel};
use crate::value::{format_real, quote, Value};

enum Fact {
    Insert { member: String, owner: String, role: String },
    Set { owner: String, feature: String, literal: Literal },
}

enum Literal {
    Value(Value),
    Label(String),
}

fn parse_line(tokens: &[Token]) -> Option<Result<Fact, String>> {
    use Tok::*;
    let t: Vec<&Tok> = tokens.iter().map(|t| &t.tok).filter(|t| **t != Eof).collect();
    let fact = match t.as_slice() {
        [Ident(_), Punct(":"), Ident(_)] => return None,
        [Ident(m), Punct(":"), Ident(o), Punct("."), Ident(r)] => {
            Fact::Insert { member: m.clone(), owner: o.clone(), role: r.clone() }
        }
        [Ident(o), Punct("."), Ident(f), Punct("="), rest @ ..] => {
            let literal = match rest {
                [Str(s)] => Literal::Value(Value::Str(s.clone())),
                [Int(i)] => Literal::Value(Value::Int(*i)),
                [Real(r)] => Literal::Value(Value::Real(*r)),
                [Punct("-"), Int(i)] => Literal::Value(Value::Int(-*i)),
                [Punct("-"), Real(r)] => Literal::Value(Value::Real(-*r)),
                [Ident(b)] if b == "true" => Literal::Value(Value::Bool(true)),
                [Ident(b)] if b == "false" => Literal::Value(Value::Bool(false)),
                [Ident(l)] => Literal::Label(l.clone()),
                _ => return Some(Err("expected a literal after `=`".to_string())),
            };
            Fact::Set { owner: o.clone(), feature: f.clone(), literal }
        }
        _ => return Some(Err("expected `x : Class`, `x : y.role` or `x.feature = value`".to_string())),
    };
    Some(Ok(fact))
}

/// Reads a model file. Objects may be referenced before the line declaring
/// them; facts are applied in file order once all objects exist.
pub fn parse_model(mm: Arc<Metamodel>, text: &str) -> Result<Model, ModelError> {
    let mut model = Model::new(mm);
    let mut facts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let tokens = tokenize(raw).map_err(|e| ModelError::at_line(line, e.message))?;
        match parse_line(&tokens) {
            None => {
                let (Tok::Ident(label), Tok::Ident(class)) = (&tokens[0].tok, &tokens[2].tok) else {
                    unreachable!("matched by parse_line")
                };
                model.create_labeled(class, label).map_err(|e| match e {
                    e @ ModelError::UnknownClass(_) => e,
                    e => ModelError::at_line(line, e),
                })?;
            }
            Some(Ok(fact)) => facts.push((line, fact)),
            Some(Err(msg)) => return Err(ModelError::at_line(line, msg)),
        }
    }
    for (line, fact) in facts {
        apply_fact(&mut model, fact).map_err(|e| match e {
            e @ (ModelError::UnknownClass(_) | ModelError::UnknownFeature { .. } | ModelError::TypeMismatch { .. }) => {
                e
            }
            e => ModelError::at_line(line, e),
        })?;
    }
    Ok(model)
}

fn apply_fact(model: &mut Model, fact: Fact) -> Result<(), ModelError> {
    let find = |model: &Model, l: &str| model.lookup_label(l).ok_or_else(|| ModelError::UnknownObject(l.to_string()));
    match fact {
        Fact::Insert { member, owner, role } => {
            let (m, o) = (find(model, &member)?, find(model, &owner)?);
            model.insert_link(o, &role, m)
        }
        Fact::Set { owner, feature, literal } => {
            let o = find(model, &owner)?;
            let class = model.class_of(o).unwrap_or_default().to_string();
            let is_role = match model.metamodel().lookup_feature(&class, &feature) {
                Some(f) => matches!(f.feature, Feature::Role(_)),
                None => return Err(ModelError::UnknownFeature { class, feature }),
            };
            match literal {
                Literal::Label(l) if is_role => {
                    let t = find(model, &l)?;
                    model.set_ref(o, &feature, Some(t))
                }
                Literal::Label(l) => Err(ModelError::TypeMismatch {
                    class,
                    feature,
                    expected: "literal value".into(),
                    found: format!("object label {l}"),
                }),
                Literal::Value(v) if is_role => Err(ModelError::TypeMismatch {
                    class,
                    feature,
                    expected: "object label".into(),
                    found: v.kind_name().into(),
                }),
                Literal::Value(v) => model.set_attr(o, &feature, v),
            }
        }
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Real(r) => format_real(*r),
        Value::Str(s) => quote(s),
        other => other.to_string(),
    }
}

/// Serializes a model: objects in creation order, each followed by its
/// attribute lines, single-valued role lines, then many-valued role lines.
pub fn write_model(model: &Model) -> String {
    let mm = model.metamodel();
    let mut out = String::new();
    for o in model.objects() {
        let label = model.label(o).unwrap_or_default();
        let class = model.class_of(o).unwrap_or_default();
        let _ = writeln!(out, "{label} : {class}");
        let features = mm.all_features(class);
        for f in &features {
            if let Feature::Attribute(a) = f.feature {
                if let Some(v) = model.attr(o, &a.name) {
                    let _ = writeln!(out, "{label}.{} = {}", a.name, literal(v));
                }
            }
        }
        for f in &features {
            if let Feature::Role(r) = f.feature {
                if let Some(t) = model.get_ref(o, &r.name).filter(|_| !r.is_many()) {
                    let _ = writeln!(out, "{label}.{} = {}", r.name, model.label(t).unwrap_or_default());
                }
            }
        }
        for f in &features {
            if let Feature::Role(r) = f.feature {
                for &t in model.links(o, &r.name) {
                    let _ = writeln!(out, "{} : {label}.{}", model.label(t).unwrap_or_default(), r.name);
                }
            }
        }
    }
    out
}
