//! Class models: the source and target languages of a transformation.
//!
//! A metamodel is a flat list of classes with single inheritance. Each class
//! owns attributes (primitive-valued, at most one marked as the identifying
//! key) and roles (association ends with upper bound one or many). Lookups
//! walk the superclass chain, so a feature declared on a supertype is visible
//! on every subtype.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::lexer::{Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    String,
    Integer,
    Real,
    Boolean,
}

impl ValueKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "string" => ValueKind::String,
            "integer" => ValueKind::Integer,
            "real" => ValueKind::Real,
            "boolean" => ValueKind::Boolean,
            _ => return None,
        })
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::String => "string",
            ValueKind::Integer => "integer",
            ValueKind::Real => "real",
            ValueKind::Boolean => "boolean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    One,
    Many,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub kind: ValueKind,
    pub is_key: bool,
}

/// An association end. Many-ends hold an insertion-ordered, duplicate-free
/// sequence of targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleDef {
    pub name: String,
    pub target: String,
    pub bound: Bound,
}

impl RoleDef {
    pub fn is_many(&self) -> bool {
        self.bound == Bound::Many
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub is_abstract: bool,
    /// Declared supertypes. Only the first is used for lookups; `validate`
    /// reports classes declaring more than one.
    pub superclasses: Vec<String>,
    pub attributes: Vec<AttributeDef>,
    pub roles: Vec<RoleDef>,
}

impl ClassDef {
    pub fn superclass(&self) -> Option<&str> {
        self.superclasses.first().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature<'a> {
    Attribute(&'a AttributeDef),
    Role(&'a RoleDef),
}

impl<'a> Feature<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            Feature::Attribute(a) => &a.name,
            Feature::Role(r) => &r.name,
        }
    }
}

/// A feature together with the class that declares it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedFeature<'a> {
    pub owner: &'a str,
    pub feature: Feature<'a>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetamodelError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("duplicate class {0}")]
    DuplicateClass(String),
    #[error("unknown superclass {0}")]
    UnknownSuperclass(String),
    #[error("unknown class {target} referenced by role {class}.{role}")]
    UnknownRoleTarget { class: String, role: String, target: String },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("class {class} has no feature {feature}")]
    UnknownFeature { class: String, feature: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metamodel {
    classes: Vec<ClassDef>,
    index: HashMap<String, usize>,
}

impl Metamodel {
    /// Builds a metamodel, resolving every superclass and role target.
    pub fn new(classes: Vec<ClassDef>) -> Result<Self, MetamodelError> {
        let mut index = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            if index.insert(c.name.clone(), i).is_some() {
                return Err(MetamodelError::DuplicateClass(c.name.clone()));
            }
        }
        for c in &classes {
            if let Some(s) = c.superclasses.iter().find(|s| !index.contains_key(*s)) {
                return Err(MetamodelError::UnknownSuperclass(s.clone()));
            }
            if let Some(r) = c.roles.iter().find(|r| !index.contains_key(&r.target)) {
                return Err(MetamodelError::UnknownRoleTarget {
                    class: c.name.clone(),
                    role: r.name.clone(),
                    target: r.target.clone(),
                });
            }
        }
        Ok(Metamodel { classes, index })
    }

    pub fn classes(&self) -> &[ClassDef] {
        &self.classes
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.index.get(name).map(|&i| &self.classes[i])
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    fn require(&self, name: &str) -> Result<&ClassDef, MetamodelError> {
        self.class(name).ok_or_else(|| MetamodelError::UnknownClass(name.to_string()))
    }

    /// `name` followed by its supertypes, nearest first. Stops on a cycle.
    pub fn ancestors<'a>(&'a self, name: &'a str) -> Vec<&'a str> {
        let mut chain = Vec::new();
        let mut cur = Some(name);
        while let Some(c) = cur {
            if chain.contains(&c) {
                break;
            }
            chain.push(c);
            cur = self.class(c).and_then(ClassDef::superclass);
        }
        chain
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> Result<bool, MetamodelError> {
        self.require(sub)?;
        self.require(sup)?;
        Ok(self.conforms(sub, sup))
    }

    /// Like [`Metamodel::is_subtype`] but treats unknown names as unrelated.
    pub fn conforms(&self, sub: &str, sup: &str) -> bool {
        self.ancestors(sub).contains(&sup)
    }

    /// Classes that directly or transitively extend `name`, excluding itself.
    pub fn subclasses<'a>(&'a self, name: &str) -> Vec<&'a str> {
        self.classes
            .iter()
            .filter(|c| c.name != name && self.conforms(&c.name, name))
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn feature_of(&self, class: &str, feature: &str) -> Result<ResolvedFeature<'_>, MetamodelError> {
        self.require(class)?;
        self.lookup_feature(class, feature)
            .ok_or_else(|| MetamodelError::UnknownFeature { class: class.to_string(), feature: feature.to_string() })
    }

    pub fn lookup_feature(&self, class: &str, feature: &str) -> Option<ResolvedFeature<'_>> {
        for c in self.ancestors(class) {
            let def = self.class(c)?;
            if let Some(a) = def.attributes.iter().find(|a| a.name == feature) {
                return Some(ResolvedFeature { owner: &def.name, feature: Feature::Attribute(a) });
            }
            if let Some(r) = def.roles.iter().find(|r| r.name == feature) {
                return Some(ResolvedFeature { owner: &def.name, feature: Feature::Role(r) });
            }
        }
        None
    }

    /// All features visible on `class`: inherited ones first, then own, each
    /// in declaration order.
    pub fn all_features(&self, class: &str) -> Vec<ResolvedFeature<'_>> {
        let mut chain = self.ancestors(class);
        chain.reverse();
        let mut out = Vec::new();
        for c in chain {
            if let Some(def) = self.class(c) {
                out.extend(
                    def.attributes.iter().map(|a| ResolvedFeature { owner: &def.name, feature: Feature::Attribute(a) }),
                );
                out.extend(def.roles.iter().map(|r| ResolvedFeature { owner: &def.name, feature: Feature::Role(r) }));
            }
        }
        out
    }

    /// The key attribute visible on `class` and the class that declares it.
    pub fn key_attribute(&self, class: &str) -> Option<(&str, &AttributeDef)> {
        for c in self.ancestors(class) {
            let def = self.class(c)?;
            if let Some(a) = def.attributes.iter().find(|a| a.is_key) {
                return Some((&def.name, a));
            }
        }
        None
    }

    /// Roles anywhere in the metamodel whose target is related to `class` by
    /// subtyping in either direction, as `(declaring class, role)`.
    pub fn roles_targeting(&self, class: &str) -> Vec<(&str, &RoleDef)> {
        let mut out = Vec::new();
        for c in &self.classes {
            for r in &c.roles {
                if self.conforms(class, &r.target) || self.conforms(&r.target, class) {
                    out.push((c.name.as_str(), r));
                }
            }
        }
        out
    }
}

/// Reports every well-formedness rule the metamodel breaks, one message each.
/// An empty result means the metamodel is valid.
pub fn validate(mm: &Metamodel) -> Vec<String> {
    let mut violations = Vec::new();
    let mut has_sub: HashSet<&str> = HashSet::new();
    for c in mm.classes() {
        if c.superclasses.len() > 1 {
            violations.push(format!(
                "class {} has multiple superclasses ({}); only single inheritance is allowed",
                c.name,
                c.superclasses.join(", ")
            ));
        }
        has_sub.extend(c.superclasses.iter().map(String::as_str));
    }
    for c in mm.classes() {
        if has_sub.contains(c.name.as_str()) && !c.is_abstract {
            violations.push(format!("non-leaf class {} must be abstract", c.name));
        }
    }
    for c in mm.classes() {
        // Cycle: walking the chain revisits a class before reaching a root.
        let chain = mm.ancestors(&c.name);
        if let Some(last) = chain.last() {
            if mm.class(last).and_then(ClassDef::superclass).is_some_and(|s| chain.contains(&s)) {
                violations.push(format!("class {} has an inheritance cycle", c.name));
                continue;
            }
        }
        let mut seen = HashSet::new();
        let mut keys = 0;
        for f in mm.all_features(&c.name) {
            if !seen.insert(f.feature.name()) && f.owner == c.name {
                violations.push(format!("class {} declares feature {} more than once", c.name, f.feature.name()));
            }
            if let Feature::Attribute(a) = f.feature {
                if a.is_key {
                    keys += 1;
                    if f.owner == c.name && !matches!(a.kind, ValueKind::String | ValueKind::Integer) {
                        violations.push(format!(
                            "key attribute {}.{} must be string or integer, not {}",
                            c.name, a.name, a.kind
                        ));
                    }
                }
            }
        }
        if keys > 1 {
            violations.push(format!("class {} has {keys} key attributes; at most one is allowed", c.name));
        }
    }
    violations
}

pub fn parse_metamodel(text: &str) -> Result<Metamodel, MetamodelError> {
    let mut cur = Cursor::new(text)?;
    let mut classes = Vec::new();
    while !cur.at_eof() {
        classes.push(parse_class(&mut cur)?);
    }
    Metamodel::new(classes)
}

fn parse_class(cur: &mut Cursor) -> Result<ClassDef, SyntaxError> {
    let is_abstract = cur.eat_keyword("abstract");
    cur.expect_keyword("class")?;
    let name = cur.expect_ident()?;
    let mut superclasses = Vec::new();
    if cur.eat_keyword("extends") {
        superclasses.push(cur.expect_ident()?);
        while cur.eat_punct(",") {
            superclasses.push(cur.expect_ident()?);
        }
    }
    cur.expect_punct("{")?;
    let mut attributes = Vec::new();
    let mut roles = Vec::new();
    while !cur.eat_punct("}") {
        if cur.eat_keyword("attr") {
            let name = cur.expect_ident()?;
            cur.expect_punct(":")?;
            let kind_tok = cur.token().clone();
            let kind_name = cur.expect_ident()?;
            let kind = ValueKind::parse(&kind_name).ok_or_else(|| {
                SyntaxError::new(kind_tok.line, kind_tok.col, format!("unknown attribute type {kind_name}"))
            })?;
            let is_key = cur.eat_keyword("key");
            cur.expect_punct(";")?;
            attributes.push(AttributeDef { name, kind, is_key });
        } else if cur.eat_keyword("ref") {
            let name = cur.expect_ident()?;
            cur.expect_punct(":")?;
            let target = cur.expect_ident()?;
            cur.expect_punct("[")?;
            let bound = match cur.bump() {
                Tok::Punct("*") => Bound::Many,
                Tok::Int(1) => Bound::One,
                _ => return Err(cur.error("expected `*` or `1` in multiplicity")),
            };
            cur.expect_punct("]")?;
            cur.expect_punct(";")?;
            roles.push(RoleDef { name, target, bound });
        } else {
            return Err(cur.unexpected("`attr`, `ref` or `}`"));
        }
    }
    Ok(ClassDef { name, is_abstract, superclasses, attributes, roles })
}

/// Renders a metamodel in the same text format `parse_metamodel` reads.
pub fn print_metamodel(mm: &Metamodel) -> String {
    let mut out = String::new();
    for c in mm.classes() {
        if c.is_abstract {
            out.push_str("abstract ");
        }
        let _ = write!(out, "class {}", c.name);
        if !c.superclasses.is_empty() {
            let _ = write!(out, " extends {}", c.superclasses.join(", "));
        }
        if c.attributes.is_empty() && c.roles.is_empty() {
            out.push_str(" {}\n");
            continue;
        }
        out.push_str(" {\n");
        for a in &c.attributes {
            let _ = writeln!(out, "  attr {} : {}{};", a.name, a.kind, if a.is_key { " key" } else { "" });
        }
        for r in &c.roles {
            let m = if r.is_many() { "*" } else { "1" };
            let _ = writeln!(out, "  ref {} : {} [{m}];", r.name, r.target);
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "
        abstract class Base { attr id : string key; ref peer : Base [1]; }
        class Leaf extends Base { attr weight : real; ref kids : Leaf [*]; }
        class Other {}
    ";

    #[test]
    fn single_class_with_key() {
        let mm = parse_metamodel("class Figure { attr name : string key; ref children : Figure [*]; }").unwrap();
        assert_eq!(mm.classes().len(), 1);
        let f = mm.feature_of("Figure", "name").unwrap();
        assert_eq!(
            f.feature,
            Feature::Attribute(&AttributeDef { name: "name".into(), kind: ValueKind::String, is_key: true })
        );
        let Feature::Role(r) = mm.feature_of("Figure", "children").unwrap().feature else { panic!() };
        assert!(r.is_many());
    }

    #[test]
    fn empty_input() {
        let mm = parse_metamodel("").unwrap();
        assert!(mm.is_empty());
        assert!(validate(&mm).is_empty());
    }

    #[test]
    fn dangling_references() {
        assert_eq!(parse_metamodel("class A extends B {}").unwrap_err().to_string(), "unknown superclass B");
        assert!(matches!(
            parse_metamodel("class A { ref x : Nope [1]; }"),
            Err(MetamodelError::UnknownRoleTarget { .. })
        ));
        assert!(matches!(parse_metamodel("class A {} class A {}"), Err(MetamodelError::DuplicateClass(_))));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = parse_metamodel("class A {\n  attr x : float;\n}").unwrap_err();
        let MetamodelError::Syntax(e) = err else { panic!("{err:?}") };
        assert_eq!(e.line, 2);
        assert!(parse_metamodel("class A { ref x : A [2]; }").is_err());
    }

    #[test]
    fn inherited_lookup_and_subtyping() {
        let mm = parse_metamodel(SMALL).unwrap();
        let f = mm.feature_of("Leaf", "peer").unwrap();
        assert_eq!(f.owner, "Base");
        assert!(mm.feature_of("Leaf", "bogus").is_err());
        assert!(mm.is_subtype("Leaf", "Base").unwrap());
        assert!(mm.is_subtype("Leaf", "Leaf").unwrap());
        assert!(!mm.is_subtype("Base", "Leaf").unwrap());
        assert!(mm.is_subtype("Leaf", "Nope").is_err());
        assert_eq!(mm.key_attribute("Leaf").map(|(o, a)| (o, a.name.as_str())), Some(("Base", "id")));
        assert_eq!(mm.subclasses("Base"), vec!["Leaf"]);
        assert!(validate(&mm).is_empty());
    }

    #[test]
    fn validation_rules() {
        let mm = parse_metamodel("class A {} class B extends A {}").unwrap();
        assert_eq!(validate(&mm), vec!["non-leaf class A must be abstract".to_string()]);

        let mm = parse_metamodel("abstract class A {} abstract class B {} class C extends A, B {}").unwrap();
        let v = validate(&mm);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("multiple superclasses"));

        let mm = parse_metamodel("class A { attr r : real key; }").unwrap();
        assert_eq!(validate(&mm).len(), 1);

        let mm =
            parse_metamodel("abstract class A { attr k : string key; } class B extends A { attr j : integer key; }")
                .unwrap();
        assert_eq!(validate(&mm).len(), 1);

        let mm =
            parse_metamodel("abstract class A { attr x : string; } class B extends A { attr x : integer; }").unwrap();
        assert_eq!(validate(&mm).len(), 1);

        let mm = parse_metamodel("abstract class A extends B {} abstract class B extends A {}").unwrap();
        assert_eq!(validate(&mm).len(), 2);
    }

    #[test]
    fn print_round_trip() {
        let mm = parse_metamodel(SMALL).unwrap();
        let again = parse_metamodel(&print_metamodel(&mm)).unwrap();
        assert_eq!(mm, again);
    }
}
