//! In-memory object graphs conforming to a [`Metamodel`].

mod iso;
mod text;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::lexer::SyntaxError;
use crate::metamodel::{Feature, Metamodel, ValueKind};
use crate::value::{ObjId, Value};

pub use iso::{isomorphic, Isomorphism};
pub use text::{parse_model, write_model};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("class {class} has no feature {feature}")]
    UnknownFeature { class: String, feature: String },
    #[error("cannot instantiate abstract class {0}")]
    AbstractClass(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("duplicate object label {0}")]
    DuplicateLabel(String),
    #[error("type mismatch on {class}.{feature}: expected {expected}, got {found}")]
    TypeMismatch { class: String, feature: String, expected: String, found: String },
    #[error("class {0} has no key attribute")]
    NoKeyAttribute(String),
    #[error("no {class} with key {key}")]
    KeyNotFound { class: String, key: String },
    #[error("key {key} of {class} is already used by {other}")]
    DuplicateKey { class: String, key: String, other: String },
}

impl ModelError {
    pub(crate) fn at_line(line: usize, err: impl std::fmt::Display) -> Self {
        ModelError::Syntax { line, message: err.to_string() }
    }
}

impl From<SyntaxError> for ModelError {
    fn from(e: SyntaxError) -> Self {
        ModelError::Syntax { line: e.line, message: e.message }
    }
}

/// One entry of the optional mutation log. Feature entries name the class
/// that declares the feature, not the runtime class of the object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mutation {
    Created(String),
    Deleted(String),
    Attribute { owner: String, feature: String },
    Link { owner: String, role: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum KeyValue {
    Str(String),
    Int(i64),
}

impl KeyValue {
    fn from_value(v: &Value) -> Option<KeyValue> {
        match v {
            Value::Str(s) => Some(KeyValue::Str(s.clone())),
            Value::Int(i) => Some(KeyValue::Int(*i)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Object {
    label: String,
    class: String,
    attrs: BTreeMap<String, Value>,
    refs: BTreeMap<String, ObjId>,
    links: BTreeMap<String, Vec<ObjId>>,
}

#[derive(Debug, Clone)]
pub struct Model {
    metamodel: Arc<Metamodel>,
    objects: Vec<Option<Object>>,
    labels: HashMap<String, ObjId>,
    /// class -> key value -> instance, for every class between an object's
    /// own class and the class declaring its key.
    key_index: HashMap<String, HashMap<KeyValue, ObjId>>,
    counters: HashMap<String, usize>,
    log: Option<Vec<Mutation>>,
}

fn initials(class: &str) -> String {
    let s: String = class.chars().filter(|c| c.is_ascii_uppercase()).collect();
    let s = if s.is_empty() { class.chars().take(1).collect() } else { s };
    s.to_ascii_lowercase()
}

impl Model {
    pub fn new(metamodel: Arc<Metamodel>) -> Self {
        Model {
            metamodel,
            objects: Vec::new(),
            labels: HashMap::new(),
            key_index: HashMap::new(),
            counters: HashMap::new(),
            log: None,
        }
    }

    pub fn metamodel(&self) -> &Metamodel {
        &self.metamodel
    }

    pub fn metamodel_arc(&self) -> &Arc<Metamodel> {
        &self.metamodel
    }

    /// Deep copy for pre-state reads. The copy carries no mutation log.
    pub fn snapshot(&self) -> Model {
        Model { log: None, ..self.clone() }
    }

    pub fn start_log(&mut self) {
        self.log = Some(Vec::new());
    }

    pub fn take_log(&mut self) -> Vec<Mutation> {
        self.log.take().unwrap_or_default()
    }

    fn record(&mut self, m: impl FnOnce() -> Mutation) {
        if let Some(log) = &mut self.log {
            log.push(m());
        }
    }

    fn obj(&self, o: ObjId) -> Result<&Object, ModelError> {
        self.objects
            .get(o.index())
            .and_then(Option::as_ref)
            .ok_or_else(|| ModelError::UnknownObject(format!("#{}", o.0)))
    }

    fn obj_mut(&mut self, o: ObjId) -> Result<&mut Object, ModelError> {
        self.objects
            .get_mut(o.index())
            .and_then(Option::as_mut)
            .ok_or_else(|| ModelError::UnknownObject(format!("#{}", o.0)))
    }

    pub fn contains(&self, o: ObjId) -> bool {
        self.obj(o).is_ok()
    }

    pub fn class_of(&self, o: ObjId) -> Option<&str> {
        self.obj(o).ok().map(|x| x.class.as_str())
    }

    pub fn label(&self, o: ObjId) -> Option<&str> {
        self.obj(o).ok().map(|x| x.label.as_str())
    }

    pub fn lookup_label(&self, label: &str) -> Option<ObjId> {
        self.labels.get(label).copied()
    }

    /// Live objects in creation order.
    pub fn objects(&self) -> impl Iterator<Item = ObjId> + '_ {
        self.objects.iter().enumerate().filter(|(_, o)| o.is_some()).map(|(i, _)| ObjId(i as u32))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Instances of `class` or any subtype, in creation order.
    pub fn extent(&self, class: &str) -> Result<Vec<ObjId>, ModelError> {
        if !self.metamodel.has_class(class) {
            return Err(ModelError::UnknownClass(class.to_string()));
        }
        Ok(self.objects().filter(|&o| self.metamodel.conforms(self.class_of(o).unwrap_or_default(), class)).collect())
    }

    pub fn create_object(&mut self, class: &str) -> Result<ObjId, ModelError> {
        let counter = self.counters.entry(class.to_string()).or_insert(0);
        let prefix = initials(class);
        let label = loop {
            *counter += 1;
            let candidate = format!("{prefix}{counter}");
            if !self.labels.contains_key(&candidate) {
                break candidate;
            }
        };
        self.create_labeled(class, &label)
    }

    pub fn create_labeled(&mut self, class: &str, label: &str) -> Result<ObjId, ModelError> {
        let def = self.metamodel.class(class).ok_or_else(|| ModelError::UnknownClass(class.to_string()))?;
        if def.is_abstract {
            return Err(ModelError::AbstractClass(class.to_string()));
        }
        if self.labels.contains_key(label) {
            return Err(ModelError::DuplicateLabel(label.to_string()));
        }
        let id = ObjId(self.objects.len() as u32);
        self.objects.push(Some(Object {
            label: label.to_string(),
            class: class.to_string(),
            attrs: BTreeMap::new(),
            refs: BTreeMap::new(),
            links: BTreeMap::new(),
        }));
        self.labels.insert(label.to_string(), id);
        self.record(|| Mutation::Created(class.to_string()));
        Ok(id)
    }

    /// Removes `o` and every link that targets it.
    pub fn delete_object(&mut self, o: ObjId) -> Result<(), ModelError> {
        self.obj(o)?;
        let removed = self.objects[o.index()].take().expect("checked above");
        self.labels.remove(&removed.label);
        for idx in self.key_index.values_mut() {
            idx.retain(|_, v| *v != o);
        }
        let mm = Arc::clone(&self.metamodel);
        let mut changed = Vec::new();
        for obj in self.objects.iter_mut().flatten() {
            let mut hit: Vec<String> = Vec::new();
            obj.refs.retain(|role, t| {
                if *t == o {
                    hit.push(role.clone());
                }
                *t != o
            });
            for (role, targets) in obj.links.iter_mut() {
                if targets.contains(&o) {
                    targets.retain(|t| *t != o);
                    hit.push(role.clone());
                }
            }
            for role in hit {
                if let Some(f) = mm.lookup_feature(&obj.class, &role) {
                    changed.push((f.owner.to_string(), role));
                }
            }
        }
        self.record(|| Mutation::Deleted(removed.class.clone()));
        for (owner, role) in changed {
            self.record(|| Mutation::Link { owner, role });
        }
        Ok(())
    }

    fn resolve<'a>(
        mm: &'a Metamodel,
        class: &str,
        feature: &str,
    ) -> Result<crate::metamodel::ResolvedFeature<'a>, ModelError> {
        mm.lookup_feature(class, feature)
            .ok_or_else(|| ModelError::UnknownFeature { class: class.to_string(), feature: feature.to_string() })
    }

    pub fn attr(&self, o: ObjId, name: &str) -> Option<&Value> {
        self.obj(o).ok()?.attrs.get(name)
    }

    pub fn get_ref(&self, o: ObjId, role: &str) -> Option<ObjId> {
        self.obj(o).ok()?.refs.get(role).copied()
    }

    pub fn links(&self, o: ObjId, role: &str) -> &[ObjId] {
        self.obj(o).ok().and_then(|x| x.links.get(role)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Reads a feature as a value: attributes as themselves, one-ends as the
    /// target object (or `{}` when unset), many-ends as a set.
    pub fn read_feature(&self, o: ObjId, name: &str) -> Result<Option<Value>, ModelError> {
        let obj = self.obj(o)?;
        let f = Self::resolve(&self.metamodel, &obj.class, name)?;
        Ok(match f.feature {
            Feature::Attribute(_) => obj.attrs.get(name).cloned(),
            Feature::Role(r) if r.is_many() => {
                Some(Value::Set(self.links(o, name).iter().map(|&t| Value::Obj(t)).collect()))
            }
            Feature::Role(_) => Some(obj.refs.get(name).map_or_else(Value::empty_set, |&t| Value::Obj(t))),
        })
    }

    fn mismatch(class: &str, feature: &str, expected: impl ToString, found: &str) -> ModelError {
        ModelError::TypeMismatch {
            class: class.to_string(),
            feature: feature.to_string(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub fn set_attr(&mut self, o: ObjId, name: &str, value: Value) -> Result<(), ModelError> {
        let mm = Arc::clone(&self.metamodel);
        let class = self.obj(o)?.class.clone();
        let f = Self::resolve(&mm, &class, name)?;
        let Feature::Attribute(def) = f.feature else {
            return Err(Self::mismatch(&class, name, "attribute", "role"));
        };
        let value = match (def.kind, value) {
            (ValueKind::String, v @ Value::Str(_))
            | (ValueKind::Integer, v @ Value::Int(_))
            | (ValueKind::Real, v @ Value::Real(_))
            | (ValueKind::Boolean, v @ Value::Bool(_)) => v,
            (ValueKind::Real, Value::Int(i)) => Value::Real(i as f64),
            (kind, v) => return Err(Self::mismatch(&class, name, kind, v.kind_name())),
        };
        if def.is_key {
            self.reindex(o, &class, f.owner, &value)?;
        }
        let prev = self.obj_mut(o)?.attrs.insert(name.to_string(), value.clone());
        if prev.as_ref() != Some(&value) {
            self.record(|| Mutation::Attribute { owner: f.owner.to_string(), feature: name.to_string() });
        }
        Ok(())
    }

    fn reindex(&mut self, o: ObjId, class: &str, key_owner: &str, value: &Value) -> Result<(), ModelError> {
        let mm = Arc::clone(&self.metamodel);
        let classes: Vec<&str> = {
            let chain = mm.ancestors(class);
            let end = chain.iter().position(|c| *c == key_owner).map_or(chain.len(), |p| p + 1);
            chain[..end].to_vec()
        };
        let new_key = KeyValue::from_value(value);
        if let Some(k) = &new_key {
            for c in &classes {
                if let Some(&other) = self.key_index.get(*c).and_then(|m| m.get(k)) {
                    if other != o {
                        return Err(ModelError::DuplicateKey {
                            class: c.to_string(),
                            key: value.to_string(),
                            other: self.label(other).unwrap_or_default().to_string(),
                        });
                    }
                }
            }
        }
        for c in &classes {
            let idx = self.key_index.entry(c.to_string()).or_default();
            idx.retain(|_, v| *v != o);
            if let Some(k) = &new_key {
                idx.insert(k.clone(), o);
            }
        }
        Ok(())
    }

    fn role_target(&self, o: ObjId, role: &str, many: bool) -> Result<(String, String, String), ModelError> {
        let class = self.obj(o)?.class.clone();
        let f = Self::resolve(&self.metamodel, &class, role)?;
        match f.feature {
            Feature::Role(r) if r.is_many() == many => Ok((class, f.owner.to_string(), r.target.clone())),
            Feature::Role(_) => Err(Self::mismatch(
                &class,
                role,
                if many { "many-valued role" } else { "single-valued role" },
                if many { "single-valued role" } else { "many-valued role" },
            )),
            Feature::Attribute(_) => Err(Self::mismatch(&class, role, "role", "attribute")),
        }
    }

    fn check_target(&self, class: &str, role: &str, target_class: &str, t: ObjId) -> Result<(), ModelError> {
        let tc = self.obj(t)?.class.as_str();
        if self.metamodel.conforms(tc, target_class) {
            Ok(())
        } else {
            Err(Self::mismatch(class, role, target_class, tc))
        }
    }

    /// Sets (or with `None`, clears) a single-valued role.
    pub fn set_ref(&mut self, o: ObjId, role: &str, target: Option<ObjId>) -> Result<(), ModelError> {
        let (class, owner, target_class) = self.role_target(o, role, false)?;
        if let Some(t) = target {
            self.check_target(&class, role, &target_class, t)?;
        }
        let obj = self.obj_mut(o)?;
        let before = match target {
            Some(t) => obj.refs.insert(role.to_string(), t),
            None => obj.refs.remove(role),
        };
        if before != target {
            self.record(|| Mutation::Link { owner, role: role.to_string() });
        }
        Ok(())
    }

    /// Appends `target` to a many-valued role unless already present.
    pub fn insert_link(&mut self, o: ObjId, role: &str, target: ObjId) -> Result<(), ModelError> {
        let (class, owner, target_class) = self.role_target(o, role, true)?;
        self.check_target(&class, role, &target_class, target)?;
        let list = self.obj_mut(o)?.links.entry(role.to_string()).or_default();
        if !list.contains(&target) {
            list.push(target);
            self.record(|| Mutation::Link { owner, role: role.to_string() });
        }
        Ok(())
    }

    pub fn remove_link(&mut self, o: ObjId, role: &str, target: ObjId) -> Result<(), ModelError> {
        let (_, owner, _) = self.role_target(o, role, true)?;
        let list = self.obj_mut(o)?.links.entry(role.to_string()).or_default();
        let before = list.len();
        list.retain(|t| *t != target);
        if list.len() != before {
            self.record(|| Mutation::Link { owner, role: role.to_string() });
        }
        Ok(())
    }

    pub fn clear_links(&mut self, o: ObjId, role: &str) -> Result<(), ModelError> {
        self.set_links(o, role, Vec::new())
    }

    /// Replaces the contents of a many-valued role; duplicates are dropped.
    pub fn set_links(&mut self, o: ObjId, role: &str, targets: Vec<ObjId>) -> Result<(), ModelError> {
        let (class, owner, target_class) = self.role_target(o, role, true)?;
        let mut dedup: Vec<ObjId> = Vec::with_capacity(targets.len());
        for t in targets {
            self.check_target(&class, role, &target_class, t)?;
            if !dedup.contains(&t) {
                dedup.push(t);
            }
        }
        let list = self.obj_mut(o)?.links.entry(role.to_string()).or_default();
        if *list != dedup {
            *list = dedup;
            self.record(|| Mutation::Link { owner, role: role.to_string() });
        }
        Ok(())
    }

    /// `E[x]`: the instance of `class` whose key is `key`, or the set of
    /// instances when `key` is a collection. Every key must resolve.
    pub fn key_lookup(&self, class: &str, key: &Value) -> Result<Value, ModelError> {
        if !self.metamodel.has_class(class) {
            return Err(ModelError::UnknownClass(class.to_string()));
        }
        if self.metamodel.key_attribute(class).is_none() {
            return Err(ModelError::NoKeyAttribute(class.to_string()));
        }
        let single = |k: &Value| -> Result<Value, ModelError> {
            KeyValue::from_value(k)
                .and_then(|kv| self.key_index.get(class)?.get(&kv).copied())
                .map(Value::Obj)
                .ok_or_else(|| ModelError::KeyNotFound { class: class.to_string(), key: k.to_string() })
        };
        match key.as_collection() {
            Some(keys) => Ok(Value::set_from(keys.iter().map(single).collect::<Result<Vec<_>, _>>()?)),
            None => single(key),
        }
    }

    /// Renders a value with object labels in place of handles.
    pub fn render(&self, v: &Value) -> String {
        match v {
            Value::Obj(o) => self.label(*o).map_or_else(|| format!("<deleted #{}>", o.0), str::to_string),
            Value::Set(items) | Value::Seq(items) => {
                let inner: Vec<String> = items.iter().map(|x| self.render(x)).collect();
                let open = if matches!(v, Value::Seq(_)) { "Sequence{" } else { "{" };
                format!("{open}{}}}", inner.join(", "))
            }
            other => other.to_string(),
        }
    }

    /// Structural conformance problems: dangling links, features the class
    /// does not have, wrongly typed values, and key-index drift.
    pub fn check_conformance(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mm = &self.metamodel;
        for o in self.objects() {
            let obj = self.obj(o).expect("live");
            for (name, v) in &obj.attrs {
                match mm.lookup_feature(&obj.class, name).map(|f| f.feature) {
                    Some(Feature::Attribute(a)) => {
                        let ok = matches!(
                            (a.kind, v),
                            (ValueKind::String, Value::Str(_))
                                | (ValueKind::Integer, Value::Int(_))
                                | (ValueKind::Real, Value::Real(_))
                                | (ValueKind::Boolean, Value::Bool(_))
                        );
                        if !ok {
                            out.push(format!("{}.{} holds a {}", obj.label, name, v.kind_name()));
                        }
                    }
                    _ => out.push(format!("{}.{} is not an attribute of {}", obj.label, name, obj.class)),
                }
            }
            let targets = obj.refs.iter().map(|(r, t)| (r, std::slice::from_ref(t)));
            let many = obj.links.iter().map(|(r, t)| (r, t.as_slice()));
            for (role, ts) in targets.chain(many) {
                let Some(Feature::Role(def)) = mm.lookup_feature(&obj.class, role).map(|f| f.feature) else {
                    out.push(format!("{}.{} is not a role of {}", obj.label, role, obj.class));
                    continue;
                };
                for &t in ts {
                    match self.class_of(t) {
                        None => out.push(format!("{}.{} targets a deleted object", obj.label, role)),
                        Some(tc) if !mm.conforms(tc, &def.target) => {
                            out.push(format!("{}.{} targets a {tc}, expected {}", obj.label, role, def.target))
                        }
                        _ => {}
                    }
                }
            }
        }
        let mut rebuilt: HashMap<String, HashMap<KeyValue, ObjId>> = HashMap::new();
        for o in self.objects() {
            let class = self.class_of(o).unwrap_or_default();
            let Some((owner, key)) = mm.key_attribute(class) else { continue };
            let Some(kv) = self.attr(o, &key.name).and_then(KeyValue::from_value) else { continue };
            for c in mm.ancestors(class) {
                rebuilt.entry(c.to_string()).or_default().insert(kv.clone(), o);
                if c == owner {
                    break;
                }
            }
        }
        let live: HashMap<&String, &HashMap<KeyValue, ObjId>> =
            self.key_index.iter().filter(|(_, m)| !m.is_empty()).collect();
        if live.len() != rebuilt.len() || rebuilt.iter().any(|(c, m)| live.get(c).is_none_or(|x| *x != m)) {
            out.push("key index out of sync with key attributes".to_string());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metamodel::parse_metamodel;

    fn mm() -> Arc<Metamodel> {
        Arc::new(
            parse_metamodel(
                "abstract class Thing { attr name : string key; }
                 class RealFigure extends Thing { ref children : RealFigure [*]; ref owner : Holder [1]; }
                 class Holder { attr size : real; attr n : integer; ref items : Thing [*]; }",
            )
            .unwrap(),
        )
    }

    #[test]
    fn fresh_labels_use_initials() {
        let mut m = Model::new(mm());
        let a = m.create_object("RealFigure").unwrap();
        let b = m.create_object("RealFigure").unwrap();
        assert_eq!((m.label(a), m.label(b)), (Some("rf1"), Some("rf2")));
        assert!(matches!(m.create_object("Thing"), Err(ModelError::AbstractClass(_))));
        assert!(matches!(m.create_object("Nope"), Err(ModelError::UnknownClass(_))));
        assert_eq!(m.extent("Thing").unwrap().len(), 2);
    }

    #[test]
    fn fresh_labels_skip_taken_ones() {
        let mut m = Model::new(mm());
        m.create_labeled("Holder", "h1").unwrap();
        let h = m.create_object("Holder").unwrap();
        assert_eq!(m.label(h), Some("h2"));
    }

    #[test]
    fn key_index_follows_attribute() {
        let mut m = Model::new(mm());
        let a = m.create_object("RealFigure").unwrap();
        m.set_attr(a, "name", Value::Str("f1".into())).unwrap();
        assert_eq!(m.key_lookup("RealFigure", &Value::Str("f1".into())).unwrap(), Value::Obj(a));
        assert_eq!(m.key_lookup("Thing", &Value::Str("f1".into())).unwrap(), Value::Obj(a));
        m.set_attr(a, "name", Value::Str("g".into())).unwrap();
        assert!(m.key_lookup("RealFigure", &Value::Str("f1".into())).is_err());
        let b = m.create_object("RealFigure").unwrap();
        assert!(matches!(m.set_attr(b, "name", Value::Str("g".into())), Err(ModelError::DuplicateKey { .. })));
        assert_eq!(m.key_lookup("RealFigure", &Value::empty_set()).unwrap(), Value::empty_set());
        assert!(matches!(m.key_lookup("Holder", &Value::Int(1)), Err(ModelError::NoKeyAttribute(_))));
        assert!(m.check_conformance().is_empty());
    }

    #[test]
    fn typed_slots() {
        let mut m = Model::new(mm());
        let h = m.create_object("Holder").unwrap();
        m.set_attr(h, "size", Value::Int(2)).unwrap();
        assert_eq!(m.attr(h, "size"), Some(&Value::Real(2.0)));
        assert!(matches!(m.set_attr(h, "n", Value::Str("x".into())), Err(ModelError::TypeMismatch { .. })));
        assert!(matches!(m.set_attr(h, "items", Value::Int(1)), Err(ModelError::TypeMismatch { .. })));
        assert!(matches!(m.set_attr(h, "bogus", Value::Int(1)), Err(ModelError::UnknownFeature { .. })));
        let f = m.create_object("RealFigure").unwrap();
        assert!(m.insert_link(f, "children", h).is_err());
        m.set_ref(f, "owner", Some(h)).unwrap();
        assert_eq!(m.read_feature(f, "owner").unwrap(), Some(Value::Obj(h)));
    }

    #[test]
    fn insert_link_is_idempotent() {
        let mut m = Model::new(mm());
        let h = m.create_object("Holder").unwrap();
        let f = m.create_object("RealFigure").unwrap();
        m.insert_link(h, "items", f).unwrap();
        m.insert_link(h, "items", f).unwrap();
        assert_eq!(m.links(h, "items"), &[f]);
        m.remove_link(h, "items", f).unwrap();
        assert!(m.links(h, "items").is_empty());
    }

    #[test]
    fn delete_cascades_and_snapshot_is_independent() {
        let mut m = Model::new(mm());
        let h = m.create_object("Holder").unwrap();
        let f = m.create_object("RealFigure").unwrap();
        let g = m.create_object("RealFigure").unwrap();
        m.set_attr(f, "name", Value::Str("f".into())).unwrap();
        m.insert_link(h, "items", f).unwrap();
        m.insert_link(g, "children", f).unwrap();
        m.set_ref(g, "owner", Some(h)).unwrap();
        let snap = m.snapshot();
        m.delete_object(f).unwrap();
        assert!(m.links(h, "items").is_empty());
        assert!(m.links(g, "children").is_empty());
        assert_eq!(m.extent("RealFigure").unwrap(), vec![g]);
        assert!(m.key_lookup("RealFigure", &Value::Str("f".into())).is_err());
        assert!(m.delete_object(f).is_err());
        assert_eq!(snap.extent("RealFigure").unwrap().len(), 2);
        assert_eq!(snap.links(h, "items"), &[f]);
        assert!(m.check_conformance().is_empty());
    }

    #[test]
    fn mutation_log_names_declaring_class() {
        let mut m = Model::new(mm());
        let f = m.create_object("RealFigure").unwrap();
        m.start_log();
        m.set_attr(f, "name", Value::Str("x".into())).unwrap();
        m.delete_object(f).unwrap();
        assert_eq!(
            m.take_log(),
            vec![
                Mutation::Attribute { owner: "Thing".into(), feature: "name".into() },
                Mutation::Deleted("RealFigure".into())
            ]
        );
    }
}
