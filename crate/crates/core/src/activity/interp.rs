use std::collections::BTreeMap;

use thiserror::Error;

use super::Stmt;
use crate::expr::{evaluate, CollOp, Env, EvalError, Expr};
use crate::metamodel::Feature;
use crate::model::{Model, ModelError};
use crate::value::{ObjId, Value};

pub const DEFAULT_BUDGET: u64 = 10_000_000;
const MAX_CALL_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Type(String),
    #[error("iteration budget of {0} steps exhausted")]
    Budget(u64),
    #[error("unknown operation {0}")]
    UnknownOperation(String),
    #[error("operation {name} takes {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("call depth limit of {MAX_CALL_DEPTH} exceeded")]
    CallDepth,
}

/// A named activity callable from a call statement.
#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    pub name: String,
    pub params: Vec<String>,
    pub body: Stmt,
}

enum Flow {
    Normal,
    Return(Value),
}

type Locals = BTreeMap<String, Value>;

/// Executes activities against one model. `fail(message)` is built in and
/// aborts execution with that message.
pub struct Interpreter<'m> {
    model: &'m mut Model,
    pre: Option<Model>,
    ops: BTreeMap<String, Operation>,
    steps: u64,
    budget: u64,
    depth: usize,
}

impl<'m> Interpreter<'m> {
    pub fn new(model: &'m mut Model) -> Self {
        Interpreter { model, pre: None, ops: BTreeMap::new(), steps: 0, budget: DEFAULT_BUDGET, depth: 0 }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Installs the state that `@pre` refers to.
    pub fn set_pre(&mut self, pre: Model) {
        self.pre = Some(pre);
    }

    pub fn register(&mut self, op: Operation) {
        self.ops.insert(op.name.clone(), op);
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Runs `s` with the given variable bindings; a `return` yields its value.
    pub fn run(&mut self, s: &Stmt, bindings: BTreeMap<String, Value>) -> Result<Option<Value>, ExecError> {
        let mut locals = bindings;
        Ok(match self.exec(s, &mut locals)? {
            Flow::Normal => None,
            Flow::Return(v) => Some(v),
        })
    }

    fn eval(&self, e: &Expr, locals: &Locals) -> Result<Value, ExecError> {
        let env = Env { model: self.model, pre_model: self.pre.as_ref(), bindings: locals.clone(), self_object: None };
        Ok(evaluate(e, &env)?)
    }

    fn condition(&self, e: &Expr, locals: &Locals) -> Result<bool, ExecError> {
        let v = self.eval(e, locals)?;
        v.as_bool().ok_or_else(|| ExecError::Type(format!("condition {e} is a {}, not a boolean", v.kind_name())))
    }

    fn tick(&mut self) -> Result<(), ExecError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(ExecError::Budget(self.budget))
        } else {
            Ok(())
        }
    }

    fn exec(&mut self, s: &Stmt, locals: &mut Locals) -> Result<Flow, ExecError> {
        match s {
            Stmt::Skip => Ok(Flow::Normal),
            Stmt::Seq(a, b) => match self.exec(a, locals)? {
                Flow::Normal => self.exec(b, locals),
                ret => Ok(ret),
            },
            Stmt::If { cond, then, otherwise } => {
                if self.condition(cond, locals)? {
                    self.exec(then, locals)
                } else {
                    self.exec(otherwise, locals)
                }
            }
            Stmt::While { cond, body } => {
                while self.condition(cond, locals)? {
                    self.tick()?;
                    if let ret @ Flow::Return(_) = self.exec(body, locals)? {
                        return Ok(ret);
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::For { var, range, body } => {
                let items = match self.eval(range, locals)? {
                    Value::Set(items) | Value::Seq(items) => items,
                    other => {
                        return Err(ExecError::Type(format!("cannot iterate over a {} ({range})", other.kind_name())))
                    }
                };
                let saved = locals.get(var).cloned();
                let mut flow = Flow::Normal;
                for item in items {
                    self.tick()?;
                    locals.insert(var.clone(), item);
                    if let ret @ Flow::Return(_) = self.exec(body, locals)? {
                        flow = ret;
                        break;
                    }
                }
                match saved {
                    Some(v) => locals.insert(var.clone(), v),
                    None => locals.remove(var),
                };
                Ok(flow)
            }
            Stmt::Create { var, class } => {
                let o = self.model.create_object(class)?;
                locals.insert(var.clone(), Value::Obj(o));
                Ok(Flow::Normal)
            }
            Stmt::Assign { lhs, rhs } => {
                let v = self.eval(rhs, locals)?;
                self.assign(lhs, v, locals)?;
                Ok(Flow::Normal)
            }
            Stmt::Return(e) => Ok(Flow::Return(self.eval(e, locals)?)),
            Stmt::Call(e) => {
                self.call(e, locals)?;
                Ok(Flow::Normal)
            }
        }
    }

    fn assign(&mut self, lhs: &Expr, v: Value, locals: &mut Locals) -> Result<(), ExecError> {
        if let Expr::Ident { path, at_pre: false } = lhs {
            if path.len() == 1 {
                locals.insert(path[0].clone(), v);
                return Ok(());
            }
        }
        let (src, feature) = lhs.split_last().ok_or_else(|| ExecError::Type(format!("cannot assign to {lhs}")))?;
        let targets: Vec<ObjId> = match self.eval(&src, locals)? {
            Value::Obj(o) => vec![o],
            Value::Set(items) | Value::Seq(items) => items
                .iter()
                .map(|i| i.as_obj().ok_or_else(|| ExecError::Type(format!("{src} contains a non-object"))))
                .collect::<Result<_, _>>()?,
            other => {
                return Err(ExecError::Type(format!("cannot assign a feature of a {} ({src})", other.kind_name())))
            }
        };
        for o in targets {
            self.write_feature(o, feature, v.clone())?;
        }
        Ok(())
    }

    fn write_feature(&mut self, o: ObjId, feature: &str, v: Value) -> Result<(), ExecError> {
        let class = self.model.class_of(o).ok_or_else(|| ModelError::UnknownObject(format!("#{}", o.index())))?;
        let mm = std::sync::Arc::clone(self.model.metamodel_arc());
        let f = mm
            .feature_of(class, feature)
            .map_err(|_| ModelError::UnknownFeature { class: class.to_string(), feature: feature.to_string() })?;
        let objects = |v: &Value| -> Result<Vec<ObjId>, ExecError> {
            match v {
                Value::Obj(t) => Ok(vec![*t]),
                Value::Set(items) | Value::Seq(items) => items
                    .iter()
                    .map(|i| i.as_obj().ok_or_else(|| ExecError::Type(format!("{feature} expects objects, got {i}"))))
                    .collect(),
                other => Err(ExecError::Type(format!("{feature} expects objects, got a {}", other.kind_name()))),
            }
        };
        match f.feature {
            Feature::Attribute(_) => self.model.set_attr(o, feature, v)?,
            Feature::Role(r) if r.is_many() => self.model.set_links(o, feature, objects(&v)?)?,
            Feature::Role(_) => match objects(&v)?.as_slice() {
                [] => self.model.set_ref(o, feature, None)?,
                [t] => self.model.set_ref(o, feature, Some(*t))?,
                many => return Err(ExecError::Type(format!("{feature} holds one object, got {} objects", many.len()))),
            },
        }
        Ok(())
    }

    fn call(&mut self, e: &Expr, locals: &Locals) -> Result<Option<Value>, ExecError> {
        match e {
            Expr::Collection { op: CollOp::IsDeleted, source, .. } => {
                let victims: Vec<ObjId> = match self.eval(source, locals)? {
                    Value::Obj(o) => vec![o],
                    Value::Set(items) | Value::Seq(items) => items.iter().filter_map(Value::as_obj).collect(),
                    other => return Err(ExecError::Type(format!("cannot delete a {}", other.kind_name()))),
                };
                for o in victims {
                    if self.model.contains(o) {
                        self.model.delete_object(o)?;
                    }
                }
                Ok(None)
            }
            Expr::Call { name, args } => {
                let values = args.iter().map(|a| self.eval(a, locals)).collect::<Result<Vec<_>, _>>()?;
                if name == "fail" && !self.ops.contains_key(name) {
                    let msg: Vec<String> = values
                        .iter()
                        .map(|v| match v {
                            Value::Str(s) => s.clone(),
                            v => self.model.render(v),
                        })
                        .collect();
                    return Err(ExecError::Failed(msg.join(" ")));
                }
                let op = self.ops.get(name).cloned().ok_or_else(|| ExecError::UnknownOperation(name.clone()))?;
                if op.params.len() != values.len() {
                    return Err(ExecError::Arity {
                        name: name.clone(),
                        expected: op.params.len(),
                        found: values.len(),
                    });
                }
                if self.depth >= MAX_CALL_DEPTH {
                    return Err(ExecError::CallDepth);
                }
                let mut frame: Locals = op.params.iter().cloned().zip(values).collect();
                self.depth += 1;
                let result = self.exec(&op.body, &mut frame);
                self.depth -= 1;
                Ok(match result? {
                    Flow::Normal => None,
                    Flow::Return(v) => Some(v),
                })
            }
            other => Err(ExecError::Type(format!("{other} is not a call"))),
        }
    }
}

/// Runs `s` on `model` with no bindings and no registered operations.
pub fn exec_stmt(s: &Stmt, model: &mut Model) -> Result<Option<Value>, ExecError> {
    Interpreter::new(model).run(s, BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::activity::parse_stmt;
    use crate::metamodel::parse_metamodel;
    use crate::model::{isomorphic, parse_model};

    fn gmf_like() -> Model {
        let mm = parse_metamodel(
            "class Figure { attr name : string key; ref children : Figure [*]; }
             class RealFigure { attr name : string key; ref children : RealFigure [*]; }
             class Holder { ref one : RealFigure [1]; attr n : integer; }",
        )
        .unwrap();
        parse_model(
            Arc::new(mm),
            "f1 : Figure\nf1.name = \"f1\"\nf2 : Figure\nf2.name = \"f2\"\nf2 : f1.children\nh : Holder",
        )
        .unwrap()
    }

    #[test]
    fn skip_is_identity() {
        let mut m = gmf_like();
        let before = m.snapshot();
        exec_stmt(&Stmt::Skip, &mut m).unwrap();
        assert!(isomorphic(&before, &m).is_isomorphic());
    }

    #[test]
    fn registered_operation_in_loop() {
        let mut m = gmf_like();
        let mut it = Interpreter::new(&mut m);
        it.register(Operation {
            name: "copyFigure".into(),
            params: vec!["f".into()],
            body: parse_stmt("rf : RealFigure ; rf.name := f.name").unwrap(),
        });
        it.run(&parse_stmt("for f : Figure do copyFigure(f)").unwrap(), BTreeMap::new()).unwrap();
        assert_eq!(m.extent("RealFigure").unwrap().len(), 2);
        assert_eq!(m.label(m.extent("RealFigure").unwrap()[1]), Some("rf2"));
    }

    #[test]
    fn for_range_is_frozen() {
        let mut m = gmf_like();
        let s = parse_stmt("n := 0 ; for f : Figure do (g : Figure ; n := n + 1) ; return n").unwrap();
        assert_eq!(exec_stmt(&s, &mut m).unwrap(), Some(Value::Int(2)));
        assert_eq!(m.extent("Figure").unwrap().len(), 4);
    }

    #[test]
    fn loops_and_returns() {
        let mut m = gmf_like();
        assert_eq!(exec_stmt(&parse_stmt("while 1 < 0 do skip").unwrap(), &mut m).unwrap(), None);
        let s = parse_stmt("i := 0 ; while true do (i := i + 1 ; if i = 5 then return i else skip)").unwrap();
        assert_eq!(exec_stmt(&s, &mut m).unwrap(), Some(Value::Int(5)));
        let err =
            Interpreter::new(&mut m).with_budget(100).run(&parse_stmt("while true do skip").unwrap(), BTreeMap::new());
        assert_eq!(err, Err(ExecError::Budget(100)));
    }

    #[test]
    fn assignments() {
        let mut m = gmf_like();
        let s = parse_stmt(
            "r : RealFigure ; r.name := \"x\" ; h.one := r ; h.n := 3 ; RealFigure[\"x\"].children := {r} ; Holder.n := 4",
        )
        .unwrap();
        let h = m.lookup_label("h").unwrap();
        let mut it = Interpreter::new(&mut m);
        it.run(&s, BTreeMap::from([("h".to_string(), Value::Obj(h))])).unwrap();
        let r = m.key_lookup("RealFigure", &Value::Str("x".into())).unwrap().as_obj().unwrap();
        assert_eq!(m.get_ref(h, "one"), Some(r));
        assert_eq!(m.links(r, "children"), &[r]);
        assert_eq!(m.attr(h, "n"), Some(&Value::Int(4)));
        let s = parse_stmt("h.one := {}").unwrap();
        Interpreter::new(&mut m).run(&s, BTreeMap::from([("h".to_string(), Value::Obj(h))])).unwrap();
        assert_eq!(m.get_ref(h, "one"), None);
    }

    #[test]
    fn deletion_and_failure() {
        let mut m = gmf_like();
        exec_stmt(&parse_stmt("Figure->isDeleted() ; Figure->isDeleted()").unwrap(), &mut m).unwrap();
        assert!(m.extent("Figure").unwrap().is_empty());
        let err = exec_stmt(&parse_stmt("fail(\"C2 does not hold\")").unwrap(), &mut m).unwrap_err();
        assert_eq!(err.to_string(), "C2 does not hold");
    }

    #[test]
    fn runtime_errors() {
        let mut m = gmf_like();
        for (src, want) in [
            ("if 1 then skip", "not a boolean"),
            ("for x : 3 do skip", "cannot iterate"),
            ("h : Holder ; h.n := \"s\"", "type mismatch"),
            ("nope(1)", "unknown operation"),
            ("x : Nowhere", "unknown class"),
        ] {
            let err = exec_stmt(&parse_stmt(src).unwrap(), &mut m).unwrap_err().to_string();
            assert!(err.contains(want), "{src}: {err}");
        }
    }
}
