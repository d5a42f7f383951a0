//! Label-insensitive model comparison.
//!
//! Objects are first partitioned by class and attribute values, then the
//! partition is refined by neighbourhood colours until stable. Keyed objects
//! usually end up in singleton cells, which pins them; the remaining cells are
//! resolved by backtracking with edge-consistency checks.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::Model;
use crate::value::ObjId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Isomorphism {
    /// Witness bijection as `(object in a, object in b)` pairs.
    Isomorphic(Vec<(ObjId, ObjId)>),
    Mismatch {
        reason: String,
        partial: Vec<(ObjId, ObjId)>,
    },
}

impl Isomorphism {
    pub fn is_isomorphic(&self) -> bool {
        matches!(self, Isomorphism::Isomorphic(_))
    }

    pub fn pairs(&self) -> &[(ObjId, ObjId)] {
        match self {
            Isomorphism::Isomorphic(p) | Isomorphism::Mismatch { partial: p, .. } => p,
        }
    }

    /// The witness rendered as `label_a -> label_b` pairs.
    pub fn labelled(&self, a: &Model, b: &Model) -> Vec<(String, String)> {
        self.pairs()
            .iter()
            .map(|&(x, y)| (a.label(x).unwrap_or("?").to_string(), b.label(y).unwrap_or("?").to_string()))
            .collect()
    }
}

struct Graph<'m> {
    model: &'m Model,
    ids: Vec<ObjId>,
    base: Vec<String>,
    out: Vec<Vec<(String, usize)>>,
    inc: Vec<Vec<(String, usize)>>,
    edges: HashSet<(usize, String, usize)>,
}

impl<'m> Graph<'m> {
    fn new(model: &'m Model) -> Self {
        let ids: Vec<ObjId> = model.objects().collect();
        let pos: HashMap<ObjId, usize> = ids.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        let mm = model.metamodel();
        let mut base = Vec::with_capacity(ids.len());
        let mut edges = HashSet::new();
        for (i, &o) in ids.iter().enumerate() {
            let class = model.class_of(o).unwrap_or_default();
            let mut sig = class.to_string();
            for f in mm.all_features(class) {
                let name = f.feature.name();
                if let Some(v) = model.attr(o, name) {
                    sig.push_str(&format!("|{name}={v}"));
                }
                if let Some(t) = model.get_ref(o, name) {
                    edges.insert((i, name.to_string(), pos[&t]));
                }
                for t in model.links(o, name) {
                    edges.insert((i, name.to_string(), pos[t]));
                }
            }
            base.push(sig);
        }
        let mut out = vec![Vec::new(); ids.len()];
        let mut inc = vec![Vec::new(); ids.len()];
        for (s, r, d) in &edges {
            out[*s].push((r.clone(), *d));
            inc[*d].push((r.clone(), *s));
        }
        Graph { model, ids, base, out, inc, edges }
    }

    fn describe(&self, i: usize) -> String {
        let o = self.ids[i];
        format!("{} : {}", self.model.label(o).unwrap_or("?"), self.model.class_of(o).unwrap_or("?"))
    }
}

/// Colour refinement run jointly on both graphs so colours are comparable.
fn refine(a: &Graph, b: &Graph) -> (Vec<usize>, Vec<usize>) {
    let mut dict: HashMap<String, usize> = HashMap::new();
    let mut intern = |s: String| {
        let n = dict.len();
        *dict.entry(s).or_insert(n)
    };
    let mut ca: Vec<usize> = a.base.iter().map(|s| intern(s.clone())).collect();
    let mut cb: Vec<usize> = b.base.iter().map(|s| intern(s.clone())).collect();
    let distinct = |x: &[usize], y: &[usize]| x.iter().chain(y).collect::<HashSet<_>>().len();
    let mut classes = distinct(&ca, &cb);
    loop {
        let mut dict: HashMap<String, usize> = HashMap::new();
        let mut step = |g: &Graph, c: &[usize]| -> Vec<usize> {
            (0..g.ids.len())
                .map(|i| {
                    let mut outs: Vec<(&str, usize)> = g.out[i].iter().map(|(r, d)| (r.as_str(), c[*d])).collect();
                    let mut ins: Vec<(&str, usize)> = g.inc[i].iter().map(|(r, s)| (r.as_str(), c[*s])).collect();
                    outs.sort();
                    ins.sort();
                    let key = format!("{}/{outs:?}/{ins:?}", c[i]);
                    let n = dict.len();
                    *dict.entry(key).or_insert(n)
                })
                .collect()
        };
        let na = step(a, &ca);
        let nb = step(b, &cb);
        let n = distinct(&na, &nb);
        ca = na;
        cb = nb;
        if n == classes {
            return (ca, cb);
        }
        classes = n;
    }
}

fn histogram(c: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &x in c {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}

struct Search<'g> {
    a: &'g Graph<'g>,
    b: &'g Graph<'g>,
    ca: Vec<usize>,
    cb: Vec<usize>,
    order: Vec<usize>,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    best: Vec<(usize, usize)>,
}

impl Search<'_> {
    fn consistent(&self, x: usize, y: usize) -> bool {
        let mapped = |n: usize| if n == x { Some(y) } else { self.map[n] };
        self.a.out[x].iter().all(|(r, d)| match mapped(*d) {
            Some(md) => self.b.edges.contains(&(y, r.clone(), md)),
            None => true,
        }) && self.a.inc[x].iter().all(|(r, s)| match mapped(*s) {
            Some(ms) => self.b.edges.contains(&(ms, r.clone(), y)),
            None => true,
        })
    }

    fn run(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        if depth > self.best.len() {
            self.best = self.order[..depth].iter().map(|&i| (i, self.map[i].unwrap())).collect();
        }
        let x = self.order[depth];
        for y in 0..self.b.ids.len() {
            if self.used[y] || self.cb[y] != self.ca[x] || !self.consistent(x, y) {
                continue;
            }
            self.map[x] = Some(y);
            self.used[y] = true;
            if self.run(depth + 1) {
                return true;
            }
            self.map[x] = None;
            self.used[y] = false;
        }
        false
    }
}

/// Searches for a bijection between the live objects of `a` and `b` that
/// preserves classes, attribute values and links. Many-valued roles compare
/// as sets.
pub fn isomorphic(a: &Model, b: &Model) -> Isomorphism {
    let ga = Graph::new(a);
    let gb = Graph::new(b);
    let mismatch = |reason: String| Isomorphism::Mismatch { reason, partial: Vec::new() };

    if ga.ids.len() != gb.ids.len() {
        return mismatch(format!("object count differs: {} vs {}", ga.ids.len(), gb.ids.len()));
    }
    let count = |m: &Model| {
        let mut h: BTreeMap<String, usize> = BTreeMap::new();
        for o in m.objects() {
            *h.entry(m.class_of(o).unwrap_or_default().to_string()).or_insert(0) += 1;
        }
        h
    };
    let (ha, hb) = (count(a), count(b));
    if let Some(c) = ha.keys().chain(hb.keys()).find(|c| ha.get(*c) != hb.get(*c)) {
        return mismatch(format!(
            "extent of {c} differs: {} vs {}",
            ha.get(c).copied().unwrap_or(0),
            hb.get(c).copied().unwrap_or(0)
        ));
    }
    if ga.edges.len() != gb.edges.len() {
        return mismatch(format!("link count differs: {} vs {}", ga.edges.len(), gb.edges.len()));
    }
    let (ca, cb) = refine(&ga, &gb);
    let (ha, hb) = (histogram(&ca), histogram(&cb));
    if ha != hb {
        let colour = ha.keys().chain(hb.keys()).find(|k| ha.get(*k) != hb.get(*k)).copied().unwrap();
        let example = ca
            .iter()
            .position(|&c| c == colour)
            .map(|i| format!("first model object {}", ga.describe(i)))
            .or_else(|| cb.iter().position(|&c| c == colour).map(|i| format!("second model object {}", gb.describe(i))))
            .unwrap_or_default();
        return mismatch(format!("no counterpart with the same attributes and links for {example}"));
    }

    let mut order: Vec<usize> = (0..ga.ids.len()).collect();
    order.sort_by_key(|&i| (ha[&ca[i]], i));
    let n = ga.ids.len();
    let mut search =
        Search { a: &ga, b: &gb, ca, cb, order, map: vec![None; n], used: vec![false; n], best: Vec::new() };
    if search.run(0) {
        let mut pairs: Vec<(ObjId, ObjId)> =
            (0..n).map(|i| (ga.ids[i], gb.ids[search.map[i].expect("complete")])).collect();
        pairs.sort();
        Isomorphism::Isomorphic(pairs)
    } else {
        let partial = search.best.iter().map(|&(x, y)| (ga.ids[x], gb.ids[y])).collect();
        let stuck = search.order.get(search.best.len()).map(|&i| ga.describe(i)).unwrap_or_default();
        Isomorphism::Mismatch { reason: format!("no consistent counterpart for {stuck}"), partial }
    }
}
