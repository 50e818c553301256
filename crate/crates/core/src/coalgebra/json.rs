//! JSON documents for systems, functor expressions, pseudometric tables and
//! F-structures. Rationals are `"p/q"` strings (numbers are read as exact
//! decimals); weights and parameters may be small expressions over `params`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde_json::{json, Map, Value as Json};

use super::{from_metric_ts, from_prob_ts, MetricTS, ProbTS, System, SystemError};
use crate::functor::{ConstSpace, FStructure, FunctorExpr, ProductEval, PseudometricTable, Side};
use crate::numerics::{
    eval_rational_expr, format_rational, parse_rational, NumericMode, Rational, Top, Value,
};

type Params = BTreeMap<String, Rational>;
type Spaces = HashMap<String, Arc<ConstSpace>>;

fn err(path: &str, message: impl ToString) -> SystemError {
    SystemError::new(path, message)
}

fn field<'a>(obj: &'a Map<String, Json>, key: &str, path: &str) -> Result<&'a Json, SystemError> {
    obj.get(key)
        .ok_or_else(|| err(path, format!("missing field `{key}`")))
}

fn as_object<'a>(v: &'a Json, path: &str) -> Result<&'a Map<String, Json>, SystemError> {
    v.as_object().ok_or_else(|| err(path, "expected an object"))
}

fn as_array<'a>(v: &'a Json, path: &str) -> Result<&'a Vec<Json>, SystemError> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

fn as_str<'a>(v: &'a Json, path: &str) -> Result<&'a str, SystemError> {
    v.as_str().ok_or_else(|| err(path, "expected a string"))
}

fn rational(v: &Json, params: &Params, path: &str) -> Result<Rational, SystemError> {
    match v {
        Json::String(s) => eval_rational_expr(s, params).map_err(|e| err(path, e)),
        Json::Number(n) => parse_rational(&n.to_string()).map_err(|e| err(path, e)),
        _ => Err(err(path, "expected a rational such as \"1/2\"")),
    }
}

fn value(v: &Json, path: &str) -> Result<Value, SystemError> {
    match v {
        Json::String(s) => Value::parse(s).map_err(|e| err(path, e)),
        Json::Number(n) => Value::parse(&n.to_string()).map_err(|e| err(path, e)),
        _ => Err(err(path, "expected a value such as \"1/2\" or \"inf\"")),
    }
}

fn top_from_json(v: &Json, path: &str) -> Result<Top, SystemError> {
    let s = match v {
        Json::String(s) => s.clone(),
        Json::Number(n) => n.to_string(),
        _ => return Err(err(path, "expected \"inf\" or a positive rational")),
    };
    Top::parse(&s).map_err(|e| err(path, e))
}

fn top_to_json(top: &Top) -> Json {
    Json::String(top.value().to_string())
}

/// `"exact"`, `"float"` or `{"float": 1e-9}`.
pub fn mode_from_json(v: &Json, path: &str) -> Result<NumericMode, SystemError> {
    match v {
        Json::String(s) if s == "exact" => Ok(NumericMode::Exact),
        Json::String(s) if s == "float" => Ok(NumericMode::default()),
        Json::Object(o) => {
            let tol = field(o, "float", path)?;
            let tol = match tol {
                Json::Number(n) => n.as_f64(),
                Json::String(s) => s.parse().ok(),
                _ => None,
            }
            .ok_or_else(|| err(path, "tolerance must be a number"))?;
            NumericMode::float(tol).map_err(|e| err(path, e))
        }
        _ => Err(err(path, "expected \"exact\", \"float\" or {\"float\": tol}")),
    }
}

pub fn mode_to_json(mode: &NumericMode) -> Json {
    match mode {
        NumericMode::Exact => json!("exact"),
        NumericMode::Float { tol } => json!({ "float": tol }),
    }
}

/// Parameters in document order; each may refer to earlier ones. Entries of
/// `overrides` win over the document.
fn params_from_json(doc: &Map<String, Json>, overrides: &Params) -> Result<Params, SystemError> {
    let mut params = overrides.clone();
    if let Some(p) = doc.get("params") {
        for (k, v) in as_object(p, "$.params")? {
            if !overrides.contains_key(k) {
                let q = rational(v, &params, &format!("$.params.{k}"))?;
                params.insert(k.clone(), q);
            }
        }
    }
    Ok(params)
}

/// A table as `{"atoms": [...], "distances": [[...]]}`, `{"points": {atom:
/// x}}` on the real line, or `{"discrete": [...]}`.
pub fn table_from_json(v: &Json, top: &Top, path: &str) -> Result<PseudometricTable, SystemError> {
    let o = as_object(v, path)?;
    let table = if let Some(points) = o.get("points") {
        let pts = as_object(points, &format!("{path}.points"))?
            .iter()
            .map(|(k, x)| Ok((k.clone(), rational(x, &Params::new(), &format!("{path}.points.{k}"))?)))
            .collect::<Result<Vec<_>, SystemError>>()?;
        PseudometricTable::euclidean(pts, top.clone())
    } else if let Some(atoms) = o.get("discrete") {
        PseudometricTable::discrete(string_list(atoms, &format!("{path}.discrete"))?, top.clone())
    } else {
        let atoms = string_list(field(o, "atoms", path)?, &format!("{path}.atoms"))?;
        let dpath = format!("{path}.distances");
        let rows = as_array(field(o, "distances", path)?, &dpath)?
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let rp = format!("{dpath}[{i}]");
                as_array(row, &rp)?
                    .iter()
                    .enumerate()
                    .map(|(j, x)| value(x, &format!("{rp}[{j}]")))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        PseudometricTable::new(atoms, top.clone(), rows)
    };
    table.map_err(|e| err(path, e))
}

pub fn table_to_json(t: &PseudometricTable) -> Json {
    let rows: Vec<Json> = t
        .rows()
        .iter()
        .map(|r| Json::Array(r.iter().map(|v| Json::String(v.to_string())).collect()))
        .collect();
    json!({ "atoms": t.atoms(), "distances": rows })
}

fn string_list(v: &Json, path: &str) -> Result<Vec<String>, SystemError> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, s)| as_str(s, &format!("{path}[{i}]")).map(String::from))
        .collect()
}

fn spaces_from_json(doc: &Map<String, Json>, top: &Top) -> Result<Spaces, SystemError> {
    let mut spaces = Spaces::new();
    spaces.insert("unit".into(), ConstSpace::unit(top.clone()));
    if let Some(s) = doc.get("spaces") {
        for (name, t) in as_object(s, "$.spaces")? {
            let table = table_from_json(t, top, &format!("$.spaces.{name}"))?;
            spaces.insert(name.clone(), ConstSpace::new(name.clone(), table));
        }
    }
    Ok(spaces)
}

fn spaces_to_json(expr: &FunctorExpr) -> Json {
    let mut out = Map::new();
    for s in expr.const_spaces() {
        out.entry(s.name.clone()).or_insert_with(|| table_to_json(&s.table));
    }
    Json::Object(out)
}

/// Expressions such as `{"dist": {"coproduct": [{"id": {"discount": "9/10"}},
/// {"const": "unit"}]}}`.
pub fn functor_from_json(
    v: &Json,
    spaces: &HashMap<String, Arc<ConstSpace>>,
    params: &BTreeMap<String, Rational>,
    path: &str,
) -> Result<FunctorExpr, SystemError> {
    if v.as_str() == Some("id") {
        return Ok(FunctorExpr::id());
    }
    let o = as_object(v, path)?;
    let sub = |key: &str| functor_from_json(&o[key], spaces, params, &format!("{path}.{key}"));
    let two = |key: &str| -> Result<(FunctorExpr, FunctorExpr), SystemError> {
        let p = format!("{path}.{key}");
        match as_array(&o[key], &p)?.as_slice() {
            [a, b] => Ok((
                functor_from_json(a, spaces, params, &format!("{p}[0]"))?,
                functor_from_json(b, spaces, params, &format!("{p}[1]"))?,
            )),
            _ => Err(err(&p, "expected two operands")),
        }
    };
    if let Some(id) = o.get("id") {
        let c = match id.as_object().and_then(|m| m.get("discount")) {
            Some(c) => rational(c, params, &format!("{path}.id.discount"))?,
            None => Rational::from_integer(1.into()),
        };
        Ok(FunctorExpr::discounted(c))
    } else if o.contains_key("dist") {
        Ok(FunctorExpr::dist(sub("dist")?))
    } else if o.contains_key("finpow") {
        Ok(FunctorExpr::finpow(sub("finpow")?))
    } else if o.contains_key("diag_square") {
        Ok(FunctorExpr::diag_square(sub("diag_square")?))
    } else if o.contains_key("coproduct") {
        let (l, r) = two("coproduct")?;
        Ok(FunctorExpr::coproduct(l, r))
    } else if o.contains_key("product") {
        let (l, r) = two("product")?;
        let eval = match o.get("eval") {
            None => ProductEval::Max,
            Some(Json::String(s)) if s == "max" => ProductEval::Max,
            Some(e) => {
                let ep = format!("{path}.eval");
                let pn = as_object(field(as_object(e, &ep)?, "pnorm", &ep)?, &format!("{ep}.pnorm"))?;
                let p = field(pn, "p", &ep)?
                    .as_u64()
                    .and_then(|p| u32::try_from(p).ok())
                    .ok_or_else(|| err(&format!("{ep}.pnorm.p"), "expected a positive integer"))?;
                let c = |k: &str| match pn.get(k) {
                    Some(x) => rational(x, params, &format!("{ep}.pnorm.{k}")),
                    None => Ok(Rational::from_integer(1.into())),
                };
                ProductEval::PNorm {
                    p,
                    c1: c("c1")?,
                    c2: c("c2")?,
                }
            }
        };
        Ok(FunctorExpr::product(l, r, eval))
    } else if let Some(name) = o.get("const") {
        let name = as_str(name, &format!("{path}.const"))?;
        spaces
            .get(name)
            .map(|s| FunctorExpr::constant(s.clone()))
            .ok_or_else(|| err(&format!("{path}.const"), format!("unknown space `{name}`")))
    } else {
        Err(err(path, "unknown functor node"))
    }
}

pub fn functor_to_json(expr: &FunctorExpr) -> Json {
    match expr {
        FunctorExpr::Id { discount } => json!({ "id": { "discount": format_rational(discount) } }),
        FunctorExpr::Dist(s) => json!({ "dist": functor_to_json(s) }),
        FunctorExpr::FinPow(s) => json!({ "finpow": functor_to_json(s) }),
        FunctorExpr::DiagSquare(s) => json!({ "diag_square": functor_to_json(s) }),
        FunctorExpr::Coproduct(l, r) => json!({ "coproduct": [functor_to_json(l), functor_to_json(r)] }),
        FunctorExpr::Product { left, right, eval } => {
            let eval = match eval {
                ProductEval::Max => json!("max"),
                ProductEval::PNorm { p, c1, c2 } => json!({ "pnorm": {
                    "p": p, "c1": format_rational(c1), "c2": format_rational(c2)
                } }),
            };
            json!({ "product": [functor_to_json(left), functor_to_json(right)], "eval": eval })
        }
        FunctorExpr::Const(s) => json!({ "const": s.name }),
    }
}

/// An element of `F(X)`; `states` names the carrier of `Id` leaves.
pub fn structure_from_json(
    v: &Json,
    expr: &FunctorExpr,
    states: &[String],
    params: &BTreeMap<String, Rational>,
    path: &str,
) -> Result<FStructure, SystemError> {
    let index = |names: &[String], v: &Json| -> Result<FStructure, SystemError> {
        let name = as_str(v, path)?;
        names
            .iter()
            .position(|s| s == name)
            .map(FStructure::atom)
            .ok_or_else(|| err(path, format!("unknown atom `{name}`")))
    };
    match expr {
        FunctorExpr::Id { .. } => index(states, v),
        FunctorExpr::Const(space) => index(space.table.atoms(), v),
        FunctorExpr::Dist(sub) => {
            let mut entries = Vec::new();
            match v {
                Json::Object(o) => {
                    for (k, w) in o {
                        let p = format!("{path}.{k}");
                        let t = structure_from_json(&Json::String(k.clone()), sub, states, params, &p)?;
                        entries.push((t, rational(w, params, &p)?));
                    }
                }
                _ => {
                    for (i, e) in as_array(v, path)?.iter().enumerate() {
                        let p = format!("{path}[{i}]");
                        match as_array(e, &p)?.as_slice() {
                            [t, w] => entries.push((
                                structure_from_json(t, sub, states, params, &format!("{p}[0]"))?,
                                rational(w, params, &format!("{p}[1]"))?,
                            )),
                            _ => return Err(err(&p, "expected [element, weight]")),
                        }
                    }
                }
            }
            Ok(FStructure::dist(entries))
        }
        FunctorExpr::FinPow(sub) => {
            let items = as_array(v, path)?
                .iter()
                .enumerate()
                .map(|(i, t)| structure_from_json(t, sub, states, params, &format!("{path}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FStructure::set(items))
        }
        FunctorExpr::Product { left, right, .. } => pair(v, left, right, states, params, path),
        FunctorExpr::DiagSquare(sub) => pair(v, sub, sub, states, params, path),
        FunctorExpr::Coproduct(l, r) => {
            let o = as_object(v, path)?;
            match (o.get("left"), o.get("right")) {
                (Some(x), None) => Ok(FStructure::left(structure_from_json(x, l, states, params, &format!("{path}.left"))?)),
                (None, Some(x)) => Ok(FStructure::right(structure_from_json(x, r, states, params, &format!("{path}.right"))?)),
                _ => Err(err(path, "expected {\"left\": ...} or {\"right\": ...}")),
            }
        }
    }
}

fn pair(
    v: &Json,
    left: &FunctorExpr,
    right: &FunctorExpr,
    states: &[String],
    params: &Params,
    path: &str,
) -> Result<FStructure, SystemError> {
    match as_array(v, path)?.as_slice() {
        [a, b] => Ok(FStructure::pair(
            structure_from_json(a, left, states, params, &format!("{path}[0]"))?,
            structure_from_json(b, right, states, params, &format!("{path}[1]"))?,
        )),
        _ => Err(err(path, "expected a pair")),
    }
}

pub fn structure_to_json(t: &FStructure, expr: &FunctorExpr, states: &[String]) -> Json {
    match (expr, t) {
        (FunctorExpr::Id { .. }, FStructure::Atom(i)) => json!(states[*i]),
        (FunctorExpr::Const(space), FStructure::Atom(i)) => json!(space.table.atoms()[*i]),
        (FunctorExpr::Dist(sub), FStructure::Dist(es)) => {
            if matches!(**sub, FunctorExpr::Id { .. } | FunctorExpr::Const(_)) {
                let mut o = Map::new();
                for (x, w) in es {
                    let key = structure_to_json(x, sub, states).as_str().expect("leaf").to_string();
                    o.insert(key, json!(format_rational(w)));
                }
                Json::Object(o)
            } else {
                Json::Array(
                    es.iter()
                        .map(|(x, w)| json!([structure_to_json(x, sub, states), format_rational(w)]))
                        .collect(),
                )
            }
        }
        (FunctorExpr::FinPow(sub), FStructure::Set(xs)) => {
            Json::Array(xs.iter().map(|x| structure_to_json(x, sub, states)).collect())
        }
        (FunctorExpr::Product { left, right, .. }, FStructure::Pair(a, b)) => {
            json!([structure_to_json(a, left, states), structure_to_json(b, right, states)])
        }
        (FunctorExpr::DiagSquare(sub), FStructure::Pair(a, b)) => {
            json!([structure_to_json(a, sub, states), structure_to_json(b, sub, states)])
        }
        (FunctorExpr::Coproduct(l, _), FStructure::Tagged(Side::Left, x)) => {
            json!({ "left": structure_to_json(x, l, states) })
        }
        (FunctorExpr::Coproduct(_, r), FStructure::Tagged(Side::Right, x)) => {
            json!({ "right": structure_to_json(x, r, states) })
        }
        _ => panic!("structure does not match {expr}; validate before serializing"),
    }
}

pub fn load_system_str(s: &str) -> Result<System, SystemError> {
    let doc: Json = serde_json::from_str(s).map_err(|e| err("$", e))?;
    load_system(&doc)
}

pub fn load_system(doc: &Json) -> Result<System, SystemError> {
    load_system_with(doc, &BTreeMap::new())
}

/// Dispatch on `"kind"`: `"system"` (the default), `"prob_ts"` or
/// `"metric_ts"`. Entries of `overrides` replace document parameters.
pub fn load_system_with(doc: &Json, overrides: &BTreeMap<String, Rational>) -> Result<System, SystemError> {
    let o = as_object(doc, "$")?;
    let mode = match o.get("mode") {
        Some(m) => mode_from_json(m, "$.mode")?,
        None => NumericMode::default(),
    };
    let kind = match o.get("kind") {
        Some(k) => as_str(k, "$.kind")?,
        None => "system",
    };
    let sys = match kind {
        "system" => load_generic(o, overrides)?,
        "prob_ts" => from_prob_ts(&load_prob_ts(doc, overrides)?)?,
        "metric_ts" => from_metric_ts(&load_metric_ts(doc)?)?,
        other => return Err(err("$.kind", format!("unknown kind `{other}`"))),
    };
    Ok(sys.with_mode(mode))
}

fn load_generic(o: &Map<String, Json>, overrides: &Params) -> Result<System, SystemError> {
    let params = params_from_json(o, overrides)?;
    let top = top_from_json(field(o, "top", "$")?, "$.top")?;
    let spaces = spaces_from_json(o, &top)?;
    let expr = functor_from_json(field(o, "functor", "$")?, &spaces, &params, "$.functor")?;
    let states = string_list(field(o, "states", "$")?, "$.states")?;
    let trans = as_object(field(o, "transitions", "$")?, "$.transitions")?;
    let mut alpha = Vec::with_capacity(states.len());
    for s in &states {
        let path = format!("$.transitions.{s}");
        let t = trans
            .get(s)
            .ok_or_else(|| err(&path, format!("no transition for state `{s}`")))?;
        alpha.push(structure_from_json(t, &expr, &states, &params, &path)?);
    }
    if let Some(extra) = trans.keys().find(|k| !states.contains(k)) {
        return Err(err(&format!("$.transitions.{extra}"), "not a declared state"));
    }
    System::new(states, expr, alpha, top, NumericMode::default())
}

/// The generic document for `sys`; [`load_system`] inverts it.
pub fn serialize(sys: &System) -> Json {
    let mut trans = Map::new();
    for (s, t) in sys.states.iter().zip(&sys.alpha) {
        trans.insert(s.clone(), structure_to_json(t, &sys.expr, &sys.states));
    }
    json!({
        "kind": "system",
        "top": top_to_json(&sys.top),
        "mode": mode_to_json(&sys.mode),
        "spaces": spaces_to_json(&sys.expr),
        "functor": functor_to_json(&sys.expr),
        "states": sys.states,
        "transitions": trans,
    })
}

/// `{"kind": "prob_ts", "discount": "c", "params": {...}, "states": [...],
/// "transitions": {state: {succ: weight}}, "terminate": {state: weight}}`.
pub fn load_prob_ts(doc: &Json, overrides: &BTreeMap<String, Rational>) -> Result<ProbTS, SystemError> {
    let o = as_object(doc, "$")?;
    let params = params_from_json(o, overrides)?;
    let discount = rational(field(o, "discount", "$")?, &params, "$.discount")?;
    let states = string_list(field(o, "states", "$")?, "$.states")?;
    let idx = |name: &str, path: &str| {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| err(path, format!("unknown state `{name}`")))
    };
    let empty = Map::new();
    let trans = match o.get("transitions") {
        Some(t) => as_object(t, "$.transitions")?,
        None => &empty,
    };
    let term = match o.get("terminate") {
        Some(t) => as_object(t, "$.terminate")?,
        None => &empty,
    };
    for k in trans.keys() {
        idx(k, &format!("$.transitions.{k}"))?;
    }
    let mut transitions = Vec::with_capacity(states.len());
    let mut terminate = Vec::with_capacity(states.len());
    for s in &states {
        let path = format!("$.transitions.{s}");
        let mut moves = Vec::new();
        if let Some(m) = trans.get(s) {
            for (succ, w) in as_object(m, &path)? {
                let p = format!("{path}.{succ}");
                moves.push((idx(succ, &p)?, rational(w, &params, &p)?));
            }
        }
        transitions.push(moves);
        terminate.push(match term.get(s) {
            Some(w) => rational(w, &params, &format!("$.terminate.{s}"))?,
            None => Rational::from_integer(0.into()),
        });
    }
    for k in term.keys() {
        idx(k, &format!("$.terminate.{k}"))?;
    }
    let p = ProbTS {
        states,
        transitions,
        terminate,
        discount,
    };
    p.validate()?;
    Ok(p)
}

/// `{"kind": "metric_ts", "propositions": {name: "euclidean" | table},
/// "states": [...], "valuation": {state: {name: atom}}, "successors": {state:
/// [...]}}`. Euclidean propositions take rational valuations and use the
/// attained values as their carrier.
pub fn load_metric_ts(doc: &Json) -> Result<MetricTS, SystemError> {
    let o = as_object(doc, "$")?;
    let states = string_list(field(o, "states", "$")?, "$.states")?;
    let props = as_object(field(o, "propositions", "$")?, "$.propositions")?;
    let val = as_object(field(o, "valuation", "$")?, "$.valuation")?;
    let succ = as_object(field(o, "successors", "$")?, "$.successors")?;
    let raw = |s: &str, r: &str| -> Result<&Json, SystemError> {
        let p = format!("$.valuation.{s}");
        field(as_object(field(val, s, "$.valuation")?, &p)?, r, &p)
    };
    let mut propositions = Vec::new();
    let mut valuation = vec![Vec::new(); states.len()];
    for (r, spec) in props {
        let path = format!("$.propositions.{r}");
        if spec.as_str() == Some("euclidean") {
            let mut xs = Vec::with_capacity(states.len());
            for s in &states {
                xs.push(rational(raw(s, r)?, &Params::new(), &format!("$.valuation.{s}.{r}"))?);
            }
            let mut carrier = xs.clone();
            carrier.sort();
            carrier.dedup();
            let points = carrier.iter().map(|x| (format_rational(x), x.clone())).collect();
            let table = PseudometricTable::euclidean(points, Top::Infinite).map_err(|e| err(&path, e))?;
            for (s, x) in xs.iter().enumerate() {
                valuation[s].push(carrier.binary_search(x).expect("value in carrier"));
            }
            propositions.push((r.clone(), table));
        } else {
            let table = table_from_json(spec, &Top::Infinite, &path)?;
            for (s, name) in states.iter().enumerate() {
                let p = format!("$.valuation.{name}.{r}");
                let atom = as_str(raw(name, r)?, &p)?;
                let a = table
                    .index_of(atom)
                    .ok_or_else(|| err(&p, format!("`{atom}` is not in the carrier of `{r}`")))?;
                valuation[s].push(a);
            }
            propositions.push((r.clone(), table));
        }
    }
    let mut tau = Vec::with_capacity(states.len());
    for s in &states {
        let path = format!("$.successors.{s}");
        let next = match succ.get(s) {
            Some(v) => string_list(v, &path)?,
            None => Vec::new(),
        };
        let ids = next
            .iter()
            .map(|n| {
                states
                    .iter()
                    .position(|x| x == n)
                    .ok_or_else(|| err(&path, format!("unknown state `{n}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        tau.push(ids);
    }
    let m = MetricTS {
        states,
        propositions,
        valuation,
        tau,
    };
    m.validate()?;
    Ok(m)
}

/// A one-shot lifting problem: a space, an expression over it and two
/// elements of `F(space)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftDocument {
    pub expr: FunctorExpr,
    pub table: PseudometricTable,
    pub t1: FStructure,
    pub t2: FStructure,
}

/// `{"kind": "lift", "top": "inf", "space": table, "functor": ..., "t1": ...,
/// "t2": ...}`; `t1`/`t2` may be overridden by the caller.
pub fn load_lift(doc: &Json, t1: Option<&Json>, t2: Option<&Json>) -> Result<LiftDocument, SystemError> {
    let o = as_object(doc, "$")?;
    let params = params_from_json(o, &Params::new())?;
    let top = top_from_json(field(o, "top", "$")?, "$.top")?;
    let spaces = spaces_from_json(o, &top)?;
    let table = table_from_json(field(o, "space", "$")?, &top, "$.space")?;
    let expr = functor_from_json(field(o, "functor", "$")?, &spaces, &params, "$.functor")?;
    expr.validate(&top).map_err(|e| err("$.functor", e))?;
    let atoms = table.atoms().to_vec();
    let elem = |key: &str, given: Option<&Json>| -> Result<FStructure, SystemError> {
        let path = format!("$.{key}");
        let v = match given {
            Some(v) => v,
            None => field(o, key, "$")?,
        };
        let t = structure_from_json(v, &expr, &atoms, &params, &path)?;
        t.validate(&expr, atoms.len()).map_err(|e| err(&path, e))?;
        Ok(t)
    };
    let t1 = elem("t1", t1)?;
    let t2 = elem("t2", t2)?;
    Ok(LiftDocument { expr, table, t1, t2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ratio;

    fn refusal_doc() -> Json {
        json!({
            "kind": "prob_ts",
            "params": { "c": "9/10", "eps": "1/20" },
            "discount": "c",
            "states": ["x", "y", "u", "z"],
            "transitions": {
                "x": { "u": "1/2 - eps", "z": "1/2 + eps" },
                "y": { "u": "1/2", "z": "1/2" },
                "u": { "u": "1" }
            },
            "terminate": { "z": "1" }
        })
    }

    #[test]
    fn prob_ts_document() {
        let sys = load_system(&refusal_doc()).unwrap();
        assert_eq!(sys.len(), 4);
        assert_eq!(sys.alpha[0].render(&sys.expr, &sys.states), "{left(u): 9/20, left(z): 11/20}");
        let mut o = BTreeMap::new();
        o.insert("eps".to_string(), ratio(1, 10));
        let sys = load_system_with(&refusal_doc(), &o).unwrap();
        assert_eq!(sys.alpha[0].render(&sys.expr, &sys.states), "{left(u): 2/5, left(z): 3/5}");
    }

    #[test]
    fn weights_not_summing_to_one_name_the_state() {
        let mut doc = refusal_doc();
        doc["transitions"]["y"]["z"] = json!("2/5");
        let e = load_system(&doc).unwrap_err();
        assert_eq!(e.path, "$.transitions.y");
        assert!(e.message.contains("`y`") && e.message.contains("9/10"), "{e}");
    }

    #[test]
    fn triangle_failure_in_a_space() {
        let doc = json!({
            "top": "inf",
            "spaces": { "bad": { "atoms": ["a", "b", "c"],
                "distances": [["0", "1", "5"], ["1", "0", "1"], ["5", "1", "0"]] } },
            "functor": { "const": "bad" },
            "states": [],
            "transitions": {}
        });
        let e = load_system(&doc).unwrap_err();
        assert_eq!(e.path, "$.spaces.bad");
    }

    #[test]
    fn generic_round_trip() {
        let doc = json!({
            "top": "inf",
            "mode": "exact",
            "spaces": { "colour": { "discrete": ["red", "blue"] } },
            "functor": { "product": [{ "const": "colour" },
                { "finpow": { "dist": { "coproduct": ["id", { "const": "unit" }] } } }],
                "eval": { "pnorm": { "p": 2, "c1": "1/2", "c2": "1/2" } } },
            "states": ["s", "t"],
            "transitions": {
                "s": ["red", [[[{ "left": "t" }, "1/3"], [{ "right": "✓" }, "2/3"]]]],
                "t": ["blue", []]
            }
        });
        let sys = load_system(&doc).unwrap();
        assert_eq!(sys.mode, NumericMode::Exact);
        let back = load_system(&serialize(&sys)).unwrap();
        assert_eq!(back, sys);
        assert_eq!(serialize(&back), serialize(&sys));
    }

    #[test]
    fn prob_ts_round_trip() {
        let sys = load_system(&refusal_doc()).unwrap();
        assert_eq!(load_system(&serialize(&sys)).unwrap(), sys);
    }

    #[test]
    fn metric_ts_document() {
        let doc = json!({
            "kind": "metric_ts",
            "mode": "exact",
            "propositions": { "r": "euclidean" },
            "states": ["x1", "x2", "y1"],
            "valuation": { "x1": { "r": "0" }, "x2": { "r": "2/5" }, "y1": { "r": 0 } },
            "successors": { "x1": ["x2"], "x2": ["x2"] }
        });
        let sys = load_system(&doc).unwrap();
        assert_eq!(sys.len(), 3);
        assert_eq!(sys.top, Top::Infinite);
        assert_eq!(load_system(&serialize(&sys)).unwrap(), sys);
    }

    #[test]
    fn unknown_state_in_transitions() {
        let doc = json!({
            "top": "1",
            "functor": { "dist": "id" },
            "states": ["a"],
            "transitions": { "a": { "b": "1" } }
        });
        let e = load_system(&doc).unwrap_err();
        assert_eq!(e.path, "$.transitions.a.b");
    }

    #[test]
    fn lift_document() {
        let doc = json!({
            "kind": "lift",
            "top": "inf",
            "space": { "atoms": ["x1", "x2"], "distances": [["0", "1"], ["1", "0"]] },
            "functor": { "diag_square": "id" },
            "t1": ["x1", "x2"],
            "t2": ["x2", "x1"]
        });
        let l = load_lift(&doc, None, None).unwrap();
        assert_eq!(l.t1, FStructure::pair(FStructure::atom(0), FStructure::atom(1)));
        let swapped = load_lift(&doc, Some(&json!(["x1", "x1"])), None).unwrap();
        assert_eq!(swapped.t1, FStructure::pair(FStructure::atom(0), FStructure::atom(0)));
    }

    #[test]
    fn modes() {
        assert_eq!(mode_from_json(&json!("exact"), "$").unwrap(), NumericMode::Exact);
        assert_eq!(mode_from_json(&json!({"float": 1e-6}), "$").unwrap(), NumericMode::Float { tol: 1e-6 });
        assert!(mode_from_json(&json!({"float": 0}), "$").is_err());
        let m = NumericMode::Float { tol: 1e-9 };
        assert_eq!(mode_from_json(&mode_to_json(&m), "$").unwrap(), m);
    }
}
