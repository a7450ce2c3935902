//! Typed STRIPS PDDL for learned models.
//!
//! PDDL has no multi-typing. A parameter is declared under the first of its
//! types; every further type `t` becomes a static `(has_type_t ?v)`
//! precondition, and problem files list the matching `has_type_t` facts.
//! The parser folds those preconditions back into the parameter's type set.

mod sexpr;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use skillsym_core::{
    AbstractGoal, AbstractState, GroundAtom, LiftedAtom, Literal, Model, Operator, Param, Predicate, TypeHierarchy, World,
    ROOT_TYPE,
};

pub use sexpr::{read, Node, Sexp};

pub const DOMAIN_NAME: &str = "skillsym";
pub const HAS_TYPE: &str = "has_type_";
pub const REQUIREMENTS: [&str; 4] = [":strips", ":typing", ":negative-preconditions", ":equality"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PddlError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported PDDL feature: {0}")]
    Unsupported(String),
    #[error("names collide after sanitizing: {0}")]
    Collision(String),
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, PddlError>;

/// Lowercase; anything other than ASCII alphanumerics, `_` and `-` becomes `_`.
pub fn sanitize(name: &str) -> String {
    sanitize_keep_case(name).to_ascii_lowercase()
}

fn sanitize_keep_case(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

/// Skill name encoded in an operator name: a trailing `_<digits>` is dropped.
pub fn skill_of(action: &str) -> &str {
    match action.rsplit_once('_') {
        Some((head, tail)) if !head.is_empty() && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) => head,
        _ => action,
    }
}

fn check_collisions<'a>(kind: &str, names: impl IntoIterator<Item = (&'a str, String)>) -> Result<()> {
    let mut seen: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for (orig, clean) in names {
        seen.entry(clean).or_default().insert(orig);
    }
    let bad: Vec<String> = seen
        .iter()
        .filter(|(_, o)| o.len() > 1)
        .map(|(c, o)| format!("{kind} {} -> {c}", o.iter().copied().collect::<Vec<_>>().join(", ")))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(PddlError::Collision(bad.join("; ")))
    }
}

/// Types some parameter carries beyond its first one.
pub fn secondary_types(model: &Model) -> BTreeSet<String> {
    model.operators.iter().flat_map(|o| o.params.iter().flat_map(|p| p.types.iter().skip(1).cloned())).collect()
}

fn var(op: &Operator, i: usize) -> String {
    format!("?{}_p{}", sanitize(op.params[i].primary()), i)
}

fn atom_text(pred: &str, args: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("({}", sanitize(pred));
    for a in args {
        s.push(' ');
        s.push_str(&a);
    }
    s.push(')');
    s
}

fn lifted(op: &Operator, a: &LiftedAtom) -> String {
    atom_text(&a.predicate, a.args.iter().map(|&i| var(op, i)))
}

fn block(out: &mut String, indent: &str, head: &str, items: &[String], close: &str) {
    if items.is_empty() {
        let _ = writeln!(out, "{head} (and){close}");
        return;
    }
    let _ = write!(out, "{head} (and");
    for it in items {
        let _ = write!(out, "\n{indent}{it}");
    }
    let _ = writeln!(out, "){close}");
}

fn emit_types(h: &TypeHierarchy) -> Result<Vec<String>> {
    let mut by_parent: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for t in h.types().filter(|t| *t != ROOT_TYPE) {
        let parents: Vec<&str> = h.parents(t).collect();
        if parents.len() != 1 {
            return Err(PddlError::Unsupported(format!("type `{t}` has {} parents", parents.len())));
        }
        by_parent.entry(sanitize(parents[0])).or_default().push(sanitize(t));
    }
    check_collisions("type", h.types().map(|t| (t, sanitize(t))))?;
    Ok(by_parent
        .into_iter()
        .map(|(p, mut cs)| {
            cs.sort();
            format!("{} - {p}", cs.join(" "))
        })
        .collect())
}

fn emit_action(out: &mut String, op: &Operator) {
    let _ = writeln!(out, "  (:action {}", sanitize_keep_case(&op.name));
    let params: Vec<String> = (0..op.params.len()).map(|i| format!("{} - {}", var(op, i), sanitize(op.params[i].primary()))).collect();
    if params.is_empty() {
        let _ = writeln!(out, "   :parameters ()");
    } else {
        let _ = writeln!(out, "   :parameters ({})", params.join("\n                "));
    }
    let mut neq: Vec<String> = op.inequalities.iter().map(|&(a, b)| format!("(not (= {} {}))", var(op, a), var(op, b))).collect();
    neq.sort();
    let mut typed: Vec<String> = (0..op.params.len())
        .flat_map(|i| op.params[i].types.iter().skip(1).map(move |t| format!("({HAS_TYPE}{} {})", sanitize(t), var(op, i))))
        .collect();
    typed.sort();
    let mut pos: Vec<String> = op.preconditions.iter().filter(|l| l.positive).map(|l| lifted(op, &l.atom)).collect();
    pos.sort();
    let mut neg: Vec<String> = op.preconditions.iter().filter(|l| !l.positive).map(|l| format!("(not {})", lifted(op, &l.atom))).collect();
    neg.sort();
    let pre: Vec<String> = neq.into_iter().chain(typed).chain(pos).chain(neg).collect();
    block(out, "      ", "   :precondition", &pre, "");
    let mut add: Vec<String> = op.add.iter().map(|a| lifted(op, a)).collect();
    add.sort();
    let mut del: Vec<String> = op.delete.iter().map(|a| format!("(not {})", lifted(op, a))).collect();
    del.sort();
    let eff: Vec<String> = add.into_iter().chain(del).collect();
    block(out, "      ", "   :effect", &eff, ")");
}

/// Canonical domain text: types grouped by parent, predicates and actions
/// in name order, literals sorted within their group.
pub fn emit_domain(model: &Model, hierarchy: &TypeHierarchy) -> Result<String> {
    for p in &model.predicates {
        if sanitize(&p.name).starts_with(HAS_TYPE) {
            return Err(PddlError::Collision(format!("predicate {} uses the reserved prefix {HAS_TYPE}", p.name)));
        }
    }
    check_collisions("predicate", model.predicates.iter().map(|p| (p.name.as_str(), sanitize(&p.name))))?;
    check_collisions("action", model.operators.iter().map(|o| (o.name.as_str(), sanitize_keep_case(&o.name))))?;
    for op in &model.operators {
        if skill_of(&op.name) != op.skill {
            return Err(PddlError::Invalid(format!("operator {} must be named after its skill {}", op.name, op.skill)));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {DOMAIN_NAME})");
    let _ = writeln!(out, "  (:requirements {})", REQUIREMENTS.join(" "));
    let types = emit_types(hierarchy)?;
    if types.is_empty() {
        let _ = writeln!(out, "  (:types)");
    } else {
        let _ = writeln!(out, "  (:types\n    {})", types.join("\n    "));
    }
    let mut preds: Vec<(String, String)> = model
        .predicates
        .iter()
        .map(|p| {
            let args = p.params.iter().enumerate().map(|(i, t)| format!("?{}_p{i} - {}", sanitize(t), sanitize(t)));
            let sem = p.semantics.split_whitespace().collect::<Vec<_>>().join(" ");
            (atom_text(&p.name, args), sem)
        })
        .collect();
    preds.extend(secondary_types(model).into_iter().map(|t| {
        (format!("({HAS_TYPE}{} ?o - {ROOT_TYPE})", sanitize(&t)), format!("membership in type {t}"))
    }));
    preds.sort();
    if preds.is_empty() {
        let _ = writeln!(out, "  (:predicates)");
    } else {
        let _ = write!(out, "  (:predicates");
        for (i, (decl, sem)) in preds.iter().enumerate() {
            let close = if i + 1 == preds.len() { ")" } else { "" };
            if sem.is_empty() {
                let _ = write!(out, "\n    {decl}{close}");
            } else {
                let _ = write!(out, "\n    {decl}{close} ; {sem}");
            }
        }
        out.push('\n');
    }
    let mut ops: Vec<&Operator> = model.operators.iter().collect();
    ops.sort_by_key(|o| sanitize_keep_case(&o.name));
    for op in ops {
        emit_action(&mut out, op);
    }
    out.push_str(")\n");
    Ok(out)
}

/// A parsed domain. Operators carry no provenance and a skill arity of 0
/// until [`Model::bind_arities`] is called against a world.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub name: String,
    pub hierarchy: TypeHierarchy,
    pub model: Model,
}

fn expect_atom<'a>(s: &'a Sexp, what: &str) -> Result<&'a str> {
    s.atom().ok_or_else(|| s.error(format!("expected {what}")))
}

/// `a b - t c` → [(a, t), (b, t), (c, object)].
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, String, &Sexp)>> {
    let mut out = Vec::new();
    let mut pending: Vec<&Sexp> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = &items[i];
        if s.list().is_some() {
            return Err(match s.head().as_deref() {
                Some("either") => PddlError::Unsupported("either types".into()),
                _ => s.error("unexpected list in typed list"),
            });
        }
        let a = s.atom().unwrap();
        if a == "-" {
            let t = items.get(i + 1).ok_or_else(|| s.error("missing type after `-`"))?;
            if t.head().as_deref() == Some("either") {
                return Err(PddlError::Unsupported("either types".into()));
            }
            let t = expect_atom(t, "type name")?.to_ascii_lowercase();
            for p in pending.drain(..) {
                out.push((p.atom().unwrap().to_string(), t.clone(), p));
            }
            i += 2;
            continue;
        }
        pending.push(s);
        i += 1;
    }
    out.extend(pending.into_iter().map(|p| (p.atom().unwrap().to_string(), ROOT_TYPE.to_string(), p)));
    Ok(out)
}

fn build_hierarchy(pairs: &[(String, String)]) -> Result<TypeHierarchy> {
    let mut h = TypeHierarchy::new();
    let mut parent: BTreeMap<String, String> = BTreeMap::new();
    for (c, p) in pairs {
        if c == ROOT_TYPE {
            continue;
        }
        if let Some(old) = parent.insert(c.clone(), p.clone()) {
            if old != *p {
                return Err(PddlError::Unsupported(format!("type `{c}` declared with two parents")));
            }
        }
    }
    for p in parent.values().cloned().collect::<Vec<_>>() {
        if p != ROOT_TYPE && !parent.contains_key(&p) {
            parent.insert(p, ROOT_TYPE.to_string());
        }
    }
    while !parent.is_empty() {
        let ready: Vec<String> = parent.iter().filter(|(_, p)| h.contains(p)).map(|(c, _)| c.clone()).collect();
        if ready.is_empty() {
            return Err(PddlError::Invalid("cyclic type declarations".into()));
        }
        for c in ready {
            let p = parent.remove(&c).unwrap();
            h.add(&c, &[&p]).map_err(|e| PddlError::Invalid(e.to_string()))?;
        }
    }
    Ok(h)
}

/// Where parsed actions look up predicates and types.
struct Scope<'a> {
    hierarchy: &'a mut TypeHierarchy,
    predicates: &'a mut BTreeMap<String, Predicate>,
    /// Accept undeclared types and predicates, inferring signatures.
    lenient: bool,
}

fn parse_literal_atom(s: &Sexp, vars: &BTreeMap<String, usize>) -> Result<(String, Vec<usize>)> {
    let items = s.list().ok_or_else(|| s.error("expected an atom"))?;
    let name = expect_atom(items.first().ok_or_else(|| s.error("empty atom"))?, "predicate name")?.to_ascii_lowercase();
    let mut args = Vec::new();
    for a in &items[1..] {
        let v = expect_atom(a, "variable")?;
        if !v.starts_with('?') {
            return Err(PddlError::Unsupported(format!("constant `{v}` in action at {}:{}", a.line, a.col)));
        }
        args.push(*vars.get(&v.to_ascii_lowercase()).ok_or_else(|| a.error(format!("undeclared variable {v}")))?);
    }
    Ok((name, args))
}

fn conjuncts(s: &Sexp) -> Result<&[Sexp]> {
    match s.head().as_deref() {
        Some("and") => Ok(&s.list().unwrap()[1..]),
        Some(_) => Ok(std::slice::from_ref(s)),
        None if s.list().is_some_and(|l| l.is_empty()) => Ok(&[]),
        None => Err(s.error("expected a formula")),
    }
}

fn parse_action_form(s: &Sexp, scope: &mut Scope<'_>) -> Result<Operator> {
    let items = s.list().ok_or_else(|| s.error("expected (:action ...)"))?;
    let name = expect_atom(items.get(1).ok_or_else(|| s.error("missing action name"))?, "action name")?.to_string();
    let mut params_s = None;
    let mut pre_s = None;
    let mut eff_s = None;
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "action keyword")?.to_ascii_lowercase();
        let val = items.get(i + 1).ok_or_else(|| items[i].error(format!("missing value for {key}")))?;
        match key.as_str() {
            ":parameters" => params_s = Some(val),
            ":precondition" => pre_s = Some(val),
            ":effect" => eff_s = Some(val),
            other => return Err(PddlError::Unsupported(format!("action field {other}"))),
        }
        i += 2;
    }
    let mut vars = BTreeMap::new();
    let mut params = Vec::new();
    if let Some(p) = params_s {
        let list = p.list().ok_or_else(|| p.error("expected a parameter list"))?;
        for (v, t, at) in typed_list(list)? {
            if !scope.hierarchy.contains(&t) {
                if !scope.lenient {
                    return Err(at.error(format!("undeclared type {t}")));
                }
                scope.hierarchy.add(&t, &[]).map_err(|e| PddlError::Invalid(e.to_string()))?;
            }
            if vars.insert(v.to_ascii_lowercase(), params.len()).is_some() {
                return Err(at.error(format!("duplicate parameter {v}")));
            }
            params.push(Param::of(&t));
        }
    }
    let mut preconditions = BTreeSet::new();
    let mut inequalities = BTreeSet::new();
    let mut signature = |name: &str, args: &[usize], params: &[Param], at: &Sexp| -> Result<()> {
        match scope.predicates.get(name) {
            Some(p) if p.arity() == args.len() => Ok(()),
            Some(p) => Err(at.error(format!("{} expects {} arguments", p.name, p.arity()))),
            None if scope.lenient => {
                let tys: Vec<&str> = args.iter().map(|&a| params[a].primary()).collect();
                scope.predicates.insert(name.to_string(), Predicate::new(name, &tys, ""));
                Ok(())
            }
            None => Err(at.error(format!("undeclared predicate {name}"))),
        }
    };
    if let Some(p) = pre_s {
        for lit in conjuncts(p)? {
            let (positive, inner) = match lit.head().as_deref() {
                Some("not") => {
                    let l = lit.list().unwrap();
                    if l.len() != 2 {
                        return Err(lit.error("`not` takes one formula"));
                    }
                    (false, &l[1])
                }
                Some("or" | "imply" | "forall" | "exists" | "when") => {
                    return Err(PddlError::Unsupported(format!("{} at {}:{}", lit.head().unwrap(), lit.line, lit.col)))
                }
                _ => (true, lit),
            };
            if inner.head().as_deref() == Some("=") {
                let (_, args) = parse_literal_atom(inner, &vars)?;
                if positive || args.len() != 2 {
                    return Err(PddlError::Unsupported(format!("equality literal at {}:{}", inner.line, inner.col)));
                }
                inequalities.insert((args[0].min(args[1]), args[0].max(args[1])));
                continue;
            }
            let (name, args) = parse_literal_atom(inner, &vars)?;
            if let Some(t) = name.strip_prefix(HAS_TYPE) {
                if !positive || args.len() != 1 {
                    return Err(inner.error("type membership must be a positive unary literal"));
                }
                if !scope.hierarchy.contains(t) {
                    return Err(inner.error(format!("undeclared type {t}")));
                }
                params[args[0]].types.insert(t.to_string());
                continue;
            }
            signature(&name, &args, &params, inner)?;
            preconditions.insert(Literal { atom: LiftedAtom { predicate: name, args }, positive });
        }
    }
    let mut add = BTreeSet::new();
    let mut delete = BTreeSet::new();
    if let Some(e) = eff_s {
        for lit in conjuncts(e)? {
            let (positive, inner) = match lit.head().as_deref() {
                Some("not") => (false, lit.list().unwrap().get(1).ok_or_else(|| lit.error("`not` takes one formula"))?),
                Some("when" | "forall" | "increase" | "decrease") => {
                    return Err(PddlError::Unsupported(format!("{} effect at {}:{}", lit.head().unwrap(), lit.line, lit.col)))
                }
                _ => (true, lit),
            };
            let (name, args) = parse_literal_atom(inner, &vars)?;
            signature(&name, &args, &params, inner)?;
            let a = LiftedAtom { predicate: name, args };
            if positive {
                add.insert(a);
            } else {
                delete.insert(a);
            }
        }
    }
    Ok(Operator {
        skill: skill_of(&name).to_string(),
        name,
        skill_arity: 0,
        params,
        preconditions,
        inequalities,
        add,
        delete,
        provenance: Vec::new(),
    })
}

fn define_body<'a>(doc: &'a sexpr::Document, kind: &str) -> Result<(String, &'a [Sexp])> {
    let [form] = doc.forms.as_slice() else {
        return Err(PddlError::Invalid(format!("expected exactly one (define ...) form, found {}", doc.forms.len())));
    };
    let items = form.list().filter(|_| form.head().as_deref() == Some("define")).ok_or_else(|| form.error("expected (define ...)"))?;
    let header = items.get(1).ok_or_else(|| form.error("missing header"))?;
    let h = header.list().filter(|l| l.len() == 2 && header.head().as_deref() == Some(kind));
    let h = h.ok_or_else(|| header.error(format!("expected ({kind} <name>)")))?;
    Ok((expect_atom(&h[1], "name")?.to_string(), &items[2..]))
}

pub fn parse_domain(text: &str) -> Result<Domain> {
    let doc = read(text)?;
    let (name, sections) = define_body(&doc, "domain")?;
    let mut hierarchy = TypeHierarchy::new();
    let mut predicates: BTreeMap<String, Predicate> = BTreeMap::new();
    let mut actions = Vec::new();
    for sec in sections {
        match sec.head().as_deref() {
            Some(":requirements") => {
                for r in &sec.list().unwrap()[1..] {
                    let r = expect_atom(r, "requirement")?.to_ascii_lowercase();
                    if !REQUIREMENTS.contains(&r.as_str()) {
                        return Err(PddlError::Unsupported(format!("requirement {r}")));
                    }
                }
            }
            Some(":types") => {
                let pairs: Vec<(String, String)> =
                    typed_list(&sec.list().unwrap()[1..])?.into_iter().map(|(c, p, _)| (c.to_ascii_lowercase(), p)).collect();
                hierarchy = build_hierarchy(&pairs)?;
            }
            Some(":predicates") => {
                for p in &sec.list().unwrap()[1..] {
                    let items = p.list().ok_or_else(|| p.error("expected a predicate declaration"))?;
                    let pname = expect_atom(items.first().ok_or_else(|| p.error("empty declaration"))?, "predicate name")?.to_ascii_lowercase();
                    if pname.starts_with(HAS_TYPE) {
                        continue;
                    }
                    let mut tys = Vec::new();
                    for (_, t, at) in typed_list(&items[1..])? {
                        if !hierarchy.contains(&t) {
                            return Err(at.error(format!("undeclared type {t}")));
                        }
                        tys.push(t);
                    }
                    let sem = doc.comments.get(&p.line).cloned().unwrap_or_default();
                    let refs: Vec<&str> = tys.iter().map(String::as_str).collect();
                    if predicates.insert(pname.clone(), Predicate::new(&pname, &refs, &sem)).is_some() {
                        return Err(p.error(format!("predicate {pname} declared twice")));
                    }
                }
            }
            Some(":action") => actions.push(sec),
            Some(other) => return Err(PddlError::Unsupported(format!("domain section {other}"))),
            None => return Err(sec.error("expected a domain section")),
        }
    }
    let mut scope = Scope { hierarchy: &mut hierarchy, predicates: &mut predicates, lenient: false };
    let mut operators = Vec::new();
    for a in actions {
        operators.push(parse_action_form(a, &mut scope)?);
    }
    let model = Model::new(predicates.into_values().collect(), operators);
    Ok(Domain { name, hierarchy, model })
}

/// Parses one bare `(:action ...)` form. Undeclared types are placed under
/// the root and undeclared predicates get signatures from their first use.
pub fn parse_action(text: &str) -> Result<(Operator, TypeHierarchy, Vec<Predicate>)> {
    let doc = read(text)?;
    let form = match doc.forms.as_slice() {
        [f] if f.head().as_deref() == Some(":action") => f,
        _ => return Err(PddlError::Invalid("expected a single (:action ...) form".into())),
    };
    let mut hierarchy = TypeHierarchy::new();
    let mut predicates = BTreeMap::new();
    let op = parse_action_form(form, &mut Scope { hierarchy: &mut hierarchy, predicates: &mut predicates, lenient: true })?;
    Ok((op, hierarchy, predicates.into_values().collect()))
}

/// Declared type of an object: the lexicographically first of its most
/// specific types.
pub fn dominant_type(world: &World, object: &str) -> Option<String> {
    let o = world.object(object)?;
    world.hierarchy.minimal(&o.types).into_iter().next()
}

fn ground_text(a: &GroundAtom) -> String {
    atom_text(&a.predicate, a.args.iter().map(|x| sanitize(x)))
}

/// Problem file over the world's objects. `has_type_*` facts are emitted
/// for every secondary parameter type the model uses.
pub fn emit_problem(name: &str, world: &World, model: &Model, init: &AbstractState, goal: &AbstractGoal) -> Result<String> {
    check_collisions("object", world.objects.iter().map(|o| (o.name.as_str(), sanitize(&o.name))))?;
    let known: BTreeSet<&str> = model.predicates.iter().map(|p| p.name.as_str()).collect();
    let check = |a: &GroundAtom| -> Result<()> {
        if !known.contains(a.predicate.as_str()) {
            return Err(PddlError::Invalid(format!("atom {a} uses a predicate outside the model")));
        }
        match a.args.iter().find(|x| world.object(x).is_none()) {
            Some(x) => Err(PddlError::Invalid(format!("atom {a} mentions undeclared object {x}"))),
            None => Ok(()),
        }
    };
    let mut facts = Vec::new();
    for a in &init.atoms {
        check(a)?;
        facts.push(ground_text(a));
    }
    for t in secondary_types(model) {
        for o in world.objects.iter().filter(|o| o.fits(&world.hierarchy, &t)) {
            facts.push(format!("({HAS_TYPE}{} {})", sanitize(&t), sanitize(&o.name)));
        }
    }
    facts.sort();
    let mut goals = Vec::new();
    for a in &goal.pos {
        check(a)?;
        goals.push(ground_text(a));
    }
    let mut neg = Vec::new();
    for a in &goal.neg {
        check(a)?;
        neg.push(format!("(not {})", ground_text(a)));
    }
    goals.sort();
    neg.sort();
    goals.extend(neg);
    let mut by_type: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for o in &world.objects {
        let t = dominant_type(world, &o.name).unwrap_or_else(|| ROOT_TYPE.to_string());
        by_type.entry(sanitize(&t)).or_default().push(sanitize(&o.name));
    }
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", sanitize(name));
    let _ = writeln!(out, "  (:domain {DOMAIN_NAME})");
    let objs: Vec<String> = by_type.into_iter().map(|(t, mut os)| {
        os.sort();
        format!("{} - {t}", os.join(" "))
    }).collect();
    if objs.is_empty() {
        let _ = writeln!(out, "  (:objects)");
    } else {
        let _ = writeln!(out, "  (:objects\n    {})", objs.join("\n    "));
    }
    if facts.is_empty() {
        let _ = writeln!(out, "  (:init)");
    } else {
        let _ = writeln!(out, "  (:init\n    {})", facts.join("\n    "));
    }
    block(&mut out, "    ", "  (:goal", &goals, ")");
    out.push_str(")\n");
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    /// (object, declared type) in file order.
    pub objects: Vec<(String, String)>,
    pub init: Vec<GroundAtom>,
    pub goal_pos: Vec<GroundAtom>,
    pub goal_neg: Vec<GroundAtom>,
}

fn ground(s: &Sexp) -> Result<GroundAtom> {
    let items = s.list().ok_or_else(|| s.error("expected a ground atom"))?;
    let name = expect_atom(items.first().ok_or_else(|| s.error("empty atom"))?, "predicate name")?.to_ascii_lowercase();
    let args = items[1..].iter().map(|a| expect_atom(a, "object").map(str::to_ascii_lowercase)).collect::<Result<Vec<_>>>()?;
    Ok(GroundAtom { predicate: name, args })
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    let doc = read(text)?;
    let (name, sections) = define_body(&doc, "problem")?;
    let mut p = Problem { name, domain: String::new(), objects: Vec::new(), init: Vec::new(), goal_pos: Vec::new(), goal_neg: Vec::new() };
    for sec in sections {
        let body = &sec.list().ok_or_else(|| sec.error("expected a problem section"))?[1..];
        match sec.head().as_deref() {
            Some(":domain") => p.domain = expect_atom(body.first().ok_or_else(|| sec.error("missing domain name"))?, "domain name")?.to_string(),
            Some(":objects") => p.objects = typed_list(body)?.into_iter().map(|(o, t, _)| (o.to_ascii_lowercase(), t)).collect(),
            Some(":init") => {
                for f in body {
                    p.init.push(ground(f)?);
                }
            }
            Some(":goal") => {
                let g = body.first().ok_or_else(|| sec.error("missing goal"))?;
                for lit in conjuncts(g)? {
                    if lit.head().as_deref() == Some("not") {
                        p.goal_neg.push(ground(lit.list().unwrap().get(1).ok_or_else(|| lit.error("`not` takes one formula"))?)?);
                    } else {
                        p.goal_pos.push(ground(lit)?);
                    }
                }
            }
            Some(other) => return Err(PddlError::Unsupported(format!("problem section {other}"))),
            None => return Err(sec.error("expected a problem section")),
        }
    }
    Ok(p)
}
