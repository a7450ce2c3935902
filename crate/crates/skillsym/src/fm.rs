//! Chat-completion client and the foundation-model proposer, classifier
//! and sequence generator built on it.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde_json::{json, Value};
use skillsym_core::explore::{GenerationContext, PairCountMatrix, SequenceSource};
use skillsym_core::oracle::{ConflictKind, Proposal, ProposalRequest, Proposer};
use skillsym_core::{
    ground_predicate, Classifier, Error as CoreError, GroundAtom, Model, Predicate, SkillInstance, StateHandle, World,
};

use crate::template::{self, Templates};

pub const ENV_ENDPOINT: &str = "ORACLE_ENDPOINT";
pub const ENV_MODEL: &str = "ORACLE_MODEL";
pub const ENV_API_KEY: &str = "ORACLE_API_KEY";

pub const DEFAULT_AGENT: &str = "A single-armed robot in a simulated kitchen";
pub const DEFAULT_ENV_DESCRIPTION: &str =
    "The kitchen has a cutting board, a stove and a table. Items are stacked on stations; only the top item of a stack can be picked.";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FmError {
    #[error("missing environment variable {0}")]
    MissingVar(&'static str),
    #[error("transport: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Response(String),
    #[error(transparent)]
    Template(#[from] template::TemplateError),
}

impl From<FmError> for CoreError {
    fn from(e: FmError) -> Self {
        CoreError::Oracle(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Content {
    Text(String),
    /// URL or `data:` URL of an image.
    Image(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub role: &'static str,
    pub content: Vec<Content>,
}

impl Message {
    pub fn system(text: String) -> Self {
        Message { role: "system", content: vec![Content::Text(text)] }
    }

    pub fn user(content: Vec<Content>) -> Self {
        Message { role: "user", content }
    }
}

/// A failed request; `retryable` marks rate limits, server errors and
/// network faults.
#[derive(Clone, Debug)]
pub struct TransportError {
    pub retryable: bool,
    pub msg: String,
}

pub trait Transport: Send {
    fn post(&self, body: &Value) -> Result<Value, TransportError>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(endpoint: &str, api_key: Option<String>, timeout: Duration) -> Self {
        HttpTransport { agent: ureq::AgentBuilder::new().timeout(timeout).build(), endpoint: endpoint.into(), api_key }
    }
}

impl Transport for HttpTransport {
    fn post(&self, body: &Value) -> Result<Value, TransportError> {
        let mut req = self.agent.post(&self.endpoint).set("Content-Type", "application/json");
        if let Some(k) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {k}"));
        }
        match req.send_json(body) {
            Ok(resp) => resp.into_json().map_err(|e| TransportError { retryable: false, msg: e.to_string() }),
            Err(ureq::Error::Status(code, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                Err(TransportError { retryable: code == 429 || code >= 500, msg: format!("HTTP {code}: {text}") })
            }
            Err(e) => Err(TransportError { retryable: true, msg: e.to_string() }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChatConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
}

impl ChatConfig {
    pub fn from_env() -> Result<Self, FmError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, FmError> {
        let nonempty = |k| get(k).filter(|v| !v.trim().is_empty());
        Ok(ChatConfig {
            endpoint: nonempty(ENV_ENDPOINT).ok_or(FmError::MissingVar(ENV_ENDPOINT))?,
            model: nonempty(ENV_MODEL).ok_or(FmError::MissingVar(ENV_MODEL))?,
            api_key: nonempty(ENV_API_KEY),
            timeout: Duration::from_secs(120),
            retries: 3,
            backoff: Duration::from_millis(500),
        })
    }
}

pub struct ChatClient {
    model: String,
    transport: Box<dyn Transport>,
    retries: u32,
    backoff: Duration,
}

impl ChatClient {
    pub fn new(cfg: &ChatConfig) -> Self {
        let t = HttpTransport::new(&cfg.endpoint, cfg.api_key.clone(), cfg.timeout);
        Self::with_transport(&cfg.model, Box::new(t), cfg.retries, cfg.backoff)
    }

    pub fn with_transport(model: &str, transport: Box<dyn Transport>, retries: u32, backoff: Duration) -> Self {
        ChatClient { model: model.into(), transport, retries, backoff }
    }

    pub fn request_body(&self, messages: &[Message]) -> Value {
        let msgs: Vec<Value> = messages
            .iter()
            .map(|m| {
                let parts: Vec<Value> = m
                    .content
                    .iter()
                    .map(|c| match c {
                        Content::Text(t) => json!({"type": "text", "text": t}),
                        Content::Image(u) => json!({"type": "image_url", "image_url": {"url": u}}),
                    })
                    .collect();
                json!({"role": m.role, "content": parts})
            })
            .collect();
        json!({"model": self.model, "temperature": 0, "messages": msgs})
    }

    /// Sends the conversation and returns the first choice's text.
    pub fn complete(&self, messages: &[Message]) -> Result<String, FmError> {
        let body = self.request_body(messages);
        let mut attempt = 0;
        loop {
            match self.transport.post(&body) {
                Ok(v) => return response_text(&v),
                Err(e) if e.retryable && attempt < self.retries => {
                    log::warn!("chat request failed ({}), retry {}/{}", e.msg, attempt + 1, self.retries);
                    std::thread::sleep(self.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(FmError::Transport(e.msg)),
            }
        }
    }
}

fn response_text(v: &Value) -> Result<String, FmError> {
    let content = &v["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts.iter().filter_map(|p| p["text"].as_str()).collect::<Vec<_>>().join("")),
        _ => Err(FmError::Response(v.to_string())),
    }
}

/// Image payloads are attached as images; anything else as text.
pub fn observation(state: &StateHandle) -> Content {
    let p = &*state.payload;
    if p.starts_with("data:image/") || p.starts_with("http://") || p.starts_with("https://") {
        Content::Image(p.to_string())
    } else {
        Content::Text(format!("Observation:\n{p}"))
    }
}

/// Shared prompt context.
pub struct Prompting {
    pub client: ChatClient,
    pub templates: Templates,
    pub agent: String,
    pub env_description: String,
}

impl Prompting {
    pub fn new(client: ChatClient, templates: Templates) -> Self {
        Prompting { client, templates, agent: DEFAULT_AGENT.into(), env_description: DEFAULT_ENV_DESCRIPTION.into() }
    }

    fn system(&self) -> Result<Message, FmError> {
        let v = BTreeMap::from([("AGENT_DESCRIPTION", self.agent.clone())]);
        Ok(Message::system(self.templates.render(template::SYSTEM, &v)?))
    }

    fn ask(&self, user: Vec<Content>) -> Result<String, FmError> {
        self.client.complete(&[self.system()?, Message::user(user)])
    }
}

fn identifier(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_ascii_alphabetic() || f == '_') && c.all(|x| x.is_ascii_alphanumeric() || x == '_')
}

fn pred_line(p: &Predicate) -> String {
    if p.semantics.is_empty() {
        format!("`{}`", p.signature())
    } else {
        format!("`{}`: {}", p.signature(), p.semantics)
    }
}

/// Parses the last `` `name(params)`: meaning `` line. Parameters name types,
/// optionally as `?type`, `var - type` or `var: type`.
pub fn parse_proposal(text: &str, world: &World) -> Option<Predicate> {
    text.lines().rev().find_map(|line| {
        let line = line.trim().trim_start_matches(['-', '*', ' ']);
        let (head, meaning) = if let Some(rest) = line.strip_prefix('`') {
            let (h, m) = rest.split_once('`')?;
            (h, m.trim_start().strip_prefix(':')?)
        } else {
            let close = line.find(')')?;
            (&line[..=close], line[close + 1..].trim_start().strip_prefix(':')?)
        };
        let open = head.find('(')?;
        let name = head[..open].trim();
        let inner = head[open + 1..].trim().strip_suffix(')')?;
        if !identifier(name) {
            return None;
        }
        let mut params = Vec::new();
        for raw in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let ty = raw.rsplit_once(" - ").map(|(_, t)| t).or_else(|| raw.split_once(':').map(|(_, t)| t)).unwrap_or(raw);
            let ty = ty.trim().trim_start_matches('?').to_ascii_lowercase();
            if !world.hierarchy.contains(&ty) {
                return None;
            }
            params.push(ty);
        }
        let meaning = meaning.trim().trim_end_matches('.').trim();
        let refs: Vec<&str> = params.iter().map(String::as_str).collect();
        Some(Predicate::new(&name.to_ascii_lowercase(), &refs, meaning))
    })
}

pub struct FmProposer {
    pub prompting: Prompting,
}

impl FmProposer {
    pub fn prompt(&self, req: &ProposalRequest<'_>) -> Result<Vec<Content>, FmError> {
        let outcome = |ok: bool| if ok { "succeeded" } else { "failed" }.to_string();
        let mut tried: Vec<&str> = req.rejected.iter().map(String::as_str).collect();
        tried.sort();
        let v = BTreeMap::from([
            ("AGENT_DESCRIPTION", self.prompting.agent.clone()),
            ("LIFTED_SKILL", format!("{}({})", req.skill.name, req.skill.params.join(", "))),
            ("GROUNDED_SKILL_1", req.success.instance.to_string()),
            ("SUCCESS_1", outcome(req.success.success)),
            ("GROUNDED_SKILL_2", req.failure.instance.to_string()),
            ("SUCCESS_2", outcome(req.failure.success)),
            ("PRED_LIST", or_none(req.existing.iter().map(pred_line).collect())),
            ("TRIED_PRED", or_none(tried.into_iter().map(String::from).collect())),
            ("PARAMETERS", req.skill.params.join(", ")),
        ]);
        let (name, a, b) = match req.kind {
            ConflictKind::Precondition => (template::INVENT_PRECONDITION, &req.success.before, &req.failure.before),
            ConflictKind::Effect => (template::INVENT_EFFECT, &req.success.after, &req.failure.after),
        };
        Ok(vec![Content::Text(self.prompting.templates.render(name, &v)?), observation(a), observation(b)])
    }
}

fn or_none(lines: Vec<String>) -> String {
    if lines.is_empty() {
        "none".into()
    } else {
        lines.join("\n")
    }
}

impl Proposer for FmProposer {
    fn propose(&mut self, req: &ProposalRequest<'_>) -> skillsym_core::Result<Proposal> {
        let text = self.prompting.ask(self.prompt(req)?)?;
        match parse_proposal(&text, req.world) {
            Some(p) => Ok(Proposal::Candidate(p)),
            None => {
                log::warn!("nonconforming proposal for {}: {text:?}", req.skill.name);
                Ok(Proposal::Exhausted)
            }
        }
    }
}

/// `candidate` itself, or the unique known name within edit distance 1.
pub fn correct_name<'a>(candidate: &str, known: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    let mut near = Vec::new();
    for k in known {
        if k.eq_ignore_ascii_case(candidate) {
            return Some(k);
        }
        if strsim::levenshtein(&k.to_ascii_lowercase(), &candidate.to_ascii_lowercase()) == 1 {
            near.push(k);
        }
    }
    match near.as_slice() {
        [one] => Some(one),
        _ => None,
    }
}

/// Parses a stage-2 summary into atoms over `vocab`. Unknown predicates and
/// atoms that do not ground over the world are dropped; object names are
/// corrected at edit distance 1. A response with no atom-shaped line at all
/// is an error unless it is blank or says "none".
pub fn parse_atoms(text: &str, world: &World, vocab: &[Predicate]) -> Result<BTreeSet<GroundAtom>, String> {
    let names: Vec<&str> = world.objects.iter().map(|o| o.name.as_str()).collect();
    let mut out = BTreeSet::new();
    let mut shaped = 0;
    let mut content = 0;
    for line in text.lines() {
        let l = line.trim().trim_start_matches(['-', '*', '`', ' ']).trim_end_matches(['`', '.', ',', ';']);
        let l = l.trim_start_matches(|c: char| c.is_ascii_digit()).trim_start_matches(['.', ')', ' ']);
        if l.is_empty() || l.eq_ignore_ascii_case("none") {
            continue;
        }
        content += 1;
        let Some(a) = GroundAtom::parse(l) else { continue };
        shaped += 1;
        let Some(p) = vocab.iter().find(|p| p.name.eq_ignore_ascii_case(&a.predicate)) else { continue };
        let Some(args) = a.args.iter().map(|x| correct_name(x, names.iter().copied())).collect::<Option<Vec<&str>>>() else {
            continue;
        };
        let atom = GroundAtom::new(&p.name, &args);
        if ground_predicate(&world.hierarchy, p, &world.objects).contains(&atom) {
            out.insert(atom);
        }
    }
    if content > 0 && shaped == 0 {
        return Err(text.to_string());
    }
    Ok(out)
}

/// Two-stage classifier. Verdicts are cached per (state, predicate), so
/// each predicate is asked about at most once per state.
pub struct FmClassifier {
    pub prompting: Prompting,
    pub world: World,
    cache: BTreeMap<(u64, String), BTreeSet<GroundAtom>>,
}

impl FmClassifier {
    pub fn new(prompting: Prompting, world: World) -> Self {
        FmClassifier { prompting, world, cache: BTreeMap::new() }
    }

    pub fn stage1(&self, preds: &[&Predicate]) -> Result<String, FmError> {
        let objects: Vec<String> = self
            .world
            .objects
            .iter()
            .map(|o| format!("{}: {}", o.name, o.types.iter().cloned().collect::<Vec<_>>().join(", ")))
            .collect();
        let v = BTreeMap::from([
            ("ENVIRONMENTAL_DESCRIPTION", self.prompting.env_description.clone()),
            ("OBJECTS", objects.join("\n")),
            ("PREDICATES", preds.iter().map(|p| pred_line(p)).collect::<Vec<_>>().join("\n")),
        ]);
        Ok(self.prompting.templates.render(template::EVALUATE_STEP1, &v)?)
    }

    pub fn stage2(&self, preds: &[&Predicate], response: &str) -> Result<String, FmError> {
        let v = BTreeMap::from([
            ("OBJECT_NAMES", self.world.objects.iter().map(|o| o.name.as_str()).collect::<Vec<_>>().join(", ")),
            ("PRED_NAMES", preds.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", ")),
            ("RESPONSE", response.to_string()),
        ]);
        Ok(self.prompting.templates.render(template::EVALUATE_STEP2, &v)?)
    }

    fn query(&mut self, preds: &[&Predicate], state: &StateHandle) -> Result<BTreeSet<GroundAtom>, CoreError> {
        let first = self.prompting.ask(vec![Content::Text(self.stage1(preds)?), observation(state)])?;
        let summary = self.prompting.ask(vec![Content::Text(self.stage2(preds, &first)?)])?;
        let owned: Vec<Predicate> = preds.iter().map(|p| (*p).clone()).collect();
        parse_atoms(&summary, &self.world, &owned).map_err(|raw| CoreError::Classifier {
            atom: owned.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", "),
            reason: format!("unparseable summary: {raw:?}"),
        })
    }
}

impl Classifier for FmClassifier {
    fn evaluate_batch(
        &mut self,
        vocab: &[Predicate],
        atoms: &[GroundAtom],
        state: &StateHandle,
    ) -> skillsym_core::Result<Vec<bool>> {
        let wanted: BTreeSet<&str> = atoms.iter().map(|a| a.predicate.as_str()).collect();
        let mut missing = Vec::new();
        for name in wanted {
            if !self.cache.contains_key(&(state.id, name.to_string())) {
                let p = vocab.iter().find(|p| p.name == name).ok_or_else(|| CoreError::Classifier {
                    atom: name.to_string(),
                    reason: "predicate missing from vocabulary".into(),
                })?;
                missing.push(p);
            }
        }
        if !missing.is_empty() {
            let found = self.query(&missing, state)?;
            for p in &missing {
                let mine = found.iter().filter(|a| a.predicate == p.name).cloned().collect();
                self.cache.insert((state.id, p.name.clone()), mine);
            }
        }
        Ok(atoms.iter().map(|a| self.cache[&(state.id, a.predicate.clone())].contains(a)).collect())
    }
}

/// Parses `Skill Sequence N:` blocks of `Skill(arg, ...)` lines. Steps that
/// are not valid instances are skipped; empty sequences are dropped.
pub fn parse_sequences(text: &str, world: &World) -> Vec<Vec<SkillInstance>> {
    let skills: Vec<&str> = world.skills.iter().map(|s| s.name.as_str()).collect();
    let objects: Vec<&str> = world.objects.iter().map(|o| o.name.as_str()).collect();
    let mut out: Vec<Vec<SkillInstance>> = Vec::new();
    let mut current: Option<Vec<SkillInstance>> = None;
    for line in text.lines() {
        let l = line.trim().trim_matches(['*', '`']).trim();
        if l.to_ascii_lowercase().starts_with("skill sequence") {
            out.extend(current.take().filter(|s| !s.is_empty()));
            current = Some(Vec::new());
            continue;
        }
        let l = l.trim_start_matches(|c: char| c.is_ascii_digit()).trim_start_matches(['.', ')', '-', ' ']);
        let Some(a) = GroundAtom::parse(l) else { continue };
        let Some(skill) = correct_name(&a.predicate, skills.iter().copied()) else { continue };
        let Some(args) = a.args.iter().map(|x| correct_name(x, objects.iter().copied())).collect::<Option<Vec<&str>>>() else {
            continue;
        };
        let inst = SkillInstance::new(skill, &args);
        if world.validate_instance(&inst).is_ok() {
            current.get_or_insert_with(Vec::new).push(inst);
        }
    }
    out.extend(current.filter(|s| !s.is_empty()));
    out
}

fn describe_model(model: &Model) -> String {
    let lit = |op: &skillsym_core::Operator, a: &skillsym_core::LiftedAtom| {
        let args: Vec<String> = a.args.iter().map(|&i| format!("?{}", op.params[i].primary())).collect();
        format!("{}({})", a.predicate, args.join(", "))
    };
    let mut lines = Vec::new();
    for op in &model.operators {
        let pre: Vec<String> = op
            .preconditions
            .iter()
            .map(|l| if l.positive { lit(op, &l.atom) } else { format!("not {}", lit(op, &l.atom)) })
            .collect();
        let add: Vec<String> = op.add.iter().map(|a| lit(op, a)).collect();
        let del: Vec<String> = op.delete.iter().map(|a| lit(op, a)).collect();
        lines.push(format!(
            "{}: pre [{}] add [{}] delete [{}]",
            op.skill,
            pre.join(", "),
            add.join(", "),
            del.join(", ")
        ));
    }
    lines.join("\n")
}

pub struct FmGenerator {
    pub prompting: Prompting,
}

impl FmGenerator {
    pub fn prompt(&self, ctx: &GenerationContext<'_>, n: usize) -> Result<Vec<Content>, FmError> {
        let w = ctx.world;
        let skills: Vec<String> = w.skills.iter().map(|s| format!("{}({})", s.name, s.params.join(", "))).collect();
        let objects: Vec<String> = w
            .objects
            .iter()
            .map(|o| format!("{}: {}", o.name, o.types.iter().cloned().collect::<Vec<_>>().join(", ")))
            .collect();
        let least = PairCountMatrix::from_dataset(w, ctx.dataset).least_explored();
        let examples: Vec<String> = w.skills.iter().filter_map(|s| w.instances(s).first().map(|i| i.to_string())).collect();
        let mut env = self.prompting.env_description.clone();
        if !ctx.model.operators.is_empty() {
            env.push_str("\nLearned skill preconditions and effects:\n");
            env.push_str(&describe_model(ctx.model));
        }
        let v = BTreeMap::from([
            ("SKILL_PROMPT", skills.join("\n")),
            ("OBJECT_IN_SCENE", objects.join("\n")),
            ("ENV_DESCRIPTION", env),
            ("LEAST_EXPLORED_SKILLS", least.iter().map(|(a, b)| format!("({a}, {b})")).collect::<Vec<_>>().join(", ")),
            ("NUM_SEQUENCES", n.to_string()),
            ("NUM_STEPS", ctx.steps.to_string()),
            ("EXAMPLE_STEP_1", examples.first().cloned().unwrap_or_default()),
            ("EXAMPLE_STEP_2", examples.get(1).cloned().unwrap_or_default()),
        ]);
        Ok(vec![Content::Text(self.prompting.templates.render(template::PROPOSE_SEQUENCES, &v)?), observation(ctx.initial)])
    }
}

impl SequenceSource for FmGenerator {
    fn generate(&mut self, ctx: &GenerationContext<'_>, n: usize) -> skillsym_core::Result<Vec<Vec<SkillInstance>>> {
        let text = self.prompting.ask(self.prompt(ctx, n)?)?;
        let seqs = parse_sequences(&text, ctx.world);
        if seqs.is_empty() {
            return Err(CoreError::Oracle(format!("no usable skill sequence in response: {text:?}")));
        }
        Ok(seqs)
    }
}
