//! Executable soundness, consistency and completeness checks, and the
//! sample-complexity calculator.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::formal::{alpha_holds, zeta_holds, AbstractState, Dataset, Model, Transition, World};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessViolation {
    pub operator: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub pass: bool,
    pub checked: usize,
    pub violations: Vec<SoundnessViolation>,
}

fn supports(model: &Model, world: &World, op_index: usize, t: &Transition, abs: &(AbstractState, AbstractState)) -> bool {
    let op = &model.operators[op_index];
    t.success
        && t.instance.skill == op.skill
        && op.bindings_for(world, &t.instance).iter().any(|b| {
            let g = op.ground(op_index, b);
            abs.0.satisfies(&g.pre).unwrap_or(false) && abs.0.apply(&g).is_ok_and(|s| s.atoms == abs.1.atoms)
        })
}

/// Every operator must be backed by an observed success whose before-state
/// satisfies its preconditions and whose abstract change equals its effects.
/// When provenance is recorded each listed transition must qualify;
/// otherwise one supporting success of the skill suffices.
pub fn check_soundness(model: &Model, world: &World, dataset: &Dataset, abs: &[(AbstractState, AbstractState)]) -> SoundnessReport {
    let mut violations = Vec::new();
    for (i, op) in model.operators.iter().enumerate() {
        if op.provenance.is_empty() {
            if !dataset.of_skill(&op.skill).any(|t| supports(model, world, i, t, &abs[t.id])) {
                violations.push(SoundnessViolation { operator: op.name.clone(), reason: "no supporting transition".into() });
            }
            continue;
        }
        for &id in &op.provenance {
            let ok = dataset.transitions.get(id).is_some_and(|t| abs.get(id).is_some_and(|a| supports(model, world, i, t, a)));
            if !ok {
                violations.push(SoundnessViolation {
                    operator: op.name.clone(),
                    reason: alloc::format!("transition {id} does not support it"),
                });
            }
        }
    }
    SoundnessReport { pass: violations.is_empty(), checked: model.operators.len(), violations }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MismatchSide {
    Initiation,
    Termination,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub transition: usize,
    pub skill: String,
    pub side: MismatchSide,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub pass: bool,
    pub mismatches: Vec<Mismatch>,
    /// Mismatches of skills never observed succeeding; they do not fail
    /// the check.
    pub exempt: Vec<Mismatch>,
}

/// α must equal the observed outcome on every before-state and ζ must hold
/// on every successful after-state.
pub fn check_consistency(model: &Model, world: &World, dataset: &Dataset, abs: &[(AbstractState, AbstractState)]) -> ConsistencyReport {
    let succeeded: BTreeSet<&str> = dataset.transitions.iter().filter(|t| t.success).map(|t| t.instance.skill.as_str()).collect();
    let mut report = ConsistencyReport::default();
    for t in &dataset.transitions {
        let (before, after) = &abs[t.id];
        let mut sides = Vec::new();
        if alpha_holds(model, world, &t.instance, before) != t.success {
            sides.push(MismatchSide::Initiation);
        }
        if t.success && !zeta_holds(model, world, &t.instance, after) {
            sides.push(MismatchSide::Termination);
        }
        for side in sides {
            let m = Mismatch { transition: t.id, skill: t.instance.skill.clone(), side };
            if succeeded.contains(t.instance.skill.as_str()) {
                report.mismatches.push(m);
            } else {
                report.exempt.push(m);
            }
        }
    }
    report.pass = report.mismatches.is_empty();
    report
}

/// Fraction of labelled transitions where predicted initiation disagrees
/// with the outcome, or a success lands outside predicted termination.
/// Zero for an empty set.
pub fn empirical_d_compl(model: &Model, world: &World, dataset: &Dataset, abs: &[(AbstractState, AbstractState)]) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    let missed = dataset
        .transitions
        .iter()
        .filter(|t| {
            let (before, after) = &abs[t.id];
            alpha_holds(model, world, &t.instance, before) != t.success
                || (t.success && !zeta_holds(model, world, &t.instance, after))
        })
        .count();
    missed as f64 / dataset.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBound {
    /// Exact sample count when it fits in 2^53.
    pub n: Option<u64>,
    /// ln n; always populated.
    pub ln_n: f64,
    /// log base 3 of A_max, i.e. p_max · |O|^mu_max.
    pub log3_a_max: f64,
    /// ln of log3|H| = p_max · A_max · |Ω| · |O|^mu_max.
    pub ln_log3_h: f64,
    /// Set when the exact value overflowed and only logs are meaningful.
    pub log_space: bool,
}

const EXACT: f64 = 9_007_199_254_740_992.0;

fn ln_add(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// n = ⌈(1/ε)(p · A_max · |Ω| · |O|^μ · ln 3 + ln(1/δ))⌉ with
/// A_max = 3^(p · |O|^μ). ε and δ lie in (0, 1].
pub fn sample_bound(epsilon: f64, delta: f64, p_max: u64, omega_count: u64, object_count: u64, mu_max: u32) -> Result<SampleBound> {
    let unit = |x: f64| x > 0.0 && x <= 1.0;
    if !unit(epsilon) || !unit(delta) {
        return Err(Error::config("epsilon and delta must lie in (0, 1]"));
    }
    let ln3 = libm::log(3.0);
    let x = libm::pow(object_count as f64, mu_max as f64);
    let log3_a_max = p_max as f64 * x;
    let ln_inv_delta = -libm::log(delta);
    let ln_inv_eps = -libm::log(epsilon);
    let a_max = libm::pow(3.0, log3_a_max);
    let h = p_max as f64 * a_max * omega_count as f64 * x;
    let ln_log3_h = libm::log(p_max as f64) + log3_a_max * ln3 + libm::log(omega_count as f64) + libm::log(x);
    let inner = h * ln3 + ln_inv_delta;
    let raw = inner / epsilon;
    if h.is_finite() && raw.is_finite() && raw <= EXACT {
        let n = libm::ceil(raw);
        return Ok(SampleBound { n: Some(n as u64), ln_n: libm::log(n), log3_a_max, ln_log3_h, log_space: false });
    }
    let ln_inner = ln_add(ln_log3_h + libm::log(ln3), if ln_inv_delta > 0.0 { libm::log(ln_inv_delta) } else { f64::NEG_INFINITY });
    Ok(SampleBound { n: None, ln_n: ln_inv_eps + ln_inner, log3_a_max, ln_log3_h, log_space: true })
}
