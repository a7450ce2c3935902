//! Run configuration: a JSON file mirroring the command-line flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use skillsym_core::explore::ExplorerKind;
use skillsym_core::learn::LearnConfig;
use skillsym_core::plan::{DEFAULT_K, DEFAULT_NODE_CAP};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    #[default]
    Kitchen,
    Transcript,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    #[default]
    Scripted,
    Fm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub env: EnvKind,
    pub oracle: OracleKind,
    pub noise: f64,
    pub iterations: usize,
    pub batch: usize,
    pub steps: usize,
    pub threshold: f64,
    pub seed: u64,
    pub explorer: ExplorerKind,
    pub extra_precondition_params: bool,
    pub attempt_cap: usize,
    /// Planning budget: candidate plans tried per task.
    pub budget: usize,
    pub node_cap: usize,
    pub repeats: usize,
    pub export_pddl: bool,
    pub record_transcript: bool,
    pub transcript: Option<PathBuf>,
    pub world: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let l = LearnConfig::default();
        Config {
            env: EnvKind::Kitchen,
            oracle: OracleKind::Scripted,
            noise: 0.0,
            iterations: l.iterations,
            batch: l.batch,
            steps: l.steps,
            threshold: l.threshold,
            seed: l.seed,
            explorer: l.explorer,
            extra_precondition_params: l.extra_precondition_params,
            attempt_cap: l.attempt_cap,
            budget: DEFAULT_K,
            node_cap: DEFAULT_NODE_CAP,
            repeats: 1,
            export_pddl: false,
            record_transcript: false,
            transcript: None,
            world: None,
            tasks: None,
            prompts: None,
        }
    }
}

impl Config {
    pub fn learn(&self) -> LearnConfig {
        LearnConfig {
            iterations: self.iterations,
            batch: self.batch,
            steps: self.steps,
            threshold: self.threshold,
            seed: self.seed,
            explorer: self.explorer,
            extra_precondition_params: self.extra_precondition_params,
            attempt_cap: self.attempt_cap,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.learn().validate().map_err(|e| e.to_string())?;
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(format!("noise must lie in [0, 1], got {}", self.noise));
        }
        if self.budget == 0 {
            return Err("budget must be positive".into());
        }
        if self.repeats == 0 {
            return Err("repeats must be positive".into());
        }
        if self.env == EnvKind::Transcript && self.transcript.is_none() {
            return Err("--env transcript needs --transcript <file>".into());
        }
        if self.env == EnvKind::Transcript && self.explorer == ExplorerKind::Random {
            return Err("a transcript can only replay its recorded sequences".into());
        }
        Ok(())
    }
}

/// Flag values that override the config file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// JSON config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub env: Option<EnvKind>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleKind>,
    /// Probability that the scripted proposer offers a distractor.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Candidate sequences per iteration.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Steps per candidate sequence.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Acceptance threshold for invented predicates.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Planning budget (candidate plans per task).
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub node_cap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_explorer)]
    pub explorer: Option<ExplorerKind>,
    #[arg(long)]
    pub extra_precondition_params: bool,
    #[arg(long)]
    pub export_pddl: bool,
    /// Also write transcript.jsonl with every classifier verdict.
    #[arg(long)]
    pub record_transcript: bool,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// World JSON for transcript replay (defaults to the kitchen world).
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Task JSON (defaults to the built-in kitchen suite).
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    /// Directory of prompt overrides (`<name>.txt`).
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

fn parse_explorer(s: &str) -> Result<ExplorerKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown explorer `{s}` (pareto, random, first)"))
}

impl Overrides {
    pub fn apply(&self, mut c: Config) -> Config {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f.clone() { c.$f = v; } )* };
        }
        set!(env, oracle, noise, iterations, batch, steps, threshold, budget, node_cap, seed, explorer, repeats);
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f.clone(); } )* };
        }
        set_opt!(transcript, world, tasks, prompts);
        c.extra_precondition_params |= self.extra_precondition_params;
        c.export_pddl |= self.export_pddl;
        c.record_transcript |= self.record_transcript;
        c
    }

    /// Config file (if any) with flags applied, validated.
    pub fn resolve(&self) -> Result<Config, String> {
        let base = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => Config::default(),
        };
        let c = self.apply(base);
        c.validate()?;
        Ok(c)
    }
}
