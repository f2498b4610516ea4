//! Command-line front end: TOML scenario configs, the experiment commands,
//! report files, and the bundled reproductions.
//!
//! Exit codes: 0 success, 1 when the learnability condition fails
//! (`γ = 0` for `separation`), 2 for usage, config and computation errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::complexity::{
    dimension_bound, dimension_for_bound, natarajan_dimension, natarajan_dimension_randomized, transition_dimension,
    weak_vc_major_dimension, NATARAJAN_CAP, VC_MAJOR_CAP,
};
use crate::error::{Error, Result};
use crate::joint::{default_rate_grid, difference_scenario, verify_no_free_separation, JointSpec};
use crate::learning::{bound_inputs, learning_curve, summarize, BoundInputs, CurveRecord, CurveSummary, EXACT_ETA_CAP};
use crate::losses::{ConcentrationSets, Loss};
use crate::scenario::{HypothesisClass, Labeling, Scenario};
use crate::separation::{
    concentration_degree, concentration_evidence, consistency, evidence_bound, identifiability_level,
    non_learnability_witness, separation_degree, EvidenceTable,
};
use crate::spaces::{format_extended, make_distribution, Distribution, FiniteSpace};
use crate::transition::{build_class, BuildOptions, ClassSpec, TransitionHypothesis};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_OUT: &str = "indsup-out";
pub const CURVE_HEADER: &str = "m,trial,seed,risk,bound,b,eta,d,delta";
pub const SUMMARY_HEADER: &str = "m,mean_risk,q05,q95,bound";

/// Bundled configs, by file name.
pub const BUNDLED_CONFIGS: &[(&str, &str)] = &[
    ("example-4-6.toml", include_str!("../configs/example-4-6.toml")),
    ("massart-noise.toml", include_str!("../configs/massart-noise.toml")),
    ("superset.toml", include_str!("../configs/superset.toml")),
    ("mixed-annotators.toml", include_str!("../configs/mixed-annotators.toml")),
    (
        "mixed-annotators-distinguished.toml",
        include_str!("../configs/mixed-annotators-distinguished.toml"),
    ),
    (
        "learning-from-difference.toml",
        include_str!("../configs/learning-from-difference.toml"),
    ),
];

pub const DEMOS: &[&str] = &[
    "example-4-6",
    "massart-noise",
    "superset",
    "mixed-annotators",
    "learning-from-difference",
    "non-learnable-sequence",
];

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED_CONFIGS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub scenario: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<DimensionConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evidence: Vec<EvidenceConfig>,
}

/// A space given by size (`x0, x1, ...`) or by explicit names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceConfig {
    Size(usize),
    Names(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub instances: SpaceConfig,
    pub labels: SpaceConfig,
    /// Instance weights; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<Vec<f64>>,
    /// Gold label of each instance, by name.
    pub h0: Vec<String>,
    pub t0: T0Config,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superset_cap: Option<usize>,
    pub hypotheses: HypothesisConfig,
    pub transitions: ClassSpec,
    #[serde(default)]
    pub loss: LossConfig,
}

/// The true transition: a member index, or a matrix that must match a
/// member within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum T0Config {
    Member(usize),
    Matrix(Vec<Vec<f64>>),
    PerInstance(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisConfig {
    AllFunctions,
    /// Each table lists a label name per instance.
    Explicit { tables: Vec<Vec<String>> },
    /// Binary thresholds over a one-dimensional embedding of the instances.
    #[serde(rename = "threshold_1d")]
    Threshold1d { embedding: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossConfig {
    #[default]
    CrossEntropy,
    Concentration { sets: SetsConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetsConfig {
    Rule(SetRule),
    /// `sets[i]` lists outcome names.
    Explicit(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetRule {
    /// `S_i` is the outcome named like label `i`.
    Diagonal,
    /// `S_i` holds every set-valued outcome `{..}` naming label `i`.
    Superset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DimensionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub natarajan_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vc_major_cap: Option<usize>,
    /// Fall back to a randomized Natarajan lower bound past the cap.
    #[serde(default)]
    pub randomized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceConfig {
    pub from: String,
    pub to: String,
    pub u: Vec<f64>,
}

fn config_error(path: &str, e: impl std::fmt::Display) -> Error {
    Error::Config {
        path: path.to_string(),
        message: e.to_string(),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| config_error("<document>", e.to_string().trim_end()))
}

/// Canonical TOML form; parsing it gives back the same config.
pub fn canonical_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| config_error("<document>", e))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_error(&path.display().to_string(), e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { message, .. } => Error::Config {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

fn space(cfg: &SpaceConfig, prefix: &str, path: &str) -> Result<FiniteSpace> {
    match cfg {
        SpaceConfig::Size(n) => FiniteSpace::indexed(prefix, *n),
        SpaceConfig::Names(names) => FiniteSpace::new(names.iter().cloned()),
    }
    .map_err(|e| config_error(path, e))
}

fn label_indices(space: &FiniteSpace, names: &[String], path: &str) -> Result<Vec<usize>> {
    names
        .iter()
        .enumerate()
        .map(|(k, n)| space.index_of(n).map_err(|e| config_error(&format!("{path}[{k}]"), e)))
        .collect()
}

fn superset_members(name: &str) -> Option<Vec<&str>> {
    let inner = name.strip_prefix('{')?.strip_suffix('}')?;
    Some(if inner.is_empty() { Vec::new() } else { inner.split(',').collect() })
}

fn resolve_sets(cfg: &SetsConfig, labels: &FiniteSpace, outcomes: &FiniteSpace) -> Result<ConcentrationSets> {
    const PATH: &str = "scenario.loss.sets";
    let sets: Vec<Vec<usize>> = match cfg {
        SetsConfig::Rule(SetRule::Diagonal) => labels
            .names()
            .iter()
            .map(|l| outcomes.index_of(l).map(|o| vec![o]).map_err(|e| config_error(PATH, e)))
            .collect::<Result<_>>()?,
        SetsConfig::Rule(SetRule::Superset) => labels
            .names()
            .iter()
            .map(|l| {
                let set: Vec<usize> = outcomes
                    .names()
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| superset_members(o).is_some_and(|m| m.contains(&l.as_str())))
                    .map(|(k, _)| k)
                    .collect();
                if set.is_empty() {
                    Err(config_error(PATH, format!("no set-valued outcome contains `{l}`")))
                } else {
                    Ok(set)
                }
            })
            .collect::<Result<_>>()?,
        SetsConfig::Explicit(lists) => {
            if lists.len() != labels.size() {
                return Err(config_error(
                    PATH,
                    format!("{} sets for {} labels", lists.len(), labels.size()),
                ));
            }
            lists
                .iter()
                .enumerate()
                .map(|(i, l)| label_indices(outcomes, l, &format!("{PATH}[{i}]")))
                .collect::<Result<_>>()?
        }
    };
    ConcentrationSets::new(&sets, outcomes.size()).map_err(|e| config_error(PATH, e))
}

/// Builds the scenario a config describes.
pub fn build_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    let instances = space(&cfg.instances, "x", "scenario.instances")?;
    let labels = space(&cfg.labels, "y", "scenario.labels")?;
    let (n, c) = (instances.size(), labels.size());
    let dx = match &cfg.dx {
        None => Distribution::uniform(n),
        Some(w) => make_distribution(&instances, w).map_err(|e| config_error("scenario.dx", e))?,
    };
    let hclass = match &cfg.hypotheses {
        HypothesisConfig::AllFunctions => HypothesisClass::all_functions(n, c),
        HypothesisConfig::Explicit { tables } => tables
            .iter()
            .enumerate()
            .map(|(k, t)| label_indices(&labels, t, &format!("scenario.hypotheses.tables[{k}]")))
            .collect::<Result<Vec<_>>>()
            .and_then(|t| HypothesisClass::explicit(t, n, c)),
        HypothesisConfig::Threshold1d { embedding } => {
            if c != 2 || embedding.len() != n {
                Err(Error::BadParams(format!(
                    "thresholds need two labels and one coordinate per instance ({n})"
                )))
            } else {
                HypothesisClass::threshold_1d(embedding)
            }
        }
    }
    .map_err(|e| config_error("scenario.hypotheses", e))?;
    let h0 = label_indices(&labels, &cfg.h0, "scenario.h0")?;
    let labeling = Labeling::new(instances, labels.clone(), dx, h0, hclass).map_err(|e| config_error("scenario.h0", e))?;
    let opts = BuildOptions {
        superset_cap: cfg.superset_cap.unwrap_or(crate::transition::DEFAULT_SUPERSET_CAP),
    };
    let tclass = build_class(&cfg.transitions, &labels, &opts).map_err(|e| config_error("scenario.transitions", e))?;
    let loss = match &cfg.loss {
        LossConfig::CrossEntropy => Loss::CrossEntropy,
        LossConfig::Concentration { sets } => Loss::Concentration(resolve_sets(sets, &labels, tclass.outcomes())?),
    };
    match &cfg.t0 {
        T0Config::Member(k) => Scenario::with_member(labeling, tclass, *k, loss),
        T0Config::Matrix(m) => TransitionHypothesis::constant(m).and_then(|t| Scenario::new(labeling, tclass, &t, loss)),
        T0Config::PerInstance(m) => {
            TransitionHypothesis::per_instance(m).and_then(|t| Scenario::new(labeling, tclass, &t, loss))
        }
    }
    .map_err(|e| config_error("scenario.t0", e))
}

fn evidence_table(cfg: &RunConfig, scn: &Scenario) -> Result<Option<EvidenceTable>> {
    if cfg.evidence.is_empty() {
        return Ok(None);
    }
    let labels = scn.labeling().labels();
    let mut table = EvidenceTable::new();
    for (k, e) in cfg.evidence.iter().enumerate() {
        let path = format!("evidence[{k}]");
        let i = labels.index_of(&e.from).map_err(|err| config_error(&path, err))?;
        let j = labels.index_of(&e.to).map_err(|err| config_error(&path, err))?;
        table.insert((i, j), e.u.clone());
    }
    Ok(Some(table))
}

// ------------------------------------------------------------------- cli

#[derive(Debug, Parser)]
#[command(name = "indsup", version, about = "Learnability from indirect supervision on finite spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Trials per sample size.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Confidence parameter of the bound.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Comma-separated sample sizes.
    #[arg(long, global = true, value_delimiter = ',')]
    pub m: Option<Vec<u64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separation degree, pairwise table, concentration and evidence bounds.
    Separation,
    /// Learning curve of ERM against the generalization bound.
    Curve,
    /// Natarajan, transition and weak VC-major dimensions.
    Dimension,
    /// Joint-supervision additivity report for a `joint` transition class.
    Joint,
    /// Identifiability level and bound inputs.
    Eta,
    /// Run a bundled reproduction.
    Demo {
        /// One of: example-4-6, massart-noise, superset, mixed-annotators,
        /// learning-from-difference, non-learnable-sequence.
        name: String,
    },
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub condition_fails: bool,
    pub summary: String,
}

/// Parses `args` (program name first), runs, and maps the result to an
/// exit code, printing the summary or the error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::from(if outcome.condition_fails { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let report = match &cli.command {
        Command::Demo { name } => run_demo(name, cli)?,
        command => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| config_error("--config", "this command needs a scenario config"))?;
            let cfg = load_config(path)?;
            match command {
                Command::Separation => cmd_separation(&cfg)?,
                Command::Curve => cmd_curve(&cfg, &Overrides::from(cli))?,
                Command::Dimension => cmd_dimension(&cfg)?,
                Command::Joint => cmd_joint(&cfg)?,
                Command::Eta => cmd_eta(&cfg, &Overrides::from(cli))?,
                Command::Demo { .. } => unreachable!(),
            }
        }
    };
    let files = write_outputs(&out, &report.files)?;
    Ok(Outcome {
        files,
        condition_fails: report.condition_fails,
        summary: report.summary,
    })
}

/// Command-line values that take precedence over the config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub delta: Option<f64>,
    pub m: Option<Vec<u64>>,
}

impl From<&Cli> for Overrides {
    fn from(cli: &Cli) -> Self {
        Self {
            seed: cli.seed,
            trials: cli.trials,
            delta: cli.delta,
            m: cli.m.clone(),
        }
    }
}

/// Report files (name, contents) plus the verdict, before anything is
/// written.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub condition_fails: bool,
    pub summary: String,
}

/// Writes every file or, on failure, none of them.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, text) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(written)
}

fn ext(v: f64) -> Value {
    if v.is_infinite() {
        Value::String(format_extended(v))
    } else {
        json!(v)
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn scenario_summary(scn: &Scenario) -> Value {
    json!({
        "instances": scn.labeling().instances().names(),
        "labels": scn.labeling().labels().names(),
        "outcomes": scn.tclass().outcomes().names(),
        "dx": scn.dx().probs(),
        "h0": scn.h0(),
        "t0_index": scn.t0_index(),
        "hypotheses": scn.hclass().len(),
        "hypotheses_have_duplicates": scn.hclass().has_duplicates(),
        "transitions": scn.tclass().len(),
        "transition_kind": scn.tclass().provenance().map(ClassSpec::kind),
        "grid_caveat": scn.tclass().grid_derived(),
        "loss": scn.loss().name(),
    })
}

fn header(command: &str, scn: &Scenario) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m.insert("scenario".into(), scenario_summary(scn));
    m
}

fn eta_is_cheap(scn: &Scenario) -> bool {
    scn.hclass()
        .len()
        .saturating_mul(scn.tclass().len())
        .saturating_mul(scn.n())
        <= EXACT_ETA_CAP
}

/// Separation, concentration, evidence and (on small grids) identifiability
/// as one JSON object.
fn separation_value(scn: &Scenario, evidence: Option<&EvidenceTable>) -> Result<(Value, bool)> {
    let sep = separation_degree(scn);
    let mut v = to_json(&sep);
    let obj = v.as_object_mut().expect("struct");
    if let Loss::Concentration(sets) = scn.loss() {
        let conc = concentration_degree(scn, sets)?;
        let ev = match evidence_bound(scn, &concentration_evidence(sets)) {
            Ok(r) => to_json(&r),
            Err(e) => json!({ "error": e.to_string() }),
        };
        let pinsker = conc.gamma_c < 0.0 || sep.gamma.value() >= 2.0 * conc.gamma_c * conc.gamma_c - 1e-10;
        obj.insert("concentration".into(), to_json(&conc));
        obj.insert("concentration_evidence".into(), ev);
        obj.insert("pinsker_chain_holds".into(), json!(pinsker));
    }
    if let Some(table) = evidence {
        obj.insert("evidence".into(), to_json(&evidence_bound(scn, table)?));
    }
    if eta_is_cheap(scn) {
        match identifiability_level(scn) {
            Ok(eta) => {
                obj.insert("eta".into(), to_json(&eta));
            }
            Err(Error::NoWrongHypothesis) => {
                obj.insert("eta".into(), json!({ "error": Error::NoWrongHypothesis.to_string() }));
            }
            Err(e) => return Err(e),
        }
    }
    let fails = sep.gamma.value() == 0.0;
    obj.insert("separated".into(), json!(!fails));
    Ok((v, fails))
}

fn pairwise_csv(scn: &Scenario) -> String {
    let labels = scn.labeling().labels();
    let mut s = String::from("from,to,value,x,t_i,t_j\n");
    for p in separation_degree(scn).pairwise {
        let _ = write!(s, "{},{},{}", labels.name(p.from), labels.name(p.to), p.value);
        match p.witness {
            Some(w) => {
                let _ = writeln!(s, ",{},{},{}", scn.labeling().instances().name(w.x), w.t_i, w.t_j);
            }
            None => s.push_str(",,,\n"),
        }
    }
    s
}

pub fn cmd_separation(cfg: &RunConfig) -> Result<Report> {
    let scn = build_scenario(&cfg.scenario)?;
    let evidence = evidence_table(cfg, &scn)?;
    let (sep, fails) = separation_value(&scn, evidence.as_ref())?;
    let mut doc = header("separation", &scn);
    doc.insert("separation".into(), sep.clone());
    let summary = format!(
        "gamma = {}{}\n",
        sep["gamma"],
        if fails { " (not separated)" } else { "" }
    );
    Ok(Report {
        files: vec![
            ("separation.json".into(), pretty(&Value::Object(doc))),
            ("pairwise.csv".into(), pairwise_csv(&scn)),
        ],
        condition_fails: fails,
        summary,
    })
}

struct CurveParams {
    m: Vec<u64>,
    trials: u64,
    delta: f64,
    seed: u64,
}

fn curve_params(cfg: &RunConfig, o: &Overrides) -> CurveParams {
    let c = cfg.curve.clone().unwrap_or_default();
    CurveParams {
        m: o.m.clone().or(c.m).unwrap_or_else(|| vec![100, 1000, 10000]),
        trials: o.trials.or(c.trials).unwrap_or(100),
        delta: o.delta.or(c.delta).unwrap_or(0.05),
        seed: o.seed.or(cfg.seed).unwrap_or(0),
    }
}

pub fn curve_csv(records: &[CurveRecord]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.m,
            r.trial,
            r.seed,
            r.risk,
            format_extended(r.bound),
            format_extended(r.b),
            format_extended(r.eta),
            r.d,
            r.delta
        );
    }
    s
}

pub fn summary_csv(rows: &[CurveSummary]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.m,
            r.mean_risk,
            r.q05,
            r.q95,
            format_extended(r.bound)
        );
    }
    s
}

struct CurveRun {
    inputs: BoundInputs,
    records: Vec<CurveRecord>,
    summary: Vec<CurveSummary>,
}

fn run_curve(scn: &Scenario, p: &CurveParams) -> Result<CurveRun> {
    let inputs = bound_inputs(scn, p.delta)?;
    let records = learning_curve(scn, &p.m, p.trials, p.seed, &inputs)?;
    let summary = summarize(&records);
    Ok(CurveRun {
        inputs,
        records,
        summary,
    })
}

pub fn cmd_curve(cfg: &RunConfig, o: &Overrides) -> Result<Report> {
    let scn = build_scenario(&cfg.scenario)?;
    let p = curve_params(cfg, o);
    let run = run_curve(&scn, &p)?;
    let mut doc = header("curve", &scn);
    doc.insert("seed".into(), json!(p.seed));
    doc.insert("trials".into(), json!(p.trials));
    doc.insert("bound_inputs".into(), to_json(&run.inputs));
    doc.insert("summary".into(), to_json(&run.summary));
    let mut summary = String::new();
    for r in &run.summary {
        let _ = writeln!(summary, "m = {}: mean risk {}", r.m, r.mean_risk);
    }
    Ok(Report {
        files: vec![
            ("curve.csv".into(), curve_csv(&run.records)),
            ("curve_summary.csv".into(), summary_csv(&run.summary)),
            ("curve.json".into(), pretty(&Value::Object(doc))),
        ],
        condition_fails: false,
        summary,
    })
}

pub fn cmd_dimension(cfg: &RunConfig) -> Result<Report> {
    let scn = build_scenario(&cfg.scenario)?;
    let d = cfg.dimension.clone().unwrap_or_default();
    let nat_cap = d.natarajan_cap.unwrap_or(NATARAJAN_CAP);
    let vc_cap = d.vc_major_cap.unwrap_or(VC_MAJOR_CAP);
    let suggestion = |e: Error| match e {
        Error::CapExceeded { .. } => config_error(
            "dimension",
            format!("{e} (set `randomized = true` under [dimension])"),
        ),
        other => other,
    };
    let natarajan = match natarajan_dimension(scn.hclass(), nat_cap) {
        Ok(r) => r,
        Err(Error::CapExceeded { .. }) if d.randomized => {
            natarajan_dimension_randomized(scn.hclass(), d.samples.unwrap_or(256), cfg.seed.unwrap_or(0))
        }
        Err(e) => return Err(suggestion(e)),
    };
    let optional = |r: Result<crate::complexity::DimensionResult>| -> Result<Value> {
        match r {
            Ok(v) => Ok(to_json(&v)),
            Err(e @ Error::CapExceeded { .. }) => Ok(json!({ "cap_exceeded": e.to_string() })),
            Err(e) => Err(e),
        }
    };
    let weak = weak_vc_major_dimension(scn.hclass(), scn.tclass(), scn.loss(), vc_cap);
    let trans = transition_dimension(scn.tclass(), scn.n(), scn.loss(), vc_cap);
    let composed = match &trans {
        Ok(t) => Some(dimension_bound(natarajan.value, t.value, scn.c())?),
        Err(_) => None,
    };
    let cs_ok = match &trans {
        Ok(t) if scn.tclass().all_constant() => Some(t.value <= (scn.c() * scn.s()) as u64),
        _ => None,
    };
    let (d_used, d_source) = dimension_for_bound(&scn)?;
    let mut doc = header("dimension", &scn);
    doc.insert("natarajan".into(), to_json(&natarajan));
    doc.insert("weak_vc_major".into(), optional(weak)?);
    doc.insert("transition".into(), optional(trans)?);
    doc.insert("composition_bound".into(), json!(composed));
    doc.insert("transition_within_cs".into(), json!(cs_ok));
    doc.insert("d_for_bound".into(), json!({ "value": d_used, "source": d_source }));
    let summary = format!("natarajan = {}, d for bound = {d_used}\n", natarajan.value);
    Ok(Report {
        files: vec![("dimension.json".into(), pretty(&Value::Object(doc)))],
        condition_fails: false,
        summary,
    })
}

fn joint_parts(cfg: &RunConfig, scn: &Scenario) -> Result<JointSpec> {
    let ClassSpec::Joint {
        lambda,
        distinguished,
        first,
        second,
        constraint,
    } = &cfg.scenario.transitions
    else {
        return Err(config_error("scenario.transitions", "the joint command needs `kind = \"joint\"`"));
    };
    let labels = scn.labeling().labels();
    let opts = BuildOptions::default();
    Ok(JointSpec {
        first: build_class(first, labels, &opts)?,
        second: build_class(second, labels, &opts)?,
        lambda: *lambda,
        distinguished: *distinguished,
        constraint: constraint.clone(),
    })
}

fn rows_of(t: &TransitionHypothesis, instances: usize, c: usize) -> Value {
    let xs = if t.is_constant() { 1 } else { instances };
    json!((0..xs)
        .map(|x| (0..c).map(|i| t.r(x, i).probs().to_vec()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn joint_value(spec: &JointSpec, scn: &Scenario) -> Result<Value> {
    let c = scn.c();
    let mut reports = Vec::new();
    for i in 0..c {
        for j in (0..c).filter(|&j| j != i) {
            reports.push(to_json(&verify_no_free_separation(spec, scn.labeling(), i, j)?));
        }
    }
    let first_member = scn.tclass().get(0)?;
    let uniform_rows = scn.tclass().members().iter().all(|t| {
        let xs = if t.is_constant() { 1 } else { scn.n() };
        (0..xs).all(|x| {
            (0..c).all(|i| {
                let r = t.r(x, i);
                r.probs().iter().all(|&p| (p - 1.0 / r.len() as f64).abs() <= 1e-12)
            })
        })
    });
    Ok(json!({
        "lambda": spec.lambda,
        "distinguished": spec.distinguished,
        "outcomes": scn.tclass().outcomes().names(),
        "members": scn.tclass().len(),
        "first_member_rows": rows_of(first_member, scn.n(), c),
        "all_rows_uniform": uniform_rows,
        "no_free_separation": reports,
    }))
}

pub fn cmd_joint(cfg: &RunConfig) -> Result<Report> {
    let scn = build_scenario(&cfg.scenario)?;
    let spec = joint_parts(cfg, &scn)?;
    let joint = joint_value(&spec, &scn)?;
    let gamma = separation_degree(&scn).gamma;
    let mut doc = header("joint", &scn);
    doc.insert("gamma".into(), to_json(&gamma));
    doc.insert("joint".into(), joint);
    Ok(Report {
        files: vec![("joint.json".into(), pretty(&Value::Object(doc)))],
        condition_fails: false,
        summary: format!("joint gamma = {gamma}\n"),
    })
}

pub fn cmd_eta(cfg: &RunConfig, o: &Overrides) -> Result<Report> {
    let scn = build_scenario(&cfg.scenario)?;
    let delta = o
        .delta
        .or(cfg.curve.as_ref().and_then(|c| c.delta))
        .unwrap_or(0.05);
    let eta = identifiability_level(&scn)?;
    let mut doc = header("eta", &scn);
    doc.insert("eta".into(), to_json(&eta));
    doc.insert("gamma".into(), to_json(&separation_degree(&scn).gamma));
    if let Loss::Concentration(sets) = scn.loss() {
        doc.insert("concentration".into(), to_json(&concentration_degree(&scn, sets)?));
    }
    doc.insert("consistency".into(), to_json(&consistency(&scn)?));
    doc.insert("bound_inputs".into(), to_json(&bound_inputs(&scn, delta)?));
    Ok(Report {
        files: vec![("eta.json".into(), pretty(&Value::Object(doc)))],
        condition_fails: false,
        summary: format!("eta = {}\n", ext(eta.eta)),
    })
}

// ----------------------------------------------------------------- demos

fn bundled(name: &str) -> Result<RunConfig> {
    let text = bundled_config(name).ok_or_else(|| Error::UnknownDemo(name.to_string()))?;
    parse_config(text)
}

fn curve_summary_value(run: &CurveRun) -> Value {
    json!({
        "bound_inputs": to_json(&run.inputs),
        "summary": to_json(&run.summary),
    })
}

/// Runs a bundled reproduction; the report files go to the output
/// directory like any other command.
pub fn run_demo(name: &str, cli: &Cli) -> Result<Report> {
    let o = Overrides::from(cli);
    match name {
        "example-4-6" | "massart-noise" | "superset" => demo_single(name, &o),
        "mixed-annotators" => demo_mixed(&o),
        "learning-from-difference" => demo_difference(),
        "non-learnable-sequence" => demo_non_learnable(),
        other => Err(Error::UnknownDemo(format!("{other} (available: {})", DEMOS.join(", ")))),
    }
}

fn demo_single(name: &str, o: &Overrides) -> Result<Report> {
    let file = format!("{name}.toml");
    let cfg = bundled(&file)?;
    let scn = build_scenario(&cfg.scenario)?;
    let (sep, _) = separation_value(&scn, evidence_table(&cfg, &scn)?.as_ref())?;
    let p = curve_params(&cfg, o);
    let run = run_curve(&scn, &p)?;
    let mut doc = header("demo", &scn);
    doc.insert("demo".into(), json!(name));
    doc.insert("separation".into(), sep);
    doc.insert("curve".into(), curve_summary_value(&run));
    let last = run.summary.last().map_or(f64::NAN, |r| r.mean_risk);
    Ok(Report {
        files: vec![
            ("config.toml".into(), bundled_config(&file).unwrap_or_default().to_string()),
            ("demo.json".into(), pretty(&Value::Object(doc))),
            ("curve.csv".into(), curve_csv(&run.records)),
            ("curve_summary.csv".into(), summary_csv(&run.summary)),
        ],
        condition_fails: false,
        summary: format!("{name}: mean risk at largest m = {last}\n"),
    })
}

fn demo_mixed(o: &Overrides) -> Result<Report> {
    let mut sections = BTreeMap::new();
    let mut files = Vec::new();
    let mut summary = String::new();
    for (key, file) in [
        ("mixed", "mixed-annotators.toml"),
        ("distinguished", "mixed-annotators-distinguished.toml"),
    ] {
        let cfg = bundled(file)?;
        let scn = build_scenario(&cfg.scenario)?;
        let spec = joint_parts(&cfg, &scn)?;
        let gamma = separation_degree(&scn).gamma;
        let run = run_curve(&scn, &curve_params(&cfg, o))?;
        let last = run.summary.last().map_or(f64::NAN, |r| r.mean_risk);
        let _ = writeln!(summary, "{key}: gamma = {gamma}, mean risk at largest m = {last}");
        sections.insert(
            key,
            json!({
                "gamma": to_json(&gamma),
                "joint": joint_value(&spec, &scn)?,
                "curve": curve_summary_value(&run),
            }),
        );
        files.push((format!("curve_{key}.csv"), curve_csv(&run.records)));
        files.push((format!("curve_{key}_summary.csv"), summary_csv(&run.summary)));
    }
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "demo",
        "demo": "mixed-annotators",
        "mixed": sections["mixed"],
        "distinguished": sections["distinguished"],
    });
    files.insert(0, ("demo.json".into(), pretty(&doc)));
    Ok(Report {
        files,
        condition_fails: false,
        summary,
    })
}

fn demo_difference() -> Result<Report> {
    let d = difference_scenario(0.5, -0.2, &default_rate_grid())?;
    let members: Vec<Value> = d
        .scenario
        .tclass()
        .members()
        .iter()
        .map(|t| json!({ "rate_1": t.param("1.rate"), "rate_2": t.param("2.rate") }))
        .collect();
    let gamma = separation_degree(&d.scenario).gamma;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "demo",
        "demo": "learning-from-difference",
        "lambda": d.lambda,
        "gap": d.gap,
        "outcomes": d.scenario.tclass().outcomes().names(),
        "members": members,
        "evidence": to_json(&d.evidence_report),
        "marginal_gammas": to_json(&d.marginal_gammas),
        "joint_gamma": to_json(&gamma),
        "verified": d.verified(),
    });
    let bound = d.evidence_report.bound.map_or(Value::Null, ext);
    Ok(Report {
        files: vec![("demo.json".into(), pretty(&doc))],
        condition_fails: false,
        summary: format!(
            "evidence bound = {bound}, marginal gamma = {}, joint gamma = {gamma}\n",
            d.marginal_gammas[0]
        ),
    })
}

/// The template of the non-learnable sequence at step `k`: two instances,
/// uniform label noise with rates `{0.1, 0.5 - 0.25/k}`, truth at rate 0.1.
pub fn non_learnable_template(k: u32) -> Result<Scenario> {
    let labels = FiniteSpace::indexed("y", 2)?;
    let rates = vec![0.1, 0.5 - 0.25 / f64::from(k)];
    let tclass = build_class(&ClassSpec::UniformNoise { rates }, &labels, &BuildOptions::default())?;
    let labeling = Labeling::new(
        FiniteSpace::indexed("x", 2)?,
        labels,
        Distribution::uniform(2),
        vec![0, 1],
        HypothesisClass::all_functions(2, 2)?,
    )?;
    Scenario::with_member(labeling, tclass, 0, Loss::CrossEntropy)
}

pub const NON_LEARNABLE_KS: [u32; 4] = [1, 2, 4, 8];

fn demo_non_learnable() -> Result<Report> {
    let mut steps = Vec::new();
    let mut summary = String::new();
    for k in NON_LEARNABLE_KS {
        let w = non_learnability_witness(&non_learnable_template(k)?, k)?;
        let check = identifiability_level(&w.scenario)?.eta;
        let limit = 1.0 / f64::from(k);
        let _ = writeln!(summary, "k = {k}: eta = {} (limit {limit})", w.eta);
        steps.push(json!({
            "k": k,
            "rates": w.scenario.tclass().members().iter().map(|t| t.param("rate")).collect::<Vec<_>>(),
            "witness": to_json(&w),
            "dx": w.scenario.dx().probs(),
            "eta_recomputed": ext(check),
            "limit": limit,
            "eta_within_kl": w.eta <= w.kl.value() + 1e-12,
            "eta_within_limit": w.eta <= limit,
        }));
    }
    let all = steps.iter().all(|s| s["eta_within_limit"] == json!(true));
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "demo",
        "demo": "non-learnable-sequence",
        "steps": steps,
        "all_within_limit": all,
    });
    Ok(Report {
        files: vec![("demo.json".into(), pretty(&doc))],
        condition_fails: false,
        summary,
    })
}
