//! The `ppsq` command line.
//!
//! Every subcommand produces one document (JSON, aligned table or CSV).
//! Exit codes: 0 success, 2 usage or input error, 3 domain error
//! (post-selection impossible, invalid counterfactual, inconsistent family,
//! conditioning on a null event). `reproduce-paper` exits 1 when a check fails.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::abl::{abl_distribution, abl_probability, contextual_abl, AblResult};
use crate::ensemble::{
    conditional_post_selection, simulate_ensemble, simulate_records, EnsembleStats, SimSeed,
};
use crate::error::{Error, Result};
use crate::hilbert::Observable;
use crate::histories::{
    ch_conditional_general, consistency_check, merge_families, rank_one_interference,
    HistoryFamily, CONSISTENCY_TOL,
};
use crate::scenario::{self, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ppsq",
    version,
    about = "Pre- and post-selected quantum measurement statistics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ScenarioSource {
    /// Built-in scenario: `three-box` or `n-box:<n>`
    #[arg(long)]
    pub scenario: Option<String>,
    /// Scenario document (JSON)
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
}

impl ScenarioSource {
    pub fn builtin(name: &str) -> Self {
        ScenarioSource {
            scenario: Some(name.into()),
            scenario_file: None,
        }
    }

    fn load(&self) -> Result<Scenario> {
        match (&self.scenario, &self.scenario_file) {
            (Some(name), None) => scenario::builtin(name),
            (None, Some(path)) => scenario::load_scenario(path),
            _ => Err(Error::InvalidArgument(
                "exactly one of --scenario or --scenario-file is required".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputOpts {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the document here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// ABL probabilities for an actually measured observable
    Abl {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long)]
        observable: String,
        /// Single outcome (label or index); default is the full distribution
        #[arg(long)]
        outcome: Option<String>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// ABL query that records which observable was actually measured
    Contextual {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long)]
        measured: String,
        #[arg(long)]
        queried: String,
        #[arg(long)]
        outcome: String,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Consistency check of one observable's family or of merged families
    Consistency {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long, conflicts_with = "merge", required_unless_present = "merge")]
        observable: Option<String>,
        #[arg(long, num_args = 1..)]
        merge: Vec<String>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// CH conditional probabilities next to the ABL rule
    Ch {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long)]
        observable: String,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Monte Carlo ensemble: open one box, then post-select
    Simulate {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long)]
        open: String,
        #[arg(long, default_value_t = 90_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Print (or save with --out) a scenario document
    Scenario {
        #[command(flatten)]
        source: ScenarioSource,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Run every headline check and print a pass/fail table
    ReproducePaper {
        #[command(flatten)]
        output: OutputOpts,
    },
}

impl Command {
    pub fn output(&self) -> &OutputOpts {
        match self {
            Command::Abl { output, .. }
            | Command::Contextual { output, .. }
            | Command::Consistency { output, .. }
            | Command::Ch { output, .. }
            | Command::Simulate { output, .. }
            | Command::Scenario { output, .. }
            | Command::ReproducePaper { output } => output,
        }
    }
}

/// Rows of text cells shared by the table and CSV renderings.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: vec![],
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render_aligned(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                let _ = write!(s, "{cell:<w$}");
            }
            s.trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        out.push_str(&line(
            &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>(),
        ));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.headers).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }
}

/// Same digits as the JSON rendering.
fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

/// A computed result with its JSON and tabular forms.
pub struct Report {
    pub json: Value,
    pub table: Table,
    /// Overrides the CSV rendering of `table` (raw run records for `simulate`).
    pub csv: Option<String>,
    pub exit_code: i32,
}

impl Report {
    fn new(json: Value, table: Table) -> Self {
        Report {
            json,
            table,
            csv: None,
            exit_code: EXIT_OK,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("json value");
                s.push('\n');
                s
            }
            Format::Table => self.table.render_aligned(),
            Format::Csv => self.csv.clone().unwrap_or_else(|| self.table.render_csv()),
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn resolve_outcome(obs: &Observable, outcome: &str) -> Result<usize> {
    obs.outcome_index(outcome)
        .or_else(|e| match outcome.parse::<usize>() {
            Ok(i) if i < obs.events.len() => Ok(i),
            _ => Err(e),
        })
}

fn abl_result_table(r: &AblResult) -> Table {
    let mut t = Table::new(&["field", "value"]);
    t.push(vec!["observable".into(), r.observable.clone()]);
    t.push(vec!["outcome".into(), r.outcome.clone()]);
    t.push(vec!["probability".into(), num(r.probability)]);
    t.push(vec!["usage".into(), format!("{:?}", r.usage)]);
    t.push(vec![
        "consistency_certified".into(),
        r.consistency_certified.to_string(),
    ]);
    t.push(vec!["numerator".into(), num(r.numerator)]);
    t.push(vec!["denominator".into(), num(r.denominator)]);
    if let Some(d) = r.ch_diagnostic {
        t.push(vec!["ch_diagnostic".into(), num(d)]);
    }
    t
}

fn run_abl(s: &Scenario, observable: &str, outcome: Option<&str>) -> Result<Report> {
    let tsv = s.two_state_vector()?;
    let obs = s.observable(observable)?;
    if let Some(o) = outcome {
        let r = abl_probability(&tsv, obs, resolve_outcome(obs, o)?)?;
        return Ok(Report::new(to_value(&r), abl_result_table(&r)));
    }
    let dist = abl_distribution(&tsv, obs)?;
    let mut map = Map::new();
    let mut t = Table::new(&["outcome", "probability"]);
    for (e, p) in obs.events.iter().zip(dist) {
        map.insert(e.label.clone(), json!(p));
        t.push(vec![e.label.clone(), num(p)]);
    }
    Ok(Report::new(Value::Object(map), t))
}

fn run_contextual(s: &Scenario, measured: &str, queried: &str, outcome: &str) -> Result<Report> {
    let tsv = s.two_state_vector()?;
    let m = s.observable(measured)?;
    let q = s.observable(queried)?;
    let r = contextual_abl(&tsv, m, q, resolve_outcome(q, outcome)?)?;
    let mut json = to_value(&r);
    json["measured"] = json!(measured);
    let mut table = abl_result_table(&r);
    table
        .rows
        .insert(0, vec!["measured".into(), measured.into()]);
    Ok(Report::new(json, table))
}

fn run_consistency(s: &Scenario, observable: Option<&str>, merge: &[String]) -> Result<Report> {
    let tsv = s.two_state_vector()?;
    let names: Vec<&str> = match observable {
        Some(o) => vec![o],
        None => merge.iter().map(String::as_str).collect(),
    };
    if names.is_empty() {
        return Err(Error::InvalidArgument("no observables given".into()));
    }
    let families = names
        .iter()
        .map(|n| HistoryFamily::from_two_state(&tsv, s.observable(n)?))
        .collect::<Result<Vec<_>>>()?;
    let report = consistency_check(&merge_families(&families)?)?;
    let mut t = Table::new(&[
        "event_alpha",
        "event_beta",
        "re_interference",
        "im_interference",
    ]);
    for (i, a) in report.labels.iter().enumerate() {
        for (j, b) in report.labels.iter().enumerate() {
            t.push(vec![
                a.clone(),
                b.clone(),
                num(report.violations[i][j]),
                num(report.imaginary[i][j]),
            ]);
        }
    }
    t.push(vec![
        "consistent".into(),
        String::new(),
        report.consistent.to_string(),
        String::new(),
    ]);
    t.push(vec![
        "max_violation".into(),
        String::new(),
        num(report.max_violation),
        String::new(),
    ]);
    let mut json = to_value(&report);
    json["observables"] = json!(names);
    Ok(Report::new(json, t))
}

fn run_ch(s: &Scenario, observable: &str) -> Result<Report> {
    let tsv = s.two_state_vector()?;
    let obs = s.observable(observable)?;
    let terms = rank_one_interference(&tsv, obs)?;
    let max_violation = terms
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(move |(j, _)| *j != i)
                .map(|(_, v)| v.abs())
        })
        .fold(0.0, f64::max);
    let consistent = max_violation < CONSISTENCY_TOL;
    let abl = abl_distribution(&tsv, obs)?;
    let mut rows = vec![];
    let mut t = Table::new(&["outcome", "ch_conditional", "abl", "delta"]);
    for (k, (e, p)) in obs.events.iter().zip(abl).enumerate() {
        let ch = ch_conditional_general(&tsv, obs, k)?;
        let delta = (ch - p).abs();
        t.push(vec![e.label.clone(), num(ch), num(p), num(delta)]);
        rows.push(json!({"outcome": e.label, "ch_conditional": ch, "abl": p, "delta": delta}));
    }
    t.push(vec![
        "consistent".into(),
        consistent.to_string(),
        String::new(),
        String::new(),
    ]);
    t.push(vec![
        "max_violation".into(),
        num(max_violation),
        String::new(),
        String::new(),
    ]);
    let json = json!({
        "observable": observable,
        "consistent": consistent,
        "max_violation": max_violation,
        "outcomes": rows,
    });
    Ok(Report::new(json, t))
}

/// The `simulate` JSON document for an already-loaded scenario.
pub fn simulate_document(s: &Scenario, open: &str, runs: u64, seed: u64) -> Result<String> {
    Ok(run_simulate(s, open, runs, seed, false)?.render(Format::Json))
}

fn run_simulate(
    s: &Scenario,
    open: &str,
    runs: u64,
    seed: u64,
    want_records: bool,
) -> Result<Report> {
    let seed = SimSeed(seed);
    let tsv = s.two_state_vector()?;
    let obs = s.observable(open)?;
    let (stats, csv) = if want_records {
        let records = simulate_records(s, open, runs, seed)?;
        let mut w = csv::Writer::from_writer(vec![]);
        for r in &records {
            w.serialize(r).expect("in-memory csv");
        }
        let csv = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv");
        (EnsembleStats::from_records(s, open, &records)?, Some(csv))
    } else {
        (simulate_ensemble(s, open, runs, seed)?, None)
    };
    let born: Vec<f64> = obs
        .events
        .iter()
        .map(|e| crate::hilbert::apply_projector(&e.projector, &s.pre).map(|p| p.norm_sq))
        .collect::<Result<_>>()?;
    let abl = abl_distribution(&tsv, obs).ok();

    let mut t = Table::new(&[
        "outcome",
        "post_selected",
        "rejected",
        "frequency",
        "std_error",
        "born",
        "post_given_outcome",
        "expected_post_given_outcome",
        "share_of_post_selected",
        "abl",
    ]);
    let mut outcomes = vec![];
    for (k, label) in stats.outcomes.iter().enumerate() {
        let c = stats.counts[k];
        let f = stats.outcome_frequency(label)?;
        let cond = stats.conditional_post_frequency(label)?;
        let expected_cond = conditional_post_selection(s, open, k)?;
        let share = stats.post_selected_frequency(label)?;
        let abl_k = abl.as_ref().map(|d| d[k]);
        t.push(vec![
            label.clone(),
            c.post_selected.to_string(),
            c.rejected.to_string(),
            num(f.value),
            num(f.std_error),
            num(born[k]),
            num(cond.value),
            num(expected_cond),
            num(share.value),
            abl_k.map(num).unwrap_or_else(|| "null".into()),
        ]);
        outcomes.push(json!({
            "outcome": label,
            "post_selected": c.post_selected,
            "rejected": c.rejected,
            "frequency": f.value,
            "std_error": f.std_error,
            "born": born[k],
            "post_given_outcome": cond.value,
            "expected_post_given_outcome": expected_cond,
            "share_of_post_selected": share.value,
            "abl": abl_k,
        }));
    }
    let post = stats.post_selection_frequency();
    let expected_post = expected_post_rate(&born, s, open)?;
    t.push(vec![
        "(all)".into(),
        stats.total_post_selected().to_string(),
        (stats.n_runs - stats.total_post_selected()).to_string(),
        num(1.0),
        num(0.0),
        num(1.0),
        num(post.value),
        num(expected_post),
        num(1.0),
        String::new(),
    ]);
    // post-selections recorded on branches that cannot be post-selected
    let forbidden: u64 = stats
        .counts
        .iter()
        .enumerate()
        .map(|(k, c)| {
            Ok(if conditional_post_selection(s, open, k)? == 0.0 {
                c.post_selected
            } else {
                0
            })
        })
        .sum::<Result<u64>>()?;
    let json = json!({
        "scenario": s.name,
        "observable": open,
        "seed": seed.0,
        "n_runs": stats.n_runs,
        "post_selected": {
            "count": stats.total_post_selected(),
            "frequency": post.value,
            "std_error": post.std_error,
            "expected": expected_post,
        },
        "forbidden_branch_post_selections": forbidden,
        "outcomes": outcomes,
    });
    t.push(vec![
        "(forbidden)".into(),
        forbidden.to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
    ]);
    let mut report = Report::new(json, t);
    report.csv = csv;
    Ok(report)
}

/// Σ_α ‖Eᵅ pre‖² · P(post | α)
fn expected_post_rate(born: &[f64], s: &Scenario, open: &str) -> Result<f64> {
    born.iter()
        .enumerate()
        .map(|(k, b)| Ok(b * conditional_post_selection(s, open, k)?))
        .sum()
}

fn run_scenario(s: &Scenario) -> Report {
    let text = scenario::to_json_string(s);
    let json: Value = serde_json::from_str(&text).expect("scenario json");
    let mut t = Table::new(&["observable", "outcome", "eigenvalue", "rank"]);
    for o in &s.observables {
        for e in &o.events {
            t.push(vec![
                o.name.clone(),
                e.label.clone(),
                num(e.eigenvalue),
                e.projector.rank().to_string(),
            ]);
        }
    }
    Report::new(json, t)
}

fn run_reproduce() -> Report {
    let results = crate::reproduce::run_all();
    let mut t = Table::new(&["id", "check", "result", "detail"]);
    for r in &results {
        t.push(vec![
            r.id.to_string(),
            r.name.clone(),
            if r.passed { "PASS" } else { "FAIL" }.into(),
            r.detail.clone(),
        ]);
    }
    let mut report = Report::new(to_value(&results), t);
    if results.iter().any(|r| !r.passed) {
        report.exit_code = EXIT_CHECK_FAILED;
    }
    report
}

/// Executes a parsed command.
pub fn run(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Abl {
            source,
            observable,
            outcome,
            ..
        } => run_abl(&source.load()?, observable, outcome.as_deref()),
        Command::Contextual {
            source,
            measured,
            queried,
            outcome,
            ..
        } => run_contextual(&source.load()?, measured, queried, outcome),
        Command::Consistency {
            source,
            observable,
            merge,
            ..
        } => run_consistency(&source.load()?, observable.as_deref(), merge),
        Command::Ch {
            source, observable, ..
        } => run_ch(&source.load()?, observable),
        Command::Simulate {
            source,
            open,
            runs,
            seed,
            output,
        } => run_simulate(
            &source.load()?,
            open,
            *runs,
            *seed,
            output.format == Format::Csv,
        ),
        Command::Scenario { source, .. } => Ok(run_scenario(&source.load()?)),
        Command::ReproducePaper { .. } => Ok(run_reproduce()),
    }
}

/// Machine-readable error document.
pub fn error_document(e: &Error) -> Value {
    let mut body = json!({ "code": e.code(), "message": e.to_string() });
    match e {
        Error::CounterfactualInvalid {
            max_violation,
            ch_diagnostic,
        } => {
            body["max_violation"] = json!(max_violation);
            body["ch_diagnostic"] = json!(ch_diagnostic);
        }
        Error::InconsistentFamily { max_violation } => {
            body["max_violation"] = json!(max_violation);
        }
        Error::PostSelectionImpossible { denominator } => {
            body["denominator"] = json!(denominator);
        }
        Error::ConditioningOnNull { trace } => {
            body["trace"] = json!(trace);
        }
        _ => {}
    }
    json!({ "error": body })
}

pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_domain() {
        EXIT_DOMAIN
    } else {
        EXIT_USAGE
    }
}

/// Output of one invocation: exit code and the document to emit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub exit_code: i32,
    pub document: String,
    /// Where the document goes; `None` means stdout.
    pub out: Option<PathBuf>,
}

fn error_invocation(e: &Error) -> Invocation {
    let mut document = serde_json::to_string_pretty(&error_document(e)).expect("json value");
    document.push('\n');
    Invocation {
        exit_code: exit_code_for(e),
        document,
        out: None,
    }
}

/// Parses arguments and runs the command without touching the filesystem
/// for output. Help and version requests come back with exit code 0.
pub fn invoke<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                return Invocation {
                    exit_code: EXIT_OK,
                    document: e.to_string(),
                    out: None,
                };
            }
            let doc = json!({ "error": { "code": "Usage", "message": e.to_string().trim() } });
            return Invocation {
                exit_code: EXIT_USAGE,
                document: serde_json::to_string_pretty(&doc).expect("json value") + "\n",
                out: None,
            };
        }
    };
    let output = cli.command.output().clone();
    match run(&cli.command) {
        Ok(report) => Invocation {
            exit_code: report.exit_code,
            document: report.render(output.format),
            out: output.out,
        },
        Err(e) => error_invocation(&e),
    }
}
