//! The command-line pipeline: check, run, trace, analyze permissions,
//! render diagrams, and fuzz.
//!
//! Exit codes: 0 success, 1 diagnostics (parse, type, or checker), 2
//! undefined behaviour, 3 step limit, 64 flag errors. `run` and `trace`
//! are gated on the checkers unless `--ignore-borrowck` is passed.

use crate::diffcheck::{campaign, FuzzConfig, Property, Verdicts};
use crate::facts::build_facts;
use crate::interp::{run, step_records, trace, Outcome, RunLimits};
use crate::lang::{parse_program, type_check, well_formed, InstructionId, TypedProgram};
use crate::perms::{expectations, steps, MarkStyle, PermAnalysis};
use crate::render::{
    render_annotated_listing, render_memory_trace, render_perm_table, Abstraction, DiagramDoc,
    DocFormat, RenderOptions,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

pub const RECORD_SCHEMA: &str = "ownlab.diag/1";

#[derive(Parser, Debug)]
#[command(name = "ownlab", version, about = "Ownership-types laboratory", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    Polonius,
    Perms,
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Human,
    Records,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Style {
    #[default]
    Letter,
    Circle,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Borrow-check a program under the selected model(s).
    Check {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        model: Model,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Execute a program (checker-gated unless --ignore-borrowck).
    Run {
        input: PathBuf,
        /// Execute even when the checkers reject the program.
        #[arg(long)]
        ignore_borrowck: bool,
        #[arg(long, default_value_t = 100_000)]
        max_steps: u64,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Execute and emit machine-state snapshots or step records.
    Trace {
        input: PathBuf,
        #[arg(long)]
        ignore_borrowck: bool,
        #[arg(long, default_value_t = 100_000)]
        max_steps: u64,
        /// Instruction ids to snapshot (`main:2` or bare indexes in main);
        /// empty means every step.
        #[arg(long, value_delimiter = ',')]
        marks: Vec<String>,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// Permission states, steps, and expectation marks.
    Perms {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
        #[arg(long, value_enum, default_value = "letter")]
        style: Style,
    },
    /// Emit memory-trace, permission-table, and listing diagrams.
    Render {
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Show boxed payload structure instead of plain pointers.
        #[arg(long, conflicts_with = "abstracted")]
        expanded: bool,
        /// Abstract boxed payloads to plain pointers (the default).
        #[arg(long)]
        abstracted: bool,
        #[arg(long, value_enum, default_value = "letter")]
        style: Style,
        #[arg(long, default_value_t = 100_000)]
        max_steps: u64,
    },
    /// Run a differential fuzz campaign.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        /// Properties to check (repeatable).
        #[arg(long = "property", value_enum, default_values_t = vec![PropArg::Theorem, PropArg::Soundness])]
        properties: Vec<PropArg>,
        /// Where to write counterexamples and the report.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PropArg {
    Theorem,
    Soundness,
    Oracle,
}

impl From<PropArg> for Property {
    fn from(p: PropArg) -> Property {
        match p {
            PropArg::Theorem => Property::Theorem,
            PropArg::Soundness => Property::Soundness,
            PropArg::Oracle => Property::OracleEquivalence,
        }
    }
}

fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none()
}

fn error_tag() -> &'static str {
    if color_enabled() {
        "\x1b[31merror\x1b[0m"
    } else {
        "error"
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; anything else is a
            // usage error.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { 0 } else { 64 };
        }
    };
    match cli.cmd {
        Cmd::Check { input, model, format } => cmd_check(&input, model, format),
        Cmd::Run { input, ignore_borrowck, max_steps, format } => {
            cmd_run(&input, ignore_borrowck, max_steps, format)
        }
        Cmd::Trace { input, ignore_borrowck, max_steps, marks, format } => {
            cmd_trace(&input, ignore_borrowck, max_steps, &marks, format)
        }
        Cmd::Perms { input, format, style } => cmd_perms(&input, format, style),
        Cmd::Render { input, out_dir, expanded, abstracted: _, style, max_steps } => {
            cmd_render(&input, &out_dir, expanded, style, max_steps)
        }
        Cmd::Fuzz { seed, count, properties, out_dir, format } => {
            cmd_fuzz(seed, count, &properties, out_dir.as_deref(), format)
        }
    }
}

/// Parse, structurally validate, and type-check one input file.
fn load(input: &FsPath) -> Result<TypedProgram, i32> {
    let src = match fs::read_to_string(input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: cannot read {}: {e}", error_tag(), input.display());
            return Err(1);
        }
    };
    let program = match parse_program(&src) {
        Ok(p) => p,
        Err(diags) => {
            for d in diags {
                eprintln!("{}: {d}", error_tag());
            }
            return Err(1);
        }
    };
    let wf = well_formed(&program);
    if !wf.is_empty() {
        for d in wf {
            eprintln!("{}: {d}", error_tag());
        }
        return Err(1);
    }
    match type_check(&program) {
        Ok(tp) => Ok(tp),
        Err(diags) => {
            for d in diags {
                eprintln!("{}: {d}", error_tag());
            }
            Err(1)
        }
    }
}

fn emit_diagnostics(v: &Verdicts, model: Model, format: Format) -> bool {
    let show_polonius = model != Model::Perms;
    let show_perms = model != Model::Polonius;
    let mut any = false;
    match format {
        Format::Human => {
            if show_polonius {
                println!("== access model ==");
                if v.access.is_empty() && v.subset.is_empty() {
                    println!("ok");
                }
                for e in &v.access {
                    any = true;
                    println!("{e}");
                }
                for e in &v.subset {
                    any = true;
                    println!("{e}");
                }
            }
            if show_perms {
                println!("== permissions model ==");
                if v.perm.is_empty() {
                    println!("ok");
                }
                for e in &v.perm {
                    any = true;
                    println!("{e}");
                }
            }
        }
        Format::Records => {
            if show_polonius {
                for e in &v.access {
                    any = true;
                    let (rule, loan, path) = match e {
                        crate::polonius::AccessError::BorrowConflict { loan, path, invalidation, .. } => {
                            (format!("borrow-conflict/{invalidation}"), Some(loan.to_string()), path.to_string())
                        }
                        crate::polonius::AccessError::MoveConflict { path, .. } => {
                            ("move-conflict".to_string(), None, path.to_string())
                        }
                    };
                    println!(
                        "{}",
                        json!({
                            "schema": RECORD_SCHEMA, "kind": "access-error", "rule": rule,
                            "at": e.at().to_string(), "loan": loan, "path": path,
                            "message": e.to_string(),
                        })
                    );
                }
                for e in &v.subset {
                    any = true;
                    println!(
                        "{}",
                        json!({
                            "schema": RECORD_SCHEMA, "kind": "subset-error",
                            "longer": e.longer, "shorter": e.shorter,
                            "at": e.at.to_string(),
                            "path": e.path.as_ref().map(|p| p.to_string()),
                            "message": e.to_string(),
                        })
                    );
                }
            }
            if show_perms {
                for e in &v.perm {
                    any = true;
                    println!(
                        "{}",
                        json!({
                            "schema": RECORD_SCHEMA, "kind": "permission-error",
                            "at": e.at.to_string(), "path": e.path.to_string(),
                            "perm": e.perm.to_string(), "cause": e.cause.to_string(),
                            "message": e.to_string(),
                        })
                    );
                }
            }
        }
    }
    any
}

fn cmd_check(input: &FsPath, model: Model, format: Format) -> i32 {
    let tp = match load(input) {
        Ok(tp) => tp,
        Err(code) => return code,
    };
    let v = Verdicts::compute(&tp);
    let relevant = match model {
        Model::Polonius => !v.polonius_accepts(),
        Model::Perms => !v.perms_accepts(),
        Model::Both => !v.polonius_accepts() || !v.perms_accepts(),
    };
    emit_diagnostics(&v, model, format);
    if relevant {
        1
    } else {
        0
    }
}

/// The checker gate shared by run and trace.
fn gate(tp: &TypedProgram, ignore_borrowck: bool) -> Result<(), i32> {
    if ignore_borrowck {
        return Ok(());
    }
    let v = Verdicts::compute(tp);
    if v.polonius_accepts() && v.perms_accepts() {
        return Ok(());
    }
    emit_diagnostics(&v, Model::Both, Format::Human);
    eprintln!("hint: pass --ignore-borrowck to execute this program anyway");
    Err(1)
}

fn outcome_exit(outcome: &Outcome, format: Format) -> i32 {
    match outcome {
        Outcome::Terminated { value, steps } => {
            match format {
                Format::Human => println!("terminated: {value} after {steps} steps"),
                Format::Records => println!(
                    "{}",
                    json!({"schema": RECORD_SCHEMA, "kind": "terminated", "value": value.to_string(), "steps": steps})
                ),
            }
            0
        }
        Outcome::Ub { report, .. } => {
            match format {
                Format::Human => println!("{report}"),
                Format::Records => println!(
                    "{}",
                    json!({
                        "schema": RECORD_SCHEMA, "kind": "ub", "ub": report.kind.to_string(),
                        "at": report.at.to_string(), "path": report.path.to_string(),
                        "loc": report.loc.map(|l| l.0),
                    })
                ),
            }
            2
        }
        Outcome::LimitExceeded => {
            match format {
                Format::Human => println!("step limit exceeded"),
                Format::Records => println!(
                    "{}",
                    json!({"schema": RECORD_SCHEMA, "kind": "limit-exceeded"})
                ),
            }
            3
        }
    }
}

fn cmd_run(input: &FsPath, ignore_borrowck: bool, max_steps: u64, format: Format) -> i32 {
    let tp = match load(input) {
        Ok(tp) => tp,
        Err(code) => return code,
    };
    if let Err(code) = gate(&tp, ignore_borrowck) {
        return code;
    }
    match run(&tp, RunLimits { max_steps }) {
        Ok(outcome) => outcome_exit(&outcome, format),
        Err(e) => {
            eprintln!("{}: {e}", error_tag());
            1
        }
    }
}

fn parse_marks(marks: &[String]) -> Result<Vec<InstructionId>, String> {
    marks
        .iter()
        .map(|m| {
            if let Some((func, idx)) = m.split_once(':') {
                let index = idx.parse().map_err(|_| format!("bad mark `{m}`"))?;
                Ok(InstructionId::new(func, index))
            } else {
                let index = m.parse().map_err(|_| format!("bad mark `{m}`"))?;
                Ok(InstructionId::new("main", index))
            }
        })
        .collect()
}

fn cmd_trace(
    input: &FsPath,
    ignore_borrowck: bool,
    max_steps: u64,
    marks: &[String],
    format: Format,
) -> i32 {
    let tp = match load(input) {
        Ok(tp) => tp,
        Err(code) => return code,
    };
    if let Err(code) = gate(&tp, ignore_borrowck) {
        return code;
    }
    let marks = match parse_marks(marks) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{}: {e}", error_tag());
            return 64;
        }
    };
    let limits = RunLimits { max_steps };
    match format {
        Format::Human => match trace(&tp, &marks, limits) {
            Ok(snaps) => {
                let doc = render_memory_trace(&snaps, &RenderOptions::default(), DocFormat::Text);
                print!("{doc}");
                match run(&tp, limits) {
                    Ok(outcome) => outcome_exit(&outcome, format),
                    Err(e) => {
                        eprintln!("{}: {e}", error_tag());
                        1
                    }
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", error_tag());
                1
            }
        },
        Format::Records => match step_records(&tp, limits) {
            Ok((records, outcome)) => {
                for r in &records {
                    println!("{}", serde_json::to_string(r).expect("serializable record"));
                }
                outcome_exit(&outcome, format)
            }
            Err(e) => {
                eprintln!("{}: {e}", error_tag());
                1
            }
        },
    }
}

fn style_overrides(
    analysis: &PermAnalysis,
    style: Style,
) -> BTreeMap<(InstructionId, crate::lang::Path), MarkStyle> {
    let mut overrides = BTreeMap::new();
    if style == Style::Circle {
        for (path, _, at) in &analysis.needs {
            overrides.insert((at.clone(), path.clone()), MarkStyle::Circle);
        }
    }
    overrides
}

fn cmd_perms(input: &FsPath, format: Format, style: Style) -> i32 {
    let tp = match load(input) {
        Ok(tp) => tp,
        Err(code) => return code,
    };
    let facts = build_facts(&tp);
    for f in &tp.program.functions {
        let analysis = PermAnalysis::compute(&tp, facts.get(&f.name));
        let all_steps = match steps(f, &analysis.states, None) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{}: {e}", error_tag());
                return 1;
            }
        };
        let marks = expectations(&analysis.needs, &analysis.states, &style_overrides(&analysis, style));
        match format {
            Format::Human => {
                println!("## function {}", f.name);
                let table = render_perm_table(&all_steps, &RenderOptions::default(), DocFormat::Text);
                print!("{table}");
                let single = crate::lang::Program { functions: vec![f.clone()] };
                let marks_for_fn: Vec<_> =
                    marks.iter().filter(|m| m.at.func == f.name).cloned().collect();
                let listing = render_annotated_listing(
                    &single,
                    &marks_for_fn,
                    &RenderOptions::default(),
                    DocFormat::Text,
                );
                print!("{listing}");
                println!();
            }
            Format::Records => {
                for state in &analysis.states {
                    let mut paths: Vec<_> = state.has.iter().collect();
                    paths.sort_by_key(|(p, _)| p.to_string());
                    for (path, perms) in paths {
                        println!(
                            "{}",
                            json!({
                                "schema": RECORD_SCHEMA, "kind": "perm-state",
                                "at": state.at.to_string(), "path": path.to_string(),
                                "has": perms.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                                "missing": state.missing.get(path).map(|m| m
                                    .iter()
                                    .map(|(p, c)| (p.to_string(), c.to_string()))
                                    .collect::<Vec<_>>()),
                            })
                        );
                    }
                }
                for step in &all_steps {
                    for (path, change) in &step.changes {
                        println!(
                            "{}",
                            json!({
                                "schema": RECORD_SCHEMA, "kind": "perm-step",
                                "from": step.from.to_string(), "to": step.to.to_string(),
                                "branch_edge": step.branch_edge,
                                "path": path.to_string(),
                                "gains": change.gains.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                                "losses": change.losses.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                                "cause": change.cause.to_string(),
                            })
                        );
                    }
                }
                for mark in &marks {
                    println!(
                        "{}",
                        json!({
                            "schema": RECORD_SCHEMA, "kind": "mark",
                            "at": mark.at.to_string(), "path": mark.path.to_string(),
                            "expected": mark.expected.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                            "satisfied": mark.satisfied.iter().map(|(p, s)| (p.to_string(), *s)).collect::<Vec<_>>(),
                        })
                    );
                }
            }
        }
    }
    0
}

fn write_doc(dir: &FsPath, stem: &str, doc: &DiagramDoc) -> Result<(), String> {
    let path = dir.join(format!("{stem}.{}", doc.format.extension()));
    fs::write(&path, &doc.content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn cmd_render(input: &FsPath, out_dir: &FsPath, expanded: bool, style: Style, max_steps: u64) -> i32 {
    let tp = match load(input) {
        Ok(tp) => tp,
        Err(code) => return code,
    };
    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("{}: cannot create {}: {e}", error_tag(), out_dir.display());
        return 1;
    }
    let opts = RenderOptions {
        abstraction: if expanded { Abstraction::Expanded } else { Abstraction::Abstracted },
        ..RenderOptions::default()
    };
    let mut failures = Vec::new();

    // Memory trace (when the program has a runnable main).
    match trace(&tp, &[], RunLimits { max_steps }) {
        Ok(snaps) if !snaps.is_empty() => {
            for format in [DocFormat::Text, DocFormat::Svg, DocFormat::Html] {
                let doc = render_memory_trace(&snaps, &opts, format);
                if let Err(e) = write_doc(out_dir, "memory_trace", &doc) {
                    failures.push(e);
                }
            }
        }
        Ok(_) => {}
        Err(e) => eprintln!("note: skipping memory trace: {e}"),
    }

    let facts = build_facts(&tp);
    let mut all_marks = Vec::new();
    for f in &tp.program.functions {
        let analysis = PermAnalysis::compute(&tp, facts.get(&f.name));
        let all_steps = match steps(f, &analysis.states, None) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{}: {e}", error_tag());
                return 1;
            }
        };
        for format in [DocFormat::Text, DocFormat::Svg, DocFormat::Html] {
            let doc = render_perm_table(&all_steps, &opts, format);
            if let Err(e) = write_doc(out_dir, &format!("steps_{}", f.name), &doc) {
                failures.push(e);
            }
        }
        all_marks
            .extend(expectations(&analysis.needs, &analysis.states, &style_overrides(&analysis, style)));
    }
    for format in [DocFormat::Text, DocFormat::Svg, DocFormat::Html] {
        let doc = render_annotated_listing(&tp.program, &all_marks, &opts, format);
        if let Err(e) = write_doc(out_dir, "listing", &doc) {
            failures.push(e);
        }
    }

    if failures.is_empty() {
        println!("wrote diagrams to {}", out_dir.display());
        0
    } else {
        for e in failures {
            eprintln!("{}: {e}", error_tag());
        }
        1
    }
}

fn cmd_fuzz(
    seed: u64,
    count: u64,
    properties: &[PropArg],
    out_dir: Option<&FsPath>,
    format: Format,
) -> i32 {
    let props: Vec<Property> = properties.iter().map(|p| Property::from(*p)).collect();
    // The strictest property decides the generator configuration: the
    // oracle needs small bodies, soundness needs monomorphic programs.
    let cfg = if props.contains(&Property::OracleEquivalence) {
        FuzzConfig { seed, ..FuzzConfig::oracle_sized(seed) }
    } else if props.contains(&Property::Soundness) {
        FuzzConfig::monomorphic(seed)
    } else {
        FuzzConfig::with_lifetimes(seed)
    };
    let report = campaign(&cfg, &props, count);

    if let Some(dir) = out_dir {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("{}: cannot create {}: {e}", error_tag(), dir.display());
            return 1;
        }
        for (i, cex) in report.violations.iter().enumerate() {
            let path = dir.join(format!("counterexample_{i}.own"));
            if let Err(e) = fs::write(&path, &cex.program) {
                eprintln!("{}: cannot write {}: {e}", error_tag(), path.display());
            }
        }
        let path = dir.join("report.json");
        if let Err(e) = fs::write(&path, serde_json::to_string_pretty(&report).unwrap()) {
            eprintln!("{}: cannot write {}: {e}", error_tag(), path.display());
        }
    }

    match format {
        Format::Human => print!("{}", report.human_summary()),
        Format::Records => println!("{}", serde_json::to_string(&report).unwrap()),
    }
    if report.violations.is_empty() {
        0
    } else {
        1
    }
}
