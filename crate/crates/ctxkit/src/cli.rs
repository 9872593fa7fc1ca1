//! Command-line surface over the library.
//!
//! Exit codes form a total function of the report content: `0` for a
//! completed run whose report shows no contextuality, `1` for usage or
//! input errors, `2` when the analysis found contextuality (so scripts can
//! branch on the verdict), `3` when a directly requested construction
//! exceeded the section budget. Clap's own usage failures are remapped
//! from its default exit code so `2` stays unambiguous.
//!
//! Model sources are file paths, `-` for stdin, or `zoo:<name>` for a
//! built-in model. The tower section budget defaults to
//! [`DEFAULT_CLI_BUDGET`] and is overridden by the `CTXKIT_BUDGET`
//! environment variable.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Read as _;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cycles::{
    enumerate_cycles, full_invariant_with, is_cyclic_scenario, search_family, InvariantReport,
    Route, RouteChoice, ScenarioFamily, SearchReport,
};
use crate::dot::export_bundle_dot;
use crate::error::{Error, Result};
use crate::io::{model_to_json, parse_model, parse_section_arg, ParsedModel};
use crate::joint::{tower, Tower};
use crate::model::EmpiricalModel;
use crate::scenario::{graham_reduce, is_connected};
use crate::zoo::zoo;

/// Default section budget for CLI-driven towers. Kernel solving is cubic
/// in the section count of a level, so this keeps default invocations
/// interactive; set `CTXKIT_BUDGET` to raise it for deep towers.
pub const DEFAULT_CLI_BUDGET: u64 = 5_000;

#[derive(Parser)]
#[command(
    name = "ctxkit",
    version,
    about = "Possibilistic contextuality analysis over measurement scenarios"
)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Reject unknown document fields instead of preserving them.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    /// Pick the strongest applicable route.
    Auto,
    /// Require the cover to be a single chordless cycle.
    Cyclic,
    /// Require a contextual cycle and decide on its restriction.
    Ccp,
    /// Run the capped ladder on the full model.
    General,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    /// Fixed cycle cover on `--size` binary measurements.
    Cyclic,
    /// Fresh random connected cover with `--size` contexts per sample.
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model document.
    Validate { src: String },

    /// Analyze one section, or every supported section of the model.
    Analyze {
        src: String,

        /// Section to analyze, written m1,m2=o1,o2 in canonical context
        /// order; without it the whole model is surveyed.
        #[arg(long)]
        section: Option<String>,

        /// Deepest ladder level for the general route and whole-model
        /// surveys (default: number of measurements minus one). The
        /// cyclic and ccp routes use their own decisive heights.
        #[arg(long)]
        max_level: Option<usize>,

        /// Route selection; only meaningful together with --section.
        #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
        route: RouteArg,
    },

    /// Build the pairwise joint tower and summarize or emit a level.
    Joint {
        src: String,

        /// Level to build the tower to.
        #[arg(long)]
        level: usize,

        /// Emit the top level as a model document instead of a summary.
        #[arg(long)]
        emit: bool,
    },

    /// Enumerate the cycles of the cover graph.
    Cycles {
        src: String,

        /// Longest cycle to report (default: the number of contexts).
        #[arg(long)]
        max_len: Option<usize>,
    },

    /// Show or emit a built-in model (hardy, table3, table7, ks5, fig3).
    Zoo {
        name: String,

        /// Emit the model document instead of a summary.
        #[arg(long)]
        emit: bool,
    },

    /// Export the bundle diagram of a model as Graphviz DOT.
    ExportDot { src: String },

    /// Sample random models hunting for sections the ladder never detects.
    Search {
        /// Scenario family to sample from.
        #[arg(long, value_enum)]
        family: FamilyArg,

        /// Cycle length (cyclic family) or context count (random family).
        #[arg(long)]
        size: usize,

        /// Number of models to sample.
        #[arg(long)]
        count: usize,

        /// Master seed; reports are identical for identical seeds.
        #[arg(long)]
        seed: u64,

        /// Deepest ladder level consulted per section.
        #[arg(long)]
        level_cap: usize,

        /// Per-event keep probability when sampling supports, in (0, 1].
        #[arg(long, default_value_t = 0.5)]
        density: f64,
    },
}

/// Runs the CLI on an argument vector and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let budget = match budget_from_env() {
        Ok(budget) => budget,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 1;
        }
    };
    match dispatch(cli, budget) {
        Ok(code) => code,
        Err(Error::ResourceLimit {
            level,
            needed,
            budget,
        }) => {
            eprintln!(
                "error: tower level {level} needs {needed} sections over a budget of {budget}; \
                 raise CTXKIT_BUDGET to proceed"
            );
            3
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn budget_from_env() -> std::result::Result<u64, String> {
    match std::env::var("CTXKIT_BUDGET") {
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("CTXKIT_BUDGET must be a nonnegative integer, got {raw:?}")),
        Err(_) => Ok(DEFAULT_CLI_BUDGET),
    }
}

fn dispatch(cli: Cli, budget: u64) -> Result<i32> {
    let format = cli.format;
    let strict = cli.strict;
    match cli.command {
        Command::Validate { src } => cmd_validate(&src, strict, format),
        Command::Analyze {
            src,
            section,
            max_level,
            route,
        } => cmd_analyze(&src, section, max_level, route, strict, budget, format),
        Command::Joint { src, level, emit } => cmd_joint(&src, level, emit, strict, budget, format),
        Command::Cycles { src, max_len } => cmd_cycles(&src, max_len, strict, format),
        Command::Zoo { name, emit } => cmd_zoo(&name, emit, format),
        Command::ExportDot { src } => {
            let parsed = load(&src, strict)?;
            print!("{}", export_bundle_dot(&parsed.model));
            Ok(0)
        }
        Command::Search {
            family,
            size,
            count,
            seed,
            level_cap,
            density,
        } => cmd_search(family, size, count, seed, level_cap, density, budget, format),
    }
}

/// Loads a model from a file path, `-` for stdin, or `zoo:<name>`.
fn load(src: &str, strict: bool) -> Result<ParsedModel> {
    if let Some(name) = src.strip_prefix("zoo:") {
        return zoo(name)?.parse();
    }
    let text = if src == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(src)?
    };
    parse_model(&text, strict)
}

fn print_json(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
}

fn cmd_validate(src: &str, strict: bool, format: Format) -> Result<i32> {
    let parsed = load(src, strict)?;
    let scenario = parsed.model.scenario();
    match format {
        Format::Text => {
            println!(
                "valid: {} measurements, {} contexts, {} supported sections",
                scenario.n_measurements(),
                scenario.n_contexts(),
                parsed.model.total_support()
            );
            for (key, value) in &parsed.metadata {
                println!("{key}: {value}");
            }
        }
        Format::Json => print_json(&json!({
            "valid": true,
            "measurements": scenario.n_measurements(),
            "contexts": scenario.n_contexts(),
            "total_support": parsed.model.total_support(),
            "metadata": parsed.metadata,
        })),
    }
    Ok(0)
}

fn route_label(route: &Route) -> String {
    match route {
        Route::Cyclic => "cyclic".to_owned(),
        Route::CcpCycle(len) => format!("ccp-cycle({len})"),
        Route::GeneralCapped => "general-capped".to_owned(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    src: &str,
    section: Option<String>,
    max_level: Option<usize>,
    route: RouteArg,
    strict: bool,
    budget: u64,
    format: Format,
) -> Result<i32> {
    if section.is_none() && route != RouteArg::Auto {
        eprintln!("error: --route requires --section");
        return Ok(1);
    }
    let parsed = load(src, strict)?;
    let model = Arc::new(parsed.model);
    match section {
        Some(arg) => cmd_analyze_section(&model, &arg, max_level, route, budget, format),
        None => cmd_analyze_model(&model, max_level, budget, format),
    }
}

fn cmd_analyze_section(
    model: &Arc<EmpiricalModel>,
    arg: &str,
    max_level: Option<usize>,
    route: RouteArg,
    budget: u64,
    format: Format,
) -> Result<i32> {
    let scenario = model.scenario();
    let (ctx, section) = parse_section_arg(scenario, arg)?;
    let cap = max_level.unwrap_or_else(|| scenario.n_measurements().saturating_sub(1));
    let choice = match route {
        RouteArg::Auto => RouteChoice::Auto,
        RouteArg::Cyclic => RouteChoice::Cyclic,
        RouteArg::Ccp => RouteChoice::CcpCycle,
        RouteArg::General => RouteChoice::GeneralCapped,
    };
    match full_invariant_with(model, ctx, &section, cap, budget, choice) {
        Ok(report) => {
            render_section_report(&report, format);
            Ok(if report.lc { 2 } else { 0 })
        }
        // A cover with no cycles supports no ladder, but the direct check
        // still answers; report it instead of failing.
        Err(Error::AcyclicScenario) => {
            let lc = model.is_lc_at(ctx, &section)?.holds;
            match format {
                Format::Text => {
                    println!("section {arg}");
                    println!("lc: {lc}");
                    println!("note: cover is acyclic, so the ladder does not apply");
                }
                Format::Json => print_json(&json!({
                    "section": arg,
                    "lc": lc,
                    "note": "cover is acyclic, so the ladder does not apply",
                })),
            }
            Ok(if lc { 2 } else { 0 })
        }
        Err(err) => Err(err),
    }
}

fn render_section_report(report: &InvariantReport, format: Format) {
    let last_level = report.clc_levels.last().map(|&(k, _)| k);
    let conclusive = !report.lc
        || report.decisive_level.is_some()
        || !matches!(report.route, Route::GeneralCapped);
    match format {
        Format::Text => {
            println!("section {}={}", report.context, report.section);
            println!("lc: {}", report.lc);
            println!("route: {}", route_label(&report.route));
            if let Some(cycle) = &report.cycle {
                let keys: Vec<String> = cycle.iter().map(|key| format!("{{{key}}}")).collect();
                println!("restriction cycle: {}", keys.join(" "));
            }
            let ladder: Vec<String> = report
                .clc_levels
                .iter()
                .map(|(k, holds)| format!("{k}={holds}"))
                .collect();
            println!("clc ladder: {}", ladder.join(" "));
            match report.decisive_level {
                Some(level) => println!("decisive level: {level}"),
                None if !report.lc => {
                    println!("decisive level: none (section is not logically contextual)")
                }
                None if conclusive => println!("decisive level: none"),
                None => println!(
                    "decisive level: none through level {} (inconclusive)",
                    last_level.unwrap_or(0)
                ),
            }
            if let Some(family) = &report.extension {
                println!("extends into a compatible family:");
                for (context, values) in family {
                    println!("  {context}={values}");
                }
            }
        }
        Format::Json => {
            let clc: Vec<Value> = report
                .clc_levels
                .iter()
                .map(|&(k, holds)| json!([k, holds]))
                .collect();
            let vanishing: Vec<Value> = report
                .vanishing
                .iter()
                .map(|(k, family)| json!({ "level": k, "family": family }))
                .collect();
            print_json(&json!({
                "context": report.context,
                "section": report.section,
                "lc": report.lc,
                "extension": report.extension,
                "route": route_label(&report.route),
                "cycle": report.cycle,
                "clc": clc,
                "vanishing": vanishing,
                "decisive_level": report.decisive_level,
                "conclusive": conclusive,
            }));
        }
    }
}

enum LadderState {
    Ready(Tower, usize),
    Unavailable(&'static str),
}

/// Builds the deepest tower not exceeding the budget, stepping the level
/// down from `requested`. Used when the level was defaulted, so hitting
/// the budget degrades the survey instead of failing it.
fn deepest_tower(model: &Arc<EmpiricalModel>, requested: usize, budget: u64) -> Result<LadderState> {
    let mut cap = requested;
    loop {
        match tower(Arc::clone(model), cap, budget) {
            Ok(t) => return Ok(LadderState::Ready(t, cap)),
            Err(Error::ResourceLimit { .. }) if cap > 0 => cap -= 1,
            Err(err) => return Err(err),
        }
    }
}

fn cmd_analyze_model(
    model: &Arc<EmpiricalModel>,
    max_level: Option<usize>,
    budget: u64,
    format: Format,
) -> Result<i32> {
    let scenario = model.scenario();
    let requested = max_level.unwrap_or_else(|| scenario.n_measurements().saturating_sub(1));
    let sc = model.is_sc().holds;

    let state = if !is_connected(scenario) {
        LadderState::Unavailable("cover is disconnected, so the ladder does not apply")
    } else if graham_reduce(scenario).0 {
        LadderState::Unavailable("cover is acyclic, so the ladder does not apply")
    } else if max_level.is_some() {
        LadderState::Ready(tower(Arc::clone(model), requested, budget)?, requested)
    } else {
        deepest_tower(model, requested, budget)?
    };

    // (context key, values, first decisive level within the reached cap)
    let mut contextual: Vec<(String, String, Option<usize>)> = Vec::new();
    let mut total_sections = 0usize;
    for ctx in 0..scenario.n_contexts() {
        for section in model.support(ctx) {
            total_sections += 1;
            if !model.is_lc_at(ctx, section)?.holds {
                continue;
            }
            let mut detected = None;
            if let LadderState::Ready(t, reached) = &state {
                for k in 0..=*reached {
                    if t.clc_k(ctx, section, k)?.holds {
                        detected = Some(k);
                        break;
                    }
                }
            }
            contextual.push((
                scenario.context_key(ctx),
                section.render_values(scenario),
                detected,
            ));
        }
    }

    let csc: Option<Vec<(usize, bool)>> = match (&state, sc) {
        (LadderState::Ready(t, reached), true) => {
            let mut ladder = Vec::new();
            for k in 0..=*reached {
                let holds = t.csc_k(k)?.holds;
                ladder.push((k, holds));
                if holds {
                    break;
                }
            }
            Some(ladder)
        }
        _ => None,
    };

    let (reached, note): (Option<usize>, Option<String>) = match &state {
        LadderState::Ready(_, reached) => {
            let note = (*reached < requested).then(|| {
                format!("ladder capped at level {reached} of requested {requested} by the section budget")
            });
            (Some(*reached), note)
        }
        LadderState::Unavailable(reason) => (None, Some((*reason).to_owned())),
    };

    match format {
        Format::Text => {
            println!(
                "model: {} measurements, {} contexts, {} supported sections",
                scenario.n_measurements(),
                scenario.n_contexts(),
                total_sections
            );
            println!("sc: {sc}");
            if let Some(ladder) = &csc {
                let rendered: Vec<String> = ladder
                    .iter()
                    .map(|(k, holds)| format!("{k}={holds}"))
                    .collect();
                println!("csc ladder: {}", rendered.join(" "));
            }
            println!(
                "contextual sections: {} of {total_sections}",
                contextual.len()
            );
            for (context, values, detected) in &contextual {
                match (detected, reached) {
                    (Some(level), _) => println!("  {context}={values}: detected at level {level}"),
                    (None, Some(cap)) => {
                        println!("  {context}={values}: undetected through level {cap}")
                    }
                    (None, None) => println!("  {context}={values}"),
                }
            }
            if let Some(note) = &note {
                println!("note: {note}");
            }
        }
        Format::Json => {
            let sections: Vec<Value> = contextual
                .iter()
                .map(|(context, values, detected)| {
                    json!({ "context": context, "section": values, "detected_at": detected })
                })
                .collect();
            let csc_json: Option<Vec<Value>> = csc.as_ref().map(|ladder| {
                ladder
                    .iter()
                    .map(|&(k, holds)| json!([k, holds]))
                    .collect()
            });
            print_json(&json!({
                "measurements": scenario.n_measurements(),
                "contexts": scenario.n_contexts(),
                "total_support": total_sections,
                "sc": sc,
                "csc": csc_json,
                "ladder_level": reached,
                "requested_level": requested,
                "contextual_sections": sections,
                "note": note,
            }));
        }
    }
    Ok(if contextual.is_empty() { 0 } else { 2 })
}

fn cmd_joint(
    src: &str,
    level: usize,
    emit: bool,
    strict: bool,
    budget: u64,
    format: Format,
) -> Result<i32> {
    let parsed = load(src, strict)?;
    let model = Arc::new(parsed.model);
    let t = tower(Arc::clone(&model), level, budget)?;
    if emit {
        let mut metadata = BTreeMap::new();
        metadata.insert("joint_level".to_owned(), level.to_string());
        let document = if level == 0 {
            model_to_json(&model, metadata)
        } else {
            model_to_json(&t.materialize_model(level)?, metadata)
        };
        print!("{document}");
        return Ok(0);
    }
    match format {
        Format::Text => {
            for k in 0..=level {
                println!(
                    "level {k}: {} contexts, {} supported sections",
                    t.n_contexts(k),
                    t.total_support(k)
                );
            }
        }
        Format::Json => {
            let levels: Vec<Value> = (0..=level)
                .map(|k| {
                    json!({
                        "level": k,
                        "contexts": t.n_contexts(k),
                        "total_support": t.total_support(k),
                    })
                })
                .collect();
            print_json(&json!({ "levels": levels }));
        }
    }
    Ok(0)
}

fn cmd_cycles(src: &str, max_len: Option<usize>, strict: bool, format: Format) -> Result<i32> {
    let parsed = load(src, strict)?;
    let model = &parsed.model;
    let scenario = model.scenario();
    let graph = model.cover_graph();
    let max_len = max_len.unwrap_or_else(|| scenario.n_contexts());
    let cycles = enumerate_cycles(graph, max_len);
    let cyclic = is_cyclic_scenario(scenario)?;
    let rendered: Vec<Vec<String>> = cycles
        .iter()
        .map(|cycle| {
            cycle
                .vertices()
                .iter()
                .map(|&c| scenario.context_key(c))
                .collect()
        })
        .collect();
    match format {
        Format::Text => {
            println!(
                "cover: {} contexts, {} intersecting pairs; single chordless cycle: {cyclic}",
                scenario.n_contexts(),
                graph.edges().len()
            );
            println!("cycles up to length {max_len}: {}", rendered.len());
            for contexts in &rendered {
                let keys: Vec<String> = contexts.iter().map(|key| format!("{{{key}}}")).collect();
                println!("  length {}: {}", contexts.len(), keys.join(" "));
            }
        }
        Format::Json => print_json(&json!({
            "contexts": scenario.n_contexts(),
            "edges": graph.edges().len(),
            "cyclic_scenario": cyclic,
            "cycles": rendered,
        })),
    }
    Ok(0)
}

fn cmd_zoo(name: &str, emit: bool, format: Format) -> Result<i32> {
    let entry = zoo(name)?;
    if emit {
        print!("{}", entry.render());
        return Ok(0);
    }
    let parsed = entry.parse()?;
    let scenario = parsed.model.scenario();
    match format {
        Format::Text => {
            println!(
                "{name}: {} measurements, {} contexts, {} supported sections",
                scenario.n_measurements(),
                scenario.n_contexts(),
                parsed.model.total_support()
            );
            for (key, value) in &parsed.metadata {
                println!("{key}: {value}");
            }
        }
        Format::Json => print_json(&json!({
            "name": name,
            "measurements": scenario.n_measurements(),
            "contexts": scenario.n_contexts(),
            "total_support": parsed.model.total_support(),
            "metadata": parsed.metadata,
        })),
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    family: FamilyArg,
    size: usize,
    count: usize,
    seed: u64,
    level_cap: usize,
    density: f64,
    budget: u64,
    format: Format,
) -> Result<i32> {
    if !(density > 0.0 && density <= 1.0) {
        eprintln!("error: --density must be in (0, 1], got {density}");
        return Ok(1);
    }
    let family = match family {
        FamilyArg::Cyclic => ScenarioFamily::Cyclic { size },
        FamilyArg::Random => ScenarioFamily::Random { contexts: size },
    };
    let report = search_family(&family, density, count, level_cap, seed, budget)?;
    render_search_report(&report, level_cap, format);
    Ok(if report.candidates.is_empty() { 0 } else { 2 })
}

fn render_search_report(report: &SearchReport, level_cap: usize, format: Format) {
    match format {
        Format::Text => {
            println!(
                "examined {} models, {} supported sections, {} logically contextual",
                report.models_examined, report.sections_examined, report.lc_sections
            );
            let detected: Vec<String> = report
                .detected_by_level
                .iter()
                .enumerate()
                .map(|(k, n)| format!("{k}: {n}"))
                .collect();
            println!("first detected by level: {}", detected.join("  "));
            println!("samples skipped on budget: {}", report.skipped);
            println!(
                "undetected through level {level_cap}: {}",
                report.candidates.len()
            );
            for candidate in &report.candidates {
                println!(
                    "  sample {} (seed {}): section {}={}",
                    candidate.sample_index,
                    candidate.sample_seed,
                    candidate.context,
                    candidate.section
                );
            }
        }
        Format::Json => {
            let candidates: Vec<Value> = report
                .candidates
                .iter()
                .map(|candidate| {
                    let model: Value = serde_json::from_str(&candidate.model_json)
                        .expect("candidate document serializes");
                    json!({
                        "sample_index": candidate.sample_index,
                        "sample_seed": candidate.sample_seed,
                        "context": candidate.context,
                        "section": candidate.section,
                        "model": model,
                    })
                })
                .collect();
            print_json(&json!({
                "models_examined": report.models_examined,
                "sections_examined": report.sections_examined,
                "lc_sections": report.lc_sections,
                "detected_by_level": report.detected_by_level,
                "skipped": report.skipped,
                "level_cap": level_cap,
                "candidates": candidates,
            }));
        }
    }
}
