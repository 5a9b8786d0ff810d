//! Declarative input documents for the command-line auditor.
//!
//! Bundles carry *finished* certificates; the documents here carry raw
//! inputs the auditor can certify or execute on the spot: claim lists,
//! admission constraints, layer tables, approved-assumption lists, sandbox
//! states, single action proposals, task suites, and registries of unsafe
//! proposals to splice into those tasks. They follow the same canonical
//! conventions as the bundle — sorted keys, rationals as decimal strings,
//! closed field sets, no insignificant whitespace — and each carries its own
//! `schema` tag so one kind of file cannot be mistaken for another.

use serde_json::Value;

use super::bundle::{
    claims_from_canon, claims_to_canon, constraint_from_canon, constraint_to_canon,
    layer_from_canon, layer_to_canon, BundleError,
};
use super::canon::{canonical_bytes, CanonError, MapBuilder, MapReader};
use crate::action::harness::{LabeledStep, SandboxTask, UnsafeProposal};
use crate::action::sandbox::{FileMeta, SandboxState, SandboxTool};
use crate::action::GatedStep;
use crate::composition::LayerWitness;
use crate::grounding::AtomicClaim;
use crate::mcr::Constraint;

pub const CLAIMS_SCHEMA: &str = "caliper.claims.v1";
pub const CONSTRAINTS_SCHEMA: &str = "caliper.constraints.v1";
pub const LAYERS_SCHEMA: &str = "caliper.layers.v1";
pub const APPROVED_SCHEMA: &str = "caliper.approved.v1";
pub const SANDBOX_SCHEMA: &str = "caliper.sandbox.v1";
pub const PROPOSAL_SCHEMA: &str = "caliper.proposal.v1";
pub const TASKS_SCHEMA: &str = "caliper.tasks.v1";
pub const REGISTRY_SCHEMA: &str = "caliper.registry.v1";

fn malformed(detail: impl Into<String>) -> BundleError {
    BundleError::Malformed(CanonError::Malformed(detail.into()))
}

fn emit(v: &Value) -> String {
    String::from_utf8(canonical_bytes(v)).expect("JSON is UTF-8")
}

fn parse(wire: &str, what: &str) -> Result<Value, BundleError> {
    serde_json::from_str(wire).map_err(|e| malformed(format!("{what}: {e}")))
}

/// The `schema` tag of a wire document, if it parses and has one. Lets a
/// caller dispatch on file kind without committing to a full decode.
pub fn wire_schema(wire: &str) -> Option<String> {
    let v: Value = serde_json::from_str(wire).ok()?;
    v.get("schema")?.as_str().map(str::to_string)
}

fn expect_schema(r: &mut MapReader, want: &str) -> Result<(), BundleError> {
    let got = r.str("schema")?;
    if got != want {
        return Err(malformed(format!("schema is {got:?}, expected {want:?}")));
    }
    Ok(())
}

// ---------------------------------------------------------------- claims

pub fn claims_to_wire(claims: &[AtomicClaim]) -> String {
    let v = MapBuilder::new()
        .str("schema", CLAIMS_SCHEMA)
        .list("claims", claims_to_canon(claims))
        .build();
    emit(&v)
}

pub fn claims_from_wire(wire: &str) -> Result<Vec<AtomicClaim>, BundleError> {
    let v = parse(wire, "claims file")?;
    let mut r = MapReader::over(&v, "claims file")?;
    expect_schema(&mut r, CLAIMS_SCHEMA)?;
    let claims = claims_from_canon(r.list("claims")?)?;
    r.finish()?;
    Ok(claims)
}

// ------------------------------------------------------------ constraints

pub fn constraints_to_wire(constraints: &[Constraint]) -> Result<String, BundleError> {
    let items: Vec<Value> =
        constraints.iter().map(constraint_to_canon).collect::<Result<_, _>>()?;
    let v =
        MapBuilder::new().str("schema", CONSTRAINTS_SCHEMA).list("constraints", items).build();
    Ok(emit(&v))
}

pub fn constraints_from_wire(wire: &str) -> Result<Vec<Constraint>, BundleError> {
    let v = parse(wire, "constraints file")?;
    let mut r = MapReader::over(&v, "constraints file")?;
    expect_schema(&mut r, CONSTRAINTS_SCHEMA)?;
    let constraints =
        r.list("constraints")?.iter().map(constraint_from_canon).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(constraints)
}

// ---------------------------------------------------------------- layers

pub fn layers_to_wire(layers: &[LayerWitness]) -> String {
    let items: Vec<Value> = layers.iter().map(layer_to_canon).collect();
    let v = MapBuilder::new().str("schema", LAYERS_SCHEMA).list("layers", items).build();
    emit(&v)
}

pub fn layers_from_wire(wire: &str) -> Result<Vec<LayerWitness>, BundleError> {
    let v = parse(wire, "layers file")?;
    let mut r = MapReader::over(&v, "layers file")?;
    expect_schema(&mut r, LAYERS_SCHEMA)?;
    let layers = r.list("layers")?.iter().map(layer_from_canon).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(layers)
}

// --------------------------------------------------------------- approved

pub fn approved_to_wire(names: &[String]) -> String {
    let v = MapBuilder::new().str("schema", APPROVED_SCHEMA).str_list("approved", names).build();
    emit(&v)
}

pub fn approved_from_wire(wire: &str) -> Result<Vec<String>, BundleError> {
    let v = parse(wire, "approved file")?;
    let mut r = MapReader::over(&v, "approved file")?;
    expect_schema(&mut r, APPROVED_SCHEMA)?;
    let names = r.str_list("approved")?;
    r.finish()?;
    Ok(names)
}

// ---------------------------------------------------------- sandbox state

fn state_fields(b: MapBuilder, s: &SandboxState) -> MapBuilder {
    let files: Vec<Value> = s
        .files
        .iter()
        .map(|(path, meta)| {
            MapBuilder::new()
                .str("path", path)
                .nat("mtime", meta.mtime)
                .str("owner", &meta.owner)
                .str("content_hash", &meta.content_hash)
                .build()
        })
        .collect();
    b.str("root", &s.root)
        .list("files", files)
        .nat("delete_count", s.delete_count)
        .nat("delete_budget", s.delete_budget)
        .nat("now", s.now)
}

fn state_from_reader(r: &mut MapReader) -> Result<SandboxState, BundleError> {
    let root = r.str("root")?;
    let mut files = std::collections::BTreeMap::new();
    for fv in r.list("files")? {
        let mut fr = MapReader::over(fv, "file entry")?;
        let path = fr.str("path")?;
        let meta = FileMeta {
            mtime: fr.nat("mtime")?,
            owner: fr.str("owner")?,
            content_hash: fr.str("content_hash")?,
        };
        fr.finish()?;
        if files.insert(path.clone(), meta).is_some() {
            return Err(malformed(format!("file entry: duplicate path {path:?}")));
        }
    }
    Ok(SandboxState {
        root,
        files,
        delete_count: r.nat("delete_count")?,
        delete_budget: r.nat("delete_budget")?,
        now: r.nat("now")?,
    })
}

pub fn sandbox_to_wire(state: &SandboxState) -> String {
    emit(&state_fields(MapBuilder::new().str("schema", SANDBOX_SCHEMA), state).build())
}

pub fn sandbox_from_wire(wire: &str) -> Result<SandboxState, BundleError> {
    let v = parse(wire, "sandbox file")?;
    let mut r = MapReader::over(&v, "sandbox file")?;
    expect_schema(&mut r, SANDBOX_SCHEMA)?;
    let state = state_from_reader(&mut r)?;
    r.finish()?;
    Ok(state)
}

// ------------------------------------------------------------------ tools

fn tool_to_canon(t: &SandboxTool) -> Value {
    let b = MapBuilder::new();
    match t {
        SandboxTool::Ls { path } => b.str("tool", "ls").str("path", path),
        SandboxTool::Cat { path } => b.str("tool", "cat").str("path", path),
        SandboxTool::Find { path, pattern } => {
            b.str("tool", "find").str("path", path).str("pattern", pattern)
        }
        SandboxTool::Stat { path } => b.str("tool", "stat").str("path", path),
        SandboxTool::Md5 { path } => b.str("tool", "md5").str("path", path),
        SandboxTool::Rm { path } => b.str("tool", "rm").str("path", path),
        SandboxTool::Mv { src, dst } => b.str("tool", "mv").str("src", src).str("dst", dst),
        SandboxTool::Mkdir { path, mtime, owner } => {
            b.str("tool", "mkdir").str("path", path).nat("mtime", *mtime).str("owner", owner)
        }
        SandboxTool::Chmod { path, mode } => {
            b.str("tool", "chmod").str("path", path).str("mode", mode)
        }
    }
    .build()
}

fn tool_from_canon(v: &Value) -> Result<SandboxTool, BundleError> {
    let mut r = MapReader::over(v, "tool")?;
    let kind = r.str("tool")?;
    let tool = match kind.as_str() {
        "ls" => SandboxTool::Ls { path: r.str("path")? },
        "cat" => SandboxTool::Cat { path: r.str("path")? },
        "find" => SandboxTool::Find { path: r.str("path")?, pattern: r.str("pattern")? },
        "stat" => SandboxTool::Stat { path: r.str("path")? },
        "md5" => SandboxTool::Md5 { path: r.str("path")? },
        "rm" => SandboxTool::Rm { path: r.str("path")? },
        "mv" => SandboxTool::Mv { src: r.str("src")?, dst: r.str("dst")? },
        "mkdir" => SandboxTool::Mkdir {
            path: r.str("path")?,
            mtime: r.nat("mtime")?,
            owner: r.str("owner")?,
        },
        "chmod" => SandboxTool::Chmod { path: r.str("path")?, mode: r.str("mode")? },
        other => return Err(malformed(format!("tool: unknown tool {other:?}"))),
    };
    r.finish()?;
    Ok(tool)
}

// ------------------------------------------------------------ gated steps

fn step_fields(b: MapBuilder, s: &GatedStep<SandboxTool>) -> MapBuilder {
    b.value("action", tool_to_canon(&s.action)).str_list("pre", &s.pre).str_list("post", &s.post)
}

fn step_from_reader(r: &mut MapReader) -> Result<GatedStep<SandboxTool>, BundleError> {
    let av =
        r.optional("action").ok_or_else(|| malformed("step: missing key \"action\""))?;
    Ok(GatedStep { action: tool_from_canon(av)?, pre: r.str_list("pre")?, post: r.str_list("post")? })
}

/// A single proposed step: the action plus the guard names it must satisfy.
pub fn proposal_to_wire(step: &GatedStep<SandboxTool>) -> String {
    emit(&step_fields(MapBuilder::new().str("schema", PROPOSAL_SCHEMA), step).build())
}

pub fn proposal_from_wire(wire: &str) -> Result<GatedStep<SandboxTool>, BundleError> {
    let v = parse(wire, "proposal file")?;
    let mut r = MapReader::over(&v, "proposal file")?;
    expect_schema(&mut r, PROPOSAL_SCHEMA)?;
    let step = step_from_reader(&mut r)?;
    r.finish()?;
    Ok(step)
}

// ------------------------------------------------------------------ tasks

fn task_to_canon(t: &SandboxTask) -> Value {
    let steps: Vec<Value> = t
        .steps
        .iter()
        .map(|l| step_fields(MapBuilder::new(), &l.step).boolean("unsafe", l.unsafe_to_run).build())
        .collect();
    MapBuilder::new()
        .str("name", &t.name)
        .value("initial", state_fields(MapBuilder::new(), &t.initial).build())
        .list("steps", steps)
        .build()
}

fn task_from_canon(v: &Value) -> Result<SandboxTask, BundleError> {
    let mut r = MapReader::over(v, "task")?;
    let name = r.str("name")?;
    let iv = r.optional("initial").ok_or_else(|| malformed("task: missing key \"initial\""))?;
    let mut ir = MapReader::over(iv, "task initial state")?;
    let initial = state_from_reader(&mut ir)?;
    ir.finish()?;
    let mut steps = Vec::new();
    for sv in r.list("steps")? {
        let mut sr = MapReader::over(sv, "task step")?;
        let step = step_from_reader(&mut sr)?;
        let unsafe_to_run = sr.boolean("unsafe")?;
        sr.finish()?;
        steps.push(LabeledStep { step, unsafe_to_run });
    }
    r.finish()?;
    Ok(SandboxTask { name, initial, steps })
}

/// A task suite: named step sequences with labeled ground truth, each with
/// its own initial sandbox state.
pub fn tasks_to_wire(tasks: &[SandboxTask]) -> String {
    let items: Vec<Value> = tasks.iter().map(task_to_canon).collect();
    emit(&MapBuilder::new().str("schema", TASKS_SCHEMA).list("tasks", items).build())
}

pub fn tasks_from_wire(wire: &str) -> Result<Vec<SandboxTask>, BundleError> {
    let v = parse(wire, "tasks file")?;
    let mut r = MapReader::over(&v, "tasks file")?;
    expect_schema(&mut r, TASKS_SCHEMA)?;
    let tasks = r.list("tasks")?.iter().map(task_from_canon).collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(tasks)
}

// --------------------------------------------------------------- registry

/// A registry of unsafe proposals to splice into a declared task suite.
/// Each entry names its target task and the position (in the task's
/// original step list) it is inserted before.
pub fn registry_to_wire(registry: &[UnsafeProposal]) -> String {
    let items: Vec<Value> = registry
        .iter()
        .map(|p| {
            step_fields(
                MapBuilder::new().str("task", &p.task).nat("at", p.at as u64),
                &p.step,
            )
            .build()
        })
        .collect();
    emit(&MapBuilder::new().str("schema", REGISTRY_SCHEMA).list("proposals", items).build())
}

pub fn registry_from_wire(wire: &str) -> Result<Vec<UnsafeProposal>, BundleError> {
    let v = parse(wire, "registry file")?;
    let mut r = MapReader::over(&v, "registry file")?;
    expect_schema(&mut r, REGISTRY_SCHEMA)?;
    let mut registry = Vec::new();
    for pv in r.list("proposals")? {
        let mut pr = MapReader::over(pv, "registry proposal")?;
        let task = pr.str("task")?;
        let at = usize::try_from(pr.nat("at")?)
            .map_err(|_| malformed("registry proposal: at does not fit in memory"))?;
        let step = step_from_reader(&mut pr)?;
        pr.finish()?;
        registry.push(UnsafeProposal { task, at, step });
    }
    r.finish()?;
    Ok(registry)
}
