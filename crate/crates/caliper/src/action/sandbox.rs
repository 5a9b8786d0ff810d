//! A deterministic file-sandbox domain for gated execution.
//!
//! State is a pure value: a map from absolute paths to file metadata plus a
//! deletion counter, a deletion budget, and a fixed reference clock. Tools
//! are modelled by their effect on that value — read-only tools are
//! identities — so runs replay bit-for-bit and certificates stay checkable
//! offline.
//!
//! Path containment is *lexical*: `.` and `..` segments are resolved
//! textually, and no symlink following exists in the model. A guard like
//! `path_in_subprefix(/sbx/notes)` therefore cannot be escaped with
//! `/sbx/notes/../../etc` — the normalizer collapses it first.

use super::{ActionDomain, ActionError, FailedGuard, GuardFn, PredicateEval};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Metadata tracked per path. Contents are represented only by a hash — the
/// sandbox certifies *actions over files*, not file bodies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileMeta {
    /// Seconds since the epoch, compared against the state's fixed clock.
    pub mtime: u64,
    pub owner: String,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SandboxState {
    /// Containment root, e.g. `/sbx`. Guards treat anything outside it as
    /// out of bounds.
    pub root: String,
    pub files: BTreeMap<String, FileMeta>,
    pub delete_count: u64,
    pub delete_budget: u64,
    /// Reference clock captured when the session started. Age checks use
    /// this fixed value so replays are deterministic.
    pub now: u64,
}

impl SandboxState {
    pub fn new(root: impl Into<String>, delete_budget: u64, now: u64) -> Self {
        SandboxState {
            root: root.into(),
            files: BTreeMap::new(),
            delete_count: 0,
            delete_budget,
            now,
        }
    }

    pub fn with_file(
        mut self,
        path: impl Into<String>,
        mtime: u64,
        owner: impl Into<String>,
        content_hash: impl Into<String>,
    ) -> Self {
        self.files.insert(
            normalize_path(&path.into()),
            FileMeta { mtime, owner: owner.into(), content_hash: content_hash.into() },
        );
        self
    }
}

/// The tool surface. Read-only tools are identities on state; mutating tools
/// are total functions (acting on a missing path is a no-op, guards exist to
/// refuse it beforehand).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SandboxTool {
    Ls { path: String },
    Cat { path: String },
    Find { path: String, pattern: String },
    Stat { path: String },
    Md5 { path: String },
    Rm { path: String },
    Mv { src: String, dst: String },
    Mkdir { path: String, mtime: u64, owner: String },
    Chmod { path: String, mode: String },
}

impl SandboxTool {
    pub fn rm(path: impl Into<String>) -> Self {
        SandboxTool::Rm { path: path.into() }
    }

    pub fn stat(path: impl Into<String>) -> Self {
        SandboxTool::Stat { path: path.into() }
    }

    /// Every path the tool touches; containment guards check all of them.
    pub fn target_paths(&self) -> Vec<&str> {
        match self {
            SandboxTool::Ls { path }
            | SandboxTool::Cat { path }
            | SandboxTool::Find { path, .. }
            | SandboxTool::Stat { path }
            | SandboxTool::Md5 { path }
            | SandboxTool::Rm { path }
            | SandboxTool::Mkdir { path, .. }
            | SandboxTool::Chmod { path, .. } => vec![path],
            SandboxTool::Mv { src, dst } => vec![src, dst],
        }
    }

    /// The object the tool operates on — the source for `mv`, the sole path
    /// otherwise. File-attribute guards (owner, age) inspect this one.
    pub fn primary_path(&self) -> &str {
        self.target_paths()[0]
    }
}

/// Lexical normalization: collapse repeated separators, resolve `.` and
/// `..` textually, never consult a real filesystem. `..` at the root stays
/// at the root, mirroring POSIX path resolution.
pub fn normalize_path(path: &str) -> String {
    let absolute = path.starts_with('/');
    let mut stack: Vec<&str> = Vec::new();
    for segment in path.split('/') {
        match segment {
            "" | "." => {}
            ".." => {
                if stack.pop().is_none() && !absolute {
                    // Relative paths that climb above their origin keep the
                    // `..`; containment guards will reject them anyway.
                    stack.push("..");
                }
            }
            s => stack.push(s),
        }
    }
    if absolute {
        format!("/{}", stack.join("/"))
    } else if stack.is_empty() {
        ".".to_string()
    } else {
        stack.join("/")
    }
}

/// Is `path` equal to `prefix` or strictly inside it? Boundary-aware:
/// `/sbxevil` is not under `/sbx`.
pub fn path_under(path: &str, prefix: &str) -> bool {
    let p = normalize_path(path);
    let pre = normalize_path(prefix);
    p == pre || p.starts_with(&format!("{}/", pre.trim_end_matches('/')))
}

/// The sandbox as an [`ActionDomain`]. Guard names follow a small grammar:
/// a bare identifier or `identifier(argument)`.
///
/// | name | meaning |
/// |------|---------|
/// | `path_in_sandbox` | every target path resolves under the state root |
/// | `path_in_subprefix(P)` | every target path resolves under `P` |
/// | `mtime_at_least(SECS)` | the primary file exists and is at least `SECS` old |
/// | `owner_is(NAME)` | the primary file exists and is owned by `NAME` |
/// | `delete_count_within_budget` | strictly fewer deletions than the budget |
/// | `target_absent` / `target_present` | primary path (non)existence, for post-conditions |
#[derive(Debug, Clone, Copy, Default)]
pub struct SandboxDomain;

fn parse_guard(name: &str) -> Result<(&str, Option<&str>), ActionError> {
    match name.find('(') {
        None => Ok((name, None)),
        Some(open) => {
            let head = &name[..open];
            let rest = &name[open + 1..];
            let arg = rest.strip_suffix(')').ok_or_else(|| ActionError::BadPredicateArgument {
                name: name.to_string(),
                detail: "missing closing parenthesis".into(),
            })?;
            Ok((head, Some(arg)))
        }
    }
}

impl ActionDomain for SandboxDomain {
    type State = SandboxState;
    type Action = SandboxTool;

    fn resolve(&self, name: &str) -> Result<GuardFn<SandboxState, SandboxTool>, ActionError> {
        let (head, arg) = parse_guard(name)?;
        let need_arg = |detail: &str| ActionError::BadPredicateArgument {
            name: name.to_string(),
            detail: detail.to_string(),
        };
        match (head, arg) {
            ("path_in_sandbox", None) => Ok(Arc::new(|s: &SandboxState, a: &SandboxTool| {
                let expected = format!("all target paths under {}", s.root);
                match a.target_paths().iter().find(|p| !path_under(p, &s.root)) {
                    None => PredicateEval::pass("all targets in sandbox", expected),
                    Some(p) => PredicateEval::fail(
                        format!("path {} escapes {}", normalize_path(p), s.root),
                        expected,
                    ),
                }
            })),
            ("path_in_subprefix", Some(prefix)) => {
                let prefix = prefix.to_string();
                Ok(Arc::new(move |_: &SandboxState, a: &SandboxTool| {
                    let expected = format!("all target paths under {prefix}");
                    match a.target_paths().iter().find(|p| !path_under(p, &prefix)) {
                        None => PredicateEval::pass("all targets in prefix", expected),
                        Some(p) => PredicateEval::fail(
                            format!("path {} escapes {prefix}", normalize_path(p)),
                            expected,
                        ),
                    }
                }))
            }
            ("mtime_at_least", Some(secs)) => {
                let min_age: u64 =
                    secs.parse().map_err(|_| need_arg("argument must be seconds"))?;
                Ok(Arc::new(move |s: &SandboxState, a: &SandboxTool| {
                    let path = normalize_path(a.primary_path());
                    let expected = format!("file age >= {min_age}s");
                    match s.files.get(&path) {
                        None => PredicateEval::fail(format!("{path} not present"), expected),
                        Some(meta) => {
                            let age = s.now.saturating_sub(meta.mtime);
                            if age >= min_age {
                                PredicateEval::pass(format!("{path} age {age}s"), expected)
                            } else {
                                PredicateEval::fail(format!("{path} age {age}s"), expected)
                            }
                        }
                    }
                }))
            }
            ("owner_is", Some(owner)) => {
                let owner = owner.to_string();
                Ok(Arc::new(move |s: &SandboxState, a: &SandboxTool| {
                    let path = normalize_path(a.primary_path());
                    let expected = format!("owner == {owner}");
                    match s.files.get(&path) {
                        None => PredicateEval::fail(format!("{path} not present"), expected),
                        Some(meta) if meta.owner == owner => {
                            PredicateEval::pass(format!("{path} owned by {}", meta.owner), expected)
                        }
                        Some(meta) => {
                            PredicateEval::fail(format!("{path} owned by {}", meta.owner), expected)
                        }
                    }
                }))
            }
            ("delete_count_within_budget", None) => {
                Ok(Arc::new(|s: &SandboxState, _: &SandboxTool| {
                    let expected = format!("delete_count < {}", s.delete_budget);
                    if s.delete_count < s.delete_budget {
                        PredicateEval::pass(format!("delete_count {}", s.delete_count), expected)
                    } else {
                        PredicateEval::fail(format!("delete_count {}", s.delete_count), expected)
                    }
                }))
            }
            ("target_absent", None) => Ok(Arc::new(|s: &SandboxState, a: &SandboxTool| {
                let path = normalize_path(a.primary_path());
                let expected = format!("{path} absent");
                if s.files.contains_key(&path) {
                    PredicateEval::fail(format!("{path} present"), expected)
                } else {
                    PredicateEval::pass(format!("{path} absent"), expected)
                }
            })),
            ("target_present", None) => Ok(Arc::new(|s: &SandboxState, a: &SandboxTool| {
                let path = normalize_path(a.primary_path());
                let expected = format!("{path} present");
                if s.files.contains_key(&path) {
                    PredicateEval::pass(format!("{path} present"), expected)
                } else {
                    PredicateEval::fail(format!("{path} absent"), expected)
                }
            })),
            _ => Err(ActionError::UnknownPredicate { name: name.to_string() }),
        }
    }

    fn apply(&self, state: &SandboxState, action: &SandboxTool) -> SandboxState {
        let mut next = state.clone();
        match action {
            SandboxTool::Ls { .. }
            | SandboxTool::Cat { .. }
            | SandboxTool::Find { .. }
            | SandboxTool::Stat { .. }
            | SandboxTool::Md5 { .. }
            | SandboxTool::Chmod { .. } => {}
            SandboxTool::Rm { path } => {
                if next.files.remove(&normalize_path(path)).is_some() {
                    next.delete_count += 1;
                }
            }
            SandboxTool::Mv { src, dst } => {
                if let Some(meta) = next.files.remove(&normalize_path(src)) {
                    next.files.insert(normalize_path(dst), meta);
                }
            }
            SandboxTool::Mkdir { path, mtime, owner } => {
                next.files.entry(normalize_path(path)).or_insert(FileMeta {
                    mtime: *mtime,
                    owner: owner.clone(),
                    content_hash: "dir".into(),
                });
            }
        }
        next
    }

    fn describe_action(&self, action: &SandboxTool) -> String {
        match action {
            SandboxTool::Ls { path } => format!("ls {path}"),
            SandboxTool::Cat { path } => format!("cat {path}"),
            SandboxTool::Find { path, pattern } => format!("find {path} -name {pattern}"),
            SandboxTool::Stat { path } => format!("stat {path}"),
            SandboxTool::Md5 { path } => format!("md5 {path}"),
            SandboxTool::Rm { path } => format!("rm {path}"),
            SandboxTool::Mv { src, dst } => format!("mv {src} {dst}"),
            SandboxTool::Mkdir { path, .. } => format!("mkdir {path}"),
            SandboxTool::Chmod { path, mode } => format!("chmod {mode} {path}"),
        }
    }

    fn propose(&self, action: &SandboxTool, failed: &FailedGuard) -> String {
        let desc = self.describe_action(action);
        let (head, _) = parse_guard(&failed.predicate).unwrap_or((failed.predicate.as_str(), None));
        match head {
            "owner_is" => format!(
                "skip `{desc}`: {}; ask the file's owner to confirm before touching it",
                failed.observed
            ),
            "mtime_at_least" => format!(
                "skip `{desc}`: {}; retry once the file has aged past the retention window",
                failed.observed
            ),
            "delete_count_within_budget" => format!(
                "halt deletions before `{desc}`: {}; request a budget increase from the operator",
                failed.observed
            ),
            "path_in_sandbox" | "path_in_subprefix" => format!(
                "skip `{desc}`: {}; re-issue the command against a path inside the permitted prefix",
                failed.observed
            ),
            _ => format!("skip `{desc}`: {} (wanted {})", failed.observed, failed.expected),
        }
    }
}
