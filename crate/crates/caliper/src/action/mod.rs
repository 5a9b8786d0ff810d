//! Precondition-gated action execution with replayable trajectories.
//!
//! A step pairs an action with named guard predicates. Before an action
//! runs, every pre-predicate is evaluated against the current state (and the
//! action's own arguments); the first failure blocks the step, which is then
//! recorded *outside* the trajectory — a blocked action leaves no state
//! transition to certify, only a block record explaining the refusal. After
//! an action runs, its post-predicates are checked against the new state;
//! a post failure rolls the step back and blocks it the same way, because a
//! tool that broke its own contract must not silently extend the trajectory.
//!
//! Predicates are referenced *by name* and resolved through the domain, so a
//! recorded trajectory is replayable: verification re-resolves each name and
//! re-evaluates it against the recorded states. The certificate for a run is
//! therefore self-contained — states before and after every executed step,
//! plus the block log — and verifying it needs the domain but no reply from
//! the original executor.

pub mod harness;
pub mod sandbox;

use crate::audit::assumptions::AssumptionTag;
use crate::report::VerificationReport;
use std::sync::Arc;

/// Outcome of evaluating one guard predicate: whether it holds, what the
/// state actually showed, and what the guard wanted. The two strings feed
/// block records, so they are mandatory even on success.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateEval {
    pub holds: bool,
    pub observed: String,
    pub expected: String,
}

impl PredicateEval {
    pub fn pass(observed: impl Into<String>, expected: impl Into<String>) -> Self {
        PredicateEval { holds: true, observed: observed.into(), expected: expected.into() }
    }

    pub fn fail(observed: impl Into<String>, expected: impl Into<String>) -> Self {
        PredicateEval { holds: false, observed: observed.into(), expected: expected.into() }
    }
}

/// A resolved guard: evaluates against a state/action pair.
pub type GuardFn<S, A> = Arc<dyn Fn(&S, &A) -> PredicateEval + Send + Sync>;

/// The domain supplies everything action-specific: how predicate names
/// resolve, how actions transform state, and how to phrase refusals.
pub trait ActionDomain {
    type State: Clone + PartialEq;
    type Action: Clone;

    /// Resolves a predicate name (e.g. `owner_is(user)`) to an evaluable
    /// guard. Resolution is deterministic: the same name always yields the
    /// same semantics.
    fn resolve(&self, name: &str) -> Result<GuardFn<Self::State, Self::Action>, ActionError>;

    /// Applies an action to a state. Total: actions on missing targets are
    /// no-ops rather than errors (guards exist to rule them out up front).
    fn apply(&self, state: &Self::State, action: &Self::Action) -> Self::State;

    /// One-line rendering of an action for logs and block records.
    fn describe_action(&self, action: &Self::Action) -> String;

    /// A concrete safe alternative for a refused action. Block records must
    /// carry a usable proposal, not just a rejection.
    fn propose(&self, action: &Self::Action, failed: &FailedGuard) -> String;
}

/// What failed, for the domain to phrase a proposal around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailedGuard {
    pub predicate: String,
    pub observed: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionError {
    #[error("unknown predicate {name}")]
    UnknownPredicate { name: String },
    #[error("predicate {name}: {detail}")]
    BadPredicateArgument { name: String, detail: String },
    #[error("registry proposal targets undeclared task {task}")]
    UnknownTask { task: String },
    #[error("registry proposal for task {task} splices at {at}, but the task has {len} steps")]
    SpliceOutOfRange { task: String, at: usize, len: usize },
}

/// An action guarded by named pre- and post-predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatedStep<A> {
    pub action: A,
    pub pre: Vec<String>,
    pub post: Vec<String>,
}

impl<A> GatedStep<A> {
    pub fn new(action: A, pre: Vec<String>, post: Vec<String>) -> Self {
        GatedStep { action, pre, post }
    }
}

/// Why a step was refused. All four fields are mandatory and nonempty: the
/// guard that failed, the state value that offended it, the condition it
/// wanted, and a concrete safe alternative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRecord {
    pub action: String,
    pub failed_predicate: String,
    pub offending_state_value: String,
    pub expected_condition: String,
    pub proposal_text: String,
}

impl BlockRecord {
    /// A block record is informative when every mandatory element is filled
    /// in. Refusals that fail this test are refusals an operator cannot act
    /// on.
    pub fn is_informative(&self) -> bool {
        !self.failed_predicate.is_empty()
            && !self.offending_state_value.is_empty()
            && !self.expected_condition.is_empty()
            && !self.proposal_text.is_empty()
    }
}

/// One executed (never blocked) step with its full state context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutedStep<S, A> {
    pub action: A,
    pub pre: Vec<String>,
    pub post: Vec<String>,
    pub state_before: S,
    pub state_after: S,
}

/// Certificate for a gated run: the executed trajectory, the refusal log,
/// and any assumptions the guards lean on (none for fully in-process
/// domains).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionCert<S, A> {
    pub trajectory: Vec<ExecutedStep<S, A>>,
    pub blocks: Vec<BlockRecord>,
    pub assumptions: Vec<AssumptionTag>,
}

/// Everything `execute` produces: the certificate, the final state, and a
/// per-input-step blocked flag (aligned with the submitted step list, which
/// the certificate alone cannot reconstruct since blocked steps leave the
/// trajectory).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionRun<S, A> {
    pub cert: ActionCert<S, A>,
    pub final_state: S,
    pub step_blocked: Vec<bool>,
}

/// Runs steps sequentially with full guard enforcement. Blocked steps are
/// skipped — state is left untouched and execution continues — so one unsafe
/// request cannot poison the rest of the task.
pub fn execute<D: ActionDomain>(
    domain: &D,
    initial: D::State,
    steps: &[GatedStep<D::Action>],
) -> Result<ActionRun<D::State, D::Action>, ActionError> {
    let mut state = initial;
    let mut trajectory = Vec::new();
    let mut blocks = Vec::new();
    let mut step_blocked = Vec::with_capacity(steps.len());

    'steps: for step in steps {
        for name in &step.pre {
            let guard = domain.resolve(name)?;
            let eval = guard(&state, &step.action);
            if !eval.holds {
                let failed = FailedGuard {
                    predicate: name.clone(),
                    observed: eval.observed.clone(),
                    expected: eval.expected.clone(),
                };
                blocks.push(BlockRecord {
                    action: domain.describe_action(&step.action),
                    failed_predicate: name.clone(),
                    offending_state_value: eval.observed,
                    expected_condition: eval.expected,
                    proposal_text: domain.propose(&step.action, &failed),
                });
                step_blocked.push(true);
                continue 'steps;
            }
        }

        let next = domain.apply(&state, &step.action);

        for name in &step.post {
            let guard = domain.resolve(name)?;
            let eval = guard(&next, &step.action);
            if !eval.holds {
                // The tool violated its contract: roll back and refuse.
                let failed = FailedGuard {
                    predicate: name.clone(),
                    observed: eval.observed.clone(),
                    expected: eval.expected.clone(),
                };
                blocks.push(BlockRecord {
                    action: domain.describe_action(&step.action),
                    failed_predicate: name.clone(),
                    offending_state_value: eval.observed,
                    expected_condition: eval.expected,
                    proposal_text: domain.propose(&step.action, &failed),
                });
                step_blocked.push(true);
                continue 'steps;
            }
        }

        trajectory.push(ExecutedStep {
            action: step.action.clone(),
            pre: step.pre.clone(),
            post: step.post.clone(),
            state_before: state.clone(),
            state_after: next.clone(),
        });
        step_blocked.push(false);
        state = next;
    }

    Ok(ActionRun {
        cert: ActionCert { trajectory, blocks, assumptions: Vec::new() },
        final_state: state,
        step_blocked,
    })
}

/// Replays a certificate against the domain. Per executed step `i` the
/// obligations are: every pre-guard holds on the recorded before-state
/// (`step_pre[i]`), every post-guard holds on the recorded after-state
/// (`step_post[i]`), the after-state is exactly what applying the action
/// yields (`step_exec[i]`), and consecutive steps chain (`chain[i]`).
/// Unresolvable guard names fail their obligation — a trajectory that names
/// guards the domain does not know is not certifiable.
pub fn verify_action<D: ActionDomain>(
    domain: &D,
    cert: &ActionCert<D::State, D::Action>,
) -> VerificationReport {
    let mut rep = VerificationReport::new();

    for (i, step) in cert.trajectory.iter().enumerate() {
        let mut pre_failure: Option<String> = None;
        for name in &step.pre {
            match domain.resolve(name) {
                Err(e) => {
                    pre_failure = Some(e.to_string());
                    break;
                }
                Ok(guard) => {
                    let eval = guard(&step.state_before, &step.action);
                    if !eval.holds {
                        pre_failure = Some(format!(
                            "{name}: observed {}, expected {}",
                            eval.observed, eval.expected
                        ));
                        break;
                    }
                }
            }
        }
        rep.check(format!("step_pre[{i}]"), pre_failure.is_none(), || pre_failure.clone().unwrap());

        let mut post_failure: Option<String> = None;
        for name in &step.post {
            match domain.resolve(name) {
                Err(e) => {
                    post_failure = Some(e.to_string());
                    break;
                }
                Ok(guard) => {
                    let eval = guard(&step.state_after, &step.action);
                    if !eval.holds {
                        post_failure = Some(format!(
                            "{name}: observed {}, expected {}",
                            eval.observed, eval.expected
                        ));
                        break;
                    }
                }
            }
        }
        rep.check(format!("step_post[{i}]"), post_failure.is_none(), || {
            post_failure.clone().unwrap()
        });

        let replayed = domain.apply(&step.state_before, &step.action);
        rep.check(format!("step_exec[{i}]"), replayed == step.state_after, || {
            format!(
                "recorded after-state differs from replaying {}",
                domain.describe_action(&step.action)
            )
        });
    }

    for (i, pair) in cert.trajectory.windows(2).enumerate() {
        rep.check(format!("chain[{i}]"), pair[1].state_before == pair[0].state_after, || {
            format!("step {} does not start where step {i} ended", i + 1)
        });
    }

    let dull = cert.blocks.iter().position(|b| !b.is_informative());
    rep.check("blocks_well_formed", dull.is_none(), || {
        format!("block record {} is missing a mandatory element", dull.unwrap())
    });

    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal counter domain: state is a number, actions add to it, guards
    /// bound it. Enough to exercise the generic machinery without the file
    /// sandbox.
    struct Counter;

    impl ActionDomain for Counter {
        type State = i64;
        type Action = i64;

        fn resolve(&self, name: &str) -> Result<GuardFn<i64, i64>, ActionError> {
            if let Some(rest) = name.strip_prefix("below(") {
                let arg =
                    rest.strip_suffix(')').ok_or_else(|| ActionError::BadPredicateArgument {
                        name: name.into(),
                        detail: "missing closing parenthesis".into(),
                    })?;
                let bound: i64 = arg.parse().map_err(|_| ActionError::BadPredicateArgument {
                    name: name.into(),
                    detail: format!("{arg} is not an integer"),
                })?;
                return Ok(Arc::new(move |s: &i64, _: &i64| {
                    if *s < bound {
                        PredicateEval::pass(format!("counter {s}"), format!("counter < {bound}"))
                    } else {
                        PredicateEval::fail(format!("counter {s}"), format!("counter < {bound}"))
                    }
                }));
            }
            if name == "nonneg" {
                return Ok(Arc::new(|s: &i64, _: &i64| {
                    if *s >= 0 {
                        PredicateEval::pass(format!("counter {s}"), "counter >= 0")
                    } else {
                        PredicateEval::fail(format!("counter {s}"), "counter >= 0")
                    }
                }));
            }
            Err(ActionError::UnknownPredicate { name: name.into() })
        }

        fn apply(&self, state: &i64, action: &i64) -> i64 {
            state + action
        }

        fn describe_action(&self, action: &i64) -> String {
            format!("add {action}")
        }

        fn propose(&self, action: &i64, failed: &FailedGuard) -> String {
            format!("skip `add {action}`; wait until {} holds", failed.expected)
        }
    }

    fn step(action: i64, pre: &[&str], post: &[&str]) -> GatedStep<i64> {
        GatedStep::new(
            action,
            pre.iter().map(|s| s.to_string()).collect(),
            post.iter().map(|s| s.to_string()).collect(),
        )
    }

    #[test]
    fn executes_when_guards_hold_and_blocks_otherwise() {
        let steps = vec![
            step(5, &["below(10)"], &["nonneg"]),
            step(100, &["below(10)"], &[]), // counter is 5, passes
            step(1, &["below(10)"], &[]),   // counter is 105, blocked
        ];
        let run = execute(&Counter, 0, &steps).unwrap();
        assert_eq!(run.final_state, 105);
        assert_eq!(run.step_blocked, vec![false, false, true]);
        assert_eq!(run.cert.trajectory.len(), 2);
        assert_eq!(run.cert.blocks.len(), 1);

        let block = &run.cert.blocks[0];
        assert_eq!(block.failed_predicate, "below(10)");
        assert_eq!(block.offending_state_value, "counter 105");
        assert_eq!(block.expected_condition, "counter < 10");
        assert!(block.is_informative());

        assert!(verify_action(&Counter, &run.cert).passed());
    }

    #[test]
    fn post_guard_failure_rolls_back() {
        // Adding -5 from 0 violates the nonneg post-guard; state must stay 0.
        let steps = vec![step(-5, &[], &["nonneg"]), step(3, &[], &["nonneg"])];
        let run = execute(&Counter, 0, &steps).unwrap();
        assert_eq!(run.final_state, 3);
        assert_eq!(run.step_blocked, vec![true, false]);
        assert_eq!(run.cert.trajectory.len(), 1);
        assert_eq!(run.cert.blocks[0].failed_predicate, "nonneg");
    }

    #[test]
    fn unknown_predicates_abort_execution() {
        let steps = vec![step(1, &["mystery"], &[])];
        assert!(matches!(execute(&Counter, 0, &steps), Err(ActionError::UnknownPredicate { .. })));
    }

    #[test]
    fn verification_localizes_tampered_states() {
        let steps = vec![step(2, &["below(10)"], &["nonneg"]), step(3, &["below(10)"], &[])];
        let run = execute(&Counter, 0, &steps).unwrap();

        // Tamper with an intermediate state: the replay and the chain notice.
        let mut cert = run.cert.clone();
        cert.trajectory[0].state_after = 7;
        let rep = verify_action(&Counter, &cert);
        assert_eq!(rep.failure_names(), vec!["step_exec[0]", "chain[0]"]);

        // Tamper with a recorded before-state so a pre-guard is violated.
        let mut cert = run.cert.clone();
        cert.trajectory[1].state_before = 50;
        let rep = verify_action(&Counter, &cert);
        assert_eq!(rep.failure_names(), vec!["step_pre[1]", "step_exec[1]", "chain[0]"]);
    }

    #[test]
    fn degenerate_block_records_fail_verification() {
        let steps = vec![step(-1, &[], &["nonneg"])];
        let run = execute(&Counter, 0, &steps).unwrap();
        let mut cert = run.cert;
        cert.blocks[0].proposal_text = String::new();
        let rep = verify_action(&Counter, &cert);
        assert_eq!(rep.failure_names(), vec!["blocks_well_formed"]);
    }
}
