//! `audit` — command-line auditor for certificate bundles.
//!
//! Reads canonical wire documents — finished certificate bundles or raw
//! declarative inputs (claims, constraints, layers, sandbox states,
//! proposals, task suites, registries) — verifies what they carry, and
//! decides or replays them. Reports go to standard output; operational logs
//! (refusal records, errors) go to standard error. Exit codes are
//! machine-readable:
//!
//! - 0: accepted
//! - 1: structural verification failed
//! - 2: an assumption lies outside the trusted base
//! - 3: accepted in downgraded form, pending reviews
//! - 4: rejected by the policy
//! - 5: malformed input

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use caliper::action::harness::{
    run_harness, splice_registry, HarnessMode, HarnessOutcome, SandboxTask, UnsafeProposal,
};
use caliper::action::sandbox::SandboxDomain;
use caliper::action::execute;
use caliper::audit::bundle::{policy_from_wire, CertificateBundle};
use caliper::audit::digest::sha256_hex;
use caliper::audit::inputs;
use caliper::audit::runner::{default_approved, run_audit, AuditConfig, EXIT_MALFORMED};
use caliper::card::{canonical_policies, canonical_policy, verify_card, AssurancePolicy};
use caliper::composition::{compose, within_budget, LayerKind, LayerWitness, StabilityBudget};
use caliper::fixtures::{build_bundle, build_input_file, FIXTURE_NAMES, INPUT_FILE_NAMES};
use caliper::mcr::{compute_residue, verify_residue, ResidueCertificate, ResidueMode};
use caliper::numeric::Rational;

#[derive(Parser)]
#[command(name = "audit", version, about = "Verify, inspect, and decide certificate bundles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a bundle end to end and decide it under a policy.
    Run {
        /// Path to a bundle in wire form.
        bundle: PathBuf,
        /// Canonical policy name (creative, enterprise, legal, clinical,
        /// agentic) or a path to a policy file in wire form.
        #[arg(long, default_value = "enterprise")]
        policy: String,
        /// Decision clock in seconds; defaults to the system clock.
        #[arg(long)]
        now: Option<u64>,
        /// Approved-assumption file replacing the built-in trusted base.
        #[arg(long)]
        approved: Option<PathBuf>,
        /// Extra approved assumption names on top of the base (repeatable).
        #[arg(long = "approve")]
        approve: Vec<String>,
    },
    /// Print the payload digest and the whole-file digest of a bundle.
    Digest { bundle: PathBuf },
    /// Summarize the assurance card of a bundle.
    Card { bundle: PathBuf },
    /// Solve a residue instance from claims and constraints files, or show
    /// the residue a bundle already carries.
    Residue {
        /// Claims file — or a bundle, when no constraints file is given.
        claims: PathBuf,
        /// Constraints file; the instance is solved exactly when present.
        constraints: Option<PathBuf>,
    },
    /// Show a stability budget: the tolerance chain and its binding layer.
    Budget {
        /// A layers file, or a bundle with a composition section.
        file: PathBuf,
        /// Perturbation magnitude to test, as an exact rational like 3/25.
        #[arg(long)]
        eps: Option<String>,
    },
    /// Gate one proposed action against a sandbox state.
    Gate {
        /// Sandbox state file.
        sandbox: PathBuf,
        /// Proposal file: the action plus its guard names. The decision
        /// (execute or block) goes to standard output; a refusal record
        /// goes to standard error. Exits 0 either way.
        proposal: PathBuf,
    },
    /// Show the emission-gate decision of a bundle's grounding section.
    Emission { bundle: PathBuf },
    /// Replay a task suite with unsafe proposals spliced in and report
    /// block metrics under one gating mode.
    Harness {
        /// Task suite file.
        tasks: PathBuf,
        /// Registry file of unsafe proposals to splice into the tasks.
        registry: PathBuf,
        /// Gating mode: unaudited (no guards), denylist (name patterns),
        /// or treatment (full guard enforcement).
        #[arg(long)]
        mode: String,
        /// Action-name substrings the denylist mode refuses (repeatable).
        #[arg(long = "pattern")]
        patterns: Vec<String>,
    },
    /// Write a named built-in reference document to a file.
    Synth {
        /// A registered reference bundle or declarative input file.
        name: String,
        /// Output path for the wire form.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { bundle, policy, now, approved, approve } => {
            cmd_run(&bundle, &policy, now, approved.as_deref(), approve)
        }
        Command::Digest { bundle } => cmd_digest(&bundle),
        Command::Card { bundle } => cmd_card(&bundle),
        Command::Residue { claims, constraints } => cmd_residue(&claims, constraints.as_deref()),
        Command::Budget { file, eps } => cmd_budget(&file, eps.as_deref()),
        Command::Gate { sandbox, proposal } => cmd_gate(&sandbox, &proposal),
        Command::Emission { bundle } => cmd_emission(&bundle),
        Command::Harness { tasks, registry, mode, patterns } => {
            cmd_harness(&tasks, &registry, &mode, patterns)
        }
        Command::Synth { name, out } => cmd_synth(&name, &out),
    };
    ExitCode::from(code as u8)
}

fn fail_malformed(context: &str, detail: impl std::fmt::Display) -> i32 {
    eprintln!("error: {context}: {detail}");
    EXIT_MALFORMED
}

fn read_wire(path: &Path) -> Result<String, i32> {
    fs::read_to_string(path).map_err(|e| fail_malformed(&path.display().to_string(), e))
}

fn load_bundle(path: &Path) -> Result<CertificateBundle, i32> {
    let wire = read_wire(path)?;
    CertificateBundle::from_wire(&wire).map_err(|e| fail_malformed(&path.display().to_string(), e))
}

fn resolve_policy(spec: &str) -> Result<AssurancePolicy, i32> {
    if let Some(policy) = canonical_policy(spec) {
        return Ok(policy);
    }
    let path = Path::new(spec);
    if path.exists() {
        let wire = read_wire(path)?;
        return policy_from_wire(&wire).map_err(|e| fail_malformed(spec, e));
    }
    let known: Vec<String> = canonical_policies().into_iter().map(|p| p.name).collect();
    Err(fail_malformed(
        spec,
        format!("not a canonical policy ({}) and not a readable file", known.join(", ")),
    ))
}

fn wall_clock() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn hex32(digest: &[u8; 32]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_run(
    path: &Path,
    policy_spec: &str,
    now: Option<u64>,
    approved_path: Option<&Path>,
    approve: Vec<String>,
) -> i32 {
    let wire = match read_wire(path) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let policy = match resolve_policy(policy_spec) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let mut approved = match approved_path {
        Some(p) => {
            let approved_wire = match read_wire(p) {
                Ok(w) => w,
                Err(code) => return code,
            };
            match inputs::approved_from_wire(&approved_wire) {
                Ok(names) => names,
                Err(e) => return fail_malformed(&p.display().to_string(), e),
            }
        }
        None => default_approved(),
    };
    approved.extend(approve);
    let config = AuditConfig { policy, now: now.unwrap_or_else(wall_clock), approved };
    let outcome = run_audit(&wire, &config);

    // Refusal records are operational telemetry: one line each on stderr.
    if let Ok(bundle) = CertificateBundle::from_wire(&wire) {
        if let Some(action) = &bundle.action {
            for block in &action.blocked {
                eprintln!(
                    "blocked: {} — {}: {} (expected {})",
                    block.action,
                    block.failed_predicate,
                    block.offending_state_value,
                    block.expected_condition
                );
            }
        }
    }

    print!("{}", outcome.render());
    outcome.exit_code
}

fn cmd_digest(path: &Path) -> i32 {
    let bundle = match load_bundle(path) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let wire = match read_wire(path) {
        Ok(w) => w,
        Err(code) => return code,
    };
    match bundle.payload_digest() {
        Ok(digest) => println!("payload_digest: {}", hex32(&digest)),
        Err(e) => return fail_malformed("payload digest", e),
    }
    println!("wire_sha256: {}", sha256_hex(wire.as_bytes()));
    if let Some(card) = &bundle.card {
        let matches = match bundle.payload_digest() {
            Ok(d) => d == card.certificate_digest,
            Err(_) => false,
        };
        println!("card_commitment: {}", if matches { "matches payload" } else { "MISMATCH" });
    }
    0
}

fn cmd_card(path: &Path) -> i32 {
    let bundle = match load_bundle(path) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let Some(card) = &bundle.card else {
        eprintln!("error: bundle carries no card");
        return EXIT_MALFORMED;
    };
    println!("verdict: {}", card.verdict.label());
    match &card.verdict {
        caliper::card::Verdict::Partial { gaps } => println!("  gaps: {}", gaps.join(", ")),
        caliper::card::Verdict::Residue { weight } => println!("  salvaged coverage: {weight}"),
        caliper::card::Verdict::Abstain { reasons } => {
            println!("  reasons: {}", reasons.join(", "))
        }
        caliper::card::Verdict::Certified => {}
    }
    println!(
        "masses: supported {} / contradicted {} / contested {} / unknown {}",
        card.supported_mass, card.contradicted_mass, card.contested_mass, card.unknown_mass
    );
    println!("perturbation_budget: {}", card.perturbation_budget);
    println!("calibration_gap: {}", card.calibration_gap);
    println!(
        "deterministic: {} (samples {}, flips {}, agreement {})",
        card.is_deterministic, card.sample_count, card.variant_flips, card.semantic_agreement
    );
    println!(
        "scope: {} [{}]",
        if card.in_scope { "in" } else { "out" },
        card.scope_predicates_held.join(", ")
    );
    println!(
        "gates: forbidden_check_pass {} / action_precondition {} / budget_under_limit {}",
        card.forbidden_check_pass, card.action_precondition, card.budget_under_limit
    );
    println!("valid: [{}, {}]", card.issue_time, card.expiry_time);
    if !card.dropped_claims.is_empty() {
        println!("dropped claims ({}):", card.dropped_claims.len());
        for text in &card.dropped_claims {
            println!("  - {text}");
        }
    }
    if !card.unverified_layers.is_empty() {
        println!("unverified layers: {}", card.unverified_layers.join(", "));
    }
    println!("certificate_digest: {}", hex32(&card.certificate_digest));
    println!("replay_handle: {}", card.replay_handle);
    println!("signatures: {}", card.human_signatures.len());
    let report = verify_card(card);
    println!("structure: {}", if report.passed() { "consistent" } else { "INCONSISTENT" });
    if !report.passed() {
        print!("{report}");
        return 1;
    }
    0
}

fn print_residue(residue: &ResidueCertificate) -> i32 {
    println!(
        "salvaged {} of {} claims, weight {} of {} (coverage {})",
        residue.residue.len(),
        residue.claims.len(),
        residue.residue_weight,
        residue.total_weight(),
        residue.coverage()
    );
    for text in residue.residue_texts() {
        println!("  + {text}");
    }
    for text in residue.dropped_texts() {
        println!("  - {text}");
    }
    println!("constraints:");
    for c in &residue.constraints {
        println!("  {} ({})", c.name, c.kind().as_str());
    }
    let report = verify_residue(residue);
    println!("verification: {}", if report.passed() { "pass" } else { "FAIL" });
    if !report.passed() {
        print!("{report}");
        return 1;
    }
    0
}

fn cmd_residue(claims_path: &Path, constraints_path: Option<&Path>) -> i32 {
    let Some(constraints_path) = constraints_path else {
        // Single argument: a bundle whose residue section gets shown.
        let bundle = match load_bundle(claims_path) {
            Ok(b) => b,
            Err(code) => return code,
        };
        let Some(residue) = &bundle.residue else {
            eprintln!("error: bundle carries no residue certificate");
            return EXIT_MALFORMED;
        };
        return print_residue(residue);
    };
    let claims = match read_wire(claims_path)
        .and_then(|w| inputs::claims_from_wire(&w).map_err(|e| fail_malformed("claims", e)))
    {
        Ok(c) => c,
        Err(code) => return code,
    };
    let constraints = match read_wire(constraints_path).and_then(|w| {
        inputs::constraints_from_wire(&w).map_err(|e| fail_malformed("constraints", e))
    }) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let cert = match compute_residue(&claims, &constraints, ResidueMode::Exact) {
        Ok(c) => c,
        Err(e) => return fail_malformed("residue instance", e),
    };
    print_residue(&cert)
}

/// Prints the per-layer tolerance chain the forward budget minimizes over:
/// each layer's margin pulled back through the product of upstream gains.
fn print_budget_chain(layers: &[LayerWitness]) {
    println!("tolerance chain (margin / upstream gain product):");
    let mut prefix = Rational::one();
    let mut best: Option<Rational> = None;
    let mut binding: Option<usize> = None;
    for (i, l) in layers.iter().enumerate() {
        if prefix.is_zero() {
            let rest = layers.len() - i;
            println!(
                "  (upstream gain vanished: {rest} downstream layer{} cannot be reached by any input perturbation)",
                if rest == 1 { "" } else { "s" }
            );
            break;
        }
        let candidate = &l.margin / &prefix;
        println!(
            "  {:16} margin {:>7} / {:>3}  ->  {}",
            l.name,
            l.margin.to_string(),
            prefix.to_string(),
            candidate
        );
        if best.as_ref().is_none_or(|b| candidate < *b) {
            best = Some(candidate);
            binding = Some(i);
        }
        prefix = &prefix * &l.gain;
    }
    if let Some(i) = binding {
        println!("binding layer: {}", layers[i].name);
    }
}

fn cmd_budget(path: &Path, eps: Option<&str>) -> i32 {
    let wire = match read_wire(path) {
        Ok(w) => w,
        Err(code) => return code,
    };
    // A layers file is composed on the spot; anything else must be a bundle
    // whose composition section gets recomposed and cross-checked.
    let (layers, stored) = if inputs::wire_schema(&wire).as_deref() == Some(inputs::LAYERS_SCHEMA)
    {
        match inputs::layers_from_wire(&wire) {
            Ok(layers) => (layers, None),
            Err(e) => return fail_malformed(&path.display().to_string(), e),
        }
    } else {
        let bundle = match CertificateBundle::from_wire(&wire) {
            Ok(b) => b,
            Err(e) => return fail_malformed(&path.display().to_string(), e),
        };
        let Some(cert) = bundle.composition else {
            eprintln!("error: bundle carries no composition certificate");
            return EXIT_MALFORMED;
        };
        let stored = (cert.pipeline_gain.clone(), cert.budget.clone());
        (cert.layers, Some(stored))
    };
    let cert = match compose(layers) {
        Ok(c) => c,
        Err(e) => return fail_malformed("layers", e),
    };
    println!("pipeline_gain: {}", cert.pipeline_gain);
    println!("layers:");
    for layer in &cert.layers {
        let kind = match layer.kind {
            LayerKind::Continuous => "continuous",
            LayerKind::DiscreteGate => "discrete-gate",
        };
        println!(
            "  {:16} {:13} gain {:>4}  margin {}",
            layer.name,
            kind,
            layer.gain.to_string(),
            layer.margin
        );
    }
    print_budget_chain(&cert.layers);
    match &cert.budget {
        StabilityBudget::Finite(b) => println!("stability_budget: {b}"),
        StabilityBudget::Unbounded => println!("stability_budget: unbounded"),
    }
    if let Some((gain, budget)) = stored {
        if gain != cert.pipeline_gain || budget != cert.budget {
            println!("stored composition: MISMATCH with recomputation");
            return 1;
        }
        println!("stored composition: matches recomputation");
    }
    if let Some(raw) = eps {
        let Ok(eps) = raw.parse::<Rational>() else {
            eprintln!("error: --eps {raw:?} is not a rational like 3/25");
            return EXIT_MALFORMED;
        };
        let admitted = within_budget(&cert, &eps);
        println!("perturbation {eps}: {}", if admitted { "within budget" } else { "NOT covered" });
    }
    0
}

fn cmd_gate(sandbox_path: &Path, proposal_path: &Path) -> i32 {
    let state = match read_wire(sandbox_path)
        .and_then(|w| inputs::sandbox_from_wire(&w).map_err(|e| fail_malformed("sandbox", e)))
    {
        Ok(s) => s,
        Err(code) => return code,
    };
    let step = match read_wire(proposal_path)
        .and_then(|w| inputs::proposal_from_wire(&w).map_err(|e| fail_malformed("proposal", e)))
    {
        Ok(s) => s,
        Err(code) => return code,
    };
    let run = match execute(&SandboxDomain, state, &[step]) {
        Ok(r) => r,
        Err(e) => return fail_malformed("gate", e),
    };
    for block in &run.cert.blocks {
        eprintln!(
            "blocked: {} — {}: {} (expected {})",
            block.action,
            block.failed_predicate,
            block.offending_state_value,
            block.expected_condition
        );
    }
    if run.cert.blocks.is_empty() {
        println!("decision: execute");
        println!(
            "post-state: {} files, delete_count {} of {}",
            run.final_state.files.len(),
            run.final_state.delete_count,
            run.final_state.delete_budget
        );
    } else {
        println!("decision: block");
    }
    0
}

fn cmd_emission(path: &Path) -> i32 {
    let bundle = match load_bundle(path) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let Some(g) = &bundle.grounding else {
        eprintln!("error: bundle carries no grounding certificate");
        return EXIT_MALFORMED;
    };
    println!(
        "thresholds: support {} / contradiction {} / emission {} / residual {}",
        g.thresholds.support,
        g.thresholds.contradiction,
        g.thresholds.emission,
        g.thresholds.residual
    );
    for (i, claim) in g.claims.iter().enumerate() {
        println!(
            "  claim {i} [{}] (w {}, support {}, refute {}): {}",
            g.statuses[i].as_str(),
            claim.weight,
            g.beta_plus[i],
            g.beta_minus[i],
            claim.text
        );
    }
    println!(
        "coverage: supported {} / contradicted {} / contested {} / unknown {}",
        g.coverage.supported, g.coverage.contradicted, g.coverage.contested, g.coverage.unknown
    );
    println!("emission gate: {}", if g.emitted { "open (answer ships)" } else { "closed" });
    0
}

fn render_harness(mode_name: &str, outcome: &HarnessOutcome) {
    let m = &outcome.metrics;
    let rate = |r: &Option<Rational>| match r {
        Some(v) => v.to_string(),
        None => "n/a".to_string(),
    };
    println!("mode {mode_name}:");
    println!(
        "  steps {} (unsafe {}), blocked unsafe {}, blocked safe {}",
        m.total_steps, m.unsafe_steps, m.blocked_unsafe, m.blocked_safe
    );
    println!(
        "  block_rate {}  false_block_rate {}  informativeness {}",
        rate(&m.block_rate),
        rate(&m.false_block_rate),
        rate(&m.informativeness)
    );
    for task in &outcome.tasks {
        for block in &task.cert.blocks {
            eprintln!(
                "blocked: {} — {}: {} (expected {})",
                block.action,
                block.failed_predicate,
                block.offending_state_value,
                block.expected_condition
            );
        }
    }
}

fn cmd_harness(tasks_path: &Path, registry_path: &Path, mode: &str, patterns: Vec<String>) -> i32 {
    let tasks: Vec<SandboxTask> = match read_wire(tasks_path)
        .and_then(|w| inputs::tasks_from_wire(&w).map_err(|e| fail_malformed("tasks", e)))
    {
        Ok(t) => t,
        Err(code) => return code,
    };
    let registry: Vec<UnsafeProposal> = match read_wire(registry_path)
        .and_then(|w| inputs::registry_from_wire(&w).map_err(|e| fail_malformed("registry", e)))
    {
        Ok(r) => r,
        Err(code) => return code,
    };
    if !patterns.is_empty() && mode != "denylist" {
        eprintln!("note: --pattern only affects denylist mode");
    }
    let harness_mode = match mode {
        "unaudited" => HarnessMode::Ungated,
        "denylist" => HarnessMode::Denylist(patterns),
        "treatment" => HarnessMode::Gated,
        other => {
            return fail_malformed(
                "--mode",
                format!("{other:?} is not one of unaudited, denylist, treatment"),
            )
        }
    };
    let spliced = match splice_registry(&tasks, &registry) {
        Ok(t) => t,
        Err(e) => return fail_malformed("registry", e),
    };
    match run_harness(&spliced, &harness_mode) {
        Ok(outcome) => {
            render_harness(mode, &outcome);
            0
        }
        Err(e) => fail_malformed("harness", e),
    }
}

fn cmd_synth(name: &str, out: &Path) -> i32 {
    let wire = if FIXTURE_NAMES.contains(&name) {
        let bundle = match build_bundle(name) {
            Ok(b) => b,
            Err(e) => return fail_malformed(name, e),
        };
        match bundle.to_wire() {
            Ok(w) => w,
            Err(e) => return fail_malformed(name, e),
        }
    } else {
        match build_input_file(name) {
            Ok(w) => w,
            Err(e) => {
                eprintln!("error: {e}");
                eprintln!("known bundles: {}", FIXTURE_NAMES.join(", "));
                eprintln!("known input files: {}", INPUT_FILE_NAMES.join(", "));
                return EXIT_MALFORMED;
            }
        }
    };
    if let Err(e) = fs::write(out, &wire) {
        return fail_malformed(&out.display().to_string(), e);
    }
    println!("wrote {} ({} bytes)", out.display(), wire.len());
    0
}
