//! The verification pipeline.
//!
//! An imperative program is encoded as an interpreter and specialized into
//! verification conditions; Horn clause input is taken as the conditions
//! directly. Each iteration then propagates constraints, tries the syntactic
//! check and runs the solver. If no definite answer comes out, the
//! propagated program is reversed and the next iteration starts from it.

mod report;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

pub use report::{JsonReport, PhaseTiming, Report};

use crate::chc::{
    bounded_oracle, emit_chc, parse_chc, replay, ChcError, ChcProgram, CounterexampleTrace,
    Invariant, OracleOutcome, Verdict,
};
use crate::frontend::{
    encode_interpreter, parse_imp, FrontendError, ImpProgram, InterpreterEncoding,
};
use crate::ihcs::{self, SolveBudget};
use crate::polyhedra::{self, LinConstraint};
use crate::reversal::{map_reversed_derivation, reverse};
use crate::specializer::{
    map_derivation, specialize_prop, specialize_remove, syntactic_verdict, Definition,
    Generalization, PropConfig, SyntacticVerdict,
};
use crate::terms::{Rat, Term};

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("unknown input extension for {0} (expected .imp or .clp)")]
    Extension(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Chc(#[from] ChcError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Imp(String),
    Chc(String),
}

impl Source {
    /// Reads a file, choosing the syntax by extension.
    pub fn from_path(path: &Path) -> Result<Source, DriverError> {
        let shown = path.display().to_string();
        let kind = match path.extension().and_then(|e| e.to_str()) {
            Some("imp") => Source::Imp,
            Some("clp") => Source::Chc,
            _ => return Err(DriverError::Extension(shown)),
        };
        let text = std::fs::read_to_string(path).map_err(|e| DriverError::Io {
            path: shown,
            msg: e.to_string(),
        })?;
        Ok(kind(text))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Verdict,
    Chc,
    Trace,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub gen: Generalization,
    /// Number of reversal cycles allowed after the first iteration.
    pub max_iterations: usize,
    pub phase_deadline: Duration,
    pub total_deadline: Duration,
    pub initial_direction: Direction,
    pub trace: bool,
    pub emit: Emit,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gen: Generalization::Polyhedral,
            max_iterations: 8,
            phase_deadline: Duration::from_secs(15),
            total_deadline: Duration::from_secs(120),
            initial_direction: Direction::Forward,
            trace: false,
            emit: Emit::Verdict,
        }
    }
}

/// One transformation between the original conditions and the current
/// program, as needed to map derivations back.
enum Step {
    Specialized(Vec<Vec<usize>>),
    Reversed,
}

struct Lineage {
    steps: Vec<Step>,
}

impl Lineage {
    fn to_original(&self, ids: &[usize]) -> Vec<usize> {
        let mut ids = ids.to_vec();
        for s in self.steps.iter().rev() {
            ids = match s {
                Step::Specialized(prov) => map_derivation(prov, &ids),
                Step::Reversed => map_reversed_derivation(&ids),
            };
        }
        ids
    }

    fn reversals(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Reversed))
            .count()
    }
}

struct Input {
    /// Conditions the counterexamples are replayed on.
    original: ChcProgram,
    encoding: Option<InterpreterEncoding>,
    /// Conditions the iterations start from, and how they derive from
    /// `original`.
    vcs: ChcProgram,
    lineage: Lineage,
    /// Definitions of the predicates of `vcs`, when they come from the
    /// interpreter.
    vc_definitions: Vec<Definition>,
}

fn prepare(source: Source, phases: &mut Vec<PhaseTiming>) -> Result<Input, DriverError> {
    match source {
        Source::Chc(text) => {
            let p = parse_chc(&text)?;
            Ok(Input {
                original: p.clone(),
                encoding: None,
                vcs: p,
                lineage: Lineage { steps: vec![] },
                vc_definitions: vec![],
            })
        }
        Source::Imp(text) => {
            let imp = parse_imp(&text)?;
            let t = Instant::now();
            let enc = encode_interpreter(&imp);
            phases.push(PhaseTiming::new("encode", t, "ok"));
            let t = Instant::now();
            match specialize_remove(&enc, 1_000_000) {
                Ok(s) => {
                    phases.push(PhaseTiming::new("specialize_remove", t, "ok"));
                    Ok(Input {
                        original: enc.program.clone(),
                        vcs: s.program,
                        lineage: Lineage {
                            steps: vec![Step::Specialized(s.provenance)],
                        },
                        vc_definitions: s.definitions,
                        encoding: Some(enc),
                    })
                }
                Err(e) => {
                    phases.push(PhaseTiming::new("specialize_remove", t, &e.to_string()));
                    // Without the interpreter removed there is nothing the
                    // later phases can work on; leave the program as is.
                    Ok(Input {
                        original: enc.program.clone(),
                        vcs: enc.program.clone(),
                        lineage: Lineage { steps: vec![] },
                        vc_definitions: vec![],
                        encoding: Some(enc),
                    })
                }
            }
        }
    }
}

/// Values of the program variables in the error configuration reached by
/// a counterexample of the interpreter.
pub fn final_environment(
    enc: &InterpreterEncoding,
    trace: &CounterexampleTrace,
) -> Option<BTreeMap<String, Rat>> {
    let at = trace
        .steps
        .iter()
        .position(|s| s.atom.as_ref().is_some_and(|a| a.pred == "errorConf"))?;
    let mut t = trace.steps[at].atom.as_ref()?.args.first()?.clone();
    for s in &trace.steps[at..] {
        t = s.subst.apply(&t);
    }
    let model = polyhedra::model(&trace.final_store())?;
    let (_, _, vals) = InterpreterEncoding::config_parts(&t)?;
    let mut env = BTreeMap::new();
    for (name, v) in enc.imp.var_names().into_iter().zip(vals) {
        let value = match v {
            Term::Num(q) => q.clone(),
            Term::Var(x) => model.get(x).cloned().unwrap_or_default(),
            _ => return None,
        };
        env.insert(name, value);
    }
    Some(env)
}

fn invariants_text(inv: &BTreeMap<String, Invariant>) -> BTreeMap<String, String> {
    inv.iter()
        .map(|(q, i)| {
            (
                format!("{q}({})", i.params.join(",")),
                i.constraint.to_string(),
            )
        })
        .collect()
}

/// Invariants of the predicates of the starting conditions: for each, the
/// hull over its specialized variants of the definition constraint
/// conjoined with the variant's invariant.
fn lift_invariants(
    defs: &[Definition],
    inv: &BTreeMap<String, Invariant>,
) -> BTreeMap<String, Invariant> {
    let mut out: BTreeMap<String, Invariant> = BTreeMap::new();
    for d in defs {
        let own = match inv.get(&d.name) {
            Some(i) => {
                let map: BTreeMap<String, String> = i
                    .params
                    .iter()
                    .cloned()
                    .zip(d.params.iter().cloned())
                    .collect();
                i.constraint.rename_with(&map)
            }
            None => LinConstraint::bottom(),
        };
        let c = d.constraint.and(&own);
        if !polyhedra::is_sat(&c) {
            continue;
        }
        match out.get_mut(&d.pred) {
            None => {
                out.insert(
                    d.pred.clone(),
                    Invariant {
                        params: d.params.clone(),
                        constraint: polyhedra::simplify(&c),
                    },
                );
            }
            Some(e) => {
                let h = polyhedra::convex_hull(&e.constraint, &c).expect("satisfiable operands");
                e.constraint = polyhedra::simplify(&h);
            }
        }
    }
    out
}

/// Runs the pipeline on `source`.
pub fn verify_source(source: Source, cfg: &PipelineConfig) -> Result<Report, DriverError> {
    let start = Instant::now();
    let total = start + cfg.total_deadline;
    let mut phases = Vec::new();
    let input = prepare(source, &mut phases)?;
    let mut report = Report::new(input.original.clone());
    report.phases = phases;

    let mut current = input.vcs.clone();
    let mut lineage = input.lineage;
    if cfg.initial_direction == Direction::Backward {
        let t = Instant::now();
        match reverse(&current) {
            Ok(r) => {
                report.phases.push(PhaseTiming::new("reverse", t, "ok"));
                current = r;
                lineage.steps.push(Step::Reversed);
            }
            Err(e) => report
                .phases
                .push(PhaseTiming::new("reverse", t, &e.to_string())),
        }
    }
    let initial_reversals = lineage.reversals();

    let prop_cfg = PropConfig {
        generalization: cfg.gen,
        ..PropConfig::default()
    };
    let mut verdict = Verdict::Unknown("no iteration ran".into());
    for iteration in 1..=cfg.max_iterations + 1 {
        if Instant::now() >= total {
            verdict = Verdict::Unknown("total deadline reached".into());
            break;
        }
        report.iterations_used = iteration;

        let t = Instant::now();
        let spec = match specialize_prop(&current, &prop_cfg) {
            Ok(s) => {
                report
                    .phases
                    .push(PhaseTiming::new("specialize_prop", t, "ok"));
                s
            }
            Err(e) => {
                report
                    .phases
                    .push(PhaseTiming::new("specialize_prop", t, &e.to_string()));
                verdict = Verdict::Unknown(format!("specialize_prop: {e}"));
                break;
            }
        };
        lineage
            .steps
            .push(Step::Specialized(spec.provenance.clone()));
        report.final_program = Some(emit_chc(&spec.program));
        let forward = lineage.reversals() == initial_reversals && iteration == 1;

        let t = Instant::now();
        match syntactic_verdict(&spec.program) {
            Some(SyntacticVerdict::Safe) => {
                report.phases.push(PhaseTiming::new("syntactic", t, "SAFE"));
                verdict = Verdict::Safe(BTreeMap::new());
                break;
            }
            Some(SyntacticVerdict::Unsafe(g)) => {
                report
                    .phases
                    .push(PhaseTiming::new("syntactic", t, "UNSAFE"));
                let trace = replay(&spec.program, &[g]).expect("satisfiable goal fact");
                verdict = Verdict::Unsafe(trace);
                report.answer_ids = Some(lineage.to_original(&[g]));
                break;
            }
            None => report.phases.push(PhaseTiming::new("syntactic", t, "none")),
        }

        let now = Instant::now();
        let budget = SolveBudget::with_deadline(
            cfg.phase_deadline.min(total.saturating_duration_since(now)),
        );
        let r = ihcs::solve(&spec.program, &budget);
        report
            .phases
            .push(PhaseTiming::new("ihcs", now, r.verdict.name()));
        if cfg.trace {
            report.solver_trace = Some(r.trace_dump.clone());
        }
        report.subsumption_checks = r
            .checks
            .iter()
            .map(|c| format!("{} |= {} : {}", c.premise, c.conclusion, c.holds))
            .collect();
        match r.verdict {
            Verdict::Unsafe(t) => {
                report.answer_ids = Some(lineage.to_original(&t.clause_ids()));
                verdict = Verdict::Unsafe(t);
                break;
            }
            Verdict::Safe(inv) => {
                if forward && input.encoding.is_some() {
                    report.loop_invariants = lift_invariants(&spec.definitions, &inv);
                }
                report.definitions = spec
                    .definitions
                    .iter()
                    .map(|d| (d.name.clone(), d.clone()))
                    .collect();
                verdict = Verdict::Safe(inv);
                break;
            }
            Verdict::Unknown(why) => {
                verdict = Verdict::Unknown(why);
                if iteration > cfg.max_iterations {
                    break;
                }
                let t = Instant::now();
                match reverse(&spec.program) {
                    Ok(rp) => {
                        report.phases.push(PhaseTiming::new("reverse", t, "ok"));
                        current = rp;
                        lineage.steps.push(Step::Reversed);
                    }
                    Err(e) => {
                        report
                            .phases
                            .push(PhaseTiming::new("reverse", t, &e.to_string()));
                        break;
                    }
                }
            }
        }
    }

    // Counterexamples are replayed on the original conditions.
    if let Verdict::Unsafe(_) = &verdict {
        let ids = report.answer_ids.clone().unwrap_or_default();
        match replay(&input.original, &ids) {
            Some(t) => {
                if let Some(enc) = &input.encoding {
                    report.final_env = final_environment(enc, &t);
                }
                verdict = Verdict::Unsafe(t);
            }
            None => {
                verdict = Verdict::Unknown("counterexample does not replay on the input".into());
            }
        }
    }
    report.vc_definitions = input.vc_definitions;
    report.verdict = verdict;
    report.imp = input.encoding.map(|e| e.imp);
    report.duration = start.elapsed();
    Ok(report)
}

/// Outcome of the bounded oracle on the starting conditions, as a verdict.
pub fn oracle_verdict(source: Source, depth: usize) -> Result<Verdict, DriverError> {
    let mut phases = Vec::new();
    let input = prepare(source, &mut phases)?;
    Ok(match bounded_oracle(&input.vcs, depth) {
        OracleOutcome::FoundAnswer(t) => Verdict::Unsafe(t),
        OracleOutcome::ExhaustedAll => Verdict::Safe(BTreeMap::new()),
        OracleOutcome::NoAnswerWithinDepth => {
            Verdict::Unknown(format!("no answer within depth {depth}"))
        }
    })
}

/// Whether a counterexample of `imp`'s interpreter ends in a state that
/// violates the assertion.
pub fn violates_assertion(imp: &ImpProgram, env: &BTreeMap<String, Rat>) -> bool {
    !imp.assertion_holds(env)
}

pub(crate) fn invariant_lines(inv: &BTreeMap<String, Invariant>) -> Vec<String> {
    invariants_text(inv)
        .into_iter()
        .map(|(k, v)| format!("{k} : {v}"))
        .collect()
}
