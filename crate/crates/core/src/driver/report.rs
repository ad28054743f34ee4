use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{invariant_lines, invariants_text, Emit};
use crate::chc::{emit_chc, ChcProgram, Invariant, Verdict};
use crate::frontend::ImpProgram;
use crate::specializer::Definition;
use crate::terms::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseTiming {
    pub name: String,
    pub outcome: String,
    #[serde(rename = "duration_ms", serialize_with = "millis")]
    pub duration: Duration,
}

fn millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u128(d.as_millis())
}

impl PhaseTiming {
    pub(crate) fn new(name: &str, started: Instant, outcome: &str) -> Self {
        PhaseTiming {
            name: name.to_string(),
            outcome: outcome.to_string(),
            duration: started.elapsed(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub verdict: Verdict,
    /// Iteration that produced the verdict; `k` means `k - 1` reversals.
    pub iterations_used: usize,
    pub phases: Vec<PhaseTiming>,
    /// The conditions counterexamples are replayed on.
    pub original: ChcProgram,
    /// The program of the last propagation phase.
    pub final_program: Option<String>,
    /// Clause positions of the counterexample in `original`.
    pub answer_ids: Option<Vec<usize>>,
    /// Program variables at the failing assertion.
    pub final_env: Option<BTreeMap<String, Rat>>,
    /// Invariants of the predicates of the starting conditions.
    pub loop_invariants: BTreeMap<String, Invariant>,
    /// Definitions of the predicates of the final program.
    pub definitions: BTreeMap<String, Definition>,
    /// Definitions of the predicates of the starting conditions.
    pub vc_definitions: Vec<Definition>,
    pub subsumption_checks: Vec<String>,
    pub solver_trace: Option<String>,
    pub imp: Option<ImpProgram>,
    pub duration: Duration,
}

impl Report {
    pub(crate) fn new(original: ChcProgram) -> Self {
        Report {
            verdict: Verdict::Unknown(String::new()),
            iterations_used: 0,
            phases: vec![],
            original,
            final_program: None,
            answer_ids: None,
            final_env: None,
            loop_invariants: BTreeMap::new(),
            definitions: BTreeMap::new(),
            vc_definitions: vec![],
            subsumption_checks: vec![],
            solver_trace: None,
            imp: None,
            duration: Duration::ZERO,
        }
    }

    /// Invariant of a final-program predicate conjoined with the constraint
    /// of its definition.
    pub fn strengthened_invariant(&self, pred: &str) -> Option<Invariant> {
        let Verdict::Safe(inv) = &self.verdict else {
            return None;
        };
        let i = inv.get(pred)?;
        let Some(d) = self.definitions.get(pred) else {
            return Some(i.clone());
        };
        let map: BTreeMap<String, String> = d
            .params
            .iter()
            .cloned()
            .zip(i.params.iter().cloned())
            .collect();
        Some(Invariant {
            params: i.params.clone(),
            constraint: d.constraint.rename_with(&map).and(&i.constraint),
        })
    }

    pub fn to_json(&self) -> JsonReport {
        let (verdict, reason) = match &self.verdict {
            Verdict::Unknown(why) => ("UNKNOWN", Some(why.clone())),
            v => (v.name(), None),
        };
        let invariants = match &self.verdict {
            Verdict::Safe(inv) => invariants_text(inv),
            _ => BTreeMap::new(),
        };
        JsonReport {
            verdict: verdict.to_string(),
            reason,
            iterations_used: self.iterations_used,
            phases: self.phases.clone(),
            invariants,
            loop_invariants: invariants_text(&self.loop_invariants),
            counterexample: self.answer_ids.clone(),
            final_env: self
                .final_env
                .as_ref()
                .map(|e| e.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()),
            subsumption_checks: self.subsumption_checks.clone(),
            final_program: self.final_program.clone(),
        }
    }

    /// The text printed by the command-line tool. The first line is the
    /// verdict.
    pub fn render(&self, emit: Emit) -> String {
        let mut out = format!("{}\n", self.verdict.name());
        match emit {
            Emit::Verdict => self.summary(&mut out),
            Emit::Chc => {
                if let Some(p) = &self.final_program {
                    out.push_str(p);
                }
            }
            Emit::Trace => {
                self.summary(&mut out);
                if let Verdict::Unsafe(t) = &self.verdict {
                    let _ = write!(out, "{t}");
                }
                if let Some(t) = &self.solver_trace {
                    out.push_str(t);
                }
            }
            Emit::Json => {
                let json = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
                out.push_str(&json);
                out.push('\n');
            }
        }
        out
    }

    fn summary(&self, out: &mut String) {
        match &self.verdict {
            Verdict::Safe(inv) => {
                for l in invariant_lines(inv) {
                    let _ = writeln!(out, "invariant {l}");
                }
            }
            Verdict::Unsafe(_) => {
                if let Some(ids) = &self.answer_ids {
                    let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
                    let _ = writeln!(out, "counterexample clauses {}", ids.join(" "));
                }
                if let Some(env) = &self.final_env {
                    let vals: Vec<String> = env.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    let _ = writeln!(out, "final state {}", vals.join(" "));
                }
            }
            Verdict::Unknown(why) => {
                let _ = writeln!(out, "reason {why}");
            }
        }
    }

    pub fn original_text(&self) -> String {
        emit_chc(&self.original)
    }
}

/// Serialized form of a [`Report`]. Keys appear in field order.
#[derive(Debug, Clone, Serialize)]
pub struct JsonReport {
    pub verdict: String,
    pub reason: Option<String>,
    pub iterations_used: usize,
    pub phases: Vec<PhaseTiming>,
    pub invariants: BTreeMap<String, String>,
    pub loop_invariants: BTreeMap<String, String>,
    pub counterexample: Option<Vec<usize>>,
    pub final_env: Option<BTreeMap<String, String>>,
    pub subsumption_checks: Vec<String>,
    pub final_program: Option<String>,
}
