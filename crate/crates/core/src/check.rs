//! Algorithm selection by class and the reports the command line prints.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{find_match, ChaseBudget};
use crate::model::{
    classify_dependencies, classify_mapping, normalize_heads, ConjunctiveQuery, Dependency, FreshNames, MapClass,
    Problem, TgdClass,
};
use crate::oracle::oracle_disclose;
use crate::rewrite::{boolify_policy, disclose_via_entailment, RewriteMode};
use crate::uid::disclose_uid_ptime;
use crate::verdict::{DiscloseError, Outcome, Verdict, VerdictKind};
use crate::vischase::disclose_via_vischase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Auto,
    Vischase,
    Critrewrite,
    CritrewritePtime,
    UidPtime,
    Oracle,
}

impl Algo {
    pub const CONCRETE: [Algo; 5] = [Algo::Vischase, Algo::Critrewrite, Algo::CritrewritePtime, Algo::UidPtime, Algo::Oracle];

    pub fn label(self) -> &'static str {
        match self {
            Algo::Auto => "auto",
            Algo::Vischase => "vischase",
            Algo::Critrewrite => "critrewrite",
            Algo::CritrewritePtime => "critrewrite-ptime",
            Algo::UidPtime => "uid-ptime",
            Algo::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algo {
    type Err = CheckError;

    fn from_str(s: &str) -> Result<Algo, CheckError> {
        [Algo::Auto].into_iter().chain(Algo::CONCRETE).find(|a| a.label() == s).ok_or_else(|| CheckError::UnknownAlgo(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("unknown algorithm `{0}`")]
    UnknownAlgo(String),
    #[error("{algo} needs {needs}, but the setting is {found}")]
    Illegal { algo: Algo, needs: String, found: String },
    #[error("budget values must be positive")]
    Budget,
    #[error(transparent)]
    Disclose(#[from] DiscloseError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classes {
    pub constraints: Vec<TgdClass>,
    pub mappings: Vec<MapClass>,
}

impl Classes {
    /// Classes of the constraints after head normalization.
    pub fn of(p: &Problem) -> Classes {
        let mut fresh = FreshNames::for_problem(p);
        let sigma = normalize_heads(&p.constraints, &mut fresh);
        Classes {
            constraints: classify_dependencies(&sigma).into_iter().collect(),
            mappings: classify_mapping(&p.mappings).into_iter().collect(),
        }
    }

    fn most_specific(&self) -> (TgdClass, MapClass) {
        (*self.constraints.last().expect("TGD"), *self.mappings.last().expect("CQMap"))
    }

    pub fn legal(&self, algo: Algo) -> Result<(), CheckError> {
        let (t, m) = self.most_specific();
        let need = match algo {
            Algo::UidPtime => Some((TgdClass::Uid, MapClass::ProjMap)),
            Algo::CritrewritePtime => Some((TgdClass::Ltgd, MapClass::AtomMap)),
            _ => None,
        };
        match need {
            Some((nt, nm)) if t < nt || m < nm => {
                Err(CheckError::Illegal { algo, needs: format!("{nt} + {nm}"), found: format!("{t} + {m}") })
            }
            _ => Ok(()),
        }
    }

    /// The most specialized algorithm legal here.
    pub fn auto(&self) -> Algo {
        [Algo::UidPtime, Algo::CritrewritePtime].into_iter().find(|a| self.legal(*a).is_ok()).unwrap_or(Algo::Critrewrite)
    }

    pub fn legal_algos(&self) -> Vec<Algo> {
        Algo::CONCRETE.into_iter().filter(|a| self.legal(*a).is_ok()).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub verdict: VerdictKind,
    pub algorithm: Algo,
    pub classes: Classes,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<BTreeMap<String, String>>,
    pub rounds: usize,
    pub facts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unknown_reason: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub elapsed_ms: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict: {}", self.verdict)?;
        writeln!(f, "algorithm: {}", self.algorithm)?;
        let join = |v: Vec<&str>| v.join(", ");
        writeln!(f, "constraint classes: {}", join(self.classes.constraints.iter().map(|c| c.label()).collect()))?;
        writeln!(f, "mapping classes: {}", join(self.classes.mappings.iter().map(|c| c.label()).collect()))?;
        if let Some(w) = &self.witness {
            let parts: Vec<String> = w.iter().map(|(k, v)| format!("{k} -> {v}")).collect();
            writeln!(f, "witness: {}", parts.join(", "))?;
        }
        writeln!(f, "rounds: {}", self.rounds)?;
        writeln!(f, "facts: {}", self.facts)?;
        if let Some(r) = &self.unknown_reason {
            writeln!(f, "unknown: {r}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        write!(f, "time: {:.1} ms", self.elapsed_ms)
    }
}

/// Runs one concrete algorithm on a Boolean policy.
pub fn run_algo(
    algo: Algo,
    sigma: &[Dependency],
    p: &Problem,
    policy: &ConjunctiveQuery,
    budget: ChaseBudget,
) -> Result<Outcome, DiscloseError> {
    let m = &p.mappings;
    match algo {
        Algo::Vischase => disclose_via_vischase(sigma, m, policy, budget),
        Algo::Critrewrite => disclose_via_entailment(sigma, m, policy, budget, RewriteMode::Full),
        Algo::CritrewritePtime => disclose_via_entailment(sigma, m, policy, budget, RewriteMode::Ptime),
        Algo::UidPtime => disclose_uid_ptime(sigma, m, policy),
        Algo::Oracle => oracle_disclose(sigma, m, policy, budget),
        Algo::Auto => unreachable!("resolved before dispatch"),
    }
}

pub fn run_check(p: &Problem, algo: Algo, budget: ChaseBudget) -> Result<Report, CheckError> {
    if budget.max_rounds == 0 || budget.max_facts == 0 {
        return Err(CheckError::Budget);
    }
    let start = Instant::now();
    let classes = Classes::of(p);
    let algo = match algo {
        Algo::Auto => classes.auto(),
        a => {
            classes.legal(a)?;
            a
        }
    };
    let mut notes = Vec::new();
    let policy = if p.policy.is_boolean() {
        p.policy.clone()
    } else {
        let b = boolify_policy(&p.policy);
        notes.push(format!("policy made Boolean: {b}"));
        b
    };
    let mut fresh = FreshNames::for_problem(p);
    let sigma = normalize_heads(&p.constraints, &mut fresh);
    if sigma.len() != p.constraints.len() {
        notes.push("multi-atom heads split through auxiliary predicates".into());
    }
    let out = run_algo(algo, &sigma, p, &policy, budget)?;
    let mut witness = None;
    let mut unknown_reason = None;
    match &out.verdict {
        Verdict::Disclosed { witness: w } => {
            if let Some(state) = &out.state {
                let fixed = w.iter().filter(|(k, _)| policy.vars().contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
                if algo == Algo::Vischase && find_match(state, &policy.atoms, &fixed).is_none() {
                    notes.push("witness did not re-validate against the final instance".into());
                }
            }
            witness = Some(w.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect());
        }
        Verdict::Unknown(r) => unknown_reason = Some(r.clone()),
        Verdict::NotDisclosed => {}
    }
    Ok(Report {
        verdict: out.kind(),
        algorithm: algo,
        classes,
        witness,
        rounds: out.rounds,
        facts: out.facts,
        unknown_reason,
        notes,
        elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
    })
}
