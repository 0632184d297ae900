//! JSON report types. Field order is the serialized order.

use serde::{Deserialize, Serialize};

use crate::calculus::{Witness, ZeroVerdict};
use crate::sweb::{Condition, RankReport, WebSpec};

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub f: String,
    pub b: String,
    pub phi: Option<String>,
    pub domain: String,
    pub mode: String,
    pub tol: f64,
}

impl InputEcho {
    pub fn of(spec: &WebSpec) -> InputEcho {
        InputEcho {
            f: spec.f.to_string(),
            b: spec.b.to_string(),
            phi: spec.phi.as_ref().map(ToString::to_string),
            domain: spec.domain.to_string(),
            mode: spec.plan.mode.to_string(),
            tol: spec.plan.tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl VerdictJson {
    pub fn of(v: &ZeroVerdict) -> VerdictJson {
        VerdictJson {
            verdict: v.label().to_string(),
            witness: v.witness().filter(|w| finite_witness(w)).cloned(),
        }
    }
}

fn finite_witness(w: &Witness) -> bool {
    w.x.is_finite() && w.y.is_finite() && w.value.is_finite()
}

/// Non-finite floats have no JSON form; they become `null`.
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionJson {
    pub name: String,
    pub verdict: String,
    pub residual: Option<f64>,
}

impl ConditionJson {
    pub fn of(c: &Condition) -> ConditionJson {
        ConditionJson {
            name: c.name.clone(),
            verdict: c.verdict.label().to_string(),
            residual: finite(c.residual),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub version: u32,
    pub input: InputEcho,
    pub branch: String,
    pub delta: VerdictJson,
    pub conditions: Vec<ConditionJson>,
    pub dim_w: Option<i32>,
    pub base_dim: u32,
    pub rank: Option<u32>,
    pub solvable: bool,
    pub maximal: bool,
    pub inconclusive: bool,
    pub seed: u64,
    pub samples: usize,
    /// `null` unless timing was requested, so reports stay reproducible.
    pub runtime_ms: Option<u64>,
}

impl AnalyzeReport {
    pub fn new(spec: &WebSpec, r: &RankReport, runtime_ms: Option<u64>) -> AnalyzeReport {
        AnalyzeReport {
            version: REPORT_VERSION,
            input: InputEcho::of(spec),
            branch: r.branch.name().to_string(),
            delta: VerdictJson::of(&r.delta_verdict),
            conditions: r.conditions.iter().map(ConditionJson::of).collect(),
            dim_w: r.dim_w,
            base_dim: r.base_dim,
            rank: r.rank,
            solvable: r.solvable,
            maximal: r.maximal,
            inconclusive: r.inconclusive,
            seed: spec.plan.seed,
            samples: r.samples,
            runtime_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let show = |v: Option<String>| v.unwrap_or_else(|| "inconclusive".into());
        let mut out = String::new();
        let i = &self.input;
        if let Some(phi) = &i.phi {
            out += &format!("generating function: {phi}\n");
        }
        out += &format!("web: f = {}, b = {} on {}\n", i.f, i.b, i.domain);
        out += &format!("branch: {}\n", self.branch);
        out += &format!("delta: {}\n", self.delta.verdict);
        for c in &self.conditions {
            let res = c.residual.map_or("-".into(), |r| format!("{r:.3e}"));
            out += &format!("  {}: {} (residual {res})\n", c.name, c.verdict);
        }
        out += &format!("dim_w: {}\n", show(self.dim_w.map(|d| d.to_string())));
        out += &format!(
            "rank: {} (base {})\n",
            show(self.rank.map(|r| r.to_string())),
            self.base_dim
        );
        out += &format!("solvable: {}\nmaximal: {}\n", self.solvable, self.maximal);
        if self.inconclusive {
            out += "inconclusive: true\n";
        }
        if let Some(ms) = self.runtime_ms {
            out += &format!("runtime: {ms} ms\n");
        }
        out
    }
}

/// A named derived expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedExpr {
    pub name: String,
    pub expr: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeriveReport {
    pub version: u32,
    pub input: InputEcho,
    pub emit: String,
    pub objects: Vec<NamedExpr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateReport {
    pub version: u32,
    pub phi: String,
    pub domain: String,
    pub f: String,
    pub b: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormsReport {
    pub version: u32,
    /// `[a, c]` for each form `a dx + c dy`.
    pub forms: Vec<[String; 2]>,
    pub domain: String,
    pub s_condition: VerdictJson,
    pub seed: u64,
    pub samples: usize,
}
