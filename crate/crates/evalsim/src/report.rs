//! JSON views of results. Numbers are written by `serde_json`, whose
//! shortest round-trip formatting is deterministic.

use evalsim_core::embedding::{EmbeddingSolution, Refit};
use evalsim_core::fitting::{CandidateFit, FitReport, GofKind, MarginalFit, SampleCorrelation, TestResult};
use evalsim_core::generators::{GaussianComponent, GeneratorModel, VoterDistribution};
use evalsim_core::linalg::Matrix;
use evalsim_core::profile::{Profile, Scale};
use evalsim_core::rules::ElectionResult;
use evalsim_core::univariate::Marginal;
use serde_json::{json, Map, Value};

pub fn to_pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

fn rows(m: &Matrix) -> Value {
    json!(m.to_rows())
}

pub fn scale_json(s: Scale) -> Value {
    match s {
        Scale::Continuous => json!({"kind": "continuous"}),
        Scale::Discrete { levels } => json!({"kind": "discrete", "K": levels}),
    }
}

/// Parameters of a marginal without its family tag.
pub fn params(m: &Marginal) -> Value {
    let mut v = serde_json::to_value(m).expect("marginals serialize");
    if let Value::Object(map) = &mut v {
        map.remove("family");
    }
    v
}

pub fn model_json(m: &GeneratorModel) -> Value {
    serde_json::to_value(m).expect("models serialize")
}

fn marginal_fit(f: &MarginalFit) -> Value {
    let mut o = Map::new();
    o.insert("family".into(), json!(f.family.name()));
    o.insert("params".into(), f.marginal.as_ref().map_or(Value::Null, params));
    let kind = match f.gof_kind {
        GofKind::Ks => "ks",
        GofKind::Chi2 => "chi2",
    };
    o.insert("gof".into(), json!({ kind: f.gof }));
    o.insert("n_used".into(), json!(f.n_used));
    if let Some(note) = &f.note {
        o.insert("note".into(), json!(note));
    }
    Value::Object(o)
}

fn candidate_fit(c: &CandidateFit) -> Value {
    let mut o = Map::new();
    o.insert("candidate".into(), json!(c.candidate));
    o.insert("fits".into(), Value::Array(c.fits.iter().map(marginal_fit).collect()));
    o.insert("best".into(), json!(c.best.map(|i| c.fits[i].family.name())));
    if let Some(h) = &c.histogram {
        o.insert("histogram".into(), json!({"G": h.classes, "masses": h.masses, "ks": h.ks}));
    }
    Value::Object(o)
}

fn test(t: &Option<TestResult>, stat: &str) -> Value {
    t.map_or(Value::Null, |t| json!({ stat: t.statistic, "p": t.p }))
}

fn correlation(c: &Option<SampleCorrelation>) -> Value {
    c.as_ref().map_or(Value::Null, |c| rows(&c.matrix))
}

pub fn fit_report_json(r: &FitReport) -> Value {
    let constant: Vec<&str> = r
        .pearson
        .as_ref()
        .map(|c| c.constant.iter().map(|&i| r.candidates[i].candidate.as_str()).collect())
        .unwrap_or_default();
    json!({
        "n": r.n,
        "m": r.m,
        "scale": scale_json(r.scale),
        "candidates": r.candidates.iter().map(candidate_fit).collect::<Vec<_>>(),
        "pooled": candidate_fit(&r.pooled),
        "kruskal_wallis": test(&r.kruskal_wallis, "H"),
        "pearson": correlation(&r.pearson),
        "spearman": correlation(&r.spearman),
        "constant_columns": constant,
        "bartlett": test(&r.bartlett, "stat"),
        "level": r.level,
        "identical": r.identical,
        "independent": r.independent,
        "selected_class": r.selected_class.name(),
        "copula_correlation": r.copula_correlation.as_ref().map(rows),
        "model": model_json(&r.model),
        "warnings": r.warnings,
    })
}

pub fn election_json(r: &ElectionResult, profile: &Profile) -> Value {
    json!({
        "rule": r.rule.name(),
        "scores": r.scores,
        "winner": profile.names()[r.winner],
        "tie_trace": r.tie_trace,
    })
}

fn component_json(c: &GaussianComponent) -> Value {
    json!({"weight": c.weight, "mean": c.mean, "cov": c.cov})
}

pub fn refit_json(r: &Refit, model: &GeneratorModel) -> Value {
    let mut o = match &r.distribution {
        VoterDistribution::Gaussian(g) => {
            json!({"family": "gaussian", "mean": g.mean, "cov": g.cov})
        }
        VoterDistribution::GaussianMixture { components } => json!({
            "family": "gaussian_mixture",
            "k": components.len(),
            "components": components.iter().map(component_json).collect::<Vec<_>>(),
        }),
        VoterDistribution::Uniform => json!({"family": "uniform"}),
    };
    let map = o.as_object_mut().expect("object");
    map.insert("regularized".into(), json!(r.regularized));
    map.insert("log_likelihood".into(), json!(r.log_likelihood));
    map.insert("model".into(), model_json(model));
    o
}

pub struct EmbeddingView<'a> {
    pub solution: &'a EmbeddingSolution,
    pub by_dimension: &'a [EmbeddingSolution],
    pub dissimilarity: Value,
    pub n: usize,
    pub m: usize,
    pub refit: Option<Value>,
}

pub fn embedding_json(e: &EmbeddingView) -> Value {
    let s = e.solution;
    let mut v = json!({
        "d": s.candidates.cols(),
        "n": e.n,
        "m": e.m,
        "dissimilarity": e.dissimilarity,
        "stress": s.stress,
        "normalized_stress": s.normalized_stress,
        "iterations": s.iterations,
        "converged": s.converged,
        "restarts": s.restarts,
        "trace": s.trace,
        "stress_by_dimension": e.by_dimension.iter().map(|x| json!({
            "d": x.candidates.cols(),
            "stress": x.stress,
            "normalized_stress": x.normalized_stress,
        })).collect::<Vec<_>>(),
    });
    if let Some(r) = &e.refit {
        v.as_object_mut().expect("object").insert("refit".into(), r.clone());
    }
    v
}
