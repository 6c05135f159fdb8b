//! One runner per subcommand. Each turns a config into result rows.

use cstar_core::dynamics::{
    average_mj, averaging_decay_report, canonical_trace, check_wj_disjoint, finite_order_blowup, ideal_experiment,
    loxodromic_probe, panalytic_row, pingpong_certificate, tracial_property_check, PingPongBudget, DEFAULT_CONSTANT,
    DEFAULT_MIN_RATE,
};
use cstar_core::operators::{adjoint, norm_lower_bound, triangle_upper_bound};
use cstar_core::spaces::faithfulness_check;
use cstar_core::{CayleySpace, Error, GroupElement, NormEstimate, Presentation, Verdict};
use num_complex::Complex64;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{format_g, ResultRow, WitnessEntry};

const DEFAULT_CENSUS_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Panalytic,
    Average,
    Norm,
    Trace,
    Orbits,
    Pingpong,
    Blowup,
    Ideal,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Panalytic => "panalytic",
            Self::Average => "average",
            Self::Norm => "norm",
            Self::Trace => "trace",
            Self::Orbits => "orbits",
            Self::Pingpong => "pingpong",
            Self::Blowup => "blowup",
            Self::Ideal => "ideal",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunParams {
    pub seed: u64,
    pub slack: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    pub witnesses: Vec<WitnessEntry>,
    pub notes: Vec<String>,
    /// Set when a budget overflow cut the run short.
    pub interrupted: Option<String>,
}

impl Outcome {
    pub fn verdict(&self) -> Verdict {
        let rows = Verdict::combine(self.rows.iter().map(|r| r.verdict));
        if self.interrupted.is_some() && rows == Verdict::Pass {
            Verdict::Inconclusive
        } else {
            rows
        }
    }

    /// Keeps the value, or records a budget overflow and returns `None`.
    fn absorb<T>(&mut self, result: cstar_core::Result<T>) -> Result<Option<T>, CliError> {
        match result {
            Ok(v) => Ok(Some(v)),
            Err(e @ Error::Budget { .. }) => {
                self.interrupted = Some(e.to_string());
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn push_estimate(&mut self, name: &str, index: i64, bound: f64, e: &NormEstimate<GroupElement>, v: Verdict) {
        self.rows.push(ResultRow {
            experiment: name.into(),
            index,
            bound,
            estimate: e.lower_bound,
            residual: e.residual,
            support: e.support_size,
            converged: e.converged,
            verdict: v,
        });
    }

    fn push_witness(&mut self, p: &Presentation, name: &str, index: i64, e: &NormEstimate<GroupElement>) {
        for (x, c) in e.witness.iter() {
            self.witnesses.push(WitnessEntry { experiment: name.into(), index, item: p.render(x), re: c.re, im: c.im });
        }
    }

    fn push_word(&mut self, p: &Presentation, name: &str, index: i64, word: &GroupElement) {
        self.witnesses.push(WitnessEntry { experiment: name.into(), index, item: p.render(word), re: 1.0, im: 0.0 });
    }

    fn push_count(&mut self, name: &str, index: i64, bound: f64, estimate: f64, support: usize, verdict: Verdict) {
        self.rows.push(ResultRow {
            experiment: name.into(),
            index,
            bound,
            estimate,
            residual: 0.0,
            support,
            converged: true,
            verdict,
        });
    }
}

fn estimate_verdict(e: &NormEstimate<GroupElement>, bound: f64, slack: f64) -> Verdict {
    if e.lower_bound > bound + slack {
        Verdict::Falsified
    } else if e.converged {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    }
}

fn powers_of_two(up_to: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |j| j.checked_mul(2)).take_while(|&j| j <= up_to).collect()
}

pub fn run(experiment: Experiment, config: &Config, params: RunParams) -> Result<Outcome, CliError> {
    let space = CayleySpace::new(config.presentation().clone());
    match experiment {
        Experiment::Panalytic => panalytic(&space, config, params),
        Experiment::Average => average(&space, config, params),
        Experiment::Norm => norm(&space, config, params),
        Experiment::Trace => trace(config),
        Experiment::Orbits => orbits(&space, config),
        Experiment::Pingpong => pingpong(&space, config),
        Experiment::Blowup => blowup(config),
        Experiment::Ideal => ideal(&space, config, params),
    }
}

fn panalytic(space: &CayleySpace, config: &Config, params: RunParams) -> Result<Outcome, CliError> {
    let p = config.presentation();
    let h = config.nontrivial_element("h")?;
    let g = config.element("g")?;
    let j_max = config.positive("budget.J_max", 8)?;
    let constant = config.positive_real("budget.C", DEFAULT_CONSTANT)?;
    let budget = config.norm_budget(params.seed)?;
    let mut out = Outcome::default();
    out.notes.push(format!("h = {}, g = {}, C = {}", p.render(&h), p.render(&g), format_g(constant)));
    for j in 1..=j_max {
        let Some(row) = out.absorb(panalytic_row(space, &h, &g, j, constant, params.slack, &budget))? else { break };
        out.push_estimate("panalytic", j as i64, row.bound, &row.estimate, row.verdict);
        if row.falsified {
            out.push_witness(p, "panalytic", j as i64, &row.estimate);
        }
    }
    Ok(out)
}

fn average(space: &CayleySpace, config: &Config, params: RunParams) -> Result<Outcome, CliError> {
    let p = config.presentation();
    let t = config.operator("T")?;
    let g = config.element("g")?;
    let js = match config.list("budget.J_list")? {
        Some(js) => js,
        None => powers_of_two(config.positive("budget.J_max", 8)?),
    };
    let constant = config.positive_real("budget.C", DEFAULT_CONSTANT)?;
    let budget = config.norm_budget(params.seed)?;
    let mut out = Outcome::default();
    out.notes.push(format!("T = {}, g = {}", t.render(p), p.render(&g)));
    let mass: f64 = t.iter().filter(|(h, _)| !h.is_identity()).map(|(_, a)| a.norm()).sum();
    out.notes.push(format!("identity coefficient {}, off-identity mass {}", t.identity_coefficient(), format_g(mass)));
    for j in js {
        let Some(report) = out.absorb(averaging_decay_report(space, &t, &g, &[j], constant, params.slack, &budget))?
        else {
            break;
        };
        let row = &report.rows[0];
        out.push_estimate("average", j as i64, row.bound, &row.estimate, row.verdict);
        if row.verdict == Verdict::Falsified {
            out.push_witness(p, "average", j as i64, &row.estimate);
        }
    }
    Ok(out)
}

fn norm(space: &CayleySpace, config: &Config, params: RunParams) -> Result<Outcome, CliError> {
    let p = config.presentation();
    let t = config.operator("T")?;
    let budget = config.norm_budget(params.seed)?;
    let estimate = norm_lower_bound(space, &t, &budget)?;
    let bound = triangle_upper_bound(&t);
    let mut out = Outcome::default();
    out.notes.push(format!("T = {}", t.render(p)));
    out.notes.push(format!(
        "iterations {}, rayleigh {}, radius {}, truncated {}",
        estimate.iterations,
        format_g(estimate.rayleigh),
        estimate.radius_hint,
        estimate.truncated
    ));
    let verdict = estimate_verdict(&estimate, bound, params.slack);
    out.push_estimate("norm", 0, bound, &estimate, verdict);
    if verdict == Verdict::Falsified {
        out.push_witness(p, "norm", 0, &estimate);
    }
    Ok(out)
}

fn trace(config: &Config) -> Result<Outcome, CliError> {
    let p = config.presentation();
    let s = config.operator("S")?;
    let t = config.operator("T")?;
    let st = canonical_trace(&s.product(p, &t));
    let ts = canonical_trace(&t.product(p, &s));
    let positive = canonical_trace(&adjoint(p, &s).product(p, &s));
    let mut out = Outcome::default();
    out.notes.push(format!("sigma(S) = {}, sigma(T) = {}", canonical_trace(&s), canonical_trace(&t)));
    out.notes.push(format!("sigma(ST) = {st}, sigma(TS) = {ts}, sigma(S*S) = {positive}"));
    let tracial = if st == ts { Verdict::Pass } else { Verdict::Falsified };
    out.push_count("trace.tracial", 0, 0.0, (st - ts).norm(), s.len() * t.len(), tracial);
    let positivity = if positive.im == 0.0 && positive.re >= 0.0 { Verdict::Pass } else { Verdict::Falsified };
    out.push_count("trace.positivity", 0, 0.0, positive.re, s.len(), positivity);
    debug_assert_eq!(tracial_property_check(p, &s, &t), tracial == Verdict::Pass && positivity == Verdict::Pass);
    if config.raw("elements.g").is_some() {
        let g = config.element("g")?;
        let target = canonical_trace(&t);
        for j in 1..=config.positive("budget.J_max", 8)? {
            let averaged = average_mj(p, &t, &g, j)?;
            let gap = (canonical_trace(&averaged) - target).norm();
            let verdict = if gap == 0.0 { Verdict::Pass } else { Verdict::Falsified };
            out.push_count("trace.average", j as i64, 0.0, gap, averaged.len(), verdict);
        }
    }
    Ok(out)
}

fn orbits(space: &CayleySpace, config: &Config) -> Result<Outcome, CliError> {
    let p = config.presentation();
    let h = config.nontrivial_element("h")?;
    let g = config.nontrivial_element("g")?;
    let span = config.positive("budget.J_max", 5)?;
    let max_length = config.positive("budget.L", 6)? as u64;
    let radius = config.number("budget.R", 1u64)?;
    let cap = config.positive("budget.census_cap", DEFAULT_CENSUS_CAP)?;
    let mut out = Outcome::default();
    if let Some(f) = out.absorb(faithfulness_check(space, max_length, radius, cap))? {
        out.notes.push(format!("faithfulness: {} words, {} witnessed", f.words_checked, f.witnesses.len()));
        out.push_count(
            "orbits.faithfulness",
            max_length as i64,
            0.0,
            f.violations.len() as f64,
            f.words_checked,
            f.verdict,
        );
        for w in &f.violations {
            out.push_word(p, "orbits.faithfulness", max_length as i64, w);
        }
    } else {
        return Ok(out);
    }
    let base = GroupElement::identity();
    if let Some(d) = out.absorb(check_wj_disjoint(space, &h, &g, span as i64, max_length, &base, cap))? {
        out.notes.push(format!("disjointness: {} W0 words, {} points", d.w0_words, d.points_checked));
        let name = "orbits.disjointness";
        out.push_count(name, span as i64, 0.0, d.collision_count as f64, d.points_checked, d.verdict);
        let probe = cstar_core::dynamics::FreeProductProbe::new(p, &h, &g)?;
        for c in &d.collisions {
            out.push_word(&probe.abstract_presentation, name, span as i64, &c.stabilizer_word);
        }
    }
    Ok(out)
}

fn pingpong(space: &CayleySpace, config: &Config) -> Result<Outcome, CliError> {
    let p = config.presentation();
    let h = config.nontrivial_element("h")?;
    let g = config.nontrivial_element("g")?;
    let budget = PingPongBudget {
        max_length: config.positive("budget.L", 6)? as u64,
        span: config.positive("budget.J_max", 8)? as i64,
        radius: config.number("budget.R", 7u64)?,
        min_rate: config.positive_real("budget.c_min", DEFAULT_MIN_RATE)?,
        census_cap: config.positive("budget.census_cap", DEFAULT_CENSUS_CAP)?,
    };
    let mut out = Outcome::default();
    out.notes.push(format!("h = {}, g = {}", p.render(&h), p.render(&g)));
    out.notes.push("budgeted consistency check, not a proof".into());
    let Some(r) = out.absorb(pingpong_certificate(space, &h, &g, &budget))? else { return Ok(out) };
    let q = cstar_core::dynamics::FreeProductProbe::new(p, &h, &g)?.abstract_presentation;
    let pass_if = |ok: bool| if ok { Verdict::Pass } else { Verdict::Falsified };
    let l = budget.max_length as i64;
    out.push_count("pingpong.injectivity", l, 0.0, r.relators.len() as f64, r.words_checked, pass_if(r.injective));
    for w in &r.relators {
        out.push_word(&q, "pingpong.injectivity", l, w);
    }
    let d = &r.disjointness;
    out.push_count("pingpong.disjointness", budget.span, 0.0, d.collision_count as f64, d.points_checked, d.verdict);
    for c in &d.collisions {
        out.push_word(&q, "pingpong.disjointness", budget.span, &c.stabilizer_word);
    }
    let radius = budget.radius as i64;
    let elliptic = r.elliptic_violations.len() as f64;
    out.push_count("pingpong.ellipticity", radius, 0.0, elliptic, r.words_checked, pass_if(r.ellipticity_ok));
    for w in &r.elliptic_violations {
        out.push_word(&q, "pingpong.ellipticity", radius, w);
    }
    for (i, &dist) in r.displacements.iter().enumerate() {
        let n = (i + 1) as f64;
        let bound = budget.min_rate * n;
        out.push_count("pingpong.displacement", n as i64, bound, dist as f64, 1, pass_if(dist as f64 >= bound));
    }
    if config.raw("elements.g1").is_some() || config.raw("elements.g2").is_some() {
        let g1 = config.element("g1")?;
        let g2 = config.element("g2")?;
        let l = config.positive("budget.l", 1)? as i64;
        let k = config.positive("budget.k", 1)? as i64;
        let n_max = config.positive("budget.n_max", 10)?;
        let lox = loxodromic_probe(space, &g1, &g2, l, k, n_max, budget.min_rate)?;
        out.notes.push(format!("loxodromic product {} has rate {}", p.render(&lox.product), format_g(lox.rate)));
        for (i, &dist) in lox.displacements.iter().enumerate() {
            let n = (i + 1) as f64;
            let bound = budget.min_rate * n;
            out.push_count("pingpong.loxodromic", n as i64, bound, dist as f64, 1, pass_if(dist as f64 >= bound));
        }
    }
    Ok(out)
}

fn blowup(config: &Config) -> Result<Outcome, CliError> {
    let p = config.presentation();
    let h = config.nontrivial_element("h")?;
    let g = config.element("g")?;
    let counts = config.list("budget.N")?.unwrap_or_else(|| vec![4]);
    let mut out = Outcome::default();
    for n in counts {
        let b = finite_order_blowup(p, &h, &g, n).map_err(|e| match e {
            Error::Domain(m) => config.error("elements.g", m),
            e => e.into(),
        })?;
        let symbol = p.conjugate(&h, &g, 1);
        let collapse_error = (b.assembled.coefficient(&symbol) - Complex64::new(b.norm, 0.0)).norm();
        let verdict =
            if b.assembled.len() == 1 && collapse_error <= 1e-12 { Verdict::Pass } else { Verdict::Falsified };
        if out.notes.is_empty() {
            out.notes.push(format!("g has order {}; T_a collapses onto {}", b.order, p.render(&symbol)));
        }
        out.rows.push(ResultRow {
            experiment: "blowup".into(),
            index: n as i64,
            bound: (n as f64).sqrt(),
            estimate: b.norm,
            residual: collapse_error,
            support: b.assembled.len(),
            converged: true,
            verdict,
        });
    }
    Ok(out)
}

fn ideal(space: &CayleySpace, config: &Config, params: RunParams) -> Result<Outcome, CliError> {
    let p = config.presentation();
    let t = config.operator("T")?;
    let k = config.element("k")?;
    let g = config.element("g")?;
    let j_max = config.positive("budget.J_max", 20)?;
    let numeric = match config.list("budget.J_list")? {
        Some(js) => js,
        None => powers_of_two(j_max),
    };
    let constant = config.positive_real("budget.C", DEFAULT_CONSTANT)?;
    let budget = config.norm_budget(params.seed)?;
    let r =
        ideal_experiment(space, &t, &k, &g, j_max, constant, params.slack, &numeric, &budget).map_err(|e| match e {
            Error::Precondition(m) => config.error("elements.k", m),
            e => e.into(),
        })?;
    let mut out = Outcome::default();
    out.notes.push(format!("T = {}, pivot {} with coefficient {}", t.render(p), p.render(&k), r.pivot_coefficient));
    out.notes.push(format!("translated operator {}", r.translated.render(p)));
    for row in &r.rows {
        let exact = if row.identity_coefficient == r.pivot_coefficient { Verdict::Pass } else { Verdict::Falsified };
        out.rows.push(ResultRow {
            experiment: "ideal.arithmetic".into(),
            index: row.j as i64,
            bound: row.threshold,
            estimate: row.bound,
            residual: (row.identity_coefficient - r.pivot_coefficient).norm(),
            support: row.residual.len(),
            converged: row.certified,
            verdict: exact,
        });
    }
    for row in r.rows.iter().filter(|row| row.estimate.is_some()) {
        let e = row.estimate.as_ref().unwrap();
        let verdict = estimate_verdict(e, row.bound, params.slack);
        out.push_estimate("ideal.residual", row.j as i64, row.bound, e, verdict);
        if verdict == Verdict::Falsified {
            out.push_witness(p, "ideal.residual", row.j as i64, e);
        }
    }
    let (index, verdict) = match r.first_certified {
        Some(j) => (j, Verdict::Pass),
        None => (j_max, Verdict::Inconclusive),
    };
    let at = &r.rows[index - 1];
    out.push_count("ideal.certified", index as i64, at.threshold, at.bound, at.residual.len(), verdict);
    Ok(out)
}
