use std::collections::BTreeMap;
use std::fmt::Display;

use rand::seq::index::sample;

use super::params::{named_rng, Binding, ParamStore, Perturbation};
use super::tape::{Tape, Var};
use super::NumericsError;
use crate::par::Execution;

#[derive(Debug, Clone, Copy)]
pub struct FdConfig {
    pub eps: f64,
    /// Coordinates sampled per parameter; smaller parameters are checked in full.
    pub coords_per_param: usize,
    pub denominator_floor: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { eps: 1e-5, coords_per_param: 32, denominator_floor: 1e-8, seed: 0, execution: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub per_param: BTreeMap<String, f64>,
    pub checked: usize,
    pub worst: Option<Coordinate>,
    pub coordinates: Vec<Coordinate>,
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn evaluate<F, E>(f: &F, store: &ParamStore, p: Option<Perturbation>) -> Result<f64, NumericsError>
where
    F: for<'t> Fn(&Binding<'t>) -> Result<Var<'t>, E>,
    E: Display,
{
    let tape = Tape::new();
    let b = match p {
        Some(p) => Binding::perturbed(&tape, store, p),
        None => Binding::new(&tape, store),
    };
    let out = f(&b).map_err(|e| NumericsError::Objective(e.to_string()))?;
    if out.numel() != 1 {
        return Err(NumericsError::shape("finite_difference_check", format!("objective has shape {:?}", out.shape())));
    }
    let v = out.item();
    if !v.is_finite() {
        return Err(NumericsError::NonFinite(format!("objective evaluated to {v}")));
    }
    Ok(v)
}

/// Compares tape gradients of the scalar `f` against central differences
/// on sampled coordinates of every parameter in `store`.
pub fn finite_difference_check<F, E>(f: F, store: &ParamStore, cfg: &FdConfig) -> Result<FdReport, NumericsError>
where
    F: for<'t> Fn(&Binding<'t>) -> Result<Var<'t>, E> + Sync + Send,
    E: Display,
{
    if !(1e-7..=1e-4).contains(&cfg.eps) {
        return Err(NumericsError::Objective(format!("eps {} outside [1e-7, 1e-4]", cfg.eps)));
    }

    let analytic = {
        let tape = Tape::new();
        let b = Binding::new(&tape, store);
        let out = f(&b).map_err(|e| NumericsError::Objective(e.to_string()))?;
        if !out.item().is_finite() {
            return Err(NumericsError::NonFinite(format!("objective evaluated to {}", out.item())));
        }
        let grads = tape.backward(out)?;
        b.gradients(&grads)
    };

    let mut coords = Vec::new();
    for (name, t) in store.iter() {
        let n = t.numel();
        let k = cfg.coords_per_param.min(n);
        let mut idx = sample(&mut named_rng(cfg.seed, name), n, k).into_vec();
        idx.sort_unstable();
        coords.extend(idx.into_iter().map(|i| (name.to_string(), i)));
    }

    let eps = cfg.eps;
    let numeric = cfg.execution.map(&coords, |(name, index)| {
        let nudge = |delta| Perturbation { name: name.clone(), index: *index, delta };
        let up = evaluate(&f, store, Some(nudge(eps)))?;
        let down = evaluate(&f, store, Some(nudge(-eps)))?;
        Ok::<f64, NumericsError>((up - down) / (2.0 * eps))
    });

    let mut report = FdReport { max_rel_err: 0.0, per_param: BTreeMap::new(), checked: 0, worst: None, coordinates: Vec::new() };
    for ((param, index), numeric) in coords.into_iter().zip(numeric) {
        let numeric = numeric?;
        let analytic = analytic.get(&param).map_or(0.0, |g| g[index]);
        let rel_err = relative_error(analytic, numeric, cfg.denominator_floor);
        let entry = report.per_param.entry(param.clone()).or_insert(0.0);
        *entry = entry.max(rel_err);
        report.checked += 1;
        let c = Coordinate { param, index, analytic, numeric, rel_err };
        if report.worst.is_none() || rel_err > report.max_rel_err {
            report.max_rel_err = rel_err;
            report.worst = Some(c.clone());
        }
        report.coordinates.push(c);
    }
    Ok(report)
}
