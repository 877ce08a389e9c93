//! Fitting the small-`ε` expansion of truncated areas and extrapolating
//! truncated differences to `ε = 0`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One `(ε, value)` sample with its quadrature error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub eps: f64,
    pub value: f64,
    #[serde(default)]
    pub error_bound: f64,
}

impl Sample {
    pub fn new(eps: f64, value: f64, error_bound: f64) -> Self {
        Self { eps, value, error_bound }
    }
}

impl From<(f64, f64)> for Sample {
    fn from((eps, value): (f64, f64)) -> Self {
        Self::new(eps, value, 0.0)
    }
}

impl From<(f64, f64, f64)> for Sample {
    fn from((eps, value, error_bound): (f64, f64, f64)) -> Self {
        Self::new(eps, value, error_bound)
    }
}

/// A basis function of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// `ε^{-k}`
    InversePower(u32),
    /// `log(1/ε)`
    Log,
    Constant,
    /// `ε^k`, `k ≥ 1`
    Power(u32),
}

impl Term {
    pub fn eval(&self, eps: f64) -> f64 {
        match *self {
            Term::InversePower(k) => eps.powi(-(k as i32)),
            Term::Log => -eps.ln(),
            Term::Constant => 1.0,
            Term::Power(k) => eps.powi(k as i32),
        }
    }
}

/// The divergent-plus-constant basis for dimension `n`:
/// `ε^{-(n-1)}, ε^{-(n-3)}, …`, then `log(1/ε)` when `n` is odd, then `1`.
pub fn expansion_basis(n: usize) -> Vec<Term> {
    let mut terms: Vec<Term> = (1..n)
        .rev()
        .filter(|k| (n - 1 - k) % 2 == 0)
        .map(|k| Term::InversePower(k as u32))
        .collect();
    if n % 2 == 1 {
        terms.push(Term::Log);
    }
    terms.push(Term::Constant);
    terms
}

/// Least-squares fit of the expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub n: usize,
    pub terms: Vec<Term>,
    pub coefficients: Vec<f64>,
    /// Coefficient of `log(1/ε)`, present iff `n` is odd.
    pub log_coefficient: Option<f64>,
    /// The constant term, i.e. the renormalized area relative to `r`.
    pub constant_term: f64,
    /// Root-mean-square misfit on the held-out samples.
    pub residual_norm: f64,
    /// Ratio of extreme singular values of the column-scaled design matrix.
    pub condition_estimate: f64,
    pub training_samples: usize,
    pub held_out_samples: usize,
}

impl ExpansionFit {
    /// Coefficient `c_j` of `ε^{-(n-1-j)}` (`j < n - 1`), of `log(1/ε)`
    /// (`j = n - 1`, odd `n`) or the constant term (`j = n`).
    pub fn c(&self, j: usize) -> Option<f64> {
        let wanted = if j == self.n {
            Term::Constant
        } else if j + 1 == self.n {
            Term::Log
        } else if j + 1 < self.n {
            Term::InversePower((self.n - 1 - j) as u32)
        } else {
            return None;
        };
        self.coefficient(wanted)
    }

    pub fn coefficient(&self, term: Term) -> Option<f64> {
        self.terms.iter().position(|t| *t == term).map(|i| self.coefficients[i])
    }

    pub fn predict(&self, eps: f64) -> f64 {
        self.terms.iter().zip(&self.coefficients).map(|(t, c)| c * t.eval(eps)).sum()
    }
}

struct LeastSquares {
    coefficients: Vec<f64>,
    condition: f64,
}

fn least_squares(eps: &[f64], values: &[f64], terms: &[Term]) -> Result<LeastSquares> {
    let (m, k) = (eps.len(), terms.len());
    let mut a = DMatrix::from_fn(m, k, |i, j| terms[j].eval(eps[i]));
    let scales: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        if !(*s > 0.0 && s.is_finite()) {
            return Err(Error::IllConditionedFit {
                condition: f64::INFINITY,
                rank: 0,
                columns: k,
            });
        }
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let b = DVector::from_column_slice(values);
    let qr = a.qr();
    let r = qr.r();
    let sv = r.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let rank = sv.iter().filter(|s| **s > 1e-13 * smax).count();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if rank < k || condition > 1e13 {
        return Err(Error::IllConditionedFit {
            condition,
            rank,
            columns: k,
        });
    }
    let qtb = qr.q().transpose() * b;
    let x = r
        .solve_upper_triangular(&qtb)
        .ok_or(Error::IllConditionedFit {
            condition,
            rank,
            columns: k,
        })?;
    Ok(LeastSquares {
        coefficients: x.iter().zip(&scales).map(|(c, s)| c / s).collect(),
        condition,
    })
}

fn check_samples(samples: &[Sample]) -> Result<()> {
    for s in samples {
        if !(s.eps > 0.0 && s.eps.is_finite() && s.value.is_finite()) {
            return invalid(format!("bad sample (eps={}, value={})", s.eps, s.value));
        }
    }
    Ok(())
}

/// Fit the expansion of `Vol_ε` in dimension `n`.
///
/// Every fourth sample (in the given order) is held out and used only for
/// the residual.
pub fn fit_expansion(samples: &[Sample], n: usize) -> Result<ExpansionFit> {
    fit_expansion_with_tail(samples, n, 0)
}

/// As [`fit_expansion`], with `tail` extra columns `ε, ε², …, ε^tail`
/// absorbing the vanishing part of the expansion.
pub fn fit_expansion_with_tail(samples: &[Sample], n: usize, tail: u32) -> Result<ExpansionFit> {
    if n == 0 {
        return invalid("dimension must be at least 1");
    }
    check_samples(samples)?;
    let mut terms = expansion_basis(n);
    terms.extend((1..=tail).map(Term::Power));
    if samples.len() < terms.len() + 2 {
        return invalid(format!("{} samples for {} basis functions; need at least {}", samples.len(), terms.len(), terms.len() + 2));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.eps), hi.max(s.eps)));
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return invalid(format!("samples span eps in [{lo}, {hi}], less than a decade"));
    }
    let (train, held): (Vec<(usize, &Sample)>, Vec<(usize, &Sample)>) =
        samples.iter().enumerate().partition(|(i, _)| i % 4 != 3);
    if train.len() < terms.len() {
        return invalid("too few training samples after hold-out");
    }
    let eps: Vec<f64> = train.iter().map(|(_, s)| s.eps).collect();
    let vals: Vec<f64> = train.iter().map(|(_, s)| s.value).collect();
    let ls = least_squares(&eps, &vals, &terms)?;
    let mut fit = ExpansionFit {
        n,
        log_coefficient: None,
        constant_term: 0.0,
        residual_norm: 0.0,
        condition_estimate: ls.condition,
        training_samples: train.len(),
        held_out_samples: held.len(),
        terms,
        coefficients: ls.coefficients,
    };
    fit.log_coefficient = fit.coefficient(Term::Log);
    fit.constant_term = fit.coefficient(Term::Constant).unwrap_or(0.0);
    if !held.is_empty() {
        let ss: f64 = held.iter().map(|(_, s)| (fit.predict(s.eps) - s.value).powi(2)).sum();
        fit.residual_norm = (ss / held.len() as f64).sqrt();
    }
    Ok(fit)
}

/// How an entropy limit was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitMethod {
    PlainLimit,
    Richardson,
}

/// An extrapolated limit of truncated differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub error_bar: f64,
    /// Truncation levels used, strictly decreasing.
    pub eps_sequence: Vec<f64>,
    pub method: LimitMethod,
}

const RICHARDSON_POINTS: usize = 3;
const DIVERGENCE_TOLERANCE: f64 = 0.05;

fn sorted_decreasing(samples: &[Sample]) -> Result<Vec<Sample>> {
    check_samples(samples)?;
    let mut s = samples.to_vec();
    s.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    if s.windows(2).any(|w| w[0].eps == w[1].eps) {
        return invalid("repeated eps in samples");
    }
    Ok(s)
}

/// Fails if the samples carry a divergent part (`1/ε` or `log(1/ε)`) that
/// is not small against the data.
pub fn check_cancellation(samples: &[Sample]) -> Result<()> {
    let terms = [Term::InversePower(1), Term::Log, Term::Constant, Term::Power(1), Term::Power(2)];
    if samples.len() < terms.len() + 2 {
        return Ok(());
    }
    let eps: Vec<f64> = samples.iter().map(|s| s.eps).collect();
    let vals: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let ls = match least_squares(&eps, &vals, &terms) {
        Ok(ls) => ls,
        Err(Error::IllConditionedFit { .. }) => return Ok(()),
        Err(e) => return Err(e),
    };
    let emin = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let singular = (ls.coefficients[0] / emin).abs() + (ls.coefficients[1] * emin.ln()).abs();
    let scale = 1.0 + vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if singular > DIVERGENCE_TOLERANCE * scale {
        return Err(Error::NonCancellingDivergence { singular, eps: emin });
    }
    Ok(())
}

/// Richardson extrapolation of truncated differences to `ε = 0` against the
/// tail model `E + aε + bε²`, using the smallest three levels. The error
/// bar is the size of the last Neville correction plus the propagated
/// quadrature error.
pub fn entropy_limit(diff_samples: &[Sample]) -> Result<EntropyEstimate> {
    let s = sorted_decreasing(diff_samples)?;
    if s.len() < RICHARDSON_POINTS {
        return invalid(format!("need at least {RICHARDSON_POINTS} samples, got {}", s.len()));
    }
    check_cancellation(&s)?;
    let tail = &s[s.len() - RICHARDSON_POINTS..];
    let x: Vec<f64> = tail.iter().map(|p| p.eps).collect();
    let mut p: Vec<f64> = tail.iter().map(|p| p.value).collect();
    let mut last_correction = 0.0;
    for stage in 1..RICHARDSON_POINTS {
        for i in 0..RICHARDSON_POINTS - stage {
            let j = i + stage;
            let next = (x[i] * p[i + 1] - x[j] * p[i]) / (x[i] - x[j]);
            if i == 0 {
                last_correction = (next - p[0]).abs();
            }
            p[i] = next;
        }
    }
    let propagated: f64 = (0..RICHARDSON_POINTS)
        .map(|k| {
            let weight: f64 = (0..RICHARDSON_POINTS)
                .filter(|&m| m != k)
                .map(|m| x[m] / (x[m] - x[k]))
                .product();
            weight.abs() * tail[k].error_bound
        })
        .sum();
    Ok(EntropyEstimate {
        value: p[0],
        error_bar: last_correction + propagated,
        eps_sequence: s.iter().map(|q| q.eps).collect(),
        method: LimitMethod::Richardson,
    })
}

/// The difference at the smallest level, with the last Cauchy difference as
/// error bar.
pub fn plain_limit(diff_samples: &[Sample]) -> Result<EntropyEstimate> {
    let s = sorted_decreasing(diff_samples)?;
    if s.len() < 2 {
        return invalid("need at least two samples");
    }
    check_cancellation(&s)?;
    let (a, b) = (s[s.len() - 2], s[s.len() - 1]);
    Ok(EntropyEstimate {
        value: b.value,
        error_bar: (b.value - a.value).abs() + b.error_bound,
        eps_sequence: s.iter().map(|q| q.eps).collect(),
        method: LimitMethod::PlainLimit,
    })
}

/// Geometric grid `hi, hi·ratio, …` down to (and not below) `lo`.
pub fn geometric_grid(hi: f64, lo: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(hi > lo && lo > 0.0 && ratio > 0.0 && ratio < 1.0) {
        return invalid(format!("bad grid (hi={hi}, lo={lo}, ratio={ratio})"));
    }
    let mut out = vec![hi];
    loop {
        let next = out[out.len() - 1] * ratio;
        if next < lo * (1.0 - 1e-12) {
            break;
        }
        out.push(next);
    }
    Ok(out)
}

/// The default truncation grid: ratio 0.8 from 0.3 down to 1e-3.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(0.3, 1e-3, 0.8).expect("valid constants")
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return invalid("fewer than two positive points for a log-log slope");
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return invalid("degenerate abscissae");
    }
    Ok(sxy / sxx)
}

/// Log-log slope of consecutive Cauchy differences `|Δ(ε_{k+1}) − Δ(ε_k)|`
/// against `ε_k`. Differences below `floor` are dropped as round-off.
pub fn tail_slope(samples: &[Sample], floor: f64) -> Result<f64> {
    let s = sorted_decreasing(samples)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = s
        .windows(2)
        .map(|w| (w[0].eps, (w[1].value - w[0].value).abs()))
        .filter(|(_, d)| *d > floor)
        .unzip();
    loglog_slope(&xs, &ys)
}

/// Write samples as CSV with header `eps,value,error_bound`.
pub fn write_samples<W: Write>(out: W, samples: &[Sample]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["eps", "value", "error_bound"])?;
    for s in samples {
        w.write_record([format!("{:.16e}", s.eps), format!("{:.16e}", s.value), format!("{:.16e}", s.error_bound)])?;
    }
    w.flush()?;
    Ok(())
}

/// Read samples from CSV with a mandatory `eps,value,error_bound` header
/// (the `error_bound` column may be omitted).
pub fn read_samples<R: Read>(input: R) -> Result<Vec<Sample>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("eps") || headers.get(1) != Some("value") {
        return invalid(format!("expected header eps,value[,error_bound], got {:?}", headers));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
