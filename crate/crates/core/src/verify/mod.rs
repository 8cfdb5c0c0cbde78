//! Randomized verification harnesses for the invariance and equivariance
//! contracts, plus corpus-level comparisons.
//!
//! Every trial draws its input from its own seed, derived from the harness
//! seed and the trial index, so a failing trial can be replayed alone with
//! [`draw_trial`] or [`draw_point_cloud`].

mod counterexample;
mod superiority;

pub use counterexample::{signnet_counterexample, CounterexampleReport, SignInvariantNet, U1, U2};
pub use superiority::{superiority_report, SpaceOutcome, SuperiorityReport};

use crate::eig::{map_full, oap_eig, sign_canon_first_nonzero, CanonKind, CanonOutcome, Method};
use crate::error::{CanonError, Result};
use crate::lap::{oap_lap, KeyConfig, KeyVariant};
use crate::linalg::{
    max_abs_diff, random_orthogonal_with, random_orthonormal_with, random_permutation_with,
    seeded_rng, Matrix, Tolerances,
};
use crate::perm::Permutation;
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;

/// Number of failing trials kept per report.
pub const MAX_EXEMPLARS: usize = 5;

/// Seed of trial `trial` in a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Random input for one eigenvector trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialInput {
    pub u: Matrix,
    pub p: Permutation,
    pub q: Matrix,
}

/// `n ∈ [2, 12]`, `d ∈ [1, min(4, n−1)]`, `U` uniform on the Stiefel manifold,
/// `P` uniform, `Q` Haar on `O(d)`.
pub fn draw_trial(trial_seed: u64) -> TrialInput {
    let mut rng = seeded_rng(trial_seed);
    let n = rng.random_range(2..=12);
    let d = rng.random_range(1..=4.min(n - 1));
    TrialInput {
        u: random_orthonormal_with(n, d, &mut rng),
        p: random_permutation_with(n, &mut rng),
        q: random_orthogonal_with(d, &mut rng),
    }
}

/// `k ∈ [1, 4]`, `n ∈ [max(2, k+1), 12]`, Gaussian `X` (n×k) and Haar `Q` on `O(k)`.
pub fn draw_point_cloud(trial_seed: u64) -> (Matrix, Matrix) {
    let mut rng = seeded_rng(trial_seed);
    let k = rng.random_range(1..=4);
    let n = rng.random_range(2.max(k + 1)..=12);
    let x = Matrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    (x, random_orthogonal_with(k, &mut rng))
}

/// A failing trial, with enough information to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub trial: usize,
    pub trial_seed: u64,
    pub shape: (usize, usize),
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub name: String,
    pub total: usize,
    /// Success count per named check, in a fixed order.
    pub checks: Vec<(String, usize)>,
    /// Trials whose canonicalization returned Failed or Fallback; they are
    /// excluded from the checks.
    pub failed_canon: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub exemplars: Vec<Exemplar>,
}

impl TrialReport {
    fn new(name: &str, checks: &[&str], tolerance: f64, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            total: 0,
            checks: checks.iter().map(|c| (c.to_string(), 0)).collect(),
            failed_canon: 0,
            tolerance,
            seed,
            exemplars: Vec::new(),
        }
    }

    pub fn count(&self, check: &str) -> Option<usize> {
        self.checks
            .iter()
            .find(|(c, _)| c == check)
            .map(|&(_, n)| n)
    }

    /// Trials on which the checks were run.
    pub fn evaluated(&self) -> usize {
        self.total - self.failed_canon
    }

    /// True iff every check succeeded on every evaluated trial.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|&(_, n)| n == self.evaluated())
    }

    fn record(&mut self, exemplar: Exemplar) {
        if self.exemplars.len() < MAX_EXEMPLARS {
            self.exemplars.push(exemplar);
        }
    }

    fn bump(&mut self, check: &str) {
        if let Some(entry) = self.checks.iter_mut().find(|(c, _)| c == check) {
            entry.1 += 1;
        }
    }

    /// Line-delimited `key=value` form.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let p = &self.name;
        out.push_str(&format!("{p}.total={}\n", self.total));
        for (c, n) in &self.checks {
            out.push_str(&format!("{p}.{c}={n}\n"));
        }
        out.push_str(&format!("{p}.failed_canon={}\n", self.failed_canon));
        out.push_str(&format!("{p}.tolerance={:e}\n", self.tolerance));
        out.push_str(&format!("{p}.seed={}\n", self.seed));
        out.push_str(&format!("{p}.passed={}\n", self.passed()));
        for (i, e) in self.exemplars.iter().enumerate() {
            out.push_str(&format!(
                "{p}.exemplar.{i}=trial:{} trial_seed:{} shape:{}x{} check:{} {}\n",
                e.trial, e.trial_seed, e.shape.0, e.shape.1, e.check, e.detail
            ));
        }
        out
    }
}

impl fmt::Display for TrialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<String> = self
            .checks
            .iter()
            .map(|(c, n)| format!("{c}={n}"))
            .collect();
        write!(
            f,
            "{}: total={} {} failed_canon={} eps={:e} seed={} -> {}",
            self.name,
            self.total,
            counts.join(" "),
            self.failed_canon,
            self.tolerance,
            self.seed,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// A canonicalization under test.
pub type CanonFn<'a> = dyn Fn(&Matrix) -> Result<CanonOutcome> + 'a;

/// No canonicalization: returns the input basis.
pub fn identity_canon(u: &Matrix) -> Result<CanonOutcome> {
    Ok(CanonOutcome::single(u.clone(), Method::Identity, None))
}

/// The canonicalization named by `method`, as a harness input.
///
/// `sign-first` and `map-full` are sign methods; on eigenspaces of dimension
/// above one they defer to `oap-eig` and to the OAP pipeline with `variant`
/// keys respectively. `oap-lap`, `map` and `fa-lap` run the OAP pipeline with
/// their own keys for every dimension.
pub fn method_canon<'a>(
    method: Method,
    variant: KeyVariant,
    c: f64,
    tol: &'a Tolerances,
) -> Result<Box<CanonFn<'a>>> {
    let plain = move |v: KeyVariant| -> Box<CanonFn<'a>> {
        Box::new(move |u: &Matrix| oap_lap(u, &KeyConfig::Plain(v), c, tol))
    };
    Ok(match method {
        Method::SignFirst => Box::new(move |u: &Matrix| {
            if u.ncols() == 1 {
                sign_canon_first_nonzero(&u.column(0).into_owned(), tol.eps_zero)
            } else {
                oap_eig(u, tol)
            }
        }),
        Method::OapEig => Box::new(move |u: &Matrix| oap_eig(u, tol)),
        Method::OapLap => plain(KeyVariant::Oap),
        Method::Map => plain(KeyVariant::MapNorm),
        Method::FaLap => plain(KeyVariant::FaDiag),
        Method::MapFull => Box::new(move |u: &Matrix| {
            if u.ncols() == 1 {
                map_full(
                    &u.column(0).into_owned(),
                    &KeyConfig::Plain(variant),
                    c,
                    tol,
                )
            } else {
                oap_lap(u, &KeyConfig::Plain(variant), c, tol)
            }
        }),
        Method::Identity => Box::new(|u: &Matrix| identity_canon(u)),
        Method::Augmented => {
            return Err(CanonError::InvalidArgument(
                "augmented keys need features or sibling eigenspaces".into(),
            ))
        }
    })
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(CanonError::InvalidArgument(
            "trials must be at least 1".into(),
        ));
    }
    Ok(())
}

enum Eval {
    Form(Matrix),
    NotSingle(CanonKind),
    Error(String),
}

fn eval(canon: &CanonFn<'_>, u: &Matrix) -> Eval {
    match canon(u) {
        Ok(out) => match out.single_form() {
            Some(f) => Eval::Form(f.clone()),
            None => Eval::NotSingle(out.kind),
        },
        Err(e) => Eval::Error(e.to_string()),
    }
}

/// Checks `canon(U) = canon(U·Q)` on random orthonormal `U` and orthogonal `Q`.
pub fn verify_basis_invariance(
    canon: &CanonFn<'_>,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<TrialReport> {
    check_trials(trials)?;
    let mut report = TrialReport::new("basis_invariance", &["correct"], eps, seed);
    for trial in 0..trials {
        let ts = trial_seed(seed, trial);
        let input = draw_trial(ts);
        report.total += 1;
        let exemplar = |check: &str, detail: String| Exemplar {
            trial,
            trial_seed: ts,
            shape: input.u.shape(),
            check: check.into(),
            detail,
        };
        let base = eval(canon, &input.u);
        let rotated = eval(canon, &(&input.u * &input.q));
        match (base, rotated) {
            (Eval::Form(a), Eval::Form(b)) => {
                let err = max_abs_diff(&a, &b);
                if err < eps {
                    report.bump("correct");
                } else {
                    report.record(exemplar("correct", format!("error:{err:e}")));
                }
            }
            (Eval::Error(e), _) | (_, Eval::Error(e)) => {
                report.record(exemplar("correct", format!("error:{e}")))
            }
            (Eval::NotSingle(k), _) | (_, Eval::NotSingle(k)) => {
                report.failed_canon += 1;
                report.record(exemplar("canon", format!("outcome:{k}")));
            }
        }
    }
    Ok(report)
}

/// Checks, on random `U`, `P` and `Q`:
/// `p`: `P·canon(U) = canon(P·U)`; `q`: `canon(U) = canon(U·Q)`;
/// `pq`: `P·canon(U) = canon(P·U·Q)`.
pub fn verify_perm_equivariance(
    canon: &CanonFn<'_>,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<TrialReport> {
    check_trials(trials)?;
    let mut report = TrialReport::new("perm_equivariance", &["p", "q", "pq"], eps, seed);
    for trial in 0..trials {
        let ts = trial_seed(seed, trial);
        let TrialInput { u, p, q } = draw_trial(ts);
        report.total += 1;
        let exemplar = |check: &str, detail: String| Exemplar {
            trial,
            trial_seed: ts,
            shape: u.shape(),
            check: check.into(),
            detail,
        };
        let pu = p.apply_rows(&u);
        let inputs = [u.clone(), pu.clone(), &u * &q, &pu * &q];
        let evals: Vec<Eval> = inputs.iter().map(|x| eval(canon, x)).collect();
        if let Some(msg) = evals.iter().find_map(|e| match e {
            Eval::Error(m) => Some(m.clone()),
            _ => None,
        }) {
            report.record(exemplar("canon", format!("error:{msg}")));
            continue;
        }
        let forms: Vec<&Matrix> = evals
            .iter()
            .filter_map(|e| match e {
                Eval::Form(f) => Some(f),
                _ => None,
            })
            .collect();
        if forms.len() < 4 {
            report.failed_canon += 1;
            continue;
        }
        let moved = p.apply_rows(forms[0]);
        let checks = [
            ("p", max_abs_diff(&moved, forms[1])),
            ("q", max_abs_diff(forms[0], forms[2])),
            ("pq", max_abs_diff(&moved, forms[3])),
        ];
        for (name, err) in checks {
            if err < eps {
                report.bump(name);
            } else {
                report.record(exemplar(name, format!("error:{err:e}")));
            }
        }
    }
    Ok(report)
}

/// A model on point clouds under test.
pub type ModelFn<'a> = dyn Fn(&Matrix) -> Result<Matrix> + 'a;

/// Checks `model(X)·Q = model(X·Q)` on random point clouds.
pub fn verify_orthogonal_equivariance(
    model: &ModelFn<'_>,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<TrialReport> {
    check_trials(trials)?;
    let mut report = TrialReport::new("orthogonal_equivariance", &["correct"], eps, seed);
    for trial in 0..trials {
        let ts = trial_seed(seed, trial);
        let (x, q) = draw_point_cloud(ts);
        report.total += 1;
        let exemplar = |detail: String| Exemplar {
            trial,
            trial_seed: ts,
            shape: x.shape(),
            check: "correct".into(),
            detail,
        };
        match (model(&x), model(&(&x * &q))) {
            (Ok(a), Ok(b)) => {
                let expected = a * &q;
                let err = if expected.shape() == b.shape() {
                    max_abs_diff(&expected, &b)
                } else {
                    f64::INFINITY
                };
                if err < eps {
                    report.bump("correct");
                } else {
                    report.record(exemplar(format!("error:{err:e}")));
                }
            }
            (Err(e), _) | (_, Err(e)) => report.record(exemplar(format!("error:{e}"))),
        }
    }
    Ok(report)
}
