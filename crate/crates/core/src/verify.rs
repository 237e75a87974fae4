//! Seeded randomized property suites.
//!
//! Each suite samples systems from a `ChaCha8Rng` seeded with the given seed
//! and reports the worst margin found; a negative margin is a violation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{assemble, expm_oracle, simulate, theorem1_bound, Disturbance, XiState, BOUND_SLACK};
use crate::error::{Error, Result};
use crate::formation::theorem2_constants;
use crate::graphs::{
    inf_norm, kron, path_ahead_laplacian, random_digraph, random_spanning_digraph, LaplacianMatrix,
};
use crate::scenario::SCHEMA_VERSION;
use crate::spectra::{optimal_condition, vandermonde_diagonalization, PoleSet};

/// Tolerance on `||e^{-(P kron L) t}||_inf <= 1`.
pub const CONTRACTION_TOLERANCE: f64 = 1e-9;
/// Absolute slack when comparing sampled scalings to the optimum.
pub const SCALING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Theorem1,
    Theorem2,
    Lemma2,
    Contraction,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Theorem1, Suite::Theorem2, Suite::Lemma2, Suite::Contraction];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Lemma2 => "lemma2",
            Suite::Contraction => "contraction",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown suite `{s}`")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub suite: Suite,
    pub seed: u64,
    pub cases: usize,
    pub violations: usize,
    /// Smallest margin over all cases; negative means violated.
    pub worst_margin: f64,
    pub worst_case: String,
    pub passed: bool,
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} (seed {}): {} cases, {} violations, worst margin {:.3e} [{}]",
            self.suite, self.seed, self.cases, self.violations, self.worst_margin, self.worst_case
        )?;
        writeln!(f, "{}", if self.passed { "PASS" } else { "FAIL" })
    }
}

struct Tally {
    cases: usize,
    violations: usize,
    worst: f64,
    worst_case: String,
}

impl Tally {
    fn new() -> Self {
        Self {
            cases: 0,
            violations: 0,
            worst: f64::INFINITY,
            worst_case: String::new(),
        }
    }

    fn record(&mut self, margin: f64, label: impl FnOnce() -> String) {
        self.cases += 1;
        if !(margin >= 0.0) {
            self.violations += 1;
        }
        if !(margin >= self.worst) {
            self.worst = margin;
            self.worst_case = label();
        }
    }

    fn finish(self, suite: Suite, seed: u64) -> SuiteReport {
        SuiteReport {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            suite,
            seed,
            cases: self.cases,
            violations: self.violations,
            worst_margin: self.worst,
            worst_case: self.worst_case,
            passed: self.violations == 0,
        }
    }
}

/// `n` log-uniform poles in `[lo, hi]` whose sorted neighbours differ by at
/// least 5% relative.
pub fn random_pole_set<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> PoleSet {
    loop {
        let mut p: Vec<f64> = (0..n).map(|_| (rng.gen_range(lo.ln()..hi.ln())).exp()).collect();
        p.sort_by(f64::total_cmp);
        if p.windows(2).all(|w| w[1] > 1.05 * w[0]) {
            return PoleSet::new(&p).expect("sampled poles are distinct and positive");
        }
    }
}

/// `ln(lo) .. ln(hi)` in `count` equal steps, exponentiated.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tally = match suite {
        Suite::Lemma2 => lemma2(&mut rng)?,
        Suite::Contraction => contraction(&mut rng)?,
        Suite::Theorem1 => theorem1(&mut rng)?,
        Suite::Theorem2 => theorem2(&mut rng)?,
    };
    Ok(tally.finish(suite, seed))
}

/// No random positive column scaling beats the row-sum scaling.
fn lemma2(rng: &mut ChaCha8Rng) -> Result<Tally> {
    let mut tally = Tally::new();
    for case in 0..50 {
        let n = 2 + case % 4;
        let ps = random_pole_set(rng, n, 0.05, 20.0);
        let d = vandermonde_diagonalization(&ps);
        let opt = optimal_condition(&d)?;
        let mut best = f64::INFINITY;
        for _ in 0..1000 {
            let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-6.0f64..6.0).exp()).collect();
            best = best.min(d.rescaled(&k)?.condition());
        }
        tally.record(best - opt.optimal_bound + SCALING_TOLERANCE, || {
            format!("poles {:?}", ps.poles())
        });
    }
    Ok(tally)
}

pub fn random_laplacian<R: Rng + ?Sized>(rng: &mut R, max_agents: usize) -> Result<LaplacianMatrix> {
    let n = rng.gen_range(2..=max_agents);
    Ok(random_digraph(n, 0.4, rng)?.laplacian())
}

/// `e^{-(P kron L) t}` never expands the infinity norm.
fn contraction(rng: &mut ChaCha8Rng) -> Result<Tally> {
    let mut tally = Tally::new();
    let times = log_spaced(1e-3, 100.0, 20);
    for _ in 0..20 {
        let l = random_laplacian(rng, 10)?;
        let m = rng.gen_range(1..=3);
        let p = DMatrix::from_diagonal(&DVector::from_fn(m, |_, _| rng.gen_range(0.1..5.0)));
        let generator = -kron(&p, l.matrix());
        for &t in &times {
            let norm = inf_norm(&expm_oracle(&generator, t)?);
            tally.record(1.0 + CONTRACTION_TOLERANCE - norm, || {
                format!("N = {}, t = {t:.3e}, norm = {norm:.12}", l.size())
            });
        }
    }
    Ok(tally)
}

/// Simulated transients stay within the optimal initial-condition bound.
fn theorem1(rng: &mut ChaCha8Rng) -> Result<Tally> {
    let mut tally = Tally::new();
    for n_agents in [2, 10, 40, 100] {
        for random_graph in [false, true] {
            let l = if random_graph {
                random_spanning_digraph(n_agents, 0.1, rng)?.laplacian()
            } else {
                path_ahead_laplacian(n_agents)?
            };
            for order in 1..=4 {
                let ps = random_pole_set(rng, order, 0.5, 5.0);
                let bound = theorem1_bound(&ps, true)?;
                let sys = assemble(&ps, &l);
                for _ in 0..5 {
                    let xi0 = XiState::random(&sys, rng);
                    let traj = simulate(&sys, &xi0, &Disturbance::None, 20.0 / ps.min_pole(), 1e-3)?;
                    let ratio = traj.sup_norm() / xi0.norm();
                    tally.record((bound.value * (1.0 + BOUND_SLACK) - ratio) / bound.value, || {
                        format!(
                            "N = {n_agents}, order {order}, random graph {random_graph}, ratio {ratio:.6} vs {:.6}",
                            bound.value
                        )
                    });
                }
            }
        }
    }
    Ok(tally)
}

/// Forced transients stay within `alpha_xi |xi(0)| + alpha_w |w0|`.
fn theorem2(rng: &mut ChaCha8Rng) -> Result<Tally> {
    let mut tally = Tally::new();
    for n_agents in [5, 20] {
        let l = path_ahead_laplacian(n_agents)?;
        for _ in 0..10 {
            let ps = random_pole_set(rng, 3, 0.3, 3.0);
            let c = theorem2_constants(&ps, true)?;
            let sys = assemble(&ps, &l);
            let xi0 = XiState::random(&sys, rng);
            let w0 = DVector::from_fn(n_agents, |_, _| rng.gen_range(-1.0..1.0));
            let dist = Disturbance::LaplacianImage { w0: w0.clone() };
            let traj = simulate(&sys, &xi0, &dist, 20.0 / ps.min_pole(), 1e-3)?;
            let rhs = c.alpha_xi * xi0.norm() + c.alpha_w * inf_norm(&w0);
            let lhs = traj.sup_norm();
            tally.record((rhs * (1.0 + BOUND_SLACK) - lhs) / rhs, || {
                format!("N = {n_agents}, poles {:?}, sup {lhs:.6} vs {rhs:.6}", ps.poles())
            });
        }
    }
    Ok(tally)
}
