//! Closed-loop assembly, simulation and transient statistics.
//!
//! The state is `xi = (L^{n-1} x, L^{n-2} x', ..., x^{(n-1)})`, stacked block
//! by block, highest Laplacian power first. In these coordinates the closed
//! loop is exactly `xi' = (A kron L) xi + w` with `A` the companion matrix
//! of the pole polynomial, and `w` entering the last block.

use std::io::Write;

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{inf_norm, kron, vec_inf_norm, LaplacianMatrix};
use crate::rk4::Rk4;
use crate::spectra::{companion, optimal_condition, vandermonde_diagonalization, CompanionMatrix, PoleSet};

/// States beyond this magnitude abort a simulation.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Relative slack applied when comparing a simulated sup to a bound.
pub const BOUND_SLACK: f64 = 1e-6;

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SerialConsensusSystem {
    poles: PoleSet,
    laplacian: LaplacianMatrix,
    companion: CompanionMatrix,
    state_matrix: DMatrix<f64>,
    /// Nonzero `(column, value)` pairs of each Laplacian row.
    laplacian_rows: Vec<Vec<(usize, f64)>>,
}

pub fn assemble(ps: &PoleSet, l: &LaplacianMatrix) -> SerialConsensusSystem {
    let companion = companion(ps);
    let state_matrix = kron(companion.matrix(), l.matrix());
    let laplacian_rows = l
        .matrix()
        .row_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect()
        })
        .collect();
    SerialConsensusSystem {
        poles: ps.clone(),
        laplacian: l.clone(),
        companion,
        state_matrix,
        laplacian_rows,
    }
}

impl SerialConsensusSystem {
    pub fn order(&self) -> usize {
        self.poles.order()
    }

    pub fn agents(&self) -> usize {
        self.laplacian.size()
    }

    pub fn dim(&self) -> usize {
        self.order() * self.agents()
    }

    pub fn poles(&self) -> &PoleSet {
        &self.poles
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        &self.laplacian
    }

    pub fn companion(&self) -> &CompanionMatrix {
        &self.companion
    }

    /// `A kron L`.
    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.state_matrix
    }

    /// The same dynamics in `(x, x', ..., x^{(n-1)})` coordinates: identity
    /// superdiagonal blocks and last block row `(-a_0 L^n, ..., -a_{n-1} L)`.
    pub fn x_coordinate_matrix(&self) -> DMatrix<f64> {
        let (n, big_n) = (self.order(), self.agents());
        let mut m = DMatrix::zeros(n * big_n, n * big_n);
        for k in 0..n - 1 {
            m.view_mut((k * big_n, (k + 1) * big_n), (big_n, big_n))
                .fill_with_identity();
        }
        for (k, &a) in self.poles.coefficients().iter().enumerate() {
            let block = self.laplacian.power(n - k) * (-a);
            m.view_mut(((n - 1) * big_n, k * big_n), (big_n, big_n))
                .copy_from(&block);
        }
        m
    }

    /// `e_n kron I_N`: maps a per-agent input into the last state block.
    pub fn input_matrix(&self) -> DMatrix<f64> {
        let (n, big_n) = (self.order(), self.agents());
        let mut b = DMatrix::zeros(n * big_n, big_n);
        b.view_mut(((n - 1) * big_n, 0), (big_n, big_n))
            .fill_with_identity();
        b
    }

    /// Embeds a per-agent input vector into the last block of a full state vector.
    pub fn embed_input(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let big_n = self.agents();
        if w.len() != big_n {
            return Err(Error::DimensionMismatch {
                expected: big_n,
                found: w.len(),
            });
        }
        let mut full = DVector::zeros(self.dim());
        full.rows_mut(self.dim() - big_n, big_n).copy_from(w);
        Ok(full)
    }

    pub fn laplacian_times(&self, v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.laplacian_rows) {
            *o = row.iter().map(|&(j, l)| l * v[j]).sum();
        }
    }

    /// `out = (A kron L) xi`, exploiting the block structure.
    pub fn apply(&self, xi: &[f64], out: &mut [f64]) {
        let (n, big_n) = (self.order(), self.agents());
        let a = self.poles.coefficients();
        let (head, last) = out.split_at_mut((n - 1) * big_n);
        for k in 0..n - 1 {
            self.laplacian_times(
                &xi[(k + 1) * big_n..(k + 2) * big_n],
                &mut head[k * big_n..(k + 1) * big_n],
            );
        }
        for (i, row) in self.laplacian_rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, l) in row {
                let mut comb = 0.0;
                for (k, ak) in a.iter().enumerate() {
                    comb += ak * xi[k * big_n + j];
                }
                acc += l * comb;
            }
            last[i] = -acc;
        }
    }
}

/// Stacked state vector in `xi` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct XiState {
    values: DVector<f64>,
    order: usize,
    agents: usize,
    time: f64,
}

impl XiState {
    pub fn new(values: DVector<f64>, order: usize, agents: usize) -> Result<Self> {
        if values.len() != order * agents {
            return Err(Error::DimensionMismatch {
                expected: order * agents,
                found: values.len(),
            });
        }
        Ok(Self {
            values,
            order,
            agents,
            time: 0.0,
        })
    }

    pub fn for_system(sys: &SerialConsensusSystem, values: DVector<f64>) -> Result<Self> {
        Self::new(values, sys.order(), sys.agents())
    }

    pub fn zeros(sys: &SerialConsensusSystem) -> Self {
        Self::new(DVector::zeros(sys.dim()), sys.order(), sys.agents()).unwrap()
    }

    /// Concatenates `order` blocks of equal length.
    pub fn from_blocks(blocks: &[DVector<f64>]) -> Result<Self> {
        let agents = blocks.first().map_or(0, |b| b.len());
        if let Some(bad) = blocks.iter().find(|b| b.len() != agents) {
            return Err(Error::DimensionMismatch {
                expected: agents,
                found: bad.len(),
            });
        }
        let values = DVector::from_iterator(
            agents * blocks.len(),
            blocks.iter().flat_map(|b| b.iter().copied()),
        );
        Self::new(values, blocks.len(), agents)
    }

    /// Forward conversion from physical coordinates: `derivatives[k]` is
    /// `x^{(k)}` and becomes block `L^{n-1-k} x^{(k)}`.
    pub fn from_derivatives(sys: &SerialConsensusSystem, derivatives: &[DVector<f64>]) -> Result<Self> {
        let n = sys.order();
        if derivatives.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: derivatives.len(),
            });
        }
        let l = sys.laplacian().matrix();
        let mut blocks = Vec::with_capacity(n);
        for (k, d) in derivatives.iter().enumerate() {
            if d.len() != sys.agents() {
                return Err(Error::DimensionMismatch {
                    expected: sys.agents(),
                    found: d.len(),
                });
            }
            let mut b = d.clone();
            for _ in 0..n - 1 - k {
                b = l * b;
            }
            blocks.push(b);
        }
        Self::from_blocks(&blocks)
    }

    /// Entries drawn uniformly from `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(sys: &SerialConsensusSystem, rng: &mut R) -> Self {
        let values = DVector::from_fn(sys.dim(), |_, _| rng.gen_range(-1.0..=1.0));
        Self::new(values, sys.order(), sys.agents()).unwrap()
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn block(&self, k: usize) -> DVectorView<'_, f64> {
        self.values.rows(k * self.agents, self.agents)
    }

    pub fn norm(&self) -> f64 {
        inf_norm(&self.values)
    }
}

/// Additive input `w(t)` on the full state, `xi' = (A kron L) xi + w(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Disturbance {
    None,
    /// Constant full-length vector.
    Constant(DVector<f64>),
    /// Piecewise-constant: each entry holds from its start time until the next; zero before the first.
    Schedule(Vec<(f64, DVector<f64>)>),
    /// `(e_n kron L) w0`: a per-agent load `L w0` entering the last block.
    LaplacianImage { w0: DVector<f64> },
}

impl Disturbance {
    /// A constant per-agent load entering the last block.
    pub fn load(sys: &SerialConsensusSystem, w: &DVector<f64>) -> Result<Self> {
        Ok(Disturbance::Constant(sys.embed_input(w)?))
    }

    fn resolve(&self, sys: &SerialConsensusSystem) -> Result<Vec<(f64, Vec<f64>)>> {
        let check = |v: &DVector<f64>| {
            if v.len() != sys.dim() {
                Err(Error::DimensionMismatch {
                    expected: sys.dim(),
                    found: v.len(),
                })
            } else {
                Ok(v.iter().copied().collect::<Vec<_>>())
            }
        };
        let segments = match self {
            Disturbance::None => Vec::new(),
            Disturbance::Constant(v) => vec![(f64::NEG_INFINITY, check(v)?)],
            Disturbance::Schedule(entries) => {
                let mut out = Vec::with_capacity(entries.len());
                for (i, (start, v)) in entries.iter().enumerate() {
                    if i > 0 && !(*start > entries[i - 1].0) {
                        return Err(Error::InvalidStep(
                            "disturbance schedule start times must increase".into(),
                        ));
                    }
                    out.push((*start, check(v)?));
                }
                out
            }
            Disturbance::LaplacianImage { w0 } => {
                if w0.len() != sys.agents() {
                    return Err(Error::DimensionMismatch {
                        expected: sys.agents(),
                        found: w0.len(),
                    });
                }
                let w = sys.laplacian().matrix() * w0;
                vec![(f64::NEG_INFINITY, check(&sys.embed_input(&w)?)?)]
            }
        };
        Ok(segments)
    }
}

/// Measurements for a formation: `e_pos` is the second-to-last block and
/// `e_vel` the last block minus `v_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormationContext {
    pub v_ref: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub step: f64,
    /// Keep every `record_stride`-th grid point; sup statistics use every step.
    pub record_stride: usize,
    pub formation: Option<FormationContext>,
}

impl SimulationConfig {
    pub fn new(horizon: f64, step: f64) -> Self {
        Self {
            horizon,
            step,
            record_stride: 1,
            formation: None,
        }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn formation(mut self, v_ref: f64) -> Self {
        self.formation = Some(FormationContext { v_ref });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationSeries {
    pub v_ref: f64,
    pub initial_error_norm: f64,
    pub sup_error_norm: f64,
    pub sup_error_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    order: usize,
    agents: usize,
    step: f64,
    record_stride: usize,
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    initial_norm: f64,
    sup_norm: f64,
    sup_time: f64,
    forced: bool,
    formation: Option<FormationSeries>,
}

impl Trajectory {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn record_stride(&self) -> usize {
        self.record_stride
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial time")
    }

    /// Block `b` of recorded sample `k`.
    pub fn block(&self, k: usize, b: usize) -> DVectorView<'_, f64> {
        self.states[k].rows(b * self.agents, self.agents)
    }

    pub fn initial_norm(&self) -> f64 {
        self.initial_norm
    }

    /// `sup_k ||xi(t_k)||_inf` over every integration step.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn sup_time(&self) -> f64 {
        self.sup_time
    }

    pub fn is_forced(&self) -> bool {
        self.forced
    }

    pub fn formation(&self) -> Option<&FormationSeries> {
        self.formation.as_ref()
    }

    /// `L (x - d)` at sample `k`; needs a formation context and order >= 2.
    pub fn epos(&self, k: usize) -> Option<DVector<f64>> {
        self.formation.as_ref()?;
        (self.order >= 2).then(|| self.block(k, self.order - 2).into_owned())
    }

    /// `x' - v_ref 1` at sample `k`.
    pub fn evel(&self, k: usize) -> Option<DVector<f64>> {
        let f = self.formation.as_ref()?;
        Some(self.block(k, self.order - 1).map(|v| v - f.v_ref))
    }

    /// CSV with header `t,xi_0,...` plus `epos_i`/`evel_i` columns in a
    /// formation context. Values carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self.order * self.agents;
        let mut header = vec!["t".to_string()];
        header.extend((0..dim).map(|i| format!("xi_{i}")));
        let with_pos = self.formation.is_some() && self.order >= 2;
        if with_pos {
            header.extend((0..self.agents).map(|i| format!("epos_{i}")));
        }
        if self.formation.is_some() {
            header.extend((0..self.agents).map(|i| format!("evel_{i}")));
        }
        writeln!(out, "{}", header.join(","))?;

        let mut line = String::new();
        for (k, (t, state)) in self.times.iter().zip(&self.states).enumerate() {
            line.clear();
            push_value(&mut line, *t);
            for v in state.iter() {
                line.push(',');
                push_value(&mut line, *v);
            }
            if with_pos {
                for v in self.epos(k).unwrap().iter() {
                    line.push(',');
                    push_value(&mut line, *v);
                }
            }
            if let Some(evel) = self.evel(k) {
                for v in evel.iter() {
                    line.push(',');
                    push_value(&mut line, *v);
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

pub(crate) fn push_value(line: &mut String, v: f64) {
    use std::fmt::Write as _;
    write!(line, "{v:.16e}").unwrap();
}

fn formation_error_norm(state: &[f64], order: usize, agents: usize, v_ref: f64) -> f64 {
    let vel = &state[(order - 1) * agents..];
    let ev = vel.iter().fold(0.0f64, |acc, v| acc.max((v - v_ref).abs()));
    if order >= 2 {
        ev.max(vec_inf_norm(&state[(order - 2) * agents..(order - 1) * agents]))
    } else {
        ev
    }
}

pub fn simulate(
    sys: &SerialConsensusSystem,
    xi0: &XiState,
    disturbance: &Disturbance,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    simulate_with(sys, xi0, disturbance, &SimulationConfig::new(horizon, step))
}

/// Fixed-step RK4 integration of `xi' = (A kron L) xi + w(t)` on the grid
/// `t_k = k h`, `k = 0..=round(T / h)`.
pub fn simulate_with(
    sys: &SerialConsensusSystem,
    xi0: &XiState,
    disturbance: &Disturbance,
    config: &SimulationConfig,
) -> Result<Trajectory> {
    let SimulationConfig {
        horizon,
        step: h,
        record_stride,
        formation,
    } = *config;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(format!("step must be positive, got {h}")));
    }
    if !(horizon >= h && horizon.is_finite()) {
        return Err(Error::InvalidStep(format!(
            "horizon {horizon} must be at least one step ({h})"
        )));
    }
    if xi0.values().len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: xi0.values().len(),
        });
    }
    let segments = disturbance.resolve(sys)?;
    let forced = segments.iter().any(|(_, v)| v.iter().any(|&x| x != 0.0));
    let record_stride = record_stride.max(1);
    let (order, agents) = (sys.order(), sys.agents());

    let steps = (horizon / h).round() as usize;
    let mut y: Vec<f64> = xi0.values().iter().copied().collect();
    let mut rk = Rk4::new(y.len());

    let initial_norm = vec_inf_norm(&y);
    let mut sup_norm = initial_norm;
    let mut sup_time = 0.0;
    let mut series = formation.map(|f| {
        let e0 = formation_error_norm(&y, order, agents, f.v_ref);
        FormationSeries {
            v_ref: f.v_ref,
            initial_error_norm: e0,
            sup_error_norm: e0,
            sup_error_time: 0.0,
        }
    });
    let capacity = steps / record_stride + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    times.push(0.0);
    states.push(DVector::from_column_slice(&y));

    for k in 0..steps {
        let t = k as f64 * h;
        // Held constant over each step; schedule switches are exact on grid points.
        let w = segments
            .iter()
            .rev()
            .find(|(start, _)| *start <= t + 1e-9 * h)
            .map(|(_, w)| w.as_slice());
        let mut field = |_: f64, x: &[f64], dx: &mut [f64]| {
            sys.apply(x, dx);
            if let Some(w) = w {
                for (d, w) in dx.iter_mut().zip(w) {
                    *d += w;
                }
            }
        };
        rk.step(&mut field, t, h, &mut y);
        let t_next = (k + 1) as f64 * h;
        let norm = vec_inf_norm(&y);
        if !(norm <= DIVERGENCE_THRESHOLD) {
            return Err(Error::NonFiniteState { time: t_next });
        }
        if norm > sup_norm {
            sup_norm = norm;
            sup_time = t_next;
        }
        if let Some(s) = series.as_mut() {
            let e = formation_error_norm(&y, order, agents, s.v_ref);
            if e > s.sup_error_norm {
                s.sup_error_norm = e;
                s.sup_error_time = t_next;
            }
        }
        if (k + 1) % record_stride == 0 || k + 1 == steps {
            times.push(t_next);
            states.push(DVector::from_column_slice(&y));
        }
    }

    Ok(Trajectory {
        order,
        agents,
        step: h,
        record_stride,
        times,
        states,
        initial_norm,
        sup_norm,
        sup_time,
        forced,
        formation: series,
    })
}

/// Reference `e^{M t}` used to validate the integrator.
pub fn expm_oracle(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) || !t.is_finite() {
        return Err(Error::ExpmOverflow);
    }
    let e = (m * t).exp();
    if e.iter().all(|v| v.is_finite()) {
        Ok(e)
    } else {
        Err(Error::ExpmOverflow)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    Vandermonde,
    Optimal,
}

/// Transient amplification bound `||S||_inf ||S^-1||_inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceBound {
    /// The bound selected by `source`.
    pub value: f64,
    /// Using the unscaled Vandermonde diagonalizer.
    pub raw: f64,
    /// Minimum over all diagonalizers.
    pub optimal: f64,
    pub source: BoundSource,
    /// Column scaling taking the Vandermonde diagonalizer to an optimal one.
    pub scaling: Vec<f64>,
}

pub fn theorem1_bound(ps: &PoleSet, use_optimal: bool) -> Result<PerformanceBound> {
    let d = vandermonde_diagonalization(ps);
    let raw = d.condition();
    let opt = optimal_condition(&d)?;
    let (value, source) = if use_optimal {
        (opt.optimal_bound, BoundSource::Optimal)
    } else {
        (raw, BoundSource::Vandermonde)
    };
    Ok(PerformanceBound {
        value,
        raw,
        optimal: opt.optimal_bound,
        source,
        scaling: opt.scaling,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientReport {
    pub max_ratio: f64,
    pub bound: f64,
    pub holds: bool,
    /// Zero initial state: the ratio is undefined and the bound holds trivially.
    pub degenerate: bool,
}

/// Compares `sup_t ||xi(t)|| / ||xi(0)||` against the bound.
pub fn verify_transient(traj: &Trajectory, bound: &PerformanceBound, xi0: &XiState) -> Result<TransientReport> {
    if traj.is_forced() {
        return Err(Error::ForcedTrajectory);
    }
    if xi0.values().len() != traj.order * traj.agents {
        return Err(Error::DimensionMismatch {
            expected: traj.order * traj.agents,
            found: xi0.values().len(),
        });
    }
    let x0 = xi0.norm();
    if x0 == 0.0 {
        return Ok(TransientReport {
            max_ratio: 0.0,
            bound: bound.value,
            holds: traj.sup_norm() == 0.0,
            degenerate: true,
        });
    }
    let max_ratio = traj.sup_norm() / x0;
    Ok(TransientReport {
        max_ratio,
        bound: bound.value,
        holds: max_ratio <= bound.value * (1.0 + BOUND_SLACK),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceRatio {
    pub ratio: f64,
    pub sup_error: f64,
    pub initial_error: f64,
    /// Initial formation error is zero; `ratio` is reported as 0.
    pub degenerate: bool,
}

/// `sup_t ||(e_pos, e_vel)||_inf / ||(e_pos(0), e_vel(0))||_inf`.
pub fn scalable_performance_ratio(traj: &Trajectory) -> Result<PerformanceRatio> {
    let f = traj.formation().ok_or(Error::MissingFormationContext)?;
    if f.initial_error_norm == 0.0 {
        return Ok(PerformanceRatio {
            ratio: 0.0,
            sup_error: f.sup_error_norm,
            initial_error: 0.0,
            degenerate: true,
        });
    }
    Ok(PerformanceRatio {
        ratio: f.sup_error_norm / f.initial_error_norm,
        sup_error: f.sup_error_norm,
        initial_error: f.initial_error_norm,
        degenerate: false,
    })
}
