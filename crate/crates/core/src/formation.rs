//! Vehicle formations of double integrators under relative feedback.
//!
//! With three poles the controller is
//!
//! ```text
//! u  = -a_v L x' - a_p L^2 (x - d) - a_I L z
//! z' = L^2 (x - d)
//! ```
//!
//! with `(a_v, a_p, a_I)` the coefficients of `prod (s + p_k)`. In the states
//! `(z, L(x - d), x')` the closed loop is `A kron L` with the load entering
//! the velocity block, so the initial-condition bound of [`crate::dynamics`]
//! applies unchanged. Loads `w = L w0` are rejected; the two-pole (PD)
//! variant settles with a stationary spacing error instead.
//!
//! Agent 0 is the virtual leader: it has no neighbours, feels no load and
//! starts at `v_ref`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    assemble, push_value, simulate_with, theorem1_bound, BoundSource, Disturbance,
    SerialConsensusSystem, SimulationConfig, Trajectory, XiState, BOUND_SLACK, DIVERGENCE_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::graphs::{inf_norm, LaplacianMatrix};
use crate::rk4::Rk4;
use crate::spectra::{
    optimal_condition, optimal_vector_condition, vandermonde_diagonalization, PoleSet,
};

pub const DEFAULT_GRAVITY: f64 = 9.8;
pub const DEFAULT_SPACING: f64 = 20.0;
pub const DEFAULT_REJECTION_TOLERANCE: f64 = 1e-3;
/// Least-squares residual above which a load is not in the image of `L`.
pub const IMAGE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiGains {
    pub a_v: f64,
    pub a_p: f64,
    pub a_i: f64,
}

impl PiGains {
    pub fn from_poles(ps: &PoleSet) -> Result<Self> {
        if ps.order() != 3 {
            return Err(Error::WrongOrder {
                expected: 3,
                found: ps.order(),
            });
        }
        let a = ps.coefficients();
        Ok(Self {
            a_v: a[2],
            a_p: a[1],
            a_i: a[0],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    /// Two poles: relative position and velocity feedback.
    Pd,
    /// Three poles: adds the integral state `z`.
    Pi,
}

impl Controller {
    pub fn for_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Controller::Pd),
            3 => Ok(Controller::Pi),
            found => Err(Error::WrongOrder { expected: 3, found }),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Controller::Pd => 2,
            Controller::Pi => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSpec {
    None,
    /// Constant incline: every follower feels `-g theta / sqrt(1 + theta^2)`.
    Hill { theta: f64, g: f64 },
    /// `w = L w0`.
    LaplacianImage { w0: DVector<f64> },
    /// Arbitrary constant per-agent load.
    Load { w: DVector<f64> },
}

/// Gravity component along a road with inclination ratio `theta`.
pub fn hill_force(theta: f64, g: f64) -> f64 {
    g * theta / (1.0 + theta * theta).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadDisturbance {
    /// Per-agent load entering the acceleration.
    pub w: DVector<f64>,
    /// A solution of `L w0 = w` with the smallest infinity norm along `1`,
    /// when one exists.
    pub w0: Option<DVector<f64>>,
}

pub fn disturbance_vector(spec: &DisturbanceSpec, l: &LaplacianMatrix) -> Result<LoadDisturbance> {
    let n = l.size();
    let check = |v: &DVector<f64>| {
        if v.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            })
        }
    };
    match spec {
        DisturbanceSpec::None => Ok(LoadDisturbance {
            w: DVector::zeros(n),
            w0: Some(DVector::zeros(n)),
        }),
        DisturbanceSpec::Hill { theta, g } => {
            let f = hill_force(*theta, *g);
            let w = DVector::from_fn(n, |i, _| if i == 0 { 0.0 } else { -f });
            let w0 = image_representation(l, &w).ok();
            Ok(LoadDisturbance { w, w0 })
        }
        DisturbanceSpec::LaplacianImage { w0 } => {
            check(w0)?;
            Ok(LoadDisturbance {
                w: l.matrix() * w0,
                w0: Some(w0.clone()),
            })
        }
        DisturbanceSpec::Load { w } => {
            check(w)?;
            Ok(LoadDisturbance {
                w: w.clone(),
                w0: image_representation(l, w).ok(),
            })
        }
    }
}

/// Solves `L w0 = w` in the least-squares sense and shifts the solution
/// along `1` to minimize `||w0||_inf`.
pub fn image_representation(l: &LaplacianMatrix, w: &DVector<f64>) -> Result<DVector<f64>> {
    if w.len() != l.size() {
        return Err(Error::DimensionMismatch {
            expected: l.size(),
            found: w.len(),
        });
    }
    let mut w0 = least_squares(l.matrix(), w)?;
    let residual = inf_norm(&(l.matrix() * &w0 - w));
    if !(residual <= IMAGE_TOLERANCE) {
        return Err(Error::NotInImage { residual });
    }
    let (lo, hi) = w0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    w0.add_scalar_mut(-0.5 * (lo + hi));
    Ok(w0)
}

fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = m.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    svd.solve(b, eps)
        .map_err(|e| Error::InvalidScenario(format!("least-squares solve failed: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormationScenario {
    pub poles: PoleSet,
    pub laplacian: LaplacianMatrix,
    /// Desired positions `d`.
    pub spacing: DVector<f64>,
    pub v_ref: f64,
    pub disturbance: DisturbanceSpec,
    pub x0: DVector<f64>,
    pub v0: DVector<f64>,
    /// Initial integral state; ignored by the two-pole controller.
    pub z0: DVector<f64>,
}

impl FormationScenario {
    /// Leader at `v_ref`, followers at rest, everyone at the desired spacing
    /// `d_i = -i * 20 m`, zero integral state and no load.
    pub fn velocity_step(poles: PoleSet, laplacian: LaplacianMatrix, v_ref: f64) -> Result<Self> {
        Controller::for_order(poles.order())?;
        let n = laplacian.size();
        let spacing = uniform_spacing(n, DEFAULT_SPACING);
        let mut v0 = DVector::zeros(n);
        v0[0] = v_ref;
        Ok(Self {
            poles,
            laplacian,
            x0: spacing.clone(),
            spacing,
            v_ref,
            disturbance: DisturbanceSpec::None,
            v0,
            z0: DVector::zeros(n),
        })
    }

    pub fn with_disturbance(mut self, spec: DisturbanceSpec) -> Self {
        self.disturbance = spec;
        self
    }

    pub fn n_agents(&self) -> usize {
        self.laplacian.size()
    }

    pub fn controller(&self) -> Result<Controller> {
        Controller::for_order(self.poles.order())
    }

    pub fn validate(&self) -> Result<()> {
        self.controller()?;
        let n = self.n_agents();
        for (name, v) in [("spacing", &self.spacing), ("x0", &self.x0), ("v0", &self.v0), ("z0", &self.z0)] {
            if v.len() != n {
                return Err(Error::InvalidScenario(format!(
                    "{name} has {} entries for {n} agents",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidScenario(format!("{name} contains non-finite values")));
            }
        }
        if !self.v_ref.is_finite() {
            return Err(Error::InvalidScenario("v_ref must be finite".into()));
        }
        Ok(())
    }

    /// Horizon long enough for the slowest mode to travel down a chain of
    /// `N` agents and settle: `(20 + 2 (N - 1)) / min p_k`.
    pub fn default_horizon(&self) -> f64 {
        (20.0 + 2.0 * (self.n_agents() as f64 - 1.0)) / self.poles.min_pole()
    }
}

/// `d_i = -i * gap`, leader at the origin.
pub fn uniform_spacing(n: usize, gap: f64) -> DVector<f64> {
    DVector::from_fn(n, |i, _| 0.0 - i as f64 * gap)
}

/// Relative-feedback law built from the pole coefficients.
#[derive(Debug, Clone)]
pub struct RelativeFeedbackLaw {
    system: SerialConsensusSystem,
    spacing: Vec<f64>,
}

impl RelativeFeedbackLaw {
    pub fn has_integral(&self) -> bool {
        self.system.order() == 3
    }

    pub fn coefficients(&self) -> &[f64] {
        self.system.poles().coefficients()
    }

    /// `L^2 (x - d)`, the integrator input.
    pub fn integrator_rate(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        let mut scratch = vec![0.0; 2 * n];
        let mut out = DVector::zeros(n);
        self.position_term(x.as_slice(), &mut scratch, out.as_mut_slice());
        out
    }

    /// `u = -a_v L v - a_p L^2 (x - d) - a_I L z` (PI) or
    /// `u = -a_1 L v - a_0 L^2 (x - d)` (PD). A missing `z` counts as zero.
    pub fn control(&self, x: &DVector<f64>, v: &DVector<f64>, z: Option<&DVector<f64>>) -> DVector<f64> {
        let n = x.len();
        let mut scratch = vec![0.0; 3 * n];
        let mut u = DVector::zeros(n);
        self.control_into(
            x.as_slice(),
            v.as_slice(),
            z.map(|z| z.as_slice()),
            &mut scratch,
            u.as_mut_slice(),
        );
        u
    }

    /// Writes `L^2 (x - d)` to `out`; `scratch` holds `2N` values.
    fn position_term(&self, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let (e, le) = scratch.split_at_mut(x.len());
        for ((e, x), d) in e.iter_mut().zip(x).zip(&self.spacing) {
            *e = x - d;
        }
        self.system.laplacian_times(e, le);
        self.system.laplacian_times(le, out);
    }

    /// `scratch` holds `3N` values; on return its last `N` hold `L^2 (x - d)`.
    fn control_into(&self, x: &[f64], v: &[f64], z: Option<&[f64]>, scratch: &mut [f64], u: &mut [f64]) {
        let n = x.len();
        let a = self.coefficients();
        let (work, pos) = scratch.split_at_mut(2 * n);
        self.position_term(x, work, pos);
        let (lv, lz) = work.split_at_mut(n);
        self.system.laplacian_times(v, lv);
        let (a_int, a_pos, a_vel) = if self.has_integral() {
            match z {
                Some(z) => self.system.laplacian_times(z, lz),
                None => lz.fill(0.0),
            }
            (a[0], a[1], a[2])
        } else {
            lz.fill(0.0);
            (0.0, a[0], a[1])
        };
        for i in 0..n {
            u[i] = -a_vel * lv[i] - a_pos * pos[i] - a_int * lz[i];
        }
    }
}

pub fn pi_control_law(scenario: &FormationScenario) -> Result<RelativeFeedbackLaw> {
    if scenario.poles.order() != 3 {
        return Err(Error::WrongOrder {
            expected: 3,
            found: scenario.poles.order(),
        });
    }
    feedback_law(scenario)
}

pub fn pd_control_law(scenario: &FormationScenario) -> Result<RelativeFeedbackLaw> {
    if scenario.poles.order() != 2 {
        return Err(Error::WrongOrder {
            expected: 2,
            found: scenario.poles.order(),
        });
    }
    feedback_law(scenario)
}

fn feedback_law(scenario: &FormationScenario) -> Result<RelativeFeedbackLaw> {
    Ok(RelativeFeedbackLaw {
        system: closed_loop_system(scenario)?,
        spacing: scenario.spacing.iter().copied().collect(),
    })
}

/// Closed loop in `(z, L(x - d), x')` (PI) or `(L(x - d), x')` (PD) coordinates.
pub fn closed_loop_system(scenario: &FormationScenario) -> Result<SerialConsensusSystem> {
    scenario.validate()?;
    Ok(assemble(&scenario.poles, &scenario.laplacian))
}

/// The two-pole comparison loop; rejects anything but two poles.
pub fn second_order_reference_controller(scenario: &FormationScenario) -> Result<SerialConsensusSystem> {
    if scenario.poles.order() != 2 {
        return Err(Error::WrongOrder {
            expected: 2,
            found: scenario.poles.order(),
        });
    }
    closed_loop_system(scenario)
}

pub fn initial_state(scenario: &FormationScenario) -> Result<XiState> {
    scenario.validate()?;
    let l = scenario.laplacian.matrix();
    let epos = l * (&scenario.x0 - &scenario.spacing);
    match scenario.controller()? {
        Controller::Pi => XiState::from_blocks(&[scenario.z0.clone(), epos, scenario.v0.clone()]),
        Controller::Pd => XiState::from_blocks(&[epos, scenario.v0.clone()]),
    }
}

#[derive(Debug, Clone)]
pub struct FormationRun {
    pub system: SerialConsensusSystem,
    pub initial: XiState,
    pub load: LoadDisturbance,
    pub trajectory: Trajectory,
}

/// Simulates the closed loop in state coordinates with formation measurements.
pub fn simulate_formation(
    scenario: &FormationScenario,
    horizon: f64,
    step: f64,
    record_stride: usize,
) -> Result<FormationRun> {
    let system = closed_loop_system(scenario)?;
    let initial = initial_state(scenario)?;
    let load = disturbance_vector(&scenario.disturbance, &scenario.laplacian)?;
    let disturbance = if load.w.iter().all(|&v| v == 0.0) {
        Disturbance::None
    } else {
        Disturbance::load(&system, &load.w)?
    };
    let config = SimulationConfig::new(horizon, step)
        .stride(record_stride)
        .formation(scenario.v_ref);
    let trajectory = simulate_with(&system, &initial, &disturbance, &config)?;
    Ok(FormationRun {
        system,
        initial,
        load,
        trajectory,
    })
}

/// Positions, velocities and integral states in physical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalTrace {
    pub times: Vec<f64>,
    pub positions: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub integrals: Vec<DVector<f64>>,
}

/// Integrates `x'' = u(x, x', z) + w`, `z' = L^2 (x - d)` directly with the
/// feedback law. Gives absolute positions, which the state coordinates do
/// not carry.
pub fn simulate_physical(
    scenario: &FormationScenario,
    horizon: f64,
    step: f64,
    record_stride: usize,
) -> Result<PhysicalTrace> {
    if !(step > 0.0 && horizon >= step) {
        return Err(Error::InvalidStep(format!("horizon {horizon}, step {step}")));
    }
    let law = feedback_law(scenario)?;
    let load = disturbance_vector(&scenario.disturbance, &scenario.laplacian)?;
    let n = scenario.n_agents();
    let integral = law.has_integral();

    let mut y: Vec<f64> = scenario
        .x0
        .iter()
        .chain(scenario.v0.iter())
        .chain(scenario.z0.iter())
        .copied()
        .collect();
    let mut scratch = vec![0.0; 3 * n];
    let mut field = |_: f64, s: &[f64], ds: &mut [f64]| {
        let (x, rest) = s.split_at(n);
        let (v, z) = rest.split_at(n);
        let (dx, rest) = ds.split_at_mut(n);
        let (dv, dz) = rest.split_at_mut(n);
        dx.copy_from_slice(v);
        law.control_into(x, v, integral.then_some(z), &mut scratch, dv);
        for (dv, w) in dv.iter_mut().zip(load.w.iter()) {
            *dv += w;
        }
        if integral {
            dz.copy_from_slice(&scratch[2 * n..]);
        } else {
            dz.fill(0.0);
        }
    };

    let stride = record_stride.max(1);
    let steps = (horizon / step).round() as usize;
    let mut trace = PhysicalTrace {
        times: vec![0.0],
        positions: vec![scenario.x0.clone()],
        velocities: vec![scenario.v0.clone()],
        integrals: vec![scenario.z0.clone()],
    };
    let mut rk = Rk4::new(y.len());
    for k in 0..steps {
        rk.step(&mut field, k as f64 * step, step, &mut y);
        if y.iter().any(|v| !(v.abs() <= DIVERGENCE_THRESHOLD)) {
            return Err(Error::NonFiniteState {
                time: (k + 1) as f64 * step,
            });
        }
        if (k + 1) % stride == 0 || k + 1 == steps {
            trace.times.push((k + 1) as f64 * step);
            trace.positions.push(DVector::from_column_slice(&y[..n]));
            trace.velocities.push(DVector::from_column_slice(&y[n..2 * n]));
            trace.integrals.push(DVector::from_column_slice(&y[2 * n..]));
        }
    }
    Ok(trace)
}

impl PhysicalTrace {
    /// CSV with header `t,x_0..,v_0..`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let n = self.positions.first().map_or(0, |p| p.len());
        let mut header = String::from("t");
        for prefix in ["x", "v"] {
            for i in 0..n {
                header.push_str(&format!(",{prefix}_{i}"));
            }
        }
        writeln!(out, "{header}")?;
        let mut line = String::new();
        for (k, &t) in self.times.iter().enumerate() {
            line.clear();
            push_value(&mut line, t);
            for v in self.positions[k].iter().chain(self.velocities[k].iter()) {
                line.push(',');
                push_value(&mut line, *v);
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisturbanceConstants {
    /// Initial-condition gain `||S||_inf ||S^-1||_inf`.
    pub alpha_xi: f64,
    /// Load gain `2 / (p1 p2 p3) ||S||_inf ||S^-1 e_1||_inf`.
    pub alpha_w: f64,
    pub alpha_xi_source: BoundSource,
    pub alpha_w_source: BoundSource,
    /// Column scalings of the Vandermonde diagonalizer used for each constant.
    pub alpha_xi_scaling: Vec<f64>,
    pub alpha_w_scaling: Vec<f64>,
    /// Both constants with the unscaled Vandermonde diagonalizer.
    pub raw_alpha_xi: f64,
    pub raw_alpha_w: f64,
}

/// Constants of the load-disturbance bound. Each constant may use its own
/// diagonalizer; with `use_optimal` both are minimized over column scalings,
/// `alpha_xi` by the row-sum rule and `alpha_w` by `K_jj = |(S^-1 e_1)_j|`.
pub fn theorem2_constants(ps: &PoleSet, use_optimal: bool) -> Result<DisturbanceConstants> {
    if ps.order() != 3 {
        return Err(Error::WrongOrder {
            expected: 3,
            found: ps.order(),
        });
    }
    let a_i = ps.coefficients()[0];
    let d = vandermonde_diagonalization(ps);
    let e1 = d.s_inv().column(0).into_owned();
    let raw_alpha_xi = d.condition();
    let raw_alpha_w = 2.0 / a_i * inf_norm(d.s()) * inf_norm(&e1);
    if !use_optimal {
        return Ok(DisturbanceConstants {
            alpha_xi: raw_alpha_xi,
            alpha_w: raw_alpha_w,
            alpha_xi_source: BoundSource::Vandermonde,
            alpha_w_source: BoundSource::Vandermonde,
            alpha_xi_scaling: vec![1.0; 3],
            alpha_w_scaling: vec![1.0; 3],
            raw_alpha_xi,
            raw_alpha_w,
        });
    }
    let opt = optimal_condition(&d)?;
    let (w_value, w_scaling) = optimal_vector_condition(d.s(), &e1);
    Ok(DisturbanceConstants {
        alpha_xi: opt.optimal_bound,
        alpha_w: 2.0 / a_i * w_value,
        alpha_xi_source: BoundSource::Optimal,
        alpha_w_source: BoundSource::Optimal,
        alpha_xi_scaling: opt.scaling,
        alpha_w_scaling: w_scaling,
        raw_alpha_xi,
        raw_alpha_w,
    })
}

/// Coordinate descent over `log K_jj` for `min ||S K||_inf ||K^-1 v||_inf`.
///
/// Each sweep tries multiplying every `K_jj` by `2^{+-step}` and keeps
/// improvements; the step halves after a sweep without progress. Used to
/// cross-check the closed-form minimizer.
pub fn search_vector_scaling(s: &DMatrix<f64>, v: &DVector<f64>, iterations: usize) -> (f64, Vec<f64>) {
    let n = v.len();
    let objective = |k: &[f64]| {
        let sk = s
            .row_iter()
            .map(|row| row.iter().zip(k).map(|(a, k)| a.abs() * k).sum::<f64>())
            .fold(0.0, f64::max);
        let kv = v.iter().zip(k).map(|(x, k)| x.abs() / k).fold(0.0, f64::max);
        sk * kv
    };
    let mut k = vec![1.0; n];
    let mut best = objective(&k);
    let mut log_step = 1.0f64;
    for _ in 0..iterations {
        let mut improved = false;
        for j in 0..n {
            for dir in [1.0, -1.0] {
                let old = k[j];
                k[j] = old * (dir * log_step).exp2();
                let value = objective(&k);
                if value < best {
                    best = value;
                    improved = true;
                } else {
                    k[j] = old;
                }
            }
        }
        if !improved {
            log_step *= 0.5;
        }
    }
    (best, k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionReport {
    /// `||L (x - d)||_inf` at the final time.
    pub epos_final: f64,
    /// `||L x'||_inf` at the final time.
    pub lvel_final: f64,
    pub tolerance: f64,
    pub rejected: bool,
    /// False when the graph has no directed spanning tree; rejection is then not guaranteed.
    pub spanning_tree: bool,
}

pub fn check_disturbance_rejection(traj: &Trajectory, l: &LaplacianMatrix, tol: f64) -> Result<RejectionReport> {
    if traj.formation().is_none() || traj.order() < 2 {
        return Err(Error::MissingFormationContext);
    }
    if l.size() != traj.agents() {
        return Err(Error::DimensionMismatch {
            expected: traj.agents(),
            found: l.size(),
        });
    }
    let last = traj.len() - 1;
    let epos_final = inf_norm(&traj.block(last, traj.order() - 2));
    let lvel_final = inf_norm(&(l.matrix() * traj.block(last, traj.order() - 1)));
    Ok(RejectionReport {
        epos_final,
        lvel_final,
        tolerance: tol,
        rejected: epos_final <= tol && lvel_final <= tol,
        spanning_tree: l.has_directed_spanning_tree(),
    })
}

/// Stationary `L (x - d)` of the two-pole loop under a constant load:
/// the solution `e` in the image of `L` of `a_0 L e = w`, where `a_0 = p1 p2`.
pub fn stationary_position_error(ps: &PoleSet, l: &LaplacianMatrix, w: &DVector<f64>) -> Result<DVector<f64>> {
    if ps.order() != 2 {
        return Err(Error::WrongOrder {
            expected: 2,
            found: ps.order(),
        });
    }
    if w.len() != l.size() {
        return Err(Error::DimensionMismatch {
            expected: l.size(),
            found: w.len(),
        });
    }
    let a0 = ps.coefficients()[0];
    let l2 = l.power(2);
    let rhs = w / a0;
    let y = least_squares(&l2, &rhs)?;
    let residual = inf_norm(&(&l2 * &y - &rhs));
    if !(residual <= IMAGE_TOLERANCE) {
        return Err(Error::NotInImage { residual });
    }
    Ok(l.matrix() * y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub lhs_sup: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `sup_t ||xi||_inf` with `alpha_xi ||xi(0)||_inf + alpha_w ||w0||_inf`.
pub fn theorem2_transient_bound_check(
    traj: &Trajectory,
    constants: &DisturbanceConstants,
    xi0: &XiState,
    w0: Option<&DVector<f64>>,
) -> Result<Theorem2Report> {
    let w0 = w0.ok_or(Error::MissingW0)?;
    if traj.order() != 3 {
        return Err(Error::WrongOrder {
            expected: 3,
            found: traj.order(),
        });
    }
    if w0.len() != traj.agents() {
        return Err(Error::DimensionMismatch {
            expected: traj.agents(),
            found: w0.len(),
        });
    }
    let rhs = constants.alpha_xi * xi0.norm() + constants.alpha_w * inf_norm(w0);
    let lhs_sup = traj.sup_norm();
    Ok(Theorem2Report {
        lhs_sup,
        rhs,
        holds: lhs_sup <= rhs * (1.0 + BOUND_SLACK),
    })
}

/// Theorem-1 bound for the scenario's closed loop, for reports.
pub fn initial_condition_bound(scenario: &FormationScenario) -> Result<crate::dynamics::PerformanceBound> {
    theorem1_bound(&scenario.poles, true)
}
