//! Browser bindings for the serial consensus library.
//!
//! Each export takes a JSON query string and returns a JSON string, so the
//! page needs no generated TypeScript types. The pure functions behind them
//! are public and tested on the host.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use serial_consensus::dynamics::{assemble, simulate_with, theorem1_bound, Disturbance, SimulationConfig, XiState};
use serial_consensus::formation::{
    check_disturbance_rejection, simulate_formation, stationary_position_error, theorem2_constants, Controller,
};
use serial_consensus::graphs::{inf_norm, path_ahead_laplacian, random_spanning_digraph};
use serial_consensus::scenario::{DisturbanceFile, ScenarioFile};
use serial_consensus::spectra::PoleSet;
use serial_consensus::verify::log_spaced;
use serial_consensus::{Error, Result};

/// Simulations beyond this many steps are refused to keep the page responsive.
pub const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, Deserialize)]
pub struct BoundQuery {
    pub poles: Vec<f64>,
    /// Index of the pole swept along the curve.
    #[serde(default)]
    pub vary: usize,
    #[serde(default = "default_from")]
    pub from: f64,
    #[serde(default = "default_to")]
    pub to: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_from() -> f64 {
    0.05
}

fn default_to() -> f64 {
    20.0
}

fn default_points() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub pole: f64,
    pub raw: f64,
    pub optimal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub poles: Vec<f64>,
    pub raw: f64,
    pub optimal: f64,
    pub scaling: Vec<f64>,
    pub alpha_xi: Option<f64>,
    pub alpha_w: Option<f64>,
    /// Values where the swept pole collides with another are left out.
    pub curve: Vec<CurvePoint>,
}

pub fn bound_curve(q: &BoundQuery) -> Result<BoundCurve> {
    let ps = PoleSet::new(&q.poles)?;
    if q.vary >= q.poles.len() {
        return Err(Error::InvalidScenario(format!("no pole at index {}", q.vary)));
    }
    if !(q.from > 0.0 && q.to > q.from && q.points >= 2) {
        return Err(Error::InvalidScenario("sweep range must satisfy 0 < from < to".into()));
    }
    let bound = theorem1_bound(&ps, true)?;
    let constants = if ps.order() == 3 {
        Some(theorem2_constants(&ps, true)?)
    } else {
        None
    };
    let curve = log_spaced(q.from, q.to, q.points)
        .into_iter()
        .filter_map(|value| {
            let mut poles = q.poles.clone();
            poles[q.vary] = value;
            let ps = PoleSet::with_tolerance(&poles, 1e-3).ok()?;
            let b = theorem1_bound(&ps, true).ok()?;
            Some(CurvePoint {
                pole: value,
                raw: b.raw,
                optimal: b.optimal,
            })
        })
        .collect();
    Ok(BoundCurve {
        poles: ps.poles().to_vec(),
        raw: bound.raw,
        optimal: bound.optimal,
        scaling: bound.scaling,
        alpha_xi: constants.as_ref().map(|c| c.alpha_xi),
        alpha_w: constants.as_ref().map(|c| c.alpha_w),
        curve,
    })
}

#[derive(Debug, Clone, Deserialize)]
pub struct FormationQuery {
    pub poles: Vec<f64>,
    pub n_agents: usize,
    #[serde(default)]
    pub controller: Option<Controller>,
    #[serde(default = "default_v_ref")]
    pub v_ref: f64,
    /// Road inclination; 0 means flat.
    #[serde(default)]
    pub theta: f64,
    #[serde(default, rename = "T")]
    pub horizon: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_v_ref() -> f64 {
    10.0
}

fn default_dt() -> f64 {
    5e-3
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationSeries {
    pub controller: Controller,
    pub poles: Vec<f64>,
    pub horizon: f64,
    pub times: Vec<f64>,
    /// Spacing error `L(x - d)` of each agent over time.
    pub epos: Vec<Vec<f64>>,
    /// Velocity error of each agent over time.
    pub evel: Vec<Vec<f64>>,
    pub ratio: f64,
    pub bound: f64,
    pub rejected: bool,
    pub epos_final: f64,
    /// Fixed-point spacing error of the two-pole controller under load.
    pub stationary_prediction: Option<f64>,
}

pub fn formation_series(q: &FormationQuery) -> Result<FormationSeries> {
    let file = ScenarioFile {
        poles: q.poles.clone(),
        topology: None,
        n_agents: Some(q.n_agents),
        v_ref: q.v_ref,
        spacing: None,
        disturbance: (q.theta != 0.0).then_some(DisturbanceFile::Hill {
            theta: q.theta,
            g: serial_consensus::formation::DEFAULT_GRAVITY,
        }),
        x0: None,
        v0: None,
        z0: None,
        xi0: None,
        controller: q.controller,
        horizon: q.horizon,
        dt: Some(q.dt),
        record_stride: None,
    };
    let resolved = file.formation()?;
    let steps = check_steps(resolved.horizon, resolved.step)?;
    let stride = (steps / q.points.max(1)).max(1);
    let s = &resolved.scenario;
    let run = simulate_formation(s, resolved.horizon, resolved.step, stride)?;
    let traj = &run.trajectory;
    let n = s.n_agents();
    let mut epos = vec![Vec::with_capacity(traj.len()); n];
    let mut evel = vec![Vec::with_capacity(traj.len()); n];
    for k in 0..traj.len() {
        let p = traj.epos(k).expect("formation trajectory");
        let v = traj.evel(k).expect("formation trajectory");
        for i in 0..n {
            epos[i].push(p[i]);
            evel[i].push(v[i]);
        }
    }
    let rejection = check_disturbance_rejection(traj, &s.laplacian, 1e-3)?;
    let ratio = serial_consensus::dynamics::scalable_performance_ratio(traj)?.ratio;
    let stationary_prediction = if resolved.controller == Controller::Pd && traj.is_forced() {
        stationary_position_error(&s.poles, &s.laplacian, &run.load.w)
            .ok()
            .map(|e| inf_norm(&e))
    } else {
        None
    };
    Ok(FormationSeries {
        controller: resolved.controller,
        poles: s.poles.poles().to_vec(),
        horizon: resolved.horizon,
        times: traj.times().to_vec(),
        epos,
        evel,
        ratio,
        bound: theorem1_bound(&s.poles, true)?.value,
        rejected: rejection.rejected,
        epos_final: rejection.epos_final,
        stationary_prediction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    PathAhead,
    Random,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TransientQuery {
    pub poles: Vec<f64>,
    pub n_agents: usize,
    pub graph: GraphKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, rename = "T")]
    pub horizon: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientSeries {
    pub times: Vec<f64>,
    /// `||xi(t)||_inf / ||xi(0)||_inf` at the recorded times.
    pub ratio_series: Vec<f64>,
    pub max_ratio: f64,
    pub sup_time: f64,
    pub bound: f64,
    pub raw_bound: f64,
    pub holds: bool,
}

pub fn transient_series(q: &TransientQuery) -> Result<TransientSeries> {
    let ps = PoleSet::new(&q.poles)?;
    let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
    let l = match q.graph {
        GraphKind::PathAhead => path_ahead_laplacian(q.n_agents)?,
        GraphKind::Random => random_spanning_digraph(q.n_agents, 0.1, &mut rng)?.laplacian(),
    };
    let sys = assemble(&ps, &l);
    let xi0 = XiState::random(&sys, &mut rng);
    let horizon = q.horizon.unwrap_or(20.0 / ps.min_pole());
    let steps = check_steps(horizon, q.dt)?;
    let config = SimulationConfig::new(horizon, q.dt).stride((steps / q.points.max(1)).max(1));
    let traj = simulate_with(&sys, &xi0, &Disturbance::None, &config)?;
    let bound = theorem1_bound(&ps, true)?;
    let x0 = xi0.norm();
    let max_ratio = traj.sup_norm() / x0;
    Ok(TransientSeries {
        times: traj.times().to_vec(),
        ratio_series: traj.states().iter().map(|s| inf_norm(s) / x0).collect(),
        max_ratio,
        sup_time: traj.sup_time(),
        bound: bound.value,
        raw_bound: bound.raw,
        holds: max_ratio <= bound.value * (1.0 + serial_consensus::dynamics::BOUND_SLACK),
    })
}

fn check_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && horizon >= dt) {
        return Err(Error::InvalidStep(format!("horizon {horizon}, step {dt}")));
    }
    let steps = (horizon / dt).round() as usize;
    if steps > MAX_STEPS {
        return Err(Error::InvalidStep(format!("{steps} steps exceed the limit of {MAX_STEPS}")));
    }
    Ok(steps)
}

fn run_json<Q, R>(query: &str, f: impl FnOnce(&Q) -> Result<R>) -> std::result::Result<String, String>
where
    Q: for<'de> Deserialize<'de>,
    R: Serialize,
{
    let q: Q = serde_json::from_str(query).map_err(|e| e.to_string())?;
    let r = f(&q).map_err(|e| e.to_string())?;
    serde_json::to_string(&r).map_err(|e| e.to_string())
}

/// JSON entry points shared by the wasm exports and host tests.
pub mod json {
    use super::*;

    pub fn bound(query: &str) -> std::result::Result<String, String> {
        run_json(query, bound_curve)
    }

    pub fn formation(query: &str) -> std::result::Result<String, String> {
        run_json(query, formation_series)
    }

    pub fn transient(query: &str) -> std::result::Result<String, String> {
        run_json(query, transient_series)
    }
}

#[wasm_bindgen(js_name = exploreBound)]
pub fn explore_bound(query: &str) -> std::result::Result<String, JsError> {
    json::bound(query).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = runFormation)]
pub fn run_formation(query: &str) -> std::result::Result<String, JsError> {
    json::formation(query).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = checkTransient)]
pub fn check_transient(query: &str) -> std::result::Result<String, JsError> {
    json::transient(query).map_err(|e| JsError::new(&e))
}
