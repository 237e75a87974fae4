//! Scenario files, overrides and reports.
//!
//! A scenario is a JSON document such as
//!
//! ```json
//! {
//!   "poles": [0.3333333333333333, 1, 3],
//!   "topology": {"preset": "path_ahead"},
//!   "n_agents": 10,
//!   "v_ref": 10,
//!   "spacing": 20,
//!   "disturbance": {"type": "hill", "theta": 0.1, "g": 9.8},
//!   "x0": "rest",
//!   "T": 114,
//!   "dt": 0.001
//! }
//! ```
//!
//! Every field but `poles` is optional. `--set key=value` overrides address
//! fields by dotted path (`disturbance.theta=0.2`); values are parsed as JSON
//! and fall back to strings.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{
    assemble, scalable_performance_ratio, simulate_with, theorem1_bound, verify_transient, Disturbance,
    PerformanceBound, PerformanceRatio, SimulationConfig, Trajectory, TransientReport, XiState, DEFAULT_STEP,
};
use crate::error::{Error, Result};
use crate::formation::{
    check_disturbance_rejection, disturbance_vector, simulate_formation, simulate_physical,
    stationary_position_error, theorem2_constants, theorem2_transient_bound_check, uniform_spacing, Controller,
    DisturbanceConstants, DisturbanceSpec, FormationScenario, PhysicalTrace, RejectionReport, Theorem2Report,
    DEFAULT_GRAVITY, DEFAULT_REJECTION_TOLERANCE, DEFAULT_SPACING,
};
use crate::graphs::{inf_norm, LaplacianMatrix, TopologySpec};
use crate::spectra::{optimal_condition, serialize_rows, vandermonde_diagonalization, PoleSet};

pub const SCHEMA_VERSION: u32 = 1;

/// Recorded grid points per trajectory when no stride is given.
pub const DEFAULT_RECORDED_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub poles: Vec<f64>,
    /// Defaults to the path-ahead chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_agents: Option<usize>,
    #[serde(default)]
    pub v_ref: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<SpacingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<InitialPositions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    /// Initial state for `simulate`; random in `[-1, 1]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
    /// `pd` with three poles keeps the slowest and fastest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<Controller>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
}

/// A uniform gap (`d_i = -i * gap`) or explicit desired positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpacingSpec {
    Gap(f64),
    Positions(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceFile {
    None,
    Hill {
        theta: f64,
        #[serde(default = "default_gravity")]
        g: f64,
    },
    Lw0 {
        w0: Vec<f64>,
    },
    Load {
        w: Vec<f64>,
    },
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

impl DisturbanceFile {
    fn kind(&self) -> &'static str {
        match self {
            DisturbanceFile::None => "none",
            DisturbanceFile::Hill { .. } => "hill",
            DisturbanceFile::Lw0 { .. } => "lw0",
            DisturbanceFile::Load { .. } => "load",
        }
    }

    fn to_spec(&self) -> DisturbanceSpec {
        match self {
            DisturbanceFile::None => DisturbanceSpec::None,
            DisturbanceFile::Hill { theta, g } => DisturbanceSpec::Hill { theta: *theta, g: *g },
            DisturbanceFile::Lw0 { w0 } => DisturbanceSpec::LaplacianImage {
                w0: DVector::from_column_slice(w0),
            },
            DisturbanceFile::Load { w } => DisturbanceSpec::Load {
                w: DVector::from_column_slice(w),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionKeyword {
    /// At the desired positions.
    Rest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialPositions {
    Keyword(PositionKeyword),
    Values(Vec<f64>),
}

/// `key=value` with a dotted key path.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl FromStr for Override {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidScenario(format!("override `{s}` is not key=value")))?;
        let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
        if path.iter().any(String::is_empty) {
            return Err(Error::InvalidScenario(format!("override key `{key}` is malformed")));
        }
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_owned()));
        Ok(Override { path, value })
    }
}

/// Sets `value` at `path`, creating objects along the way. Numeric segments
/// index into existing arrays.
pub fn apply_override(doc: &mut Value, ov: &Override) -> Result<()> {
    let mut cur = doc;
    for (depth, seg) in ov.path.iter().enumerate() {
        let last = depth + 1 == ov.path.len();
        if let Value::Array(items) = cur {
            let idx: usize = seg
                .parse()
                .map_err(|_| Error::InvalidScenario(format!("`{seg}` is not an array index")))?;
            let len = items.len();
            let slot = items
                .get_mut(idx)
                .ok_or_else(|| Error::InvalidScenario(format!("index {idx} out of range for length {len}")))?;
            if last {
                *slot = ov.value.clone();
                return Ok(());
            }
            cur = slot;
            continue;
        }
        if !cur.is_object() {
            *cur = Value::Object(Default::default());
        }
        let map = cur.as_object_mut().unwrap();
        if last {
            map.insert(seg.clone(), ov.value.clone());
            return Ok(());
        }
        cur = map.entry(seg.clone()).or_insert(Value::Null);
    }
    Ok(())
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    pub fn parse_with_overrides(text: &str, overrides: &[Override]) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text)?;
        for ov in overrides {
            apply_override(&mut doc, ov)?;
        }
        Ok(serde_json::from_value(doc)?)
    }

    pub fn load(path: &Path, overrides: &[Override]) -> Result<Self> {
        Self::parse_with_overrides(&fs::read_to_string(path)?, overrides)
    }

    pub fn pole_set(&self) -> Result<PoleSet> {
        PoleSet::new(&self.poles)
    }

    pub fn n_agents(&self) -> Result<usize> {
        self.n_agents
            .or_else(|| self.topology.as_ref().and_then(TopologySpec::declared_size))
            .ok_or_else(|| Error::InvalidScenario("number of agents is unspecified".into()))
    }

    pub fn laplacian(&self) -> Result<LaplacianMatrix> {
        let n = self.n_agents()?;
        match &self.topology {
            Some(t) => t.build(Some(n)),
            None => TopologySpec::path_ahead(n).build(None),
        }
    }

    fn step(&self) -> Result<f64> {
        let dt = self.dt.unwrap_or(DEFAULT_STEP);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidScenario(format!("dt must be positive, got {dt}")));
        }
        Ok(dt)
    }

    fn horizon_or(&self, default: f64) -> Result<f64> {
        let t = self.horizon.unwrap_or(default);
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidScenario(format!("T must be positive, got {t}")));
        }
        Ok(t)
    }

    fn stride_for(&self, horizon: f64, step: f64) -> usize {
        self.record_stride.unwrap_or_else(|| {
            let steps = (horizon / step).round() as usize;
            steps.div_ceil(DEFAULT_RECORDED_POINTS).max(1)
        })
    }

    fn agent_vector(&self, name: &str, v: &[f64], n: usize) -> Result<DVector<f64>> {
        if v.len() != n {
            return Err(Error::InvalidScenario(format!("{name} has {} entries for {n} agents", v.len())));
        }
        Ok(DVector::from_column_slice(v))
    }

    /// Builds the formation scenario and its integration settings.
    pub fn formation(&self) -> Result<ResolvedFormation> {
        let mut poles = self.poles.clone();
        let mut reduced_poles = false;
        match (self.controller, poles.len()) {
            (Some(Controller::Pd), 3) => {
                poles.sort_by(f64::total_cmp);
                poles.remove(1);
                reduced_poles = true;
            }
            (Some(c), k) if c.order() != k => {
                return Err(Error::InvalidScenario(format!(
                    "controller {c:?} needs {} poles, got {k}",
                    c.order()
                )))
            }
            _ => {}
        }
        let ps = PoleSet::new(&poles)?;
        let controller = Controller::for_order(ps.order())?;
        let laplacian = self.laplacian()?;
        let n = laplacian.size();

        let spacing = match &self.spacing {
            None => uniform_spacing(n, DEFAULT_SPACING),
            Some(SpacingSpec::Gap(gap)) => uniform_spacing(n, *gap),
            Some(SpacingSpec::Positions(d)) => self.agent_vector("spacing", d, n)?,
        };
        let mut scenario = FormationScenario::velocity_step(ps, laplacian, self.v_ref)?;
        scenario.x0 = match &self.x0 {
            None | Some(InitialPositions::Keyword(PositionKeyword::Rest)) => spacing.clone(),
            Some(InitialPositions::Values(x)) => self.agent_vector("x0", x, n)?,
        };
        scenario.spacing = spacing;
        if let Some(v0) = &self.v0 {
            scenario.v0 = self.agent_vector("v0", v0, n)?;
        }
        if let Some(z0) = &self.z0 {
            scenario.z0 = self.agent_vector("z0", z0, n)?;
        }
        if let Some(d) = &self.disturbance {
            scenario.disturbance = d.to_spec();
        }
        scenario.validate()?;

        let step = self.step()?;
        let horizon = self.horizon_or(scenario.default_horizon())?;
        Ok(ResolvedFormation {
            record_stride: self.stride_for(horizon, step),
            scenario,
            controller,
            reduced_poles,
            horizon,
            step,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedFormation {
    pub scenario: FormationScenario,
    pub controller: Controller,
    /// Three poles were given for the two-pole controller.
    pub reduced_poles: bool,
    pub horizon: f64,
    pub step: f64,
    pub record_stride: usize,
}

pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub poles: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub raw_condition: f64,
    pub optimal_condition: f64,
    /// Diagonal of `K`.
    pub scaling: Vec<f64>,
    #[serde(serialize_with = "serialize_rows")]
    pub s_opt: nalgebra::DMatrix<f64>,
    #[serde(serialize_with = "serialize_rows")]
    pub s_opt_inv: nalgebra::DMatrix<f64>,
    /// Present for three poles.
    pub disturbance_constants: Option<DisturbanceConstants>,
}

pub fn run_bound(poles: &[f64]) -> Result<BoundReport> {
    let ps = PoleSet::new(poles)?;
    let d = vandermonde_diagonalization(&ps);
    let opt = optimal_condition(&d)?;
    let disturbance_constants = if ps.order() == 3 {
        Some(theorem2_constants(&ps, true)?)
    } else {
        None
    };
    Ok(BoundReport {
        schema_version: SCHEMA_VERSION,
        command: "bound",
        poles: ps.poles().to_vec(),
        coefficients: ps.coefficients().to_vec(),
        raw_condition: d.condition(),
        optimal_condition: opt.optimal_bound,
        scaling: opt.scaling,
        s_opt: opt.s_opt,
        s_opt_inv: opt.s_opt_inv,
        disturbance_constants,
    })
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "poles:             {:?}", self.poles)?;
        writeln!(f, "raw condition:     {:.6}", self.raw_condition)?;
        writeln!(f, "optimal condition: {:.6}", self.optimal_condition)?;
        writeln!(f, "scaling K:         {:?}", self.scaling)?;
        if let Some(c) = &self.disturbance_constants {
            writeln!(f, "alpha_xi:          {:.6}", c.alpha_xi)?;
            writeln!(f, "alpha_w:           {:.6}", c.alpha_w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub n_agents: usize,
    pub order: usize,
    pub poles: Vec<f64>,
    pub horizon: f64,
    pub step: f64,
    pub record_stride: usize,
    pub spanning_tree: bool,
    pub bound: PerformanceBound,
    pub forced: bool,
    pub initial_norm: f64,
    pub sup_norm: f64,
    pub sup_time: f64,
    pub final_norm: f64,
    /// Absent for forced runs.
    pub transient: Option<TransientReport>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub report: SimulationReport,
    pub trajectory: Trajectory,
}

/// Simulates `xi' = (A kron L) xi + w` from `xi0` (or a seeded random state).
pub fn run_simulation(file: &ScenarioFile, seed: u64) -> Result<SimulationOutcome> {
    let ps = file.pole_set()?;
    let laplacian = file.laplacian()?;
    let sys = assemble(&ps, &laplacian);
    let xi0 = match &file.xi0 {
        Some(v) => XiState::for_system(&sys, DVector::from_column_slice(v))?,
        None => XiState::random(&sys, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let disturbance = match &file.disturbance {
        None | Some(DisturbanceFile::None) => Disturbance::None,
        Some(d) => Disturbance::load(&sys, &disturbance_vector(&d.to_spec(), &laplacian)?.w)?,
    };
    let step = file.step()?;
    let horizon = file.horizon_or(20.0 / ps.min_pole())?;
    let stride = file.stride_for(horizon, step);
    let traj = simulate_with(&sys, &xi0, &disturbance, &SimulationConfig::new(horizon, step).stride(stride))?;
    let bound = theorem1_bound(&ps, true)?;
    let transient = if traj.is_forced() {
        None
    } else {
        Some(verify_transient(&traj, &bound, &xi0)?)
    };
    let report = SimulationReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        seed,
        n_agents: sys.agents(),
        order: sys.order(),
        poles: ps.poles().to_vec(),
        horizon,
        step,
        record_stride: stride,
        spanning_tree: laplacian.has_directed_spanning_tree(),
        bound,
        forced: traj.is_forced(),
        initial_norm: traj.initial_norm(),
        sup_norm: traj.sup_norm(),
        sup_time: traj.sup_time(),
        final_norm: inf_norm(traj.final_state()),
        transient,
    };
    Ok(SimulationOutcome {
        report,
        trajectory: traj,
    })
}

impl SimulationOutcome {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.trajectory
            .write_csv(std::io::BufWriter::new(fs::File::create(dir.join("trajectory.csv"))?))?;
        fs::write(dir.join("report.json"), to_json(&self.report)?)?;
        Ok(())
    }
}

impl fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "order {} on {} agents, T = {}, dt = {}",
            self.order, self.n_agents, self.horizon, self.step
        )?;
        writeln!(f, "sup |xi| = {:.6} at t = {:.3}", self.sup_norm, self.sup_time)?;
        if let Some(t) = &self.transient {
            writeln!(
                f,
                "ratio {:.6} vs bound {:.6}: {}",
                t.max_ratio,
                t.bound,
                if t.holds { "holds" } else { "VIOLATED" }
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisturbanceSummary {
    #[serde(rename = "type")]
    pub kind: &'static str,
    /// `||w||_inf`.
    pub load_norm: f64,
    /// `||w0||_inf` when `w = L w0` is solvable.
    pub w0_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationBounds {
    pub initial_condition: PerformanceBound,
    /// Three-pole controller only.
    pub disturbance: Option<DisturbanceConstants>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupRatios {
    /// `sup ||xi|| / ||xi(0)||`, 0 for a zero initial state.
    pub xi: f64,
    pub formation_error: PerformanceRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryErrorReport {
    /// `||e||_inf` of the fixed point `p1 p2 L e = w`.
    pub predicted_norm: f64,
    pub final_norm: f64,
    /// `||L(x - d)(T) - e||_inf`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormationReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub n_agents: usize,
    pub controller: Controller,
    pub poles: Vec<f64>,
    pub reduced_poles: bool,
    pub v_ref: f64,
    pub horizon: f64,
    pub step: f64,
    pub record_stride: usize,
    pub spanning_tree: bool,
    pub disturbance: DisturbanceSummary,
    pub bounds: FormationBounds,
    pub sup_ratios: SupRatios,
    /// Unforced runs only.
    pub initial_condition_check: Option<TransientReport>,
    /// Three-pole runs with a load in the image of `L`.
    pub disturbance_check: Option<Theorem2Report>,
    pub rejection: RejectionReport,
    pub rejected: bool,
    /// Two-pole runs under a load.
    pub stationary_error: Option<StationaryErrorReport>,
}

#[derive(Debug, Clone)]
pub struct FormationOutcome {
    pub report: FormationReport,
    pub trajectory: Trajectory,
    pub positions: PhysicalTrace,
}

pub fn run_formation(file: &ScenarioFile) -> Result<FormationOutcome> {
    let resolved = file.formation()?;
    let s = &resolved.scenario;
    let run = simulate_formation(s, resolved.horizon, resolved.step, resolved.record_stride)?;
    let positions = simulate_physical(s, resolved.horizon, resolved.step, resolved.record_stride)?;
    let traj = &run.trajectory;

    let initial_condition = theorem1_bound(&s.poles, true)?;
    let disturbance_constants = match resolved.controller {
        Controller::Pi => Some(theorem2_constants(&s.poles, true)?),
        Controller::Pd => None,
    };
    let initial_condition_check = if traj.is_forced() {
        None
    } else {
        Some(verify_transient(traj, &initial_condition, &run.initial)?)
    };
    let disturbance_check = match (&disturbance_constants, &run.load.w0) {
        (Some(c), Some(w0)) => Some(theorem2_transient_bound_check(traj, c, &run.initial, Some(w0))?),
        _ => None,
    };
    let rejection = check_disturbance_rejection(traj, &s.laplacian, DEFAULT_REJECTION_TOLERANCE)?;
    let stationary_error = if resolved.controller == Controller::Pd && traj.is_forced() {
        stationary_position_error(&s.poles, &s.laplacian, &run.load.w)
            .ok()
            .map(|e| {
                let last = traj.block(traj.len() - 1, 0);
                StationaryErrorReport {
                    predicted_norm: inf_norm(&e),
                    final_norm: inf_norm(&last),
                    deviation: inf_norm(&(last - &e)),
                }
            })
    } else {
        None
    };
    let xi_ratio = if traj.initial_norm() == 0.0 {
        0.0
    } else {
        traj.sup_norm() / traj.initial_norm()
    };

    let report = FormationReport {
        schema_version: SCHEMA_VERSION,
        command: "formation",
        n_agents: s.n_agents(),
        controller: resolved.controller,
        poles: s.poles.poles().to_vec(),
        reduced_poles: resolved.reduced_poles,
        v_ref: s.v_ref,
        horizon: resolved.horizon,
        step: resolved.step,
        record_stride: resolved.record_stride,
        spanning_tree: rejection.spanning_tree,
        disturbance: DisturbanceSummary {
            kind: file.disturbance.as_ref().map_or("none", DisturbanceFile::kind),
            load_norm: inf_norm(&run.load.w),
            w0_norm: run.load.w0.as_ref().map(inf_norm),
        },
        bounds: FormationBounds {
            initial_condition,
            disturbance: disturbance_constants,
        },
        sup_ratios: SupRatios {
            xi: xi_ratio,
            formation_error: scalable_performance_ratio(traj)?,
        },
        initial_condition_check,
        disturbance_check,
        rejected: rejection.rejected,
        rejection,
        stationary_error,
    };
    Ok(FormationOutcome {
        report,
        trajectory: run.trajectory,
        positions,
    })
}

impl FormationOutcome {
    /// Writes `trajectory.csv`, `positions.csv` and `report.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.trajectory
            .write_csv(std::io::BufWriter::new(fs::File::create(dir.join("trajectory.csv"))?))?;
        self.positions
            .write_csv(std::io::BufWriter::new(fs::File::create(dir.join("positions.csv"))?))?;
        fs::write(dir.join("report.json"), to_json(&self.report)?)?;
        Ok(())
    }
}

impl fmt::Display for FormationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:?} formation of {} agents, poles {:?}, T = {}",
            self.controller, self.n_agents, self.poles, self.horizon
        )?;
        writeln!(
            f,
            "formation error ratio {:.6}, bound {:.6}",
            self.sup_ratios.formation_error.ratio, self.bounds.initial_condition.value
        )?;
        if let Some(c) = &self.disturbance_check {
            writeln!(f, "sup |xi| {:.6} vs {:.6}", c.lhs_sup, c.rhs)?;
        }
        writeln!(
            f,
            "final |L(x-d)| {:.3e}, |L v| {:.3e}: {}",
            self.rejection.epos_final,
            self.rejection.lvel_final,
            if self.rejected { "rejected" } else { "not rejected" }
        )?;
        if let Some(s) = &self.stationary_error {
            writeln!(f, "stationary error {:.6} (predicted {:.6})", s.final_norm, s.predicted_norm)?;
        }
        if !self.spanning_tree {
            writeln!(f, "warning: graph has no directed spanning tree")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub n_agents: usize,
    pub horizon: f64,
    pub formation_error_ratio: f64,
    pub xi_ratio: f64,
    pub bound: f64,
    pub rejected: bool,
    pub epos_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub entries: Vec<SweepEntry>,
}

/// Runs the formation scenario once per agent count, concurrently. The
/// topology must be a preset so it can be resized.
pub fn run_sweep(file: &ScenarioFile, sizes: &[usize]) -> Result<(SweepReport, Vec<FormationOutcome>)> {
    let files = sizes
        .iter()
        .map(|&n| {
            let mut f = file.clone();
            f.n_agents = Some(n);
            match &mut f.topology {
                None => {}
                Some(TopologySpec::Preset { n: size, .. }) => *size = None,
                Some(_) => return Err(Error::InvalidScenario("sweep needs a preset topology".into())),
            }
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<Result<FormationOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = files.iter().map(|f| scope.spawn(move || run_formation(f))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let entries = outcomes
        .iter()
        .map(|o| SweepEntry {
            n_agents: o.report.n_agents,
            horizon: o.report.horizon,
            formation_error_ratio: o.report.sup_ratios.formation_error.ratio,
            xi_ratio: o.report.sup_ratios.xi,
            bound: o.report.bounds.initial_condition.value,
            rejected: o.report.rejected,
            epos_final: o.report.rejection.epos_final,
        })
        .collect();
    Ok((
        SweepReport {
            schema_version: SCHEMA_VERSION,
            command: "sweep",
            entries,
        },
        outcomes,
    ))
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>12} {:>12} {:>10}", "N", "ratio", "bound", "rejected")?;
        for e in &self.entries {
            writeln!(
                f,
                "{:>6} {:>12.6} {:>12.6} {:>10}",
                e.n_agents, e.formation_error_ratio, e.bound, e.rejected
            )?;
        }
        Ok(())
    }
}
