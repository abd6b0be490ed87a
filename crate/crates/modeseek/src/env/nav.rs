//! Drone-escape navigation: T drones start inside an inner disc and try to
//! cross the outer radius within K steps while J obstacles orbit the
//! annulus. A crash is coming within `r_crash` of an obstacle. The game
//! state is checked twice per step, once after the obstacles move and once
//! after the drones move, with the crash condition checked first when a
//! move satisfies both.

use crate::error::{Error, Result};
use crate::nn::{forward, sigmoid, Activation, FlatParams, NetworkShape};
use crate::par::par_map;
use crate::rng::RngHandle;

/// Arena geometry and episode parameters.
#[derive(Debug, Clone)]
pub struct NavParams {
    pub r_inner: f64,
    pub r_outer: f64,
    pub r_crash: f64,
    /// Maximum steps per episode.
    pub steps: usize,
    /// Orbiting obstacle count.
    pub obstacles: usize,
    /// Drone count (the trial count T of the success objective).
    pub drones: usize,
    /// Per-step displacement bound δ.
    pub step_len: f64,
    /// Orbital period bounds: angular frequency is drawn as
    /// 2π·U(1/p_upper, 1/p_lower).
    pub p_lower: f64,
    pub p_upper: f64,
    /// Detection-radius cap for the logistic map.
    pub scale_factor: f64,
}

impl Default for NavParams {
    fn default() -> Self {
        // reference configuration for the navigation study
        let steps = 250usize;
        Self {
            r_inner: 0.25,
            r_outer: 1.0,
            r_crash: 0.05,
            steps,
            obstacles: 50,
            drones: 100,
            step_len: 0.01,
            p_lower: 2.0 * steps as f64,
            p_upper: 3.0 * steps as f64,
            scale_factor: 1.0,
        }
    }
}

impl NavParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_inner > 0.0 && self.r_inner < self.r_outer) {
            return Err(Error::InvalidParameter(
                "need 0 < r_inner < r_outer".into(),
            ));
        }
        if !(self.r_crash > 0.0) {
            return Err(Error::InvalidParameter("r_crash must be positive".into()));
        }
        if self.drones == 0 || self.steps == 0 {
            return Err(Error::InvalidParameter("drones and steps must be >= 1".into()));
        }
        Ok(())
    }

    /// Controller shape: one input feature, two tanh hidden layers of three,
    /// tanh output pair (Δx, Δy). The full parameter vector is
    /// [θ₁ | network weights], θ₁ feeding the detection-radius logistic.
    pub fn controller_shape(&self) -> NetworkShape {
        NetworkShape::controller(1, 2, Activation::Tanh)
    }

    /// Total optimizable dimension: θ₁ plus the network weights.
    pub fn theta_dim(&self) -> usize {
        1 + self.controller_shape().param_count()
    }
}

/// Input-feature variant: I keeps the reciprocal min-distance fallback when
/// nothing is detected, II returns 0 instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NavVariant {
    I,
    II,
}

/// Per-drone terminal status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DroneStatus {
    Escaped,
    Crashed,
    Active,
}

/// One orbiting obstacle: position is closed-form in the step index.
#[derive(Debug, Clone, Copy)]
pub struct Obstacle {
    pub omega: f64,
    pub phase: f64,
    pub radius: f64,
}

impl Obstacle {
    pub fn position(&self, step: usize) -> (f64, f64) {
        let angle = self.omega * step as f64 + self.phase;
        (self.radius * angle.cos(), self.radius * angle.sin())
    }
}

/// Environment initialization: obstacle orbits plus drone starting points.
#[derive(Debug, Clone)]
pub struct NavState {
    pub obstacles: Vec<Obstacle>,
    pub positions: Vec<(f64, f64)>,
    pub status: Vec<DroneStatus>,
    pub step: usize,
}

/// Draw obstacles and drones from the seed: angular frequencies
/// 2π·U(1/p_upper, 1/p_lower), phases 2π·U(0,1), orbital radii
/// U(r_inner + r_crash, r_outer); drones uniform in angle at radius
/// U(0, r_inner).
pub fn init_env(seed: u64, params: &NavParams) -> NavState {
    let mut rng = RngHandle::new(seed);
    let obstacles = (0..params.obstacles)
        .map(|_| {
            let omega =
                2.0 * std::f64::consts::PI * rng.uniform_in(1.0 / params.p_upper, 1.0 / params.p_lower);
            let phase = 2.0 * std::f64::consts::PI * rng.uniform();
            let radius = rng.uniform_in(params.r_inner + params.r_crash, params.r_outer);
            Obstacle {
                omega,
                phase,
                radius,
            }
        })
        .collect();
    let positions = (0..params.drones)
        .map(|_| {
            let r = rng.uniform_in(0.0, params.r_inner);
            let angle = 2.0 * std::f64::consts::PI * rng.uniform();
            (r * angle.cos(), r * angle.sin())
        })
        .collect();
    NavState {
        obstacles,
        positions,
        status: vec![DroneStatus::Active; params.drones],
        step: 0,
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Status of a single drone against the obstacle positions at one instant.
/// The crash case wins when a position satisfies both conditions.
pub fn game_status(
    drone: (f64, f64),
    obstacle_pos: &[(f64, f64)],
    params: &NavParams,
) -> DroneStatus {
    if obstacle_pos
        .iter()
        .any(|&o| dist(drone, o) <= params.r_crash)
    {
        return DroneStatus::Crashed;
    }
    if (drone.0 * drone.0 + drone.1 * drone.1).sqrt() >= params.r_outer {
        return DroneStatus::Escaped;
    }
    DroneStatus::Active
}

/// Detection radius from θ₁: `sf / (1 + e^{−θ₁})`, in (0, sf).
pub fn phi_logistic(theta1: f64, scale_factor: f64) -> f64 {
    scale_factor * sigmoid(theta1)
}

/// The scalar control feature: the sum of reciprocal clearance distances
/// `1/(d − r_crash)` over obstacles within the detection radius. With no
/// obstacle detected, variant I falls back to the reciprocal clearance of
/// the nearest obstacle and variant II to 0.
pub fn input_feature(
    drone: (f64, f64),
    obstacle_pos: &[(f64, f64)],
    r_detection: f64,
    variant: NavVariant,
    params: &NavParams,
) -> f64 {
    let mut sum = 0.0;
    let mut detected = 0usize;
    let mut min_d = f64::INFINITY;
    for &o in obstacle_pos {
        let d = dist(drone, o);
        min_d = min_d.min(d);
        if d <= r_detection {
            sum += 1.0 / (d - params.r_crash);
            detected += 1;
        }
    }
    if detected > 0 {
        sum
    } else {
        match variant {
            NavVariant::I => 1.0 / (min_d - params.r_crash),
            NavVariant::II => 0.0,
        }
    }
}

/// Outcome of one full episode.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub successes: usize,
    pub statuses: Vec<DroneStatus>,
}

/// Optional per-step trajectory sink for plot emission.
pub trait TrajectorySink {
    fn record(&mut self, step: usize, drone: usize, x: f64, y: f64, status: DroneStatus);
}

impl TrajectorySink for () {
    fn record(&mut self, _: usize, _: usize, _: f64, _: f64, _: DroneStatus) {}
}

/// Split θ into (θ₁, network parameters).
pub fn split_theta(theta: &[f64], params: &NavParams) -> Result<(f64, FlatParams)> {
    let shape = params.controller_shape();
    if theta.len() != 1 + shape.param_count() {
        return Err(Error::ShapeMismatch(format!(
            "navigation controller needs {} parameters, got {}",
            1 + shape.param_count(),
            theta.len()
        )));
    }
    Ok((theta[0], FlatParams::new(theta[1..].to_vec(), shape)?))
}

/// Play one episode: per step the obstacles advance and statuses are
/// checked, then every live drone moves by the tanh-bounded control times δ
/// and statuses are checked again. Terminal drones keep their position but
/// are still passed through the controller. Drones still active after the
/// last step count as failures.
pub fn run_episode(
    theta: &[f64],
    seed: u64,
    params: &NavParams,
    variant: NavVariant,
) -> Result<EpisodeOutcome> {
    run_episode_traced(theta, seed, params, variant, &mut ())
}

pub fn run_episode_traced<S: TrajectorySink>(
    theta: &[f64],
    seed: u64,
    params: &NavParams,
    variant: NavVariant,
    sink: &mut S,
) -> Result<EpisodeOutcome> {
    params.validate()?;
    let (theta1, net) = split_theta(theta, params)?;
    let r_detection = phi_logistic(theta1, params.scale_factor);
    let mut state = init_env(seed, params);
    let mut obstacle_pos: Vec<(f64, f64)> = vec![(0.0, 0.0); params.obstacles];

    for k in 1..=params.steps {
        // obstacles move
        for (slot, ob) in obstacle_pos.iter_mut().zip(&state.obstacles) {
            *slot = ob.position(k);
        }
        for t in 0..params.drones {
            if state.status[t] == DroneStatus::Active {
                let s = game_status(state.positions[t], &obstacle_pos, params);
                if s != DroneStatus::Active {
                    state.status[t] = s;
                    sink.record(k, t, state.positions[t].0, state.positions[t].1, s);
                }
            }
        }
        // drones move; terminal drones are evaluated but get δ_t = 0
        for t in 0..params.drones {
            let feature = input_feature(
                state.positions[t],
                &obstacle_pos,
                r_detection,
                variant,
                params,
            );
            let control = forward(&net, &[feature])?;
            if state.status[t] != DroneStatus::Active {
                continue;
            }
            state.positions[t].0 += control[0] * params.step_len;
            state.positions[t].1 += control[1] * params.step_len;
            let s = game_status(state.positions[t], &obstacle_pos, params);
            if s != DroneStatus::Active {
                state.status[t] = s;
            }
            sink.record(k, t, state.positions[t].0, state.positions[t].1, state.status[t]);
        }
        state.step = k;
    }
    // time-out: still-active drones are recorded as failures
    for s in state.status.iter_mut() {
        if *s == DroneStatus::Active {
            *s = DroneStatus::Crashed;
        }
    }
    let successes = state
        .status
        .iter()
        .filter(|&&s| s == DroneStatus::Escaped)
        .count();
    Ok(EpisodeOutcome {
        successes,
        statuses: state.status,
    })
}

/// Success counts for one θ over many seeds, evaluated in parallel.
pub fn evaluate_seeds(
    theta: &[f64],
    seeds: &[u64],
    params: &NavParams,
    variant: NavVariant,
) -> Result<Vec<usize>> {
    let results = par_map(seeds, |&s| {
        run_episode(theta, s, params, variant).map(|o| o.successes)
    });
    results.into_iter().collect()
}
