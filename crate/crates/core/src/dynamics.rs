//! The stochastic walker map.
//!
//! Each iteration draws one mode weight `p ~ U[0, 0.5]`, evaluates the
//! superposed field `Psi = p alpha Psi_a + (0.5 - p) beta Psi_b` and its
//! centered-difference gradient at the current position, then updates
//!
//! ```text
//! w'   = mu (w + Psi)
//! pos' = pos + C w' (-Psi_y, Psi_x)     perpendicular
//! pos' = pos - C w' (Psi_x, Psi_y)      anti-gradient
//! ```
//!
//! A run ends when the walker leaves the corral; the next run restarts at a
//! fresh uniform interior point with `w = w0`.
//!
//! Random streams: the per-step `p` draws come from ChaCha20 stream 0 seeded
//! by `seed`; the start point of run `r` comes from stream `r + 1` of the
//! same seed, so restarts never shift the `p` sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EllipseGeometry, Point};
use crate::modes::{build_mode, Eigenmode, Evaluation, DEFAULT_FD_STEP};
use crate::specfun::ModeSpec;
use crate::stats::HistogramGrid;

/// Name and version of the random generator, for output metadata.
pub const GENERATOR: &str = "ChaCha20Rng (rand_chacha 0.3), seed_from_u64; p on stream 0, restart r on stream r+1";

pub const DEFAULT_MU: f64 = 0.9;
pub const DEFAULT_MAX_TOTAL_ITERS: usize = 100_000;
pub const DEFAULT_MAX_RUNS: usize = 1000;
pub const TARGET_MEAN_STEP: f64 = 0.3;
pub const PILOT_STEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propulsion {
    #[default]
    Perpendicular,
    AntiGradient,
}

impl std::str::FromStr for Propulsion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perpendicular" => Ok(Self::Perpendicular),
            "anti_gradient" | "anti-gradient" => Ok(Self::AntiGradient),
            _ => Err(Error::InvalidParameter(format!(
                "unknown propulsion {s:?}, expected perpendicular or anti_gradient"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub c: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub k: f64,
    pub max_total_iters: usize,
    pub max_runs: usize,
    pub propulsion: Propulsion,
    pub seed: u64,
    pub w0: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            mu: DEFAULT_MU,
            alpha: 0.5,
            beta: 0.5,
            h: DEFAULT_FD_STEP,
            k: DEFAULT_FD_STEP,
            max_total_iters: DEFAULT_MAX_TOTAL_ITERS,
            max_runs: DEFAULT_MAX_RUNS,
            propulsion: Propulsion::Perpendicular,
            seed: 0,
            w0: 0.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad(format!("mu must lie in (0, 1), got {}", self.mu));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.c));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad(format!("weights must be nonnegative, got ({}, {})", self.alpha, self.beta));
        }
        if !(self.h > 0.0 && self.k > 0.0) {
            return bad(format!("finite-difference steps must be positive, got ({}, {})", self.h, self.k));
        }
        if self.max_total_iters == 0 || self.max_runs == 0 {
            return bad("iteration and run budgets must be at least 1".into());
        }
        if !self.w0.is_finite() {
            return bad(format!("w0 must be finite, got {}", self.w0));
        }
        Ok(())
    }

    /// `mu Psi_max / (1 - mu)` with `Psi_max = 0.5 (alpha + beta)`: the
    /// largest `|w|` reachable from `w0 = 0`.
    pub fn amplitude_bound(&self) -> f64 {
        self.mu * 0.5 * (self.alpha + self.beta) / (1.0 - self.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerState {
    pub pos: Point,
    pub w: f64,
    /// Iterations since the start of this run.
    pub iter: u64,
    pub run_id: u32,
    /// The `p` drawn for the step that produced this state; `None` at a
    /// run start.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub states: Vec<WalkerState>,
    /// Indices into `states` where a new run begins (the first run's start
    /// at index 0 is not listed).
    pub run_boundaries: Vec<usize>,
    pub escape_count: usize,
}

impl Trajectory {
    pub fn run_count(&self) -> usize {
        self.run_boundaries.len() + usize::from(!self.states.is_empty())
    }
}

/// The two superposed modes: `alpha_mode` is weighted by `p alpha`,
/// `beta_mode` by `(0.5 - p) beta`.
#[derive(Debug, Clone)]
pub struct ModePair {
    pub alpha_mode: Eigenmode,
    pub beta_mode: Eigenmode,
    pub evaluation: Evaluation,
}

impl ModePair {
    pub fn new(alpha_mode: Eigenmode, beta_mode: Eigenmode) -> Self {
        Self {
            alpha_mode,
            beta_mode,
            evaluation: Evaluation::Direct,
        }
    }

    /// Builds both modes; with `cache = Some(res)` evaluation goes through
    /// `res x res` interpolation grids.
    pub fn build(geom: &EllipseGeometry, alpha: &ModeSpec, beta: &ModeSpec, cache: Option<usize>) -> Result<Self> {
        let a = build_mode(alpha, geom)?;
        let b = build_mode(beta, geom)?;
        match cache {
            Some(res) => Ok(Self {
                alpha_mode: a.with_cache(res)?,
                beta_mode: b.with_cache(res)?,
                evaluation: Evaluation::Cached,
            }),
            None => Ok(Self::new(a, b)),
        }
    }

    pub fn with_evaluation(mut self, how: Evaluation) -> Self {
        self.evaluation = how;
        self
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=0.5).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must lie in [0, 0.5], got {p}")))
    }
}

/// `p alpha Psi_a(pos) + (0.5 - p) beta Psi_b(pos)`.
pub fn wavefield(modes: &ModePair, p: f64, params: &SimParams, pos: Point) -> Result<f64> {
    check_p(p)?;
    let how = modes.evaluation;
    let (wa, wb) = (p * params.alpha, (0.5 - p) * params.beta);
    let mut v = 0.0;
    if wa != 0.0 {
        v += wa * modes.alpha_mode.value_with(pos, how)?;
    }
    if wb != 0.0 {
        v += wb * modes.beta_mode.value_with(pos, how)?;
    }
    Ok(v)
}

/// Field value and centered-difference gradient `(Psi, Psi_x, Psi_y)`.
pub fn field_and_gradient(modes: &ModePair, p: f64, params: &SimParams, pos: Point) -> Result<(f64, f64, f64)> {
    check_p(p)?;
    let how = modes.evaluation;
    let mut out = (0.0, 0.0, 0.0);
    for (weight, mode) in [
        (p * params.alpha, &modes.alpha_mode),
        ((0.5 - p) * params.beta, &modes.beta_mode),
    ] {
        if weight == 0.0 {
            continue;
        }
        let v = mode.value_with(pos, how)?;
        let (gx, gy) = mode.gradient(pos, params.h, params.k, how)?;
        out.0 += weight * v;
        out.1 += weight * gx;
        out.2 += weight * gy;
    }
    Ok(out)
}

/// Everything one map iteration computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDetail {
    pub next: WalkerState,
    pub psi: f64,
    pub gradient: (f64, f64),
    /// The displacement the map applies, before it is added to `pos`.
    pub delta: (f64, f64),
}

pub fn step_detail(state: &WalkerState, modes: &ModePair, params: &SimParams, p: f64) -> Result<StepDetail> {
    let (psi, gx, gy) = field_and_gradient(modes, p, params, state.pos)?;
    let w = params.mu * (state.w + psi);
    let s = params.c * w;
    let delta = match params.propulsion {
        Propulsion::Perpendicular => (-s * gy, s * gx),
        Propulsion::AntiGradient => (-s * gx, -s * gy),
    };
    let next = WalkerState {
        pos: Point::new(state.pos.x + delta.0, state.pos.y + delta.1),
        w,
        iter: state.iter + 1,
        run_id: state.run_id,
        p: Some(p),
    };
    Ok(StepDetail {
        next,
        psi,
        gradient: (gx, gy),
        delta,
    })
}

/// One map iteration with a given `p`.
pub fn step_with_p(state: &WalkerState, modes: &ModePair, params: &SimParams, p: f64) -> Result<WalkerState> {
    Ok(step_detail(state, modes, params, p)?.next)
}

/// One map iteration, consuming exactly one uniform draw from `rng`.
pub fn step<R: Rng + ?Sized>(state: &WalkerState, modes: &ModePair, params: &SimParams, rng: &mut R) -> Result<WalkerState> {
    let p = 0.5 * rng.gen::<f64>();
    step_with_p(state, modes, params, p)
}

/// Start point of run `run_id`, from its own stream.
pub fn restart_point(geom: &EllipseGeometry, seed: u64, run_id: u32) -> Point {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(run_id) + 1);
    geom.sample_interior(&mut rng)
}

/// Iterates the map until `max_total_iters` in-bounds states are recorded
/// (run starts included) or `max_runs` runs have been used up.
pub fn run(modes: &ModePair, params: &SimParams, geom: &EllipseGeometry) -> Result<Trajectory> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let start = |run_id: u32| WalkerState {
        pos: restart_point(geom, params.seed, run_id),
        w: params.w0,
        iter: 0,
        run_id,
        p: None,
    };
    let mut traj = Trajectory::default();
    let mut state = start(0);
    traj.states.push(state);
    let mut moved = false;
    while traj.states.len() < params.max_total_iters {
        let next = step(&state, modes, params, &mut rng)?;
        if geom.contains(next.pos) {
            traj.states.push(next);
            state = next;
            moved = true;
            continue;
        }
        traj.escape_count += 1;
        let run_id = state.run_id + 1;
        if run_id as usize >= params.max_runs {
            break;
        }
        traj.run_boundaries.push(traj.states.len());
        state = start(run_id);
        traj.states.push(state);
    }
    if !moved && params.max_total_iters > 1 {
        return Err(Error::Pathological(format!(
            "all {} runs escaped on their first step (C = {}, mu = {}, weights = ({}, {}))",
            traj.run_count(),
            params.c,
            params.mu,
            params.alpha,
            params.beta
        )));
    }
    Ok(traj)
}

/// `w_next * Psi(.; p)` sampled at the bin centers of an `nx x ny` grid.
pub fn instantaneous_field(
    w_next: f64,
    modes: &ModePair,
    params: &SimParams,
    p: f64,
    nx: usize,
    ny: usize,
) -> Result<HistogramGrid> {
    check_p(p)?;
    HistogramGrid::sample_field(modes.alpha_mode.geometry(), nx, ny, |pos| {
        Ok(w_next * wavefield(modes, p, params, pos)?)
    })
}

/// Mean `|pos_{n+1} - pos_n|` over the within-run steps of a trajectory.
pub fn mean_step(traj: &Trajectory) -> Option<f64> {
    let mut boundaries = traj.run_boundaries.iter().peekable();
    let (mut n, mut sum) = (0usize, 0.0);
    for (i, pair) in traj.states.windows(2).enumerate() {
        while boundaries.peek().is_some_and(|&&b| b <= i) {
            boundaries.next();
        }
        if boundaries.peek().is_some_and(|&&b| b == i + 1) {
            continue;
        }
        n += 1;
        sum += pair[0].pos.distance(&pair[1].pos);
    }
    (n > 0).then(|| sum / n as f64)
}

/// Searches for the `C` at which a pilot run of `pilot_steps` states has
/// mean step `target` (mm).
///
/// The mean step is not monotone in `C` (walkers can stall on nodal
/// lines), so the search brackets a crossing by doubling or halving from
/// `params.c`, then bisects in `log C`. Returns the bracket end whose pilot
/// mean is closest to `target`.
pub fn calibrate_c(
    modes: &ModePair,
    params: &SimParams,
    geom: &EllipseGeometry,
    target: f64,
    pilot_steps: usize,
) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::InvalidParameter(format!("target step must be positive, got {target}")));
    }
    let pilot = |c: f64| -> Result<f64> {
        let prm = SimParams {
            c,
            max_total_iters: pilot_steps,
            max_runs: pilot_steps,
            ..*params
        };
        Ok(mean_step(&run(modes, &prm, geom)?).unwrap_or(0.0))
    };
    let (mut lo, mut hi) = (params.c, params.c);
    let (mut m_lo, mut m_hi) = (pilot(lo)?, 0.0);
    if m_lo >= target {
        m_hi = m_lo;
        for _ in 0..60 {
            lo /= 2.0;
            m_lo = pilot(lo)?;
            if m_lo < target {
                break;
            }
        }
    } else {
        for _ in 0..60 {
            hi *= 2.0;
            m_hi = pilot(hi)?;
            if m_hi >= target {
                break;
            }
        }
    }
    if !(m_lo < target && m_hi >= target) {
        return Err(Error::Pathological(format!(
            "could not bracket a mean step of {target} mm (C in [{lo}, {hi}])"
        )));
    }
    while hi / lo > 1.0 + 1e-3 {
        let mid = (lo * hi).sqrt();
        let m = pilot(mid)?;
        if m >= target {
            (hi, m_hi) = (mid, m);
        } else {
            (lo, m_lo) = (mid, m);
        }
    }
    Ok(if target - m_lo < m_hi - target { lo } else { hi })
}
