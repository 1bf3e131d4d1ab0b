//! Annealed smoothing with seeded multistart.
//!
//! Each restart draws a Gaussian random frame and minimizes the smoothed
//! objective for every smoothing level of a decreasing schedule, warm-starting
//! each level from the previous level's raw parameters. The best restart by
//! final coherence wins; ties go to the lower restart index.
//!
//! Restart `i` uses the stream seeded by [`child_seed`]`(seed, i)`, so results
//! do not depend on the order or thread on which restarts run.

use std::time::Instant;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::AltProjConfig;
use crate::error::{Error, Result};
use crate::frames::{coherence, norm, normalize_columns, Frame, ZERO_COLUMN_TOL};
use crate::smoothing::{
    eval_objective, exact_hessian_vector_product, fd_base_step, hessian_vector_product, hessian_vector_product_forward,
    HessianMode, SmoothObjective,
};
use crate::trustregion::{trust_region_minimize, TrustRegionConfig, TrustRegionProblem, TrustRegionStatus};

/// Largest smoothing level of the default schedule.
pub const SCHEDULE_START: f64 = 1e-1;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of restart `index`: `splitmix64(seed + (index + 1) * 0x9E3779B97F4A7C15)`
/// with wrapping arithmetic.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Smoothing level that keeps the smoothed maximum within `eps` of the true
/// maximum over `N(N-1)/2` terms: `eps / (2 ln N)`.
pub fn terminal_delta(n: usize, eps_target: f64) -> f64 {
    eps_target / (2.0 * (n as f64).ln())
}

/// Decades `1e-1, 1e-2, ...` down to the terminal level `eps / (2 ln N)`.
///
/// Decades within a factor 2 of the terminal level are skipped so the last
/// step is not degenerate. At least two levels are always returned.
pub fn default_delta_schedule(n: usize, eps_target: f64) -> Result<Vec<f64>> {
    if n < 2 || !(eps_target > 0.0 && eps_target.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "schedule needs N >= 2 and eps > 0, got N={n}, eps={eps_target}"
        )));
    }
    let terminal = terminal_delta(n, eps_target);
    let mut schedule = Vec::new();
    let mut level = SCHEDULE_START;
    while level > 2.0 * terminal {
        schedule.push(level);
        level /= 10.0;
    }
    if schedule.is_empty() {
        schedule.push(10.0 * terminal);
    }
    schedule.push(terminal);
    Ok(schedule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub delta_schedule: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Trust-region settings shared by all stages; `max_outer` is replaced by
    /// the per-stage cap.
    pub tr: TrustRegionConfig,
    pub eps_target: f64,
    pub hessian: HessianMode,
    /// Stage `k` (0-based) runs at most `stage_iters_base + stage_iters_step * k`
    /// outer iterations.
    pub stage_iters_base: usize,
    pub stage_iters_step: usize,
}

impl SolverConfig {
    /// Defaults: 20 restarts, seed 0, `eps = 1e-7`.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_eps(d, n, 1e-7)
    }

    pub fn with_eps(d: usize, n: usize, eps_target: f64) -> Result<Self> {
        if d == 0 || n < 2 {
            return Err(Error::InvalidConfig(format!(
                "solver needs d >= 1 and N >= 2, got d={d}, N={n}"
            )));
        }
        Ok(SolverConfig {
            d,
            n,
            delta_schedule: default_delta_schedule(n, eps_target)?,
            restarts: 20,
            seed: 0,
            tr: TrustRegionConfig::for_dim(2 * d * n),
            eps_target,
            hessian: HessianMode::default(),
            stage_iters_base: 200,
            stage_iters_step: 50,
        })
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n < 2 {
            return Err(Error::InvalidConfig(format!("bad size d={}, N={}", self.d, self.n)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.delta_schedule.is_empty()
            || self.delta_schedule.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || self.delta_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::InvalidConfig(
                "delta schedule must be positive and strictly decreasing".into(),
            ));
        }
        self.tr.validate()
    }

    fn stage_cap(&self, stage: usize) -> usize {
        self.stage_iters_base + self.stage_iters_step * stage
    }
}

/// Method and settings that produced a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodConfig {
    Trstmi(SolverConfig),
    Altproj(AltProjConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub delta: f64,
    pub objective: f64,
    pub coherence: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: TrustRegionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub seed: u64,
    /// `None` when the restart failed.
    pub final_coherence: Option<f64>,
    /// Total outer iterations over all stages.
    pub iterations: usize,
    pub stages: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_frame: Frame,
    pub best_coherence: f64,
    pub best_restart: usize,
    pub per_restart: Vec<RestartSummary>,
    pub config_echo: MethodConfig,
    pub wall_time: f64,
}

/// Frame with i.i.d. standard Gaussian real and imaginary parts, normalized.
pub fn random_frame<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Frame {
    let w = 2 * d;
    let mut data = Vec::with_capacity(w * n);
    for _ in 0..n {
        let col = loop {
            let col: Vec<f64> = (0..w).map(|_| rng.sample(StandardNormal)).collect();
            if norm(&col) >= ZERO_COLUMN_TOL {
                break col;
            }
        };
        data.extend_from_slice(&col);
    }
    let raw = Frame::new(d.max(1), n.max(1), data).expect("random frame has a valid shape");
    normalize_columns(&raw).expect("columns were redrawn until nonzero")
}

struct FrameProblem {
    obj: SmoothObjective,
    mode: HessianMode,
}

impl TrustRegionProblem for FrameProblem {
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let e = eval_objective(x, &self.obj).ok()?;
        (e.value.is_finite() && e.grad.iter().all(|g| g.is_finite())).then_some((e.value, e.grad))
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let out = match self.mode {
            HessianMode::Exact => exact_hessian_vector_product(x, v, &self.obj),
            HessianMode::FiniteDifference => hessian_vector_product(x, v, &self.obj, fd_base_step())
                .or_else(|_| hessian_vector_product_forward(x, v, &self.obj, f64::EPSILON.sqrt())),
        };
        // A zero product sends Steihaug CG to the boundary along -g.
        out.unwrap_or_else(|_| vec![0.0; x.len()])
    }
}

/// Re-draws columns whose norm collapsed, at most three attempts each.
fn rescue_columns<R: Rng + ?Sized>(d: usize, x: &mut [f64], rng: &mut R) -> Result<()> {
    for (index, col) in x.chunks_exact_mut(2 * d).enumerate() {
        let mut attempts = 0;
        while !(norm(col) >= ZERO_COLUMN_TOL) || col.iter().any(|v| !v.is_finite()) {
            if attempts == 3 {
                return Err(Error::ZeroColumn { index, norm: norm(col) });
            }
            for v in col.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            attempts += 1;
        }
    }
    Ok(())
}

/// Runs every smoothing stage from `start` and returns the normalized result.
pub fn anneal<R: Rng + ?Sized>(start: &Frame, cfg: &SolverConfig, rng: &mut R) -> Result<(Frame, Vec<StageRecord>)> {
    if start.d() != cfg.d || start.n() != cfg.n {
        return Err(Error::DimensionMismatch {
            expected: 2 * cfg.d * cfg.n,
            found: start.as_slice().len(),
        });
    }
    let mut x = start.as_slice().to_vec();
    let mut stages = Vec::with_capacity(cfg.delta_schedule.len());
    for (k, &delta) in cfg.delta_schedule.iter().enumerate() {
        rescue_columns(cfg.d, &mut x, rng)?;
        let problem = FrameProblem {
            obj: SmoothObjective::new(cfg.d, cfg.n, delta)?,
            mode: cfg.hessian,
        };
        let mut tr = cfg.tr;
        tr.max_outer = cfg.stage_cap(k);
        let out = trust_region_minimize(&problem, &x, &tr)?;
        x = out.x;
        let frame = normalize_columns(&Frame::new(cfg.d, cfg.n, x.clone())?)?;
        let record = StageRecord {
            delta,
            objective: out.f,
            coherence: coherence(&frame),
            iterations: out.history.len(),
            grad_norm: out.grad_norm,
            status: out.status,
        };
        debug!(
            "stage {k}: delta={delta:e} coherence={:.9} iters={} status={:?}",
            record.coherence, record.iterations, record.status
        );
        stages.push(record);
    }
    let frame = normalize_columns(&Frame::new(cfg.d, cfg.n, x)?)?;
    Ok((frame, stages))
}

fn run_restart(cfg: &SolverConfig, index: usize) -> (RestartSummary, Option<Frame>) {
    let seed = child_seed(cfg.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_frame(cfg.d, cfg.n, &mut rng);
    match anneal(&start, cfg, &mut rng) {
        Ok((frame, stages)) => (
            RestartSummary {
                index,
                seed,
                final_coherence: Some(coherence(&frame)),
                iterations: stages.iter().map(|s| s.iterations).sum(),
                stages,
                error: None,
            },
            Some(frame),
        ),
        Err(e) => (
            RestartSummary {
                index,
                seed,
                final_coherence: None,
                iterations: 0,
                stages: Vec::new(),
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

/// Runs `restarts` jobs on a pool of `threads` workers (`None` uses the global
/// pool) and returns the outputs in index order.
pub(crate) fn run_indexed<T, F>(count: usize, threads: Option<usize>, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match threads {
        Some(1) => (0..count).map(job).collect(),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&job).collect()),
            Err(_) => (0..count).map(job).collect(),
        },
        None => (0..count).into_par_iter().map(job).collect(),
    }
}

/// Picks the lowest coherence, breaking ties by restart index.
pub(crate) fn pick_best(
    outcomes: Vec<(RestartSummary, Option<Frame>)>,
) -> Result<(Vec<RestartSummary>, Frame, f64, usize)> {
    let mut best: Option<(f64, usize, Frame)> = None;
    let mut summaries = Vec::with_capacity(outcomes.len());
    let mut last_error = String::from("no restarts ran");
    for (summary, frame) in outcomes {
        if let (Some(c), Some(frame)) = (summary.final_coherence, frame) {
            if best.as_ref().is_none_or(|(bc, _, _)| c < *bc) {
                best = Some((c, summary.index, frame));
            }
        }
        if let Some(e) = &summary.error {
            last_error = e.clone();
        }
        summaries.push(summary);
    }
    let (c, idx, frame) = best.ok_or(Error::AllRestartsFailed(last_error))?;
    Ok((summaries, frame, c, idx))
}

/// Multistart solve. Restarts run in parallel; `threads = Some(1)` keeps
/// everything on the calling thread.
pub fn solve(cfg: &SolverConfig, threads: Option<usize>) -> Result<SolveResult> {
    cfg.validate()?;
    let clock = Instant::now();
    let outcomes = run_indexed(cfg.restarts, threads, |i| run_restart(cfg, i));
    let (per_restart, best_frame, best_coherence, best_restart) = pick_best(outcomes)?;
    Ok(SolveResult {
        best_frame,
        best_coherence,
        best_restart,
        per_restart,
        config_echo: MethodConfig::Trstmi(cfg.clone()),
        wall_time: clock.elapsed().as_secs_f64(),
    })
}
