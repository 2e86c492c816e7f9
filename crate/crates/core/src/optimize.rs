//! Simulated annealing over qubit measurements, minimizing the largest
//! squared shadow norm over a set of target observables.
//!
//! Targets are products `X⁽¹⁾ ⊗ … ⊗ X⁽ⁿ⁾` measured with the same qubit POVM on
//! every site; a single-qubit target is the case `n = 1`. The energy is the
//! logarithm of the objective, `max_i Σ_j ln ‖X_i⁽ʲ⁾‖²_E`, which stays finite
//! for large `n` and is invariant under rescaling of the observables.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::norm::{factorized_squared_norm_uniform, squared_shadow_norm, QubitNormEvaluator};
use crate::operator::{BlochVector, HermitianOperator};
use crate::povm::{Povm, QubitPovmParams};
use crate::random::random_unit_vector;
use crate::rng::{stream_rng, StreamRng};

/// Smallest move size, relative to `move_scale`, once the schedule has cooled.
const MIN_MOVE_FACTOR: f64 = 0.01;
const TEMPERATURE_PROBES: usize = 100;
const TEMPERATURE_LEVELS: usize = 2000;
/// Share of proposals that redraw one direction from scratch.
const JUMP_PROBABILITY: f64 = 0.02;
const ROTATION_PROBABILITY: f64 = 0.2;
const MAX_INIT_ATTEMPTS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealConfig {
    pub outcomes: usize,
    pub iterations: usize,
    /// Starting temperature; `0` selects it from the spread of random moves.
    pub initial_temperature: f64,
    pub cooling_ratio: f64,
    /// Iterations per temperature level; `0` spreads 2000 levels over the run.
    pub stage_length: usize,
    pub move_scale: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            outcomes: 4,
            iterations: 20_000,
            initial_temperature: 0.0,
            cooling_ratio: 0.995,
            stage_length: 0,
            move_scale: 0.3,
            restarts: 8,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outcomes < 4 {
            return Err(Error::Config(format!(
                "{} outcomes cannot be informationally complete on a qubit",
                self.outcomes
            )));
        }
        if !(self.cooling_ratio > 0.9 && self.cooling_ratio < 1.0) {
            return Err(Error::Config(format!(
                "cooling ratio {} not in (0.9, 1)",
                self.cooling_ratio
            )));
        }
        if self.restarts == 0 || self.iterations == 0 {
            return Err(Error::Config(
                "iterations and restarts must be at least 1".into(),
            ));
        }
        if !(self.move_scale > 0.0 && self.move_scale.is_finite()) {
            return Err(Error::Config(format!(
                "move scale {} must be positive",
                self.move_scale
            )));
        }
        if !(self.initial_temperature >= 0.0 && self.initial_temperature.is_finite()) {
            return Err(Error::Config(format!(
                "initial temperature {} must be finite and non-negative",
                self.initial_temperature
            )));
        }
        Ok(())
    }

    pub fn effective_stage_length(&self) -> usize {
        if self.stage_length > 0 {
            self.stage_length
        } else {
            self.iterations.div_ceil(TEMPERATURE_LEVELS).max(1)
        }
    }
}

#[derive(Clone, Debug)]
pub struct RestartSummary {
    pub restart: usize,
    pub best_objective: f64,
    pub best_ln_objective: f64,
    pub accepted_moves: usize,
    pub best_params: QubitPovmParams,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub best_povm: Povm,
    pub best_params: QubitPovmParams,
    pub best_objective: f64,
    pub best_ln_objective: f64,
    /// `(iteration, objective)`, the best value over all restarts so far.
    pub objective_trace: Vec<(usize, f64)>,
    pub restarts_summary: Vec<RestartSummary>,
    pub initial_temperature: f64,
}

/// Largest squared shadow norm over `observables`.
pub fn objective(povm: &Povm, observables: &[HermitianOperator]) -> Result<f64> {
    if observables.is_empty() {
        return Err(Error::EmptyData);
    }
    observables.iter().try_fold(f64::NEG_INFINITY, |acc, x| {
        Ok(acc.max(squared_shadow_norm(povm, x)?.squared_norm))
    })
}

/// Natural log of the largest factorized squared norm over product targets.
pub fn factorized_ln_objective(
    povm: &Povm,
    site_factors: &[Vec<HermitianOperator>],
) -> Result<f64> {
    if site_factors.is_empty() {
        return Err(Error::EmptyData);
    }
    site_factors.iter().try_fold(f64::NEG_INFINITY, |acc, f| {
        Ok(acc.max(factorized_squared_norm_uniform(povm, f)?.ln_abs))
    })
}

/// Product targets with repeated factors merged: observable `i` contributes
/// `Σ_f counts[i][f] · ln ‖factor_f‖²`.
struct Targets {
    factors: Vec<BlochVector>,
    terms: Vec<Vec<(usize, f64)>>,
    degenerate: bool,
}

impl Targets {
    fn new(n_sites: usize, site_factors: &[Vec<HermitianOperator>]) -> Result<Self> {
        if site_factors.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut factors: Vec<BlochVector> = Vec::new();
        let mut terms = Vec::with_capacity(site_factors.len());
        let mut degenerate = true;
        for (i, list) in site_factors.iter().enumerate() {
            if list.len() != n_sites {
                return Err(Error::NotFactorized(format!(
                    "observable {i} has {} factors for {n_sites} sites",
                    list.len()
                )));
            }
            let mut term: Vec<(usize, f64)> = Vec::new();
            for x in list {
                let b = x.to_bloch()?;
                degenerate &= b.radius() <= 1e-12 * b.x0.abs().max(1.0);
                let idx = match factors.iter().position(|f| *f == b) {
                    Some(j) => j,
                    None => {
                        factors.push(b);
                        factors.len() - 1
                    }
                };
                match term.iter_mut().find(|(j, _)| *j == idx) {
                    Some((_, c)) => *c += 1.0,
                    None => term.push((idx, 1.0)),
                }
            }
            terms.push(term);
        }
        Ok(Self {
            factors,
            terms,
            degenerate,
        })
    }

    fn ln_objective(&self, params: &QubitPovmParams) -> f64 {
        let Ok(eval) = QubitNormEvaluator::new(params) else {
            return f64::INFINITY;
        };
        let ln: Vec<f64> = self
            .factors
            .iter()
            .map(|f| eval.squared_norm_bloch(f).ln())
            .collect();
        self.terms
            .iter()
            .map(|t| t.iter().map(|&(j, c)| c * ln[j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Minimum-norm weight correction onto `Σ w_k = 2`, `Σ w_k v_k = 0`.
///
/// Returns `None` when the directions do not determine a correction or a
/// corrected weight is negative.
fn repair_weights(weights: &[f64], directions: &[[f64; 3]]) -> Option<Vec<f64>> {
    let mut gram = Matrix4::zeros();
    let mut residual = Vector4::new(2.0, 0.0, 0.0, 0.0);
    for (&w, v) in weights.iter().zip(directions) {
        let a = Vector4::new(1.0, v[0], v[1], v[2]);
        gram += a * a.transpose();
        residual -= w * a;
    }
    let eig = SymmetricEigen::new(gram);
    let (min, max) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if min.is_nan() || min <= 1e-12 * max {
        return None;
    }
    let inv = Matrix4::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let y = eig.eigenvectors * inv * eig.eigenvectors.transpose() * residual;
    let repaired: Vec<f64> = weights
        .iter()
        .zip(directions)
        .map(|(&w, v)| w + y[0] + y[1] * v[0] + y[2] * v[1] + y[3] * v[2])
        .collect();
    repaired.iter().all(|&w| w >= 0.0).then_some(repaired)
}

/// Proposes a neighbour: a small rotation of all directions, a Gaussian
/// kick to one direction or one weight, or (rarely) a fresh direction.
/// Weights are then repaired; `None` on rejection.
pub(crate) fn propose<R: Rng + ?Sized>(
    params: &QubitPovmParams,
    rng: &mut R,
    scale: f64,
) -> Option<QubitPovmParams> {
    let n = params.len();
    let k = rng.random_range(0..n);
    let mut weights = params.weights.clone();
    let mut directions = params.directions.clone();
    let roll: f64 = rng.random();
    if roll < ROTATION_PROBABILITY {
        let axis = Vector3::from(random_unit_vector(rng));
        let angle = scale * rng.sample::<f64, _>(StandardNormal);
        let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis), angle);
        for v in directions.iter_mut() {
            let rv = r * Vector3::from(*v);
            *v = [rv[0], rv[1], rv[2]];
        }
        // A rotation keeps every constraint; skip the repair.
        return Some(QubitPovmParams {
            weights,
            directions,
        });
    } else if roll < ROTATION_PROBABILITY + JUMP_PROBABILITY {
        directions[k] = random_unit_vector(rng);
    } else if roll < 0.6 {
        let v = &mut directions[k];
        for c in v.iter_mut() {
            *c += scale * rng.sample::<f64, _>(StandardNormal);
        }
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if len > 1.0 {
            v.iter_mut().for_each(|c| *c /= len);
        }
    } else {
        weights[k] += scale * (2.0 / n as f64) * rng.sample::<f64, _>(StandardNormal);
    }
    let weights = repair_weights(&weights, &directions)?;
    Some(QubitPovmParams {
        weights,
        directions,
    })
}

fn initial_params<R: Rng + ?Sized>(
    outcomes: usize,
    targets: &Targets,
    rng: &mut R,
) -> Result<QubitPovmParams> {
    let uniform = vec![2.0 / outcomes as f64; outcomes];
    for _ in 0..MAX_INIT_ATTEMPTS {
        let directions: Vec<[f64; 3]> = (0..outcomes)
            .map(|_| {
                let u = random_unit_vector(rng);
                let len: f64 = rng.random_range(0.5..=1.0);
                u.map(|c| c * len)
            })
            .collect();
        if let Some(weights) = repair_weights(&uniform, &directions) {
            let params = QubitPovmParams {
                weights,
                directions,
            };
            if targets.ln_objective(&params).is_finite() {
                return Ok(params);
            }
        }
    }
    Err(Error::Config(format!(
        "no feasible informationally complete start with {outcomes} outcomes"
    )))
}

struct RestartRun {
    summary: RestartSummary,
    checkpoints: Vec<(usize, f64)>,
    temperature: f64,
}

fn checkpoint_stride(iterations: usize) -> usize {
    (iterations / 1000).max(1)
}

fn run_restart(restart: usize, targets: &Targets, config: &AnnealConfig) -> Result<RestartRun> {
    let mut rng: StreamRng = stream_rng(config.seed, restart as u64);
    let mut current = initial_params(config.outcomes, targets, &mut rng)?;
    let mut energy = targets.ln_objective(&current);

    let t0 = if config.initial_temperature > 0.0 {
        config.initial_temperature
    } else {
        auto_temperature(&current, energy, targets, config.move_scale, &mut rng)
    };
    let mut best = current.clone();
    let mut best_energy = energy;
    let mut accepted = 0;
    let stride = checkpoint_stride(config.iterations);
    let mut checkpoints = vec![(0, best_energy)];
    let mut t = t0;
    let stage = config.effective_stage_length();
    for it in 1..=config.iterations {
        let scale = config.move_scale * (t / t0).sqrt().max(MIN_MOVE_FACTOR);
        if let Some(candidate) = propose(&current, &mut rng, scale) {
            let e = targets.ln_objective(&candidate);
            let delta = e - energy;
            let u: f64 = rng.random();
            if delta <= 0.0 || u < (-delta / t).exp() {
                current = candidate;
                energy = e;
                accepted += 1;
                if energy < best_energy {
                    best_energy = energy;
                    best = current.clone();
                }
            }
        }
        if it % stage == 0 {
            t *= config.cooling_ratio;
        }
        if it % stride == 0 || it == config.iterations {
            checkpoints.push((it, best_energy));
        }
    }
    log::debug!("restart {restart}: best ln objective {best_energy}, {accepted} moves accepted");
    Ok(RestartRun {
        summary: RestartSummary {
            restart,
            best_objective: best_energy.exp(),
            best_ln_objective: best_energy,
            accepted_moves: accepted,
            best_params: best,
        },
        checkpoints,
        temperature: t0,
    })
}

/// 90th percentile of `|ΔE|` over random moves from the start; 1 if every
/// probe is flat or rejected.
fn auto_temperature<R: Rng + ?Sized>(
    start: &QubitPovmParams,
    energy: f64,
    targets: &Targets,
    move_scale: f64,
    rng: &mut R,
) -> f64 {
    let mut deltas: Vec<f64> = (0..TEMPERATURE_PROBES)
        .filter_map(|_| propose(start, rng, move_scale))
        .map(|c| (targets.ln_objective(&c) - energy).abs())
        .filter(|d| d.is_finite())
        .collect();
    if deltas.is_empty() {
        return 1.0;
    }
    deltas.sort_by(f64::total_cmp);
    let p90 = deltas[((deltas.len() as f64 * 0.9).ceil() as usize).clamp(1, deltas.len()) - 1];
    if p90 > 0.0 {
        p90
    } else {
        1.0
    }
}

fn anneal(
    n_sites: usize,
    site_factors: &[Vec<HermitianOperator>],
    config: &AnnealConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let targets = Targets::new(n_sites, site_factors)?;
    if targets.degenerate {
        log::warn!(
            "every target is proportional to the identity; returning the initial measurement"
        );
        let mut rng = stream_rng(config.seed, 0);
        let params = initial_params(config.outcomes, &targets, &mut rng)?;
        let e = targets.ln_objective(&params);
        return finish(vec![RestartRun {
            summary: RestartSummary {
                restart: 0,
                best_objective: e.exp(),
                best_ln_objective: e,
                accepted_moves: 0,
                best_params: params,
            },
            checkpoints: vec![(0, e)],
            temperature: 0.0,
        }]);
    }
    let runs = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(r, &targets, config))
        .collect::<Result<Vec<_>>>()?;
    finish(runs)
}

fn finish(runs: Vec<RestartRun>) -> Result<OptimizationResult> {
    let winner = runs
        .iter()
        .min_by(|a, b| {
            a.summary
                .best_ln_objective
                .total_cmp(&b.summary.best_ln_objective)
                .then(a.summary.restart.cmp(&b.summary.restart))
        })
        .expect("at least one restart");
    let objective_trace = winner
        .checkpoints
        .iter()
        .enumerate()
        .map(|(i, &(it, _))| {
            let best = runs
                .iter()
                .map(|r| r.checkpoints[i].1)
                .fold(f64::INFINITY, f64::min);
            (it, best.exp())
        })
        .collect();
    let best_params = winner.summary.best_params.clone();
    Ok(OptimizationResult {
        best_povm: best_params.to_povm()?,
        best_params,
        best_objective: winner.summary.best_objective,
        best_ln_objective: winner.summary.best_ln_objective,
        objective_trace,
        initial_temperature: winner.temperature,
        restarts_summary: runs.into_iter().map(|r| r.summary).collect(),
    })
}

/// Anneals a single-qubit measurement against qubit observables.
pub fn anneal_single_qubit(
    observables: &[HermitianOperator],
    config: &AnnealConfig,
) -> Result<OptimizationResult> {
    let lists: Vec<Vec<HermitianOperator>> = observables.iter().map(|x| vec![x.clone()]).collect();
    anneal(1, &lists, config)
}

/// Anneals one qubit measurement used identically on `n_sites` qubits
/// against product observables given by their per-site factors.
pub fn anneal_factorized(
    n_sites: usize,
    site_factors: &[Vec<HermitianOperator>],
    config: &AnnealConfig,
) -> Result<OptimizationResult> {
    if n_sites == 0 {
        return Err(Error::Config("at least one site is required".into()));
    }
    anneal(n_sites, site_factors, config)
}

/// Distance between two qubit measurements with the same outcome count.
///
/// Effect `k` is the point `(N w_k / 2, N w_k v_k / 2)`; the result is the
/// largest point-to-point distance after the best matching of outcomes and,
/// with `rotate`, the best proper rotation of `a` (least-squares fit).
/// Returns `None` for different outcome counts or more than 8 outcomes.
pub fn vertex_distance(a: &QubitPovmParams, b: &QubitPovmParams, rotate: bool) -> Option<f64> {
    let n = a.len();
    if n != b.len() || n > 8 {
        return None;
    }
    let scale = n as f64 / 2.0;
    let points = |p: &QubitPovmParams| -> Vec<(f64, Vector3<f64>)> {
        p.weights
            .iter()
            .zip(&p.directions)
            .map(|(&w, v)| (scale * w, Vector3::from(*v) * (scale * w)))
            .collect()
    };
    let pa = points(a);
    let pb = points(b);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |perm| {
        let rotation = if rotate {
            let h = (0..n).fold(Matrix3::zeros(), |acc, k| {
                acc + pa[k].1 * pb[perm[k]].1.transpose()
            });
            kabsch(&h)
        } else {
            Matrix3::identity()
        };
        let d = (0..n)
            .map(|k| {
                let (sa, va) = pa[k];
                let (sb, vb) = pb[perm[k]];
                ((rotation * va - vb).norm_squared() + (sa - sb).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        best = best.min(d);
    });
    Some(best)
}

/// Proper rotation `R` maximizing `tr(R H)` for `H = Σ a bᵀ`.
fn kabsch(h: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let d = (vt.transpose() * u.transpose()).determinant().signum();
    vt.transpose() * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose()
}

fn permute(perm: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == perm.len() {
        f(perm);
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        permute(perm, start + 1, f);
        perm.swap(start, i);
    }
}
