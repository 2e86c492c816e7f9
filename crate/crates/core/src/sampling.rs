//! Monte Carlo measurement records and shadow estimates.
//!
//! Product states are sampled site by site and never touch the joint Hilbert
//! space. Shot `i`, site `j` of an `n`-site run draws the `(i·n + j)`-th
//! uniform of substream 0 of the seed, so records do not depend on how shots
//! are split across threads.

use std::borrow::Borrow;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::ClassicalShadowSet;
use crate::error::{Error, Result};
use crate::operator::{HermitianOperator, C64};
use crate::povm::Povm;
use crate::rng::stream_rng_at;

const CHUNK: usize = 4096;
const NEGATIVE_PROBABILITY_TOLERANCE: f64 = 1e-9;
/// Largest number of sites accepted by the entangled-state sampler.
pub const MAX_JOINT_SITES: usize = 12;
/// Largest joint outcome alphabet for the entangled-state sampler.
pub const MAX_JOINT_OUTCOMES: usize = 1 << 24;

/// One shot: an outcome index (0-based) per site.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutcomeRecord {
    pub site_outcomes: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub shots: usize,
    /// Number of groups for median of means; 1 is the plain mean.
    pub median_groups: usize,
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn new(shots: usize, seed: u64) -> Self {
        Self {
            shots,
            median_groups: 1,
            seed,
        }
    }

    pub fn with_median_groups(mut self, groups: usize) -> Self {
        self.median_groups = groups;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if self.median_groups == 0 || self.median_groups > self.shots {
            return Err(Error::Config(format!(
                "median groups {} not in 1..={}",
                self.median_groups, self.shots
            )));
        }
        Ok(())
    }
}

/// Inverse-CDF sampler over a finite distribution.
#[derive(Clone, Debug)]
pub struct Categorical {
    cdf: Vec<f64>,
}

impl Categorical {
    /// Negative entries down to `-1e-9` are treated as zero; the rest is
    /// renormalized.
    pub fn new(probabilities: &[f64]) -> Result<Self> {
        let mut cdf = Vec::with_capacity(probabilities.len());
        let mut total = 0.0;
        for (k, &p) in probabilities.iter().enumerate() {
            if p.is_nan() || p < -NEGATIVE_PROBABILITY_TOLERANCE {
                return Err(Error::InvalidState(format!(
                    "outcome {k} has probability {p}"
                )));
            }
            total += p.max(0.0);
            cdf.push(total);
        }
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidState(
                "outcome probabilities sum to zero".into(),
            ));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { cdf })
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

fn run_chunks<T: Send>(shots: usize, f: impl Fn(usize, usize) -> Vec<T> + Sync) -> Vec<T> {
    (0..shots.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let start = c * CHUNK;
            f(start, (start + CHUNK).min(shots))
        })
        .collect()
}

/// Samples `config.shots` records from the product state `ρ⁽¹⁾ ⊗ … ⊗ ρ⁽ⁿ⁾`.
pub fn sample_outcomes(
    povms: &[Povm],
    states: &[HermitianOperator],
    config: &EstimatorConfig,
) -> Result<Vec<OutcomeRecord>> {
    config.validate()?;
    if povms.len() != states.len() {
        return Err(Error::Dimension {
            expected: povms.len(),
            found: states.len(),
        });
    }
    if povms.is_empty() {
        return Err(Error::EmptyData);
    }
    let samplers = povms
        .iter()
        .zip(states)
        .map(|(povm, rho)| {
            if rho.dim() != povm.dim() {
                return Err(Error::Dimension {
                    expected: povm.dim(),
                    found: rho.dim(),
                });
            }
            rho.check_density(1e-9)?;
            Categorical::new(&povm.probabilities(rho))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = samplers.len();
    Ok(run_chunks(config.shots, |start, end| {
        let mut rng = stream_rng_at(config.seed, 0, (start * n) as u64);
        (start..end)
            .map(|_| OutcomeRecord {
                site_outcomes: samplers.iter().map(|s| s.sample(&mut rng)).collect(),
            })
            .collect()
    }))
}

/// `tr[(E ⊗ 1) σ]` traced over the first factor of dimension `d`.
fn condition_first(effect: &HermitianOperator, sigma: &DMatrix<C64>, d: usize) -> DMatrix<C64> {
    let rest = sigma.nrows() / d;
    let e = effect.matrix();
    let mut out = DMatrix::<C64>::zeros(rest, rest);
    for a in 0..d {
        for b in 0..d {
            let w = e[(b, a)];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            out += sigma.view((a * rest, b * rest), (rest, rest)) * w;
        }
    }
    out
}

fn joint_recurse(povms: &[Povm], sigma: &DMatrix<C64>, out: &mut Vec<f64>) {
    let (first, rest) = povms.split_first().expect("nonempty");
    if rest.is_empty() {
        for e in first.effects() {
            let p: f64 = (e.matrix().transpose().component_mul(sigma))
                .iter()
                .map(|z| z.re)
                .sum();
            out.push(p);
        }
        return;
    }
    for e in first.effects() {
        joint_recurse(rest, &condition_first(e, sigma, first.dim()), out);
    }
}

/// Outcome distribution of `E⁽¹⁾ ⊗ … ⊗ E⁽ⁿ⁾` on a general (possibly
/// entangled) state, first site most significant.
pub fn joint_distribution(povms: &[Povm], state: &HermitianOperator) -> Result<Vec<f64>> {
    if povms.is_empty() {
        return Err(Error::EmptyData);
    }
    if povms.len() > MAX_JOINT_SITES {
        return Err(Error::Config(format!(
            "entangled sampling supports at most {MAX_JOINT_SITES} sites, got {}",
            povms.len()
        )));
    }
    let dim: usize = povms.iter().map(Povm::dim).product();
    if state.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: state.dim(),
        });
    }
    let outcomes = povms
        .iter()
        .try_fold(1usize, |acc, p| acc.checked_mul(p.len()))
        .filter(|&o| o <= MAX_JOINT_OUTCOMES)
        .ok_or_else(|| {
            Error::Config(format!(
                "joint outcome alphabet exceeds {MAX_JOINT_OUTCOMES}"
            ))
        })?;
    state.check_density(1e-9)?;
    let mut out = Vec::with_capacity(outcomes);
    joint_recurse(povms, state.matrix(), &mut out);
    Ok(out)
}

/// Samples records from a joint state on up to [`MAX_JOINT_SITES`] sites.
pub fn sample_outcomes_entangled(
    povms: &[Povm],
    state: &HermitianOperator,
    config: &EstimatorConfig,
) -> Result<Vec<OutcomeRecord>> {
    config.validate()?;
    let sampler = Categorical::new(&joint_distribution(povms, state)?)?;
    let sizes: Vec<usize> = povms.iter().map(Povm::len).collect();
    Ok(run_chunks(config.shots, |start, end| {
        let mut rng = stream_rng_at(config.seed, 0, start as u64);
        (start..end)
            .map(|_| OutcomeRecord {
                site_outcomes: split_joint_outcome(sampler.sample(&mut rng), &sizes),
            })
            .collect()
    }))
}

/// Mixed-radix digits of a joint outcome index, first site most significant.
pub fn split_joint_outcome(mut index: usize, sizes: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; sizes.len()];
    for (d, &n) in digits.iter_mut().zip(sizes).rev() {
        *d = index % n;
        index /= n;
    }
    digits
}

fn check_lengths<S: Borrow<ClassicalShadowSet>>(
    shadowsets: &[S],
    factors: &[HermitianOperator],
) -> Result<()> {
    if shadowsets.len() != factors.len() {
        return Err(Error::Dimension {
            expected: shadowsets.len(),
            found: factors.len(),
        });
    }
    Ok(())
}

/// `Π_i tr(ρ̂⁽ⁱ⁾_{k_i} X⁽ⁱ⁾)` for one record.
pub fn single_shot_estimate<S: Borrow<ClassicalShadowSet>>(
    shadowsets: &[S],
    record: &OutcomeRecord,
    factors: &[HermitianOperator],
) -> Result<f64> {
    check_lengths(shadowsets, factors)?;
    if record.site_outcomes.len() != factors.len() {
        return Err(Error::Dimension {
            expected: factors.len(),
            found: record.site_outcomes.len(),
        });
    }
    let mut product = 1.0;
    for ((set, x), &k) in shadowsets.iter().zip(factors).zip(&record.site_outcomes) {
        let set = set.borrow();
        if x.dim() != set.dim() {
            return Err(Error::Dimension {
                expected: set.dim(),
                found: x.dim(),
            });
        }
        if k >= set.len() {
            return Err(Error::Dimension {
                expected: set.len(),
                found: k,
            });
        }
        product *= set.get(k).trace_product(x);
    }
    Ok(product)
}

/// [`single_shot_estimate`] for many records, with per-site lookup tables.
pub fn single_shot_estimates<S: Borrow<ClassicalShadowSet>>(
    shadowsets: &[S],
    records: &[OutcomeRecord],
    factors: &[HermitianOperator],
) -> Result<Vec<f64>> {
    check_lengths(shadowsets, factors)?;
    let tables = shadowsets
        .iter()
        .zip(factors)
        .map(|(s, x)| s.borrow().estimates(x))
        .collect::<Result<Vec<_>>>()?;
    records
        .iter()
        .map(|r| {
            if r.site_outcomes.len() != tables.len() {
                return Err(Error::Dimension {
                    expected: tables.len(),
                    found: r.site_outcomes.len(),
                });
            }
            r.site_outcomes
                .iter()
                .zip(&tables)
                .try_fold(1.0, |acc, (&k, t)| {
                    t.get(k).map(|v| acc * v).ok_or(Error::Dimension {
                        expected: t.len(),
                        found: k,
                    })
                })
        })
        .collect()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= f64::abs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Plain mean (`median_groups = 1`) or median of the means of
/// `median_groups` consecutive equal blocks.
///
/// When the block count does not divide the data, the trailing remainder is
/// dropped with a warning.
pub fn estimate_mean(values: &[f64], median_groups: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    if median_groups == 0 || median_groups > values.len() {
        return Err(Error::Config(format!(
            "median groups {median_groups} not in 1..={}",
            values.len()
        )));
    }
    if median_groups == 1 {
        return Ok(mean(values));
    }
    let size = values.len() / median_groups;
    let used = size * median_groups;
    if used < values.len() {
        log::warn!(
            "dropping {} trailing estimates so that {median_groups} groups are equal",
            values.len() - used
        );
    }
    let mut means: Vec<f64> = values[..used].chunks(size).map(mean).collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    Ok(if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    })
}

/// Unbiased sample variance (zero for a single value).
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    if values.len() == 1 {
        return Ok(0.0);
    }
    let m = mean(values);
    Ok(compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() - 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationSummary {
    pub estimate: f64,
    pub empirical_variance: f64,
    pub shots: usize,
    pub seed: u64,
}

/// Samples a product state and estimates `tr(ρ X)` for a product observable.
pub fn simulate_product(
    povms: &[Povm],
    states: &[HermitianOperator],
    factors: &[HermitianOperator],
    config: &EstimatorConfig,
) -> Result<SimulationSummary> {
    let shadows = povms
        .iter()
        .map(Povm::shadows)
        .collect::<Result<Vec<_>>>()?;
    let records = sample_outcomes(povms, states, config)?;
    let values = single_shot_estimates(&shadows, &records, factors)?;
    Ok(SimulationSummary {
        estimate: estimate_mean(&values, config.median_groups)?,
        empirical_variance: sample_variance(&values)?,
        shots: values.len(),
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::Solid;
    use crate::random::{random_density, random_qubit_povm};
    use crate::rng::stream_rng;
    use crate::tensor;

    fn octa() -> Povm {
        Povm::platonic(Solid::Octahedron)
    }

    fn up() -> HermitianOperator {
        HermitianOperator::qubit_projector([0.0, 0.0, 1.0]).unwrap()
    }

    fn counts(records: &[OutcomeRecord], n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        records.iter().for_each(|r| c[r.site_outcomes[0]] += 1);
        c
    }

    #[test]
    fn mixed_state_frequencies() {
        let mixed = HermitianOperator::identity(2).scaled(0.5);
        let m = 100_000;
        let recs = sample_outcomes(&[octa()], &[mixed], &EstimatorConfig::new(m, 1)).unwrap();
        let sigma = (m as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts(&recs, 6) {
            assert!((c as f64 - m as f64 / 6.0).abs() <= 3.0 * sigma, "{c}");
        }
    }

    #[test]
    fn impossible_outcome_never_sampled() {
        let recs = sample_outcomes(&[octa()], &[up()], &EstimatorConfig::new(50_000, 2)).unwrap();
        let c = counts(&recs, 6);
        assert_eq!(c[1], 0);
        assert!(c.iter().enumerate().all(|(k, &n)| k == 1 || n > 0));
    }

    #[test]
    fn deterministic_per_seed() {
        let povms = vec![octa(), Povm::platonic(Solid::Tetrahedron)];
        let states = vec![up(), HermitianOperator::identity(2).scaled(0.5)];
        let cfg = EstimatorConfig::new(10_000, 7);
        let a = sample_outcomes(&povms, &states, &cfg).unwrap();
        assert_eq!(a, sample_outcomes(&povms, &states, &cfg).unwrap());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let single = pool.install(|| sample_outcomes(&povms, &states, &cfg).unwrap());
        assert_eq!(a, single);
        let other = sample_outcomes(&povms, &states, &EstimatorConfig::new(10_000, 8)).unwrap();
        assert_ne!(a, other);
        // A prefix of a longer run is the shorter run.
        let long = sample_outcomes(&povms, &states, &EstimatorConfig::new(20_000, 7)).unwrap();
        assert_eq!(&long[..10_000], &a[..]);
    }

    #[test]
    fn invalid_state_rejected() {
        let bad = HermitianOperator::diagonal(&[1.2, -0.2]).unwrap();
        let err = sample_outcomes(&[octa()], &[bad], &EstimatorConfig::new(10, 1)).unwrap_err();
        assert_eq!(err.kind(), "InvalidStateError");
    }

    #[test]
    fn single_shot_examples() {
        let s = octa().shadows().unwrap();
        let z = HermitianOperator::pauli_z();
        let r1 = OutcomeRecord {
            site_outcomes: vec![0],
        };
        assert!(
            (single_shot_estimate(std::slice::from_ref(&s), &r1, std::slice::from_ref(&z))
                .unwrap()
                - 3.0)
                .abs()
                < 1e-12
        );
        let r2 = OutcomeRecord {
            site_outcomes: vec![0, 0],
        };
        let v =
            single_shot_estimate(&[s.clone(), s.clone()], &r2, &[z.clone(), z.clone()]).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let id = HermitianOperator::identity(2);
        for k in 0..6 {
            let r = OutcomeRecord {
                site_outcomes: vec![k, 5 - k],
            };
            let v = single_shot_estimate(&[s.clone(), s.clone()], &r, &[id.clone(), id.clone()])
                .unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            single_shot_estimate(std::slice::from_ref(&s), &r2, std::slice::from_ref(&z))
                .unwrap_err()
                .kind(),
            "DimensionError"
        );
        let recs = vec![
            r2.clone(),
            OutcomeRecord {
                site_outcomes: vec![1, 0],
            },
        ];
        let batch = single_shot_estimates(&[s.clone(), s], &recs, &[z.clone(), z]).unwrap();
        assert!((batch[0] - 9.0).abs() < 1e-12 && (batch[1] + 9.0).abs() < 1e-12);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(estimate_mean(&[1.0, 2.0, 3.0], 1).unwrap(), 2.0);
        let v = [1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 100.0, 101.0, 102.0];
        assert_eq!(estimate_mean(&v, 3).unwrap(), 11.0);
        assert_eq!(estimate_mean(&[4.5], 1).unwrap(), 4.5);
        assert_eq!(estimate_mean(&[], 1).unwrap_err().kind(), "EmptyDataError");
        // Truncation: the trailing 1000 is dropped.
        let t = [1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 100.0, 101.0, 102.0, 1000.0];
        assert_eq!(estimate_mean(&t, 3).unwrap(), 11.0);
    }

    #[test]
    fn median_of_means_properties() {
        let v = [3.0, 1.0, 2.0, 12.0, 10.0, 11.0, 101.0, 100.0, 102.0];
        let mut w = v;
        w.swap(0, 2);
        w.swap(6, 8);
        assert_eq!(estimate_mean(&v, 3).unwrap(), estimate_mean(&w, 3).unwrap());
        let flat = [1.0, 3.0, 2.0, 2.0, 3.0, 1.0];
        assert!(
            (estimate_mean(&flat, 3).unwrap() - estimate_mean(&flat, 1).unwrap()).abs() < 1e-15
        );
    }

    #[test]
    fn compensated_sum_is_accurate() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn unbiased_on_up_state() {
        let z = HermitianOperator::pauli_z();
        let mut pass = 0;
        for seed in 0..20 {
            let s = simulate_product(
                &[octa()],
                &[up()],
                std::slice::from_ref(&z),
                &EstimatorConfig::new(100_000, seed),
            )
            .unwrap();
            if (s.estimate - 1.0).abs() <= 5.0 * (2.0f64 / 1e5).sqrt() {
                pass += 1;
            }
        }
        assert!(pass >= 19);
    }

    #[test]
    fn joint_distribution_of_product_state_factorizes() {
        let mut rng = stream_rng(41, 0);
        let povms = vec![random_qubit_povm(&mut rng, 4), octa()];
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let joint = joint_distribution(&povms, &tensor(&rho, &sigma).unwrap()).unwrap();
        let p = povms[0].probabilities(&rho);
        let q = povms[1].probabilities(&sigma);
        for (idx, v) in joint.iter().enumerate() {
            let d = split_joint_outcome(idx, &[4, 6]);
            assert!((v - p[d[0]] * q[d[1]]).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_state_correlations() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = nalgebra::DVector::from_vec(vec![
            C64::new(s, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
        ]);
        let bell = HermitianOperator::projector(&psi).unwrap();
        let povms = vec![octa(), octa()];
        let joint = joint_distribution(&povms, &bell).unwrap();
        assert!((joint[0] - 1.0 / 18.0).abs() < 1e-12);
        assert!(joint[1].abs() < 1e-12);
        assert!((joint.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let zz = tensor(&HermitianOperator::pauli_z(), &HermitianOperator::pauli_z()).unwrap();
        let cfg = EstimatorConfig::new(100_000, 3);
        let recs = sample_outcomes_entangled(&povms, &bell, &cfg).unwrap();
        assert!(recs
            .iter()
            .all(|r| !(r.site_outcomes[0] == 0 && r.site_outcomes[1] == 1)));
        let shadows = vec![octa().shadows().unwrap(); 2];
        let z = HermitianOperator::pauli_z();
        let values = single_shot_estimates(&shadows, &recs, &[z.clone(), z]).unwrap();
        let est = estimate_mean(&values, 1).unwrap();
        let var =
            crate::norm::estimator_variance(&octa().tensor(&octa()).unwrap(), &zz, &bell).unwrap();
        assert!((est - 1.0).abs() <= 5.0 * (var / 1e5).sqrt(), "{est}");
    }

    #[test]
    fn entangled_sampler_limits() {
        let povms = vec![octa(); 13];
        let err = joint_distribution(&povms, &HermitianOperator::identity(2)).unwrap_err();
        assert_eq!(err.kind(), "ConfigError");
    }

    #[test]
    fn categorical_clamps_noise() {
        let c = Categorical::new(&[0.5, -1e-13, 0.5]).unwrap();
        let mut rng = stream_rng(1, 0);
        assert!((0..1000).all(|_| c.sample(&mut rng) != 1));
        assert_eq!(
            Categorical::new(&[1.0, -0.1]).unwrap_err().kind(),
            "InvalidStateError"
        );
    }
}
