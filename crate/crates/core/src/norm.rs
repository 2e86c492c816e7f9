//! Squared shadow norms, single-shot variances and their qubit shortcuts.
//!
//! With single-shot estimates `x̂_k = tr(ρ̂_k X)`, the squared shadow norm is
//! `‖X‖²_E = λ_max(Σ_k x̂_k² E_k)`, the worst case over states of the second
//! moment `Σ_k x̂_k² tr(ρ E_k)`.

use nalgebra::{Matrix4, SymmetricEigen, Vector3, Vector4};
use rayon::prelude::*;

use crate::channel::{bloch_least_squares, INVERTIBILITY_RATIO};
use crate::error::{Error, Result};
use crate::operator::{BlochVector, HermitianOperator, OperatorBasis};
use crate::povm::{Povm, QubitPovmParams};

/// Relative gap under which the top eigenvalue counts as degenerate.
const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct NormReport {
    pub squared_norm: f64,
    /// Top eigenprojector of the norm operator.
    pub worst_state: HermitianOperator,
    /// `x̂_k²` per outcome.
    pub per_outcome_weights: Vec<f64>,
}

fn check_dims(povm: &Povm, x: &HermitianOperator) -> Result<()> {
    if x.dim() != povm.dim() {
        return Err(Error::Dimension {
            expected: povm.dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// Single-shot estimates `x̂_k = tr(ρ̂_k X)`.
pub fn single_shot_values(povm: &Povm, x: &HermitianOperator) -> Result<Vec<f64>> {
    check_dims(povm, x)?;
    povm.shadows()?.estimates(x)
}

/// `Σ_k x̂_k² E_k`.
pub fn norm_operator(povm: &Povm, x: &HermitianOperator) -> Result<HermitianOperator> {
    let values = single_shot_values(povm, x)?;
    Ok(weighted_effect_sum(povm, values.iter().map(|v| v * v)))
}

fn weighted_effect_sum(povm: &Povm, weights: impl Iterator<Item = f64>) -> HermitianOperator {
    let mut out = HermitianOperator::zeros(povm.dim());
    for (w, e) in weights.zip(povm.effects()) {
        out.add_scaled(w, e);
    }
    out
}

pub fn squared_shadow_norm(povm: &Povm, x: &HermitianOperator) -> Result<NormReport> {
    let values = single_shot_values(povm, x)?;
    let per_outcome_weights: Vec<f64> = values.iter().map(|v| v * v).collect();
    let op = weighted_effect_sum(povm, per_outcome_weights.iter().copied());
    let (squared_norm, worst_state) = top_eigenpair(&op)?;
    Ok(NormReport {
        squared_norm,
        worst_state,
        per_outcome_weights,
    })
}

/// Largest eigenvalue and a deterministic top eigenprojector.
///
/// On a degenerate top eigenspace the state with the lexicographically
/// largest basis coordinates is reported; for a qubit with `op ∝ 1` that is
/// `|+x⟩`.
fn top_eigenpair(op: &HermitianOperator) -> Result<(f64, HermitianOperator)> {
    if op.dim() == 2 {
        let b = op.to_bloch()?;
        let radius = b.radius();
        let lambda = 0.5 * (b.x0 + radius);
        let direction = if radius <= DEGENERACY_TOLERANCE * lambda.abs().max(1.0) {
            [1.0, 0.0, 0.0]
        } else {
            b.r.map(|c| c / radius)
        };
        return Ok((lambda, HermitianOperator::qubit_projector(direction)?));
    }
    let eig = op.spectrum();
    let top = eig.values[0];
    let tol = DEGENERACY_TOLERANCE * top.abs().max(1.0);
    let basis = OperatorBasis::new(op.dim())?;
    let mut best: Option<(Vec<f64>, HermitianOperator)> = None;
    for (i, &value) in eig.values.iter().enumerate() {
        if top - value > tol {
            break;
        }
        let p = HermitianOperator::projector(&eig.vectors.column(i).into_owned())?;
        let key: Vec<f64> = basis.coefficients(&p).iter().copied().collect();
        let better = match &best {
            None => true,
            Some((k, _)) => key
                .iter()
                .zip(k)
                .find(|(a, b)| (**a - **b).abs() > 1e-12)
                .is_some_and(|(a, b)| a > b),
        };
        if better {
            best = Some((key, p));
        }
    }
    Ok((top, best.expect("at least one eigenvector").1))
}

/// Variance of the single-shot estimator on `ρ`:
/// `Σ_k x̂_k² tr(ρ E_k) - tr(ρ X)²`.
pub fn estimator_variance(
    povm: &Povm,
    x: &HermitianOperator,
    rho: &HermitianOperator,
) -> Result<f64> {
    check_dims(povm, rho)?;
    rho.check_density(1e-9)?;
    let values = single_shot_values(povm, x)?;
    let second: f64 = values
        .iter()
        .zip(povm.probabilities(rho))
        .map(|(v, p)| v * v * p)
        .sum();
    let mean = rho.trace_product(x);
    Ok(second - mean * mean)
}

/// Haar-averaged second moment `Σ_k x̂_k² tr(E_k)`, for traceless `X` with
/// `tr X² = 1`.
///
/// This is the state-averaged variance up to an additive constant that does
/// not depend on the measurement; it is meant for comparing measurements.
pub fn average_squared_norm(povm: &Povm, x: &HermitianOperator) -> Result<f64> {
    check_dims(povm, x)?;
    let tr = x.trace();
    let tr2 = x.trace_product(x);
    if tr.abs() > 1e-9 || (tr2 - 1.0).abs() > 1e-9 {
        return Err(Error::Normalization(format!(
            "observable has tr X = {tr} and tr X² = {tr2}; expected 0 and 1"
        )));
    }
    let values = single_shot_values(povm, x)?;
    Ok(values
        .iter()
        .zip(povm.traces())
        .map(|(v, t)| v * v * t)
        .sum())
}

/// A real number stored as `sign · exp(ln_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogProduct {
    pub ln_abs: f64,
    pub negative: bool,
}

impl LogProduct {
    pub const ONE: Self = Self {
        ln_abs: 0.0,
        negative: false,
    };

    pub fn from_value(v: f64) -> Self {
        Self {
            ln_abs: v.abs().ln(),
            negative: v < 0.0,
        }
    }

    pub fn mul_value(self, v: f64) -> Self {
        Self {
            ln_abs: self.ln_abs + v.abs().ln(),
            negative: self.negative ^ (v < 0.0),
        }
    }

    /// The value as an `f64`; overflows to infinity for huge products.
    pub fn value(self) -> f64 {
        let m = self.ln_abs.exp();
        if self.negative {
            -m
        } else {
            m
        }
    }

    pub fn log10(self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }
}

/// Squared shadow norm of `X⁽¹⁾ ⊗ … ⊗ X⁽ⁿ⁾` under `E⁽¹⁾ ⊗ … ⊗ E⁽ⁿ⁾`, as the
/// product of per-site norms, accumulated in log space.
pub fn factorized_squared_norm(
    povms: &[Povm],
    factors: &[HermitianOperator],
) -> Result<LogProduct> {
    if povms.len() != factors.len() {
        return Err(Error::Dimension {
            expected: povms.len(),
            found: factors.len(),
        });
    }
    if povms.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut acc = LogProduct::ONE;
    for (povm, x) in povms.iter().zip(factors) {
        acc = acc.mul_value(squared_shadow_norm(povm, x)?.squared_norm);
    }
    Ok(acc)
}

/// As [`factorized_squared_norm`] with the same measurement on every site.
pub fn factorized_squared_norm_uniform(
    povm: &Povm,
    factors: &[HermitianOperator],
) -> Result<LogProduct> {
    if factors.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut acc = LogProduct::ONE;
    for x in factors {
        acc = acc.mul_value(squared_shadow_norm(povm, x)?.squared_norm);
    }
    Ok(acc)
}

/// Lower bound `(9 + tr H⁻¹)/12` on the largest squared shadow norm of a
/// pure-state projector, for uniform-trace qubit measurements.
pub fn octahedron_bound(povm: &Povm) -> Result<f64> {
    let ls = bloch_least_squares(povm)?;
    Ok((9.0 + ls.h_inverse.trace()) / 12.0)
}

/// Squared norms of qubit observables straight from weights and directions.
///
/// In Bloch coordinates the frame is the 4×4 matrix `M = ½ Σ_k e_k e_kᵀ`
/// with `e_k = w_k (1, v_k)`, and `x̂_k = ½ w_k (y_0 + v_k·y)` for
/// `y = M⁻¹ x`, so one solve per observable replaces the shadow set.
#[derive(Clone, Debug)]
pub struct QubitNormEvaluator {
    weights: Vec<f64>,
    directions: Vec<Vector3<f64>>,
    m_inverse: Matrix4<f64>,
}

impl QubitNormEvaluator {
    pub fn new(params: &QubitPovmParams) -> Result<Self> {
        let directions: Vec<Vector3<f64>> = params
            .directions
            .iter()
            .map(|v| Vector3::from(*v))
            .collect();
        let mut m = Matrix4::zeros();
        for (&w, v) in params.weights.iter().zip(&directions) {
            let e = Vector4::new(w, w * v[0], w * v[1], w * v[2]);
            m += 0.5 * e * e.transpose();
        }
        let eig = SymmetricEigen::new(m);
        let max = eig.eigenvalues.max();
        let ratio = if max > 0.0 {
            eig.eigenvalues.min() / max
        } else {
            0.0
        };
        if ratio <= INVERTIBILITY_RATIO {
            return Err(Error::NotInformationallyComplete { ratio });
        }
        let inv = Matrix4::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
        Ok(Self {
            weights: params.weights.clone(),
            directions,
            m_inverse: eig.eigenvectors * inv * eig.eigenvectors.transpose(),
        })
    }

    pub fn from_povm(povm: &Povm) -> Result<Self> {
        Self::new(&povm.qubit_params()?)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Squared norm from the first-moment direction `y = M⁻¹ x`.
    fn norm_from_y(&self, y: &Vector4<f64>) -> f64 {
        let tail = Vector3::new(y[1], y[2], y[3]);
        let mut a0 = 0.0;
        let mut a = Vector3::zeros();
        for (&w, v) in self.weights.iter().zip(&self.directions) {
            let xk = 0.5 * w * (y[0] + v.dot(&tail));
            let s = xk * xk * w;
            a0 += s;
            a += s * v;
        }
        0.5 * (a0 + a.norm())
    }

    pub fn squared_norm_bloch(&self, x: &BlochVector) -> f64 {
        self.norm_from_y(&(self.m_inverse * Vector4::from(x.as_array())))
    }

    pub fn squared_norm(&self, x: &HermitianOperator) -> Result<f64> {
        Ok(self.squared_norm_bloch(&x.to_bloch()?))
    }

    /// Largest squared norm over `targets`.
    pub fn max_squared_norm(&self, targets: &[BlochVector]) -> f64 {
        targets
            .iter()
            .map(|x| self.squared_norm_bloch(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `count` quasi-uniform unit vectors on the sphere (Fibonacci lattice).
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Largest squared shadow norm of a pure-state projector `½(1 + n·σ)` over
/// a sphere grid.
///
/// The grid is the union of Fibonacci lattices with `r²` points for every
/// `8 ≤ r ≤ resolution`, so the result never decreases with `resolution`.
pub fn max_projection_norm_grid(povm: &Povm, resolution: usize) -> Result<f64> {
    if resolution < 8 {
        return Err(Error::Config(format!(
            "grid resolution {resolution} is below 8"
        )));
    }
    let eval = QubitNormEvaluator::from_povm(povm)?;
    let max = (8..=resolution)
        .into_par_iter()
        .map(|r| {
            fibonacci_sphere(r * r)
                .into_iter()
                .map(|n| eval.squared_norm_bloch(&BlochVector::new(1.0, n)))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::Solid;
    use crate::random::{
        random_density, random_hermitian, random_pure_state, random_qubit_povm,
        random_uniform_qubit_povm,
    };
    use crate::rng::stream_rng;
    use crate::targets::{pauli_eigenprojections, solid_projections};
    use crate::tensor;

    fn octa() -> Povm {
        Povm::platonic(Solid::Octahedron)
    }

    fn tetra() -> Povm {
        Povm::platonic(Solid::Tetrahedron)
    }

    fn norm(povm: &Povm, x: &HermitianOperator) -> f64 {
        squared_shadow_norm(povm, x).unwrap().squared_norm
    }

    #[test]
    fn golden_norms() {
        for p in solid_projections(Solid::Tetrahedron) {
            assert!((norm(&tetra(), &p) - 2.0).abs() < 1e-12);
            assert!((norm(&tetra().inverted().unwrap(), &p) - 1.0).abs() < 1e-12);
        }
        for p in pauli_eigenprojections() {
            assert!((norm(&octa(), &p) - 1.5).abs() < 1e-12);
        }
        assert!((norm(&octa(), &HermitianOperator::pauli_z()) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn report_contents() {
        let r = squared_shadow_norm(&octa(), &HermitianOperator::pauli_z()).unwrap();
        assert_eq!(r.per_outcome_weights.len(), 6);
        assert!((r.per_outcome_weights[0] - 9.0).abs() < 1e-12);
        assert!(r.per_outcome_weights[2].abs() < 1e-12);
        // Norm operator is 3·1: degenerate, reported as |+x⟩.
        let b = r.worst_state.to_bloch().unwrap();
        assert!((b.r[0] - 1.0).abs() < 1e-12);

        let p = &solid_projections(Solid::Tetrahedron)[0];
        let r = squared_shadow_norm(&tetra(), p).unwrap();
        assert!((r.worst_state.trace() - 1.0).abs() < 1e-12);
        assert!(r.worst_state.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn norm_is_max_over_probe_states() {
        let mut rng = stream_rng(31, 0);
        for dim in [2, 3] {
            let povm = if dim == 2 {
                random_qubit_povm(&mut rng, 6)
            } else {
                crate::random::random_povm(&mut rng, 3, 11)
            };
            let x = random_hermitian(&mut rng, dim);
            let r = squared_shadow_norm(&povm, &x).unwrap();
            let second = |s: &HermitianOperator| -> f64 {
                r.per_outcome_weights
                    .iter()
                    .zip(povm.probabilities(s))
                    .map(|(w, p)| w * p)
                    .sum()
            };
            assert!((second(&r.worst_state) - r.squared_norm).abs() < 1e-8);
            for _ in 0..500 {
                assert!(second(&random_pure_state(&mut rng, dim)) <= r.squared_norm + 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_tie_break_in_higher_dimension() {
        // Norm operator of the identity under a uniform measurement is ∝ 1.
        let povm = octa().tensor(&octa()).unwrap();
        let r = squared_shadow_norm(&povm, &HermitianOperator::identity(4)).unwrap();
        assert!((r.squared_norm - 1.0).abs() < 1e-9);
        assert!((r.worst_state.trace() - 1.0).abs() < 1e-9);
        let again = squared_shadow_norm(&povm, &HermitianOperator::identity(4)).unwrap();
        assert_eq!(r.worst_state, again.worst_state);
    }

    #[test]
    fn variance_examples() {
        let z = HermitianOperator::pauli_z();
        let mixed = HermitianOperator::identity(2).scaled(0.5);
        let up = HermitianOperator::qubit_projector([0.0, 0.0, 1.0]).unwrap();
        assert!((estimator_variance(&octa(), &z, &mixed).unwrap() - 3.0).abs() < 1e-12);
        assert!((estimator_variance(&octa(), &z, &up).unwrap() - 2.0).abs() < 1e-12);
        let id = HermitianOperator::identity(2);
        assert!(estimator_variance(&tetra(), &id, &up).unwrap().abs() < 1e-12);
        let bad = HermitianOperator::diagonal(&[1.5, -0.5]).unwrap();
        assert_eq!(
            estimator_variance(&octa(), &z, &bad).unwrap_err().kind(),
            "InvalidStateError"
        );
    }

    #[test]
    fn variance_below_norm() {
        let mut rng = stream_rng(32, 0);
        for i in 0..200 {
            let povm = random_qubit_povm(&mut rng, 4 + i % 6);
            let x = random_hermitian(&mut rng, 2);
            let rho = random_density(&mut rng, 2);
            assert!(estimator_variance(&povm, &x, &rho).unwrap() <= norm(&povm, &x) + 1e-9);
        }
    }

    #[test]
    fn average_examples() {
        let zn = HermitianOperator::pauli_z().scaled(std::f64::consts::FRAC_1_SQRT_2);
        assert!((average_squared_norm(&octa(), &zn).unwrap() - 3.0).abs() < 1e-12);
        assert!((average_squared_norm(&tetra(), &zn).unwrap() - 3.0).abs() < 1e-12);
        let up = HermitianOperator::qubit_projector([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            average_squared_norm(&octa(), &up).unwrap_err().kind(),
            "NormalizationError"
        );
    }

    #[test]
    fn scaling() {
        let mut rng = stream_rng(33, 0);
        let povm = random_qubit_povm(&mut rng, 5);
        let x = random_hermitian(&mut rng, 2);
        let base = norm(&povm, &x);
        for c in [-2.0, 0.3, 7.0] {
            assert!(
                (norm(&povm, &x.scaled(c)) - c * c * base).abs() <= 1e-10 * (1.0 + c * c * base)
            );
        }
    }

    #[test]
    fn factorization_matches_explicit_tensor() {
        let povms = [tetra(), octa(), Povm::platonic(Solid::Cube)];
        let up = HermitianOperator::qubit_projector([0.0, 0.0, 1.0]).unwrap();
        let obs = [
            HermitianOperator::pauli_x(),
            HermitianOperator::pauli_z(),
            up,
        ];
        for (p, a) in povms.iter().zip(&obs) {
            for (q, b) in povms.iter().zip(obs.iter().rev()) {
                let explicit = norm(&p.tensor(q).unwrap(), &tensor(a, b).unwrap());
                let product =
                    factorized_squared_norm(&[p.clone(), q.clone()], &[a.clone(), b.clone()])
                        .unwrap();
                assert!(
                    (explicit - product.value()).abs() < 1e-8,
                    "{explicit} vs {}",
                    product.value()
                );
            }
        }
        let z = HermitianOperator::pauli_z();
        let zz = factorized_squared_norm(&[octa(), octa()], &[z.clone(), z.clone()]).unwrap();
        assert!((zz.value() - 9.0).abs() < 1e-10);
        let one = factorized_squared_norm(&[octa()], std::slice::from_ref(&z)).unwrap();
        assert!((one.value() - norm(&octa(), &z)).abs() < 1e-12);
    }

    #[test]
    fn sixty_site_product_in_log_space() {
        let z = HermitianOperator::pauli_z();
        let factors = vec![z; 60];
        let p = factorized_squared_norm_uniform(&octa(), &factors).unwrap();
        assert!((p.ln_abs - 60.0 * 3f64.ln()).abs() < 1e-9);
        assert!(!p.negative);
        let povms = vec![octa(); 60];
        assert_eq!(factorized_squared_norm(&povms, &factors).unwrap(), p);
        assert_eq!(
            factorized_squared_norm(&povms[..3], &factors)
                .unwrap_err()
                .kind(),
            "DimensionError"
        );
    }

    #[test]
    fn bound_examples() {
        assert!((octahedron_bound(&octa()).unwrap() - 1.5).abs() < 1e-12);
        assert!((octahedron_bound(&tetra()).unwrap() - 1.5).abs() < 1e-12);
        // Shrinking every direction by 0.8 gives H = 0.64/3 and tr H⁻¹ = 14.0625.
        let params = octa().qubit_params().unwrap();
        let shrunk = QubitPovmParams::new(
            params.weights.clone(),
            params
                .directions
                .iter()
                .map(|v| v.map(|c| 0.8 * c))
                .collect(),
        )
        .unwrap()
        .to_povm()
        .unwrap();
        let b = octahedron_bound(&shrunk).unwrap();
        assert!((b - (9.0 + 3.0 * 3.0 / 0.64) / 12.0).abs() < 1e-12);
        assert!(b > 1.5);
    }

    #[test]
    fn grid_examples() {
        for r in [8, 16, 40] {
            assert!((max_projection_norm_grid(&octa(), r).unwrap() - 1.5).abs() < 1e-9);
        }
        assert!((max_projection_norm_grid(&tetra(), 64).unwrap() - 2.0).abs() < 1e-3);
        assert_eq!(
            max_projection_norm_grid(&octa(), 7).unwrap_err().kind(),
            "ConfigError"
        );
        let mut rng = stream_rng(34, 0);
        let povm = random_qubit_povm(&mut rng, 7);
        let mut last = f64::NEG_INFINITY;
        for r in [8, 9, 12, 20] {
            let v = max_projection_norm_grid(&povm, r).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn octahedron_norm_is_direction_independent() {
        let eval = QubitNormEvaluator::from_povm(&octa()).unwrap();
        for n in fibonacci_sphere(500) {
            assert!((eval.squared_norm_bloch(&BlochVector::new(1.0, n)) - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn fast_evaluator_matches_general_path() {
        let mut rng = stream_rng(35, 0);
        for i in 0..100 {
            let povm = random_qubit_povm(&mut rng, 4 + i % 8);
            let eval = QubitNormEvaluator::from_povm(&povm).unwrap();
            let x = random_hermitian(&mut rng, 2);
            let a = eval.squared_norm(&x).unwrap();
            let b = norm(&povm, &x);
            assert!((a - b).abs() <= 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn grid_respects_bound() {
        let mut rng = stream_rng(36, 0);
        for i in 0..10 {
            let povm = random_uniform_qubit_povm(&mut rng, 4 + i % 6);
            let grid = max_projection_norm_grid(&povm, 24).unwrap();
            assert!(grid >= octahedron_bound(&povm).unwrap() - 1e-6);
        }
    }

    #[test]
    fn depolarized_octahedron_norm() {
        let ps = [0.25, 0.5, 0.9, 1.0];
        let mut last = f64::INFINITY;
        for p in ps {
            let povm = octa().depolarize(p).unwrap();
            let expected = 0.75 * (1.0 + 1.0 / (p * p));
            for n in fibonacci_sphere(50) {
                let proj = HermitianOperator::qubit_projector(n).unwrap();
                assert!((norm(&povm, &proj) - expected).abs() < 1e-9);
            }
            assert!(expected < last);
            last = expected;
        }
    }

    #[test]
    fn evaluator_rejects_non_ic() {
        let half = HermitianOperator::identity(2).scaled(0.5);
        let trivial = Povm::new(vec![half.clone(), half]).unwrap();
        assert_eq!(
            QubitNormEvaluator::from_povm(&trivial).unwrap_err().kind(),
            "NotInformationallyCompleteError"
        );
    }
}
