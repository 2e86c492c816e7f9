//! The frame superoperator `C_E(X) = Σ_k tr(X E_k) E_k`, its inverse, and the
//! least-square classical shadows `ρ̂_k = C_E^{-1}(E_k)`.
//!
//! Three routes to the shadows are provided and cross-checked in tests:
//! direct inversion of the frame ([`classical_shadows`]), the closed form
//! `a E_k + b 1` for rigidly symmetric measurements
//! ([`classical_shadows_symmetric`]) and the qubit Bloch formula with the
//! 3×3 matrix `H` ([`bloch_least_squares`]).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::operator::{BlochVector, HermitianOperator, OperatorBasis};
use crate::povm::{Povm, SymmetryCoefficients, UNIFORMITY_TOLERANCE};

/// Relative eigenvalue floor below which the frame counts as singular.
pub const INVERTIBILITY_RATIO: f64 = 1e-10;

/// `C_E` as a real symmetric `D² × D²` matrix in an orthonormal operator basis.
#[derive(Clone, Debug)]
pub struct FrameSuperoperator {
    basis: Arc<OperatorBasis>,
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl FrameSuperoperator {
    pub fn new(povm: &Povm) -> Result<Self> {
        let basis = Arc::new(OperatorBasis::new(povm.dim())?);
        let n = basis.len();
        let mut matrix = DMatrix::<f64>::zeros(n, n);
        for e in povm.effects() {
            let c = basis.coefficients(e);
            matrix.ger(1.0, &c, &c, 1.0);
        }
        let eig = SymmetricEigen::new(matrix.clone());
        Ok(Self {
            basis,
            matrix,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        let max = self.eigenvalues.max();
        self.eigenvalues
            .iter()
            .filter(|&&l| l > INVERTIBILITY_RATIO * max)
            .count()
    }

    /// Smallest over largest eigenvalue.
    pub fn eigenvalue_ratio(&self) -> f64 {
        let max = self.eigenvalues.max();
        if max <= 0.0 {
            return 0.0;
        }
        self.eigenvalues.min() / max
    }

    pub fn is_invertible(&self) -> bool {
        self.eigenvalue_ratio() > INVERTIBILITY_RATIO
    }

    /// `C_E(X) = Σ_k tr(X E_k) E_k`.
    pub fn apply(&self, x: &HermitianOperator) -> HermitianOperator {
        self.basis
            .operator(&(&self.matrix * self.basis.coefficients(x)))
    }

    /// `C_E^{-1}(X)`; fails instead of pseudo-inverting a singular frame.
    pub fn apply_inverse(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        if !self.is_invertible() {
            return Err(Error::NotInformationallyComplete {
                ratio: self.eigenvalue_ratio(),
            });
        }
        let c = self.basis.coefficients(x);
        let mut y = self.eigenvectors.transpose() * c;
        y.component_div_assign(&self.eigenvalues);
        Ok(self.basis.operator(&(&self.eigenvectors * y)))
    }
}

pub fn frame_operator(povm: &Povm) -> Result<FrameSuperoperator> {
    FrameSuperoperator::new(povm)
}

/// The per-outcome estimators `ρ̂_k` of a measurement.
#[derive(Clone, Debug)]
pub struct ClassicalShadowSet {
    dim: usize,
    shadows: Vec<HermitianOperator>,
    coefficients: Option<SymmetryCoefficients>,
}

impl ClassicalShadowSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.shadows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shadows.is_empty()
    }

    pub fn shadows(&self) -> &[HermitianOperator] {
        &self.shadows
    }

    pub fn get(&self, k: usize) -> &HermitianOperator {
        &self.shadows[k]
    }

    /// `(α, β, γ, a, b)` when the set came from the closed form.
    pub fn coefficients(&self) -> Option<&SymmetryCoefficients> {
        self.coefficients.as_ref()
    }

    /// Single-outcome estimates `x̂_k = tr(ρ̂_k X)`.
    pub fn estimates(&self, x: &HermitianOperator) -> Result<Vec<f64>> {
        if x.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(self.shadows.iter().map(|s| s.trace_product(x)).collect())
    }

    /// `Σ_k p_k ρ̂_k`.
    pub fn combine(&self, weights: &[f64]) -> Result<HermitianOperator> {
        if weights.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: weights.len(),
            });
        }
        let mut out = HermitianOperator::zeros(self.dim);
        for (w, s) in weights.iter().zip(&self.shadows) {
            out.add_scaled(*w, s);
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.shadows
            .iter()
            .zip(&other.shadows)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Shadows by direct inversion of the frame superoperator.
pub fn classical_shadows(povm: &Povm) -> Result<ClassicalShadowSet> {
    let frame = FrameSuperoperator::new(povm)?;
    let shadows = povm
        .effects()
        .iter()
        .map(|e| frame.apply_inverse(e))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassicalShadowSet {
        dim: povm.dim(),
        shadows,
        coefficients: None,
    })
}

/// Closed-form shadows `a E_k + b 1` for uniform, rigidly symmetric measurements.
///
/// Rigid symmetry cannot be read off `(α, β, γ)`, so every closed-form shadow
/// is compared with the directly inverted one; a deviation above `1e-9`
/// raises [`Error::NotRigidlySymmetric`].
pub fn classical_shadows_symmetric(povm: &Povm) -> Result<ClassicalShadowSet> {
    let coefficients = povm.symmetry_coefficients()?;
    let id = HermitianOperator::identity(povm.dim());
    let shadows: Vec<HermitianOperator> = povm
        .effects()
        .iter()
        .map(|e| {
            let mut s = id.scaled(coefficients.b);
            s.add_scaled(coefficients.a, e);
            s
        })
        .collect();
    let frame = FrameSuperoperator::new(povm)?;
    let mut deviation: f64 = 0.0;
    for (e, s) in povm.effects().iter().zip(&shadows) {
        deviation = deviation.max(frame.apply_inverse(e)?.max_abs_diff(s));
    }
    if deviation > 1e-9 {
        return Err(Error::NotRigidlySymmetric { deviation });
    }
    Ok(ClassicalShadowSet {
        dim: povm.dim(),
        shadows,
        coefficients: Some(coefficients),
    })
}

/// Least-square state estimate `χ_LS(p) = C_E^{-1}(Σ_k p_k E_k)` from an
/// outcome distribution (or any real vector of length `N`).
pub fn least_squares_estimate(povm: &Povm, distribution: &[f64]) -> Result<HermitianOperator> {
    if distribution.len() != povm.len() {
        return Err(Error::Dimension {
            expected: povm.len(),
            found: distribution.len(),
        });
    }
    if distribution.iter().any(|p| !p.is_finite()) {
        return Err(Error::Config("distribution has non-finite entries".into()));
    }
    let mut adjoint = HermitianOperator::zeros(povm.dim());
    for (p, e) in distribution.iter().zip(povm.effects()) {
        adjoint.add_scaled(*p, e);
    }
    FrameSuperoperator::new(povm)?.apply_inverse(&adjoint)
}

/// Qubit least squares in Bloch form for uniform weights `2/N`:
/// `H = (1/N) Σ r_k r_kᵀ` and shadows `(1, H⁻¹ r_k)`.
#[derive(Clone, Debug)]
pub struct BlochLeastSquares {
    pub h: Matrix3<f64>,
    pub h_inverse: Matrix3<f64>,
    pub shadow_columns: Vec<BlochVector>,
}

impl BlochLeastSquares {
    pub fn shadows(&self) -> Vec<HermitianOperator> {
        self.shadow_columns
            .iter()
            .map(BlochVector::to_operator)
            .collect()
    }

    pub fn shadow_set(&self) -> ClassicalShadowSet {
        ClassicalShadowSet {
            dim: 2,
            shadows: self.shadows(),
            coefficients: None,
        }
    }
}

pub fn bloch_least_squares(povm: &Povm) -> Result<BlochLeastSquares> {
    let params = povm.qubit_params()?;
    let n = params.len() as f64;
    let uniform = 2.0 / n;
    if let Some(w) = params
        .weights
        .iter()
        .find(|w| (**w - uniform).abs() > UNIFORMITY_TOLERANCE)
    {
        return Err(Error::NotUniform(format!(
            "weight {w} differs from 2/N = {uniform}"
        )));
    }
    let r: Vec<Vector3<f64>> = params
        .directions
        .iter()
        .map(|v| Vector3::new(v[0], v[1], v[2]))
        .collect();
    let h = r
        .iter()
        .fold(Matrix3::zeros(), |acc, v| acc + v * v.transpose())
        / n;
    let eig = SymmetricEigen::new(h);
    let max = eig.eigenvalues.max();
    if max <= 0.0 || eig.eigenvalues.min() <= INVERTIBILITY_RATIO * max {
        return Err(Error::SingularH);
    }
    let inv_diag = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let h_inverse = eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    let shadow_columns = r
        .iter()
        .map(|v| {
            let s = h_inverse * v;
            BlochVector::new(1.0, [s[0], s[1], s[2]])
        })
        .collect();
    Ok(BlochLeastSquares {
        h,
        h_inverse,
        shadow_columns,
    })
}
