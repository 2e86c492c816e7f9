//! Dense Hermitian operators on small Hilbert spaces.
//!
//! Everything in this crate that is a matrix (effects, states, observables,
//! classical shadows) is a [`HermitianOperator`]. Dimensions are small (a
//! qubit, or a handful of qubits), so storage is a dense `nalgebra` matrix and
//! spectral questions go through a full eigendecomposition.
//!
//! Qubit operators additionally have a Bloch representation
//! `A = ½ Σ_i x_i σ_i` over `(1, σ_x, σ_y, σ_z)`, in which the trace inner
//! product reads `tr(AB) = ½ Σ_i x_i y_i`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

pub type C64 = Complex64;

/// Largest correction `(A + A†)/2 - A` absorbed silently at construction.
pub const HERMITICITY_TOLERANCE: f64 = 1e-9;

/// Default cap on the dimension produced by [`tensor`].
pub const DEFAULT_DIM_CAP: usize = 1 << 12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: DMatrix<C64>,
}

/// Spectrum of a Hermitian operator, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: DMatrix<C64>,
}

impl HermitianOperator {
    /// Builds an operator from a square complex matrix.
    ///
    /// The input is symmetrized; a correction larger than
    /// [`HERMITICITY_TOLERANCE`] is rejected.
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidOperator(format!(
                "matrix is {}x{}, not square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() < 2 {
            return Err(Error::InvalidOperator(format!(
                "dimension {} is below 2",
                mat.nrows()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidOperator("non-finite entry".into()));
        }
        let sym = (&mat + mat.adjoint()).scale(0.5);
        let correction = max_abs(&(&sym - &mat));
        if correction > HERMITICITY_TOLERANCE {
            return Err(Error::InvalidOperator(format!(
                "not Hermitian (deviation {correction:e})"
            )));
        }
        Ok(Self { mat: sym })
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        debug_assert!(mat.is_square());
        let sym = (&mat + mat.adjoint()).scale(0.5);
        Self { mat: sym }
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(entries[i * dim + j], 0.0)
        }))
    }

    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let dim = re.len();
        let rows_ok = re.iter().all(|r| r.len() == dim)
            && (im.is_empty() || (im.len() == dim && im.iter().all(|r| r.len() == dim)));
        if !rows_ok {
            return Err(Error::InvalidOperator("ragged re/im arrays".into()));
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| {
            let imag = if im.is_empty() { 0.0 } else { im[i][j] };
            C64::new(re[i][j], imag)
        }))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        Self::new(DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// Rank-one projector onto the (normalized) vector `psi`.
    pub fn projector(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidOperator("zero state vector".into()));
        }
        let v = psi.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn pauli_x() -> Self {
        Self::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
    }

    pub fn pauli_y() -> Self {
        Self::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]))
    }

    pub fn pauli_z() -> Self {
        Self::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]))
    }

    /// `(1, σ_x, σ_y, σ_z)`.
    pub fn pauli_basis() -> [Self; 4] {
        [
            Self::identity(2),
            Self::pauli_x(),
            Self::pauli_y(),
            Self::pauli_z(),
        ]
    }

    /// Pure qubit state pointing along the unit vector `n`: `(1 + n·σ)/2`.
    pub fn qubit_projector(n: [f64; 3]) -> Result<Self> {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if (len - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidOperator(format!(
                "direction has length {len}, expected 1"
            )));
        }
        Ok(BlochVector::new(1.0, n).to_operator())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// `tr(AB)`, which is real for Hermitian `A` and `B`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// `⟨ψ|A|ψ⟩` for a (not necessarily normalized) vector.
    pub fn expectation(&self, psi: &DVector<C64>) -> f64 {
        (psi.adjoint() * &self.mat * psi)[(0, 0)].re
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.mat)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mat: self.mat.scale(factor),
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        self.mat.zip_apply(&other.mat, |a, b| *a += b * factor);
    }

    /// `U† A U`.
    pub fn conjugated_by(&self, unitary: &DMatrix<C64>) -> Result<Self> {
        if unitary.nrows() != self.dim() || !unitary.is_square() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        Ok(Self::from_matrix_unchecked(
            unitary.adjoint() * &self.mat * unitary,
        ))
    }

    pub fn spectrum(&self) -> Spectrum {
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Spectrum { values, vectors }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        if self.dim() == 2 {
            return qubit_eigenvalues(&self.mat).1;
        }
        self.spectrum().values[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 2 {
            return qubit_eigenvalues(&self.mat).0;
        }
        *self.spectrum().values.last().expect("dimension >= 2")
    }

    /// Applies `f` to the eigenvalues: `Σ f(λ_i) |v_i⟩⟨v_i|`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let eig = self.spectrum();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            eig.values.len(),
            eig.values.iter().map(|&l| C64::new(f(l), 0.0)),
        ));
        Self::from_matrix_unchecked(&eig.vectors * d * eig.vectors.adjoint())
    }

    /// Checks that the operator is a density operator (PSD, unit trace).
    pub fn check_density(&self, tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    /// Whether the operator is a real multiple of the identity.
    pub fn is_scalar(&self, tol: f64) -> bool {
        let c = self.trace() / self.dim() as f64;
        self.max_abs_diff(&Self::identity(self.dim()).scaled(c)) <= tol
    }

    /// Bloch coordinates `x_i = tr(A σ_i)`.
    pub fn to_bloch(&self) -> Result<BlochVector> {
        if self.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: self.dim(),
            });
        }
        let m = &self.mat;
        Ok(BlochVector {
            x0: m[(0, 0)].re + m[(1, 1)].re,
            r: [
                2.0 * m[(0, 1)].re,
                -2.0 * m[(0, 1)].im,
                m[(0, 0)].re - m[(1, 1)].re,
            ],
        })
    }
}

/// Eigenvalues `(min, max)` of a 2×2 Hermitian matrix.
fn qubit_eigenvalues(m: &DMatrix<C64>) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> HermitianOperator {
        HermitianOperator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scaled(rhs)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scaled(-1.0)
    }
}

/// Kronecker product with the default dimension cap.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    tensor_with_cap(a, b, DEFAULT_DIM_CAP)
}

pub fn tensor_with_cap(
    a: &HermitianOperator,
    b: &HermitianOperator,
    cap: usize,
) -> Result<HermitianOperator> {
    let dim = a.dim() * b.dim();
    if dim > cap {
        return Err(Error::SizeLimit { dim, cap });
    }
    Ok(HermitianOperator::from_matrix_unchecked(
        a.mat.kronecker(&b.mat),
    ))
}

/// Kronecker product of a nonempty list of factors.
pub fn tensor_all(factors: &[HermitianOperator]) -> Result<HermitianOperator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Config("empty factor list".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, f| tensor(&acc, f))
}

/// Real 4-vector representation `A = ½ (x0·1 + r·σ)` of a qubit operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x0: f64,
    pub r: [f64; 3],
}

impl BlochVector {
    pub fn new(x0: f64, r: [f64; 3]) -> Self {
        Self { x0, r }
    }

    pub fn to_operator(&self) -> HermitianOperator {
        let [x, y, z] = self.r;
        HermitianOperator::from_matrix_unchecked(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5 * (self.x0 + z), 0.0),
                C64::new(0.5 * x, -0.5 * y),
                C64::new(0.5 * x, 0.5 * y),
                C64::new(0.5 * (self.x0 - z), 0.0),
            ],
        ))
    }

    /// `tr(AB) = ½ Σ_i x_i y_i`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        0.5 * (self.x0 * other.x0 + dot3(&self.r, &other.r))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x0, self.r[0], self.r[1], self.r[2]]
    }

    pub fn radius(&self) -> f64 {
        dot3(&self.r, &self.r).sqrt()
    }
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Orthonormal basis of the Hermitian operators on `C^D` under `tr(AB)`.
///
/// Normalized Pauli strings when `D` is a power of two, normalized
/// generalized Gell-Mann matrices otherwise. The first element is always
/// `1/√D`.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<HermitianOperator>,
}

impl OperatorBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidOperator(format!(
                "dimension {dim} is below 2"
            )));
        }
        if dim > 64 {
            return Err(Error::SizeLimit { dim, cap: 64 });
        }
        let elements = if dim.is_power_of_two() {
            pauli_strings(dim)
        } else {
            gell_mann(dim)
        };
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    /// Real coordinates `c_i = tr(B_i X)`.
    pub fn coefficients(&self, x: &HermitianOperator) -> DVector<f64> {
        DVector::from_iterator(
            self.elements.len(),
            self.elements.iter().map(|b| b.trace_product(x)),
        )
    }

    pub fn operator(&self, coefficients: &DVector<f64>) -> HermitianOperator {
        let mut out = HermitianOperator::zeros(self.dim);
        for (c, b) in coefficients.iter().zip(&self.elements) {
            out.add_scaled(*c, b);
        }
        out
    }
}

fn pauli_strings(dim: usize) -> Vec<HermitianOperator> {
    let qubits = dim.trailing_zeros() as usize;
    let paulis = HermitianOperator::pauli_basis();
    let norm = 1.0 / (dim as f64).sqrt();
    (0..dim * dim)
        .map(|index| {
            // Most significant base-4 digit acts on the first qubit.
            let mut m = DMatrix::from_element(1, 1, ONE);
            for q in (0..qubits).rev() {
                let digit = (index / 4usize.pow(q as u32)) % 4;
                m = m.kronecker(paulis[digit].matrix());
            }
            HermitianOperator::from_matrix_unchecked(m.scale(norm))
        })
        .collect()
}

fn gell_mann(dim: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::with_capacity(dim * dim);
    out.push(HermitianOperator::identity(dim).scaled(1.0 / (dim as f64).sqrt()));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..dim {
        for k in j + 1..dim {
            let mut sym = DMatrix::zeros(dim, dim);
            sym[(j, k)] = C64::new(s, 0.0);
            sym[(k, j)] = C64::new(s, 0.0);
            out.push(HermitianOperator::from_matrix_unchecked(sym));
            let mut anti = DMatrix::zeros(dim, dim);
            anti[(j, k)] = C64::new(0.0, -s);
            anti[(k, j)] = C64::new(0.0, s);
            out.push(HermitianOperator::from_matrix_unchecked(anti));
        }
    }
    for l in 1..dim {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; dim];
        for d in diag.iter_mut().take(l) {
            *d = norm;
        }
        diag[l] = -(l as f64) * norm;
        out.push(HermitianOperator::diagonal(&diag).expect("real diagonal is Hermitian"));
    }
    out
}

/// Haar-random unit vector in `C^dim`.
pub fn haar_random_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v.unscale(norm)
}

/// Rank-one projector onto a Haar-random pure state.
///
/// Deterministic in `seed`: the generator is ChaCha8 keyed by `seed`
/// (see [`crate::rng`]), amplitudes are pairs of standard normals per
/// component, real part first.
pub fn haar_random_projection(seed: u64, dim: usize) -> Result<HermitianOperator> {
    if dim < 2 {
        return Err(Error::InvalidOperator(format!(
            "dimension {dim} is below 2"
        )));
    }
    let mut rng = StreamRng::seed_from_u64(seed);
    HermitianOperator::projector(&haar_random_vector(&mut rng, dim))
}
