//! Generalised measurements (POVMs): validation, the named polytope
//! measurements, and the transformations that produce new measurements from
//! old ones.

mod solids;
mod split;

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

pub use solids::Solid;

use crate::channel::{ClassicalShadowSet, FrameSuperoperator};
use crate::error::{Error, Result};
use crate::operator::{tensor, BlochVector, HermitianOperator, C64};

/// Smallest eigenvalue tolerated on an effect.
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;
/// Largest entry of `Σ E_k - 1` tolerated.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Tolerance for "the same for every outcome" checks.
/// Smallest accepted `(Dγ - α³)/α³` for the closed-form coefficients.
pub const DEGENERACY_RATIO: f64 = 1e-6;

pub const UNIFORMITY_TOLERANCE: f64 = 1e-9;

/// A validated measurement `E = {E_k}` with `E_k >= 0` and `Σ E_k = 1`.
#[derive(Clone, Debug)]
pub struct Povm {
    dim: usize,
    effects: Vec<HermitianOperator>,
    labels: Option<Vec<String>>,
    shadows: OnceLock<Arc<ClassicalShadowSet>>,
}

impl Povm {
    /// Validates a list of effects.
    pub fn new(effects: Vec<HermitianOperator>) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::Config("a measurement needs at least one effect".into()))?;
        let dim = first.dim();
        let mut sum = HermitianOperator::zeros(dim);
        for (index, e) in effects.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: e.dim(),
                });
            }
            let min_eigenvalue = e.min_eigenvalue();
            if min_eigenvalue < -POSITIVITY_TOLERANCE {
                return Err(Error::Positivity {
                    index,
                    min_eigenvalue,
                });
            }
            sum.add_scaled(1.0, e);
        }
        let deviation = sum.max_abs_diff(&HermitianOperator::identity(dim));
        if deviation > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization(format!(
                "effects sum to the identity only within {deviation:e}"
            )));
        }
        Ok(Self {
            dim,
            effects,
            labels: None,
            shadows: OnceLock::new(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.effects.len() {
            return Err(Error::Config(format!(
                "{} labels for {} effects",
                labels.len(),
                self.effects.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Resolves a built-in measurement name: any of the seven polytopes,
    /// `sic` (tetrahedron) or `inverted-tetrahedron`.
    pub fn named(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase();
        if let Some(rest) = key.strip_prefix("inverted-") {
            return Self::platonic(rest.parse()?).inverted();
        }
        Ok(Self::platonic(key.parse()?))
    }

    /// Qubit measurement `E_k = (2/N)(1 + r_k·σ)/2` on the vertices of a polytope.
    pub fn platonic(solid: Solid) -> Self {
        let vertices = solid.vertices();
        let weight = 2.0 / vertices.len() as f64;
        let params = QubitPovmParams {
            weights: vec![weight; vertices.len()],
            directions: vertices,
        };
        params
            .to_povm()
            .and_then(|p| p.with_labels(solid.labels()))
            .expect("polytope vertex sets are balanced")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, k: usize) -> String {
        match &self.labels {
            Some(l) => l[k].clone(),
            None => k.to_string(),
        }
    }

    pub fn traces(&self) -> Vec<f64> {
        self.effects.iter().map(HermitianOperator::trace).collect()
    }

    /// Outcome probabilities `tr(ρ E_k)`.
    pub fn probabilities(&self, rho: &HermitianOperator) -> Vec<f64> {
        self.effects.iter().map(|e| e.trace_product(rho)).collect()
    }

    pub fn is_uniform_trace(&self) -> bool {
        let t = self.traces();
        let (lo, hi) = min_max(&t);
        hi - lo <= UNIFORMITY_TOLERANCE
    }

    /// Whether the effects span the full `D²`-dimensional operator space.
    ///
    /// Decided on the frame superoperator, whose nonzero spectrum equals that
    /// of the effect Gram matrix: complete iff its smallest eigenvalue exceeds
    /// `1e-10` times its largest.
    pub fn is_informationally_complete(&self) -> bool {
        FrameSuperoperator::new(self)
            .map(|f| f.is_invertible())
            .unwrap_or(false)
    }

    /// Classical shadows `C_E^{-1}(E_k)`, computed once and cached.
    pub fn shadows(&self) -> Result<Arc<ClassicalShadowSet>> {
        if let Some(s) = self.shadows.get() {
            return Ok(Arc::clone(s));
        }
        let computed = Arc::new(crate::channel::classical_shadows(self)?);
        Ok(Arc::clone(self.shadows.get_or_init(|| computed)))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self
                .effects
                .iter()
                .zip(&other.effects)
                .all(|(a, b)| a.max_abs_diff(b) <= tol)
    }

    /// Equality as unordered multisets of effects.
    pub fn same_effects_unordered(&self, other: &Self, tol: f64) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        self.effects.iter().all(|a| {
            match other
                .effects
                .iter()
                .enumerate()
                .find(|(j, b)| !used[*j] && a.max_abs_diff(b) <= tol)
            {
                Some((j, _)) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
    }

    /// Weights and Bloch directions, `E_k = (w_k/2)(1 + v_k·σ)`.
    pub fn qubit_params(&self) -> Result<QubitPovmParams> {
        if self.dim != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: self.dim,
            });
        }
        let mut weights = Vec::with_capacity(self.len());
        let mut directions = Vec::with_capacity(self.len());
        for e in &self.effects {
            let b = e.to_bloch()?;
            weights.push(b.x0);
            directions.push(if b.x0 > 0.0 {
                b.r.map(|c| c / b.x0)
            } else {
                [0.0; 3]
            });
        }
        Ok(QubitPovmParams {
            weights,
            directions,
        })
    }

    /// Central inversion through the centre of the Bloch sphere:
    /// `r_k -> -r_k` with weights unchanged, i.e. `E_k -> tr(E_k)·1 - E_k`.
    pub fn inverted(&self) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: self.dim,
            });
        }
        let effects = self
            .effects
            .iter()
            .map(|e| {
                let b = e.to_bloch()?;
                Ok(BlochVector::new(b.x0, b.r.map(|c| -c)).to_operator())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(effects)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// White-noise mixing `E_k -> (1-p)·tr(E_k)·1/D + p·E_k`; `p = 1` is noiseless.
    pub fn depolarize(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Range {
                name: "p",
                value: p,
            });
        }
        let id = HermitianOperator::identity(self.dim);
        let effects = self
            .effects
            .iter()
            .map(|e| {
                let mut out = id.scaled((1.0 - p) * e.trace() / self.dim as f64);
                out.add_scaled(p, e);
                out
            })
            .collect();
        let mut out = Self::new(effects)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Measurement simulated by applying a uniformly random unitary from
    /// `unitaries` and measuring in the computational basis: effects
    /// `U†|b⟩⟨b|U / |U|`. With `merge_duplicates`, effects equal within
    /// `1e-9` (max-norm) are summed, keeping first-appearance order.
    pub fn from_unitary_ensemble(
        unitaries: &[DMatrix<C64>],
        merge_duplicates: bool,
    ) -> Result<Self> {
        let first = unitaries
            .first()
            .ok_or_else(|| Error::Config("empty unitary ensemble".into()))?;
        let dim = first.nrows();
        let weight = 1.0 / unitaries.len() as f64;
        let mut effects: Vec<HermitianOperator> = Vec::new();
        let mut labels = Vec::new();
        let mut projectors: Vec<HermitianOperator> = Vec::new();
        for (index, u) in unitaries.iter().enumerate() {
            if !u.is_square() || u.nrows() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: u.nrows(),
                });
            }
            let deviation = (u.adjoint() * u - DMatrix::<C64>::identity(dim, dim))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if deviation > 1e-10 {
                return Err(Error::NonUnitary { index, deviation });
            }
            let u_dag = u.adjoint();
            for b in 0..dim {
                let projector = HermitianOperator::projector(&u_dag.column(b).into_owned())?;
                let existing = if merge_duplicates {
                    projectors
                        .iter()
                        .position(|q| q.max_abs_diff(&projector) <= 1e-9)
                } else {
                    None
                };
                match existing {
                    Some(j) => effects[j].add_scaled(weight, &projector),
                    None => {
                        effects.push(projector.scaled(weight));
                        projectors.push(projector);
                        labels.push(format!("u{index}b{b}"));
                    }
                }
            }
        }
        Self::new(effects)?.with_labels(labels)
    }

    /// Splits every effect into identical pieces so that all traces agree.
    ///
    /// Each trace is approximated by its best rational with denominator at
    /// most `denominator_cap`; with common denominator `L` and numerators
    /// `P_k`, effect `k` becomes `P_k / gcd(P)` copies of itself scaled down
    /// accordingly. Effects of zero trace are dropped.
    pub fn uniform_trace_split(&self, denominator_cap: u64) -> Result<Self> {
        let traces = self.traces();
        let mut fractions = Vec::with_capacity(traces.len());
        let mut common: u64 = 1;
        for (k, &t) in traces.iter().enumerate() {
            let (p, q) = split::best_rational(t.max(0.0), denominator_cap);
            let err = (t - p as f64 / q as f64).abs();
            if err > 1e-9 {
                return Err(Error::Approximation(format!(
                    "trace {t} of effect {k} has no approximant with denominator <= {denominator_cap} (best {p}/{q}, error {err:e})"
                )));
            }
            common = split::lcm(common, q)
                .filter(|&l| l <= denominator_cap)
                .ok_or_else(|| {
                    Error::Approximation(format!(
                        "common denominator exceeds the cap {denominator_cap}"
                    ))
                })?;
            fractions.push((p, q));
        }
        let numerators: Vec<u64> = fractions.iter().map(|&(p, q)| p * (common / q)).collect();
        let g = numerators.iter().fold(0, |acc, &n| split::gcd(acc, n));
        let mut effects = Vec::new();
        let mut labels = Vec::new();
        for (k, (e, &n)) in self.effects.iter().zip(&numerators).enumerate() {
            let copies = n / g;
            let piece = e.scaled(1.0 / copies.max(1) as f64);
            for c in 0..copies {
                effects.push(piece.clone());
                labels.push(if copies == 1 {
                    self.label(k)
                } else {
                    format!("{}#{c}", self.label(k))
                });
            }
        }
        Self::new(effects)?.with_labels(labels)
    }

    /// `α = tr E_k`, `β = tr E_k²`, `γ = Σ_l tr(E_k E_l)²` and the closed-form
    /// shadow coefficients
    /// `a = (Dβ - α²)/(Dγ - α³)`, `b = (γ - αβ)/(Dγ - α³)`.
    ///
    /// Only uniformity is checked here; whether `a E_k + b 1` actually inverts
    /// the frame is verified by [`crate::channel::classical_shadows_symmetric`].
    pub fn symmetry_coefficients(&self) -> Result<SymmetryCoefficients> {
        let n = self.len();
        let mut alphas = Vec::with_capacity(n);
        let mut betas = Vec::with_capacity(n);
        let mut gammas = Vec::with_capacity(n);
        for (k, ek) in self.effects.iter().enumerate() {
            alphas.push(ek.trace());
            betas.push(ek.trace_product(ek));
            let mut gamma = 0.0;
            for (l, el) in self.effects.iter().enumerate() {
                let t = if l == k {
                    betas[k]
                } else {
                    ek.trace_product(el)
                };
                gamma += t * t;
            }
            gammas.push(gamma);
        }
        for (name, values) in [("alpha", &alphas), ("beta", &betas), ("gamma", &gammas)] {
            let (lo, hi) = min_max(values);
            if hi - lo > UNIFORMITY_TOLERANCE {
                return Err(Error::NotUniform(format!(
                    "{name} ranges over [{lo}, {hi}]"
                )));
            }
        }
        let alpha = alphas[0];
        let beta = betas[0];
        let gamma = gammas[0];
        let d = self.dim as f64;
        let denom = d * gamma - alpha.powi(3);
        // Relative to α³, the two terms cancel; below this the closed form
        // carries more rounding noise than the 1e-9 shadow tolerance.
        if denom.abs() <= DEGENERACY_RATIO * alpha.powi(3) {
            return Err(Error::Degenerate(denom));
        }
        Ok(SymmetryCoefficients {
            alpha,
            beta,
            gamma,
            a: (d * beta - alpha * alpha) / denom,
            b: (gamma - alpha * beta) / denom,
        })
    }

    /// Product measurement with effects `E_k ⊗ F_l`, `k` major.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut effects = Vec::with_capacity(self.len() * other.len());
        let mut labels = Vec::with_capacity(self.len() * other.len());
        for (k, a) in self.effects.iter().enumerate() {
            for (l, b) in other.effects.iter().enumerate() {
                effects.push(tensor(a, b)?);
                labels.push(format!("{},{}", self.label(k), other.label(l)));
            }
        }
        Self::new(effects)?.with_labels(labels)
    }

    pub fn tensor_power(&self, sites: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::Config("tensor power needs at least one site".into()));
        }
        (1..sites).try_fold(self.clone(), |acc, _| acc.tensor(self))
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Trace invariants of a uniform measurement and its closed-form shadow
/// coefficients, `ρ̂_k = a E_k + b 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
}

/// Qubit measurement in weight/direction form, `E_k = (w_k/2)(1 + v_k·σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitPovmParams {
    pub weights: Vec<f64>,
    pub directions: Vec<[f64; 3]>,
}

impl QubitPovmParams {
    /// Checks `w_k >= 0`, `Σ w_k = 2`, `Σ w_k v_k = 0` and `|v_k| <= 1`.
    pub fn new(weights: Vec<f64>, directions: Vec<[f64; 3]>) -> Result<Self> {
        if weights.len() != directions.len() || weights.is_empty() {
            return Err(Error::Config(format!(
                "{} weights for {} directions",
                weights.len(),
                directions.len()
            )));
        }
        let params = Self {
            weights,
            directions,
        };
        params.check()?;
        Ok(params)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check(&self) -> Result<()> {
        if let Some((k, w)) = self.weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
            return Err(Error::Positivity {
                index: k,
                min_eigenvalue: *w,
            });
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 2.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization(format!(
                "weights sum to {total}, expected 2"
            )));
        }
        let m = self.weighted_sum();
        let m_norm = crate::operator::dot3(&m, &m).sqrt();
        if m_norm > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization(format!(
                "weighted directions sum to a vector of length {m_norm:e}"
            )));
        }
        for (k, v) in self.directions.iter().enumerate() {
            let len = crate::operator::dot3(v, v).sqrt();
            if len > 1.0 + 1e-12 {
                return Err(Error::Positivity {
                    index: k,
                    min_eigenvalue: 0.5 * self.weights[k] * (1.0 - len),
                });
            }
        }
        Ok(())
    }

    pub fn weighted_sum(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (w, v) in self.weights.iter().zip(&self.directions) {
            (0..3).for_each(|i| m[i] += w * v[i]);
        }
        m
    }

    /// Effect Bloch vectors `(w_k, w_k v_k)`.
    pub fn effect_bloch(&self) -> Vec<BlochVector> {
        self.weights
            .iter()
            .zip(&self.directions)
            .map(|(&w, v)| BlochVector::new(w, v.map(|c| c * w)))
            .collect()
    }

    pub fn to_povm(&self) -> Result<Povm> {
        Povm::new(
            self.effect_bloch()
                .iter()
                .map(BlochVector::to_operator)
                .collect(),
        )
    }
}
