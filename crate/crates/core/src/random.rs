//! Random operators and measurements for tests, benchmarks and optimizer
//! initialization.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::operator::{haar_random_vector, BlochVector, HermitianOperator, C64};
use crate::povm::{Povm, QubitPovmParams};

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Hermitian operator with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::new((&g + g.adjoint()).scale(0.5)).expect("symmetrized")
}

/// Mixed state from the Hilbert-Schmidt ensemble.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    let rho = &g * g.adjoint();
    let tr: f64 = rho.diagonal().iter().map(|z| z.re).sum();
    HermitianOperator::new(rho.unscale(tr)).expect("G G† is Hermitian")
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    HermitianOperator::projector(&haar_random_vector(rng, dim)).expect("unit vector")
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-8 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Qubit POVM with random weights and directions.
///
/// Directions are Gaussian, shifted to satisfy `Σ w_k v_k = 0` and scaled
/// into the unit ball. Generic draws are informationally complete for
/// `outcomes >= 4`.
pub fn random_qubit_povm<R: Rng + ?Sized>(rng: &mut R, outcomes: usize) -> Povm {
    let weights: Vec<f64> = (0..outcomes).map(|_| rng.random_range(0.5..1.5)).collect();
    random_qubit_povm_with_weights(rng, weights)
}

/// Qubit POVM with uniform weights `2/N` and random directions.
pub fn random_uniform_qubit_povm<R: Rng + ?Sized>(rng: &mut R, outcomes: usize) -> Povm {
    random_qubit_povm_with_weights(rng, vec![1.0; outcomes])
}

fn random_qubit_povm_with_weights<R: Rng + ?Sized>(rng: &mut R, mut weights: Vec<f64>) -> Povm {
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w *= 2.0 / total);
    let mut dirs: Vec<[f64; 3]> = weights
        .iter()
        .map(|_| {
            let u = random_unit_vector(rng);
            let len: f64 = rng.random_range(0.6..1.0);
            [u[0] * len, u[1] * len, u[2] * len]
        })
        .collect();
    let mut mean = [0.0; 3];
    for (w, v) in weights.iter().zip(&dirs) {
        for i in 0..3 {
            mean[i] += 0.5 * w * v[i];
        }
    }
    let mut longest: f64 = 0.0;
    for v in dirs.iter_mut() {
        for i in 0..3 {
            v[i] -= mean[i];
        }
        longest = longest.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
    }
    if longest > 1.0 {
        for v in dirs.iter_mut() {
            v.iter_mut().for_each(|c| *c /= longest);
        }
    }
    QubitPovmParams::new(weights, dirs)
        .and_then(|p| p.to_povm())
        .expect("constructed feasible")
}

/// POVM on `C^dim` from normalized random positive operators:
/// `E_k = S^{-1/2} A_k S^{-1/2}` with `A_k = G_k G_k†`, `S = Σ A_k`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> Povm {
    let raw: Vec<HermitianOperator> = (0..outcomes)
        .map(|_| {
            let g = ginibre(rng, dim, dim);
            HermitianOperator::new(&g * g.adjoint()).expect("G G† is Hermitian")
        })
        .collect();
    let mut sum = HermitianOperator::zeros(dim);
    raw.iter().for_each(|a| sum.add_scaled(1.0, a));
    let inv_sqrt = sum.map_spectrum(|l| 1.0 / l.sqrt());
    let effects = raw
        .iter()
        .map(|a| {
            HermitianOperator::new(inv_sqrt.matrix() * a.matrix() * inv_sqrt.matrix())
                .expect("congruence of Hermitian")
        })
        .collect();
    Povm::new(effects).expect("normalized by construction")
}

/// Bloch vector of a random qubit operator (handy for property tests).
pub fn random_bloch<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    BlochVector::new(
        rng.sample(StandardNormal),
        [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ],
    )
}
