//! Standard observable sets used as estimation and optimization targets.

use crate::error::{Error, Result};
use crate::operator::{haar_random_vector, HermitianOperator};
use crate::povm::Solid;
use crate::rng::stream_rng;

/// Projectors onto the six Pauli eigenstates, ordered z+, z-, x+, x-, y+, y-.
pub fn pauli_eigenprojections() -> Vec<HermitianOperator> {
    solid_projections(Solid::Octahedron)
}

/// Rank-one projectors onto the vertex directions of a solid.
pub fn solid_projections(solid: Solid) -> Vec<HermitianOperator> {
    solid
        .vertices()
        .into_iter()
        .map(|r| HermitianOperator::qubit_projector(r).expect("unit vertex"))
        .collect()
}

/// `count` Haar-random rank-one projectors on `C^dim`, deterministic in `seed`.
pub fn haar_projections(seed: u64, dim: usize, count: usize) -> Result<Vec<HermitianOperator>> {
    if dim < 2 {
        return Err(Error::InvalidOperator(format!(
            "dimension {dim} is below 2"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| HermitianOperator::projector(&haar_random_vector(&mut rng, dim)))
        .collect()
}

/// Product observables over `sites` qubits whose factors are drawn uniformly
/// from `pool`. Returns one factor list per observable.
pub fn factorized_from_pool(
    seed: u64,
    pool: &[HermitianOperator],
    sites: usize,
    count: usize,
) -> Result<Vec<Vec<HermitianOperator>>> {
    use rand::Rng;
    if pool.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut rng = stream_rng(seed, 1);
    Ok((0..count)
        .map(|_| {
            (0..sites)
                .map(|_| pool[rng.random_range(0..pool.len())].clone())
                .collect()
        })
        .collect())
}

/// Product observables over `sites` qubits with independent Haar-random
/// projector factors.
pub fn factorized_haar(
    seed: u64,
    sites: usize,
    count: usize,
) -> Result<Vec<Vec<HermitianOperator>>> {
    let all = haar_projections(seed, 2, sites * count)?;
    Ok(all.chunks(sites).map(<[_]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_set_is_ordered() {
        let p = pauli_eigenprojections();
        assert_eq!(p.len(), 6);
        let z = HermitianOperator::pauli_z();
        assert!((p[0].trace_product(&z) - 1.0).abs() < 1e-15);
        assert!((p[1].trace_product(&z) + 1.0).abs() < 1e-15);
        assert!((p[2].trace_product(&HermitianOperator::pauli_x()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn haar_sets_are_deterministic_projectors() {
        let a = haar_projections(5, 2, 10).unwrap();
        let b = haar_projections(5, 2, 10).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert!((p.trace() - 1.0).abs() < 1e-12);
            assert!((p.trace_product(p) - 1.0).abs() < 1e-12);
        }
        assert_ne!(a, haar_projections(6, 2, 10).unwrap());
    }

    #[test]
    fn factorized_shapes() {
        let t = factorized_haar(1, 60, 3).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|f| f.len() == 60));
        let pool = solid_projections(Solid::Tetrahedron);
        let t = factorized_from_pool(1, &pool, 5, 4).unwrap();
        assert!(t.iter().flatten().all(|f| pool.contains(f)));
    }
}
