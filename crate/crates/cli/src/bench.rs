//! Golden values for the qubit measurements, recomputed from scratch.

use std::fmt::Write as _;
use std::path::Path;

use povm_shadows::norm::{average_squared_norm, octahedron_bound, squared_shadow_norm};
use povm_shadows::targets::solid_projections;
use povm_shadows::{HermitianOperator, Povm, Result, Solid};

use crate::output::emit;
use crate::{BenchSuite, CliError, CliResult};

const TOLERANCE: f64 = 1e-9;

struct Row {
    quantity: String,
    expected: f64,
    computed: f64,
}

fn max_norm(povm: &Povm, targets: &[HermitianOperator]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for x in targets {
        best = best.max(squared_shadow_norm(povm, x)?.squared_norm);
    }
    Ok(best)
}

fn reference_rows() -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut push = |quantity: String, expected: f64, computed: f64| {
        rows.push(Row {
            quantity,
            expected,
            computed,
        })
    };
    let tetra = Povm::platonic(Solid::Tetrahedron);
    let octa = Povm::platonic(Solid::Octahedron);
    let tetra_targets = solid_projections(Solid::Tetrahedron);
    let pauli_targets = solid_projections(Solid::Octahedron);

    push(
        "tetrahedron_norm_tetrahedron_projections".into(),
        2.0,
        max_norm(&tetra, &tetra_targets)?,
    );
    push(
        "inverted_tetrahedron_norm_tetrahedron_projections".into(),
        1.0,
        max_norm(&tetra.inverted()?, &tetra_targets)?,
    );
    push(
        "octahedron_norm_pauli_projections".into(),
        1.5,
        max_norm(&octa, &pauli_targets)?,
    );
    push(
        "octahedron_norm_sigma_z".into(),
        3.0,
        squared_shadow_norm(&octa, &HermitianOperator::pauli_z())?.squared_norm,
    );
    let z = HermitianOperator::pauli_z().scaled(std::f64::consts::FRAC_1_SQRT_2);
    push(
        "octahedron_average_norm_sigma_z".into(),
        3.0,
        average_squared_norm(&octa, &z)?,
    );
    push(
        "tetrahedron_average_norm_sigma_z".into(),
        3.0,
        average_squared_norm(&tetra, &z)?,
    );
    push(
        "octahedron_bound_octahedron".into(),
        1.5,
        octahedron_bound(&octa)?,
    );

    for solid in Solid::ALL {
        let c = Povm::platonic(solid).symmetry_coefficients()?;
        let n = solid.vertex_count() as f64;
        push(format!("{}_a", solid.name()), 1.5 * n, c.a);
        push(format!("{}_b", solid.name()), -1.0, c.b);
    }

    let depolarized = octa.depolarize(0.5)?.symmetry_coefficients()?;
    push("depolarized_octahedron_p0.5_a".into(), 36.0, depolarized.a);
    push("depolarized_octahedron_p0.5_b".into(), -5.5, depolarized.b);
    Ok(rows)
}

pub fn run(suite: BenchSuite, out: Option<&Path>) -> CliResult {
    let rows = match suite {
        BenchSuite::Paper => reference_rows()?,
    };
    let mut csv = String::from("quantity,expected,computed,abs_error,tolerance,pass\n");
    let mut failed = Vec::new();
    for row in &rows {
        let err = (row.expected - row.computed).abs();
        let pass = err <= TOLERANCE * row.expected.abs().max(1.0);
        if !pass {
            failed.push(row.quantity.clone());
        }
        writeln!(
            csv,
            "{},{},{},{:e},{:e},{}",
            row.quantity, row.expected, row.computed, err, TOLERANCE, pass
        )
        .expect("writing to a String");
    }
    emit(out, &csv)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Bench(format!(
            "mismatched: {}",
            failed.join(", ")
        )))
    }
}
