//! Resolution of `NAME|PATH` arguments.

use std::fs;
use std::io;
use std::path::Path;

use povm_shadows::io::{parse_povm, FactorizedSet, ObservableSet};
use povm_shadows::targets::{
    factorized_from_pool, factorized_haar, haar_projections, solid_projections,
};
use povm_shadows::{Error, HermitianOperator, Povm, Result, Solid};

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn looks_like_path(s: &str) -> bool {
    s.contains('/') || s.contains('\\') || s.ends_with(".json")
}

fn not_found(s: &str) -> Error {
    Error::Io(io::Error::new(
        io::ErrorKind::NotFound,
        format!("{s}: no such file"),
    ))
}

/// A file if one exists at `source`, otherwise a built-in name.
pub fn povm(source: &str) -> Result<Povm> {
    let path = Path::new(source);
    if path.is_file() {
        return parse_povm(&read(path)?);
    }
    if looks_like_path(source) {
        return Err(not_found(source));
    }
    Povm::named(source)
}

fn builtin_observables(name: &str) -> Result<Option<ObservableSet>> {
    if let Some(rest) = name.strip_prefix("haar:") {
        let (count, seed) = parse_count_seed(rest, name)?;
        let ops = haar_projections(seed, 2, count)?;
        let ids = (0..count).map(|i| format!("h{i}")).collect();
        return Ok(Some(ObservableSet {
            ids,
            operators: ops,
        }));
    }
    let set = match name {
        "pauli-eigenprojections" => {
            let ids = Solid::Octahedron.labels();
            ObservableSet {
                ids,
                operators: solid_projections(Solid::Octahedron),
            }
        }
        "paulis" => ObservableSet {
            ids: vec!["x".into(), "y".into(), "z".into()],
            operators: vec![
                HermitianOperator::pauli_x(),
                HermitianOperator::pauli_y(),
                HermitianOperator::pauli_z(),
            ],
        },
        other => match other.strip_suffix("-projections").map(str::parse::<Solid>) {
            Some(Ok(solid)) => ObservableSet {
                ids: solid.labels(),
                operators: solid_projections(solid),
            },
            _ => return Ok(None),
        },
    };
    Ok(Some(set))
}

fn parse_count_seed(rest: &str, whole: &str) -> Result<(usize, u64)> {
    let bad = || Error::Config(format!("'{whole}': expected <count>:<seed>"));
    let (c, s) = rest.split_once(':').ok_or_else(bad)?;
    Ok((c.parse().map_err(|_| bad())?, s.parse().map_err(|_| bad())?))
}

pub fn observables(source: &str) -> Result<ObservableSet> {
    let path = Path::new(source);
    if path.is_file() {
        return ObservableSet::from_json(&read(path)?);
    }
    match builtin_observables(source)? {
        Some(set) => Ok(set),
        None if looks_like_path(source) => Err(not_found(source)),
        None => Err(Error::Config(format!("unknown observable set '{source}'"))),
    }
}

/// Product observables from a file or `factorized:<pool>:<count>:<seed>`,
/// where `<pool>` is `haar` or a built-in observable set.
pub fn factorized(source: &str, sites: usize) -> Result<FactorizedSet> {
    let path = Path::new(source);
    let set = if path.is_file() {
        FactorizedSet::from_json(&read(path)?)?
    } else if let Some(rest) = source.strip_prefix("factorized:") {
        let (pool, tail) = rest.split_once(':').ok_or_else(|| {
            Error::Config(format!(
                "'{source}': expected factorized:<pool>:<count>:<seed>"
            ))
        })?;
        let (count, seed) = parse_count_seed(tail, source)?;
        let factors = if pool == "haar" {
            factorized_haar(seed, sites, count)?
        } else {
            let pool_set = builtin_observables(pool)?
                .ok_or_else(|| Error::Config(format!("unknown observable set '{pool}'")))?;
            factorized_from_pool(seed, &pool_set.operators, sites, count)?
        };
        FactorizedSet { factors }
    } else if looks_like_path(source) {
        return Err(not_found(source));
    } else {
        return Err(Error::Config(format!(
            "unknown product observable set '{source}'"
        )));
    };
    if let Some((i, f)) = set
        .factors
        .iter()
        .enumerate()
        .find(|(_, f)| f.len() != sites)
    {
        return Err(Error::NotFactorized(format!(
            "observable {i} has {} factors for {sites} qubits",
            f.len()
        )));
    }
    Ok(set)
}
