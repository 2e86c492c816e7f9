use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

use povm_shadows::channel::{bloch_least_squares, classical_shadows, classical_shadows_symmetric};
use povm_shadows::io::{parse_operator, parse_states, FactorizedSet, PovmJson, ShadowsJson};
use povm_shadows::norm::{
    average_squared_norm, factorized_squared_norm_uniform, max_projection_norm_grid,
    octahedron_bound, squared_shadow_norm,
};
use povm_shadows::optimize::{anneal_factorized, anneal_single_qubit, AnnealConfig};
use povm_shadows::sampling::{
    estimate_mean, sample_outcomes, sample_outcomes_entangled, sample_variance,
    single_shot_estimates, EstimatorConfig,
};
use povm_shadows::{Error, FrameSuperoperator, HermitianOperator};

use crate::output::{emit, json_line};
use crate::sources;
use crate::{
    CliError, CliResult, OptimizeArgs, ShadowMethod, ShadowNormArgs, ShadowsArgs, SimulateArgs,
};

fn seed_or_auto(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        let seed = nanos ^ ((std::process::id() as u64) << 32);
        log::info!("no --seed given, using {seed}");
        seed
    })
}

pub fn povm_validate(source: &str) -> CliResult {
    let povm = sources::povm(source)?;
    let frame = FrameSuperoperator::new(&povm)?;
    let report = json!({
        "valid": true,
        "dim": povm.dim(),
        "outcomes": povm.len(),
        "traces": povm.traces(),
        "uniform_trace": povm.is_uniform_trace(),
        "informationally_complete": frame.is_invertible(),
        "frame_eigenvalue_ratio": frame.eigenvalue_ratio(),
    });
    emit(None, &json_line(&report))?;
    Ok(())
}

pub fn povm_export(
    source: &str,
    depolarize: Option<f64>,
    invert: bool,
    out: Option<&Path>,
) -> CliResult {
    let mut povm = sources::povm(source)?;
    if invert {
        povm = povm.inverted()?;
    }
    if let Some(p) = depolarize {
        povm = povm.depolarize(p)?;
    }
    let value = serde_json::to_value(PovmJson::from_povm(&povm))?;
    emit(out, &json_line(&value))?;
    Ok(())
}

pub fn shadows(args: &ShadowsArgs) -> CliResult {
    let povm = sources::povm(&args.povm)?;
    let (set, name) = match args.method {
        ShadowMethod::General => (classical_shadows(&povm)?, "general"),
        ShadowMethod::Symmetric => (classical_shadows_symmetric(&povm)?, "symmetric"),
        ShadowMethod::Bloch => (bloch_least_squares(&povm)?.shadow_set(), "bloch"),
    };
    let value = serde_json::to_value(ShadowsJson::new(&set, name))?;
    emit(args.out.as_deref(), &json_line(&value))?;
    Ok(())
}

pub fn shadow_norm(args: &ShadowNormArgs) -> CliResult {
    if args.observables.is_none() && args.grid.is_none() {
        return Err(CliError::Usage(
            "shadow-norm needs --observables and/or --grid".into(),
        ));
    }
    if args.observables.is_some() && args.grid.is_some() && args.out.is_none() {
        return Err(CliError::Usage(
            "with both --observables and --grid, the CSV needs --out".into(),
        ));
    }
    let povm = sources::povm(&args.povm)?;
    let observables = args
        .observables
        .as_deref()
        .map(sources::observables)
        .transpose()?;

    if let Some(set) = observables {
        let mut csv = String::from("observable_id,squared_norm,worst_state_bloch_x,worst_state_bloch_y,worst_state_bloch_z");
        if args.average {
            csv.push_str(",average_squared_norm");
        }
        csv.push('\n');
        for (id, x) in set.ids.iter().zip(&set.operators) {
            let report = squared_shadow_norm(&povm, x)?;
            let bloch = match report.worst_state.to_bloch() {
                Ok(b) => b.r.map(|c| c.to_string()),
                Err(_) => [String::new(), String::new(), String::new()],
            };
            write!(
                csv,
                "{},{},{},{},{}",
                csv_field(id),
                report.squared_norm,
                bloch[0],
                bloch[1],
                bloch[2]
            )
            .expect("writing to a String");
            if args.average {
                write!(csv, ",{}", average_squared_norm(&povm, x)?).expect("writing to a String");
            }
            csv.push('\n');
        }
        emit(args.out.as_deref(), &csv)?;
    }

    if let Some(resolution) = args.grid {
        let max = max_projection_norm_grid(&povm, resolution)?;
        let bound = match octahedron_bound(&povm) {
            Ok(b) => Some(b),
            Err(Error::NotUniform(_) | Error::SingularH) => None,
            Err(e) => return Err(e.into()),
        };
        let value = json!({
            "resolution": resolution,
            "max_projection_norm": max,
            "octahedron_bound": bound,
        });
        emit(None, &json_line(&value))?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Observable file for `simulate`: one operator, or a single product
/// observable `{"factors": [[..]]}`.
fn simulate_observable(path: &Path) -> Result<Vec<HermitianOperator>, Error> {
    let text = sources::read(path)?;
    if let Ok(set) = FactorizedSet::from_json(&text) {
        if set.factors.len() != 1 {
            return Err(Error::Config(format!(
                "expected one product observable, found {}",
                set.factors.len()
            )));
        }
        return Ok(set.factors.into_iter().next().expect("one entry"));
    }
    Ok(vec![parse_operator(&text)?])
}

pub fn simulate(args: &SimulateArgs) -> CliResult {
    let povm = sources::povm(&args.povm)?;
    let states = parse_states(&sources::read(&args.state)?)?;
    let factors = simulate_observable(&args.observable)?;
    let seed = seed_or_auto(args.seed);
    let config = EstimatorConfig::new(args.shots, seed).with_median_groups(args.median_of_means);
    config.validate()?;

    let sites = factors.len();
    let povms = vec![povm.clone(); sites];
    let records = if states.len() == sites {
        sample_outcomes(&povms, &states, &config)?
    } else if states.len() == 1 && sites > 1 {
        sample_outcomes_entangled(&povms, &states[0], &config)?
    } else {
        return Err(Error::Dimension {
            expected: sites,
            found: states.len(),
        }
        .into());
    };
    let shadows = vec![povm.shadows()?; sites];
    let values = single_shot_estimates(&shadows, &records, &factors)?;
    let norm = factorized_squared_norm_uniform(&povm, &factors)?;
    let value = json!({
        "estimate": estimate_mean(&values, config.median_groups)?,
        "empirical_variance": sample_variance(&values)?,
        "shots": values.len(),
        "seed": seed,
        "squared_shadow_norm": norm.value(),
        "sites": sites,
        "median_groups": config.median_groups,
    });
    emit(args.out.as_deref(), &json_line(&value))?;
    Ok(())
}

pub fn optimize(args: &OptimizeArgs) -> CliResult {
    if args.qubits > 1 && !args.factorized {
        return Err(CliError::Usage(
            "--qubits above 1 requires --factorized".into(),
        ));
    }
    let seed = seed_or_auto(args.seed);
    let config = AnnealConfig {
        outcomes: args.outcomes,
        iterations: args.iterations,
        initial_temperature: args.initial_temperature,
        cooling_ratio: args.cooling_ratio,
        stage_length: 0,
        move_scale: args.move_scale,
        restarts: args.restarts,
        seed,
    };
    config.validate()?;
    let result = if args.factorized {
        let set = sources::factorized(&args.observables, args.qubits)?;
        anneal_factorized(args.qubits, &set.factors, &config)?
    } else {
        let set = sources::observables(&args.observables)?;
        anneal_single_qubit(&set.operators, &config)?
    };

    let trace_path: Option<PathBuf> = args.trace.clone().or_else(|| {
        args.out
            .as_ref()
            .map(|o| PathBuf::from(format!("{}.trace.csv", o.display())))
    });
    if let Some(path) = &trace_path {
        let mut csv = String::from("iteration,objective\n");
        for (it, obj) in &result.objective_trace {
            writeln!(csv, "{it},{obj}").expect("writing to a String");
        }
        emit(Some(path), &csv)?;
    }
    let restarts: Vec<_> = result
        .restarts_summary
        .iter()
        .map(|r| {
            json!({
                "restart": r.restart,
                "best_objective": r.best_objective,
                "best_ln_objective": r.best_ln_objective,
                "accepted_moves": r.accepted_moves,
            })
        })
        .collect();
    let value = json!({
        "best_objective": result.best_objective,
        "best_ln_objective": result.best_ln_objective,
        "povm": PovmJson::from_qubit_params(&result.best_params),
        "seed": seed,
        "outcomes": config.outcomes,
        "iterations": config.iterations,
        "restarts": config.restarts,
        "qubits": args.qubits,
        "factorized": args.factorized,
        "initial_temperature": result.initial_temperature,
        "restarts_summary": restarts,
        "trace": trace_path.map(|p| p.display().to_string()),
    });
    emit(args.out.as_deref(), &json_line(&value))?;
    Ok(())
}
