use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use rayon::ThreadPool;
use resolvent_decay::analysis::{decay_profile, measure_gamma, moment_check};
use resolvent_decay::mollifier::{theta0, MollifiedSymbol};
use resolvent_decay::{solve_green_column, GreensColumn, GridSpec, ProblemSpec, Scheme};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{num, write_csv};
use crate::ConfigError;

type MomentTable = Vec<(usize, f64, f64)>;

pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Measured quantities worth keeping next to the resolved parameters.
    pub meta: BTreeMap<String, String>,
}

pub fn run(config: &ExperimentConfig, pool: &ThreadPool) -> Result<RunOutput, ConfigError> {
    match config.experiment {
        Experiment::Profile => profile(config, pool),
        Experiment::GammaSweepL | Experiment::GammaSweepKc => gamma_sweep(config, pool),
        Experiment::Mollifier => mollifier(config),
        Experiment::Moments => moments(config, pool),
        Experiment::Verify => unreachable!("verify has its own driver"),
    }
}

fn column(
    config: &ExperimentConfig,
    grid: GridSpec,
    scheme: Scheme,
) -> Result<GreensColumn, ConfigError> {
    let spec = ProblemSpec::new(grid, config.lambda, config.potential.spec(), scheme);
    Ok(solve_green_column(&spec, 0)?)
}

fn profile(config: &ExperimentConfig, pool: &ThreadPool) -> Result<RunOutput, ConfigError> {
    let results: Vec<_> = pool.install(|| {
        config
            .schemes
            .par_iter()
            .map(|&s| column(config, config.grid, s))
            .collect()
    });
    let mut files = Vec::new();
    let mut meta = BTreeMap::new();
    for (scheme, col) in config.schemes.iter().zip(results) {
        let col = col?;
        let rows: Vec<Vec<String>> = decay_profile(&col)
            .into_iter()
            .map(|(x, g)| vec![num(x), num(g)])
            .collect();
        files.push(write_csv(
            &config.out,
            &format!("profile_{}.csv", scheme.name()),
            "x,absG",
            &rows,
        )?);
        meta.insert(
            format!("residual.{}", scheme.name()),
            format!("{:e}", col.residual),
        );
        let gamma = match measure_gamma(&col, config.x1, config.x2) {
            Ok(g) => g.to_string(),
            Err(e) => format!("unavailable ({e})"),
        };
        meta.insert(format!("gamma.{}", scheme.name()), gamma);
    }
    if !config.potential.is_none() {
        let v = config.potential.spec().sample(&config.grid)?;
        let rows: Vec<Vec<String>> = config
            .grid
            .xs()
            .into_iter()
            .zip(v)
            .map(|(x, v)| vec![num(x), num(v)])
            .collect();
        files.push(write_csv(&config.out, "potential.csv", "x,V", &rows)?);
    }
    Ok(RunOutput { files, meta })
}

fn gamma_sweep(config: &ExperimentConfig, pool: &ThreadPool) -> Result<RunOutput, ConfigError> {
    let by_length = config.experiment == Experiment::GammaSweepL;
    let grids = config.grids()?;
    let tasks: Vec<(GridSpec, Scheme)> = config
        .schemes
        .iter()
        .flat_map(|&s| grids.iter().map(move |&g| (g, s)))
        .collect();
    let gammas: Vec<Result<f64, ConfigError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(grid, scheme)| {
                let col = column(config, grid, scheme)?;
                Ok(measure_gamma(&col, config.x1, config.x2)?)
            })
            .collect()
    });
    let mut files = Vec::new();
    let mut meta = BTreeMap::new();
    let (file_stem, header) = if by_length {
        ("gamma_sweep_l", "L,gamma")
    } else {
        ("gamma_sweep_kc", "kc,gamma")
    };
    for (chunk, scheme) in gammas.chunks(grids.len()).zip(&config.schemes) {
        let mut rows = Vec::with_capacity(grids.len());
        for (grid, gamma) in grids.iter().zip(chunk) {
            let gamma = match gamma {
                Ok(g) => *g,
                Err(e) => {
                    return Err(ConfigError::field(
                        if by_length { "ls" } else { "dxs" },
                        format!("{scheme} at L={}, dx={}: {e}", grid.length(), grid.dx()),
                    ))
                }
            };
            let abscissa = if by_length { grid.length() } else { grid.kc() };
            rows.push((abscissa, gamma));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let rows: Vec<Vec<String>> = rows
            .into_iter()
            .map(|(a, g)| vec![num(a), num(g)])
            .collect();
        files.push(write_csv(
            &config.out,
            &format!("{file_stem}_{}.csv", scheme.name()),
            header,
            &rows,
        )?);
    }
    if by_length {
        meta.insert(
            "note.dx".into(),
            format!(
                "L-sweep run at dx={}; the same sweep is also quoted at dx=0.005, which is not used by default",
                config.grid.dx()
            ),
        );
    }
    Ok(RunOutput { files, meta })
}

fn mollifier(config: &ExperimentConfig) -> Result<RunOutput, ConfigError> {
    let grid = config.grid;
    let sym = MollifiedSymbol::new(grid, config.mollifier);
    let kc = grid.kc();
    let rows: Vec<Vec<String>> = (0..grid.n())
        .map(|p| {
            let k = grid.k(p);
            vec![
                num(k),
                num(theta0(k, kc)),
                num(sym.theta()[p]),
                num(sym.h()[p]),
            ]
        })
        .collect();
    let file = write_csv(&config.out, "mollifier.csv", "k,theta0,theta,h", &rows)?;
    Ok(RunOutput {
        files: vec![file],
        meta: BTreeMap::new(),
    })
}

fn moments(config: &ExperimentConfig, pool: &ThreadPool) -> Result<RunOutput, ConfigError> {
    let results: Vec<Result<MomentTable, ConfigError>> = pool.install(|| {
        config
            .schemes
            .par_iter()
            .map(|&s| {
                let col = column(config, config.grid, s)?;
                (0..=config.m_max)
                    .map(|m| Ok(moment_check(&col, m).map(|(l, r)| (m, l, r))?))
                    .collect()
            })
            .collect()
    });
    let mut files = Vec::new();
    let mut meta = BTreeMap::new();
    for (scheme, table) in config.schemes.iter().zip(results) {
        let table = table?;
        let holds = table.iter().all(|&(_, l, r)| l <= r * (1.0 + 1e-10));
        meta.insert(format!("bound_holds.{}", scheme.name()), holds.to_string());
        let rows: Vec<Vec<String>> = table
            .into_iter()
            .map(|(m, l, r)| vec![m.to_string(), num(l), num(r)])
            .collect();
        files.push(write_csv(
            &config.out,
            &format!("moments_{}.csv", scheme.name()),
            "m,lhs,rhs",
            &rows,
        )?);
    }
    Ok(RunOutput { files, meta })
}
