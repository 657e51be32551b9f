#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use brwre_cli::config::*;
use brwre_core::environment::{AtomDoc, DependenceDoc, DependenceMode, EnvironmentDoc, LawDoc};

pub fn atom(pairs: &[(&str, u32)], p: f64) -> AtomDoc {
    AtomDoc {
        counts: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        p,
    }
}

/// One-dimensional homogeneous environment with the given atoms.
pub fn env_1d(atoms: Vec<AtomDoc>) -> EnvironmentDoc {
    EnvironmentDoc {
        dimension: 1,
        step_set: vec![vec![1], vec![-1]],
        laws: vec![LawDoc { atoms }],
        weights: vec![1.0],
        dependence: DependenceDoc {
            mode: DependenceMode::Iid,
            window_radius: None,
        },
        seed: 11,
    }
}

/// One child to each neighbour: `μ_{±1} = 1`.
pub fn mu_two() -> EnvironmentDoc {
    env_1d(vec![atom(&[("(1)", 1), ("(-1)", 1)], 1.0)])
}

/// `μ_{+1} = 0.84`, `μ_{-1} = 0.21`: mean total 1.05, forward share 0.8.
pub fn drift_battery() -> EnvironmentDoc {
    env_1d(vec![
        atom(&[("(1)", 1)], 0.79),
        atom(&[("(-1)", 1)], 0.16),
        atom(&[("(1)", 1), ("(-1)", 1)], 0.05),
    ])
}

/// Two laws in d = 2, i.i.d.
pub fn mixed_2d() -> EnvironmentDoc {
    EnvironmentDoc {
        dimension: 2,
        step_set: vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
        laws: vec![
            LawDoc {
                atoms: vec![
                    atom(&[("(1,0)", 1), ("(-1,0)", 1)], 0.5),
                    atom(&[("(0,1)", 1)], 0.25),
                    atom(&[("(0,-1)", 1)], 0.25),
                ],
            },
            LawDoc {
                atoms: vec![
                    atom(&[("(1,0)", 1)], 0.4),
                    atom(&[("(-1,0)", 1)], 0.2),
                    atom(&[("(0,1)", 1)], 0.2),
                    atom(&[("(0,-1)", 1)], 0.2),
                ],
            },
        ],
        weights: vec![0.5, 0.5],
        dependence: DependenceDoc {
            mode: DependenceMode::Iid,
            window_radius: None,
        },
        seed: 7,
    }
}

pub fn config(environment: EnvironmentDoc, command: CommandDoc, dir: &Path) -> ConfigDoc {
    ConfigDoc {
        environment,
        command,
        output_dir: dir.to_path_buf(),
        workers: Some(2),
    }
}

/// Small parameters for every command that `report` needs.
pub fn pipeline(environment: &EnvironmentDoc, dir: &Path) -> Vec<ConfigDoc> {
    let dim = environment.dimension;
    vec![
        config(environment.clone(), CommandDoc::Check, dir),
        config(
            environment.clone(),
            CommandDoc::Shape(ShapeParams {
                deltas: vec![0.0, 0.3],
                n: 12,
            }),
            dir,
        ),
        config(
            environment.clone(),
            CommandDoc::Beta(BetaParams {
                grid_denominator: 4,
                grid_radius: if dim == 1 { 3 } else { 2 },
                horizon: 64,
                ..BetaParams::default()
            }),
            dir,
        ),
        config(environment.clone(), CommandDoc::Classify(ClassifyParams::default()), dir),
        config(
            environment.clone(),
            CommandDoc::Simulate(SimulateParams {
                horizon: 12,
                replicas: 64,
                ..SimulateParams::default()
            }),
            dir,
        ),
    ]
}

pub fn run_all(configs: &[ConfigDoc]) {
    for c in configs {
        brwre_cli::run_command(c).unwrap();
    }
}

pub fn write_config(dir: &Path, cfg: &ConfigDoc) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_canonical_json()).unwrap();
    path
}

pub fn brwre(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brwre"));
    cmd.args(args).env_remove("BRWRE_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}
