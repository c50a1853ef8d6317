use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use regretlab_core::bounds::{bound_report, GapSpec};
use regretlab_core::regret::{
    expected_regret_detailed, expected_regret_with_cap, regret_curve, ts_expected_regret_with_cap,
    ObservationContribution, WorstCaseConfig,
};
use regretlab_core::sampling::{key_hash, stream_rng};
use regretlab_core::simulation::{
    load_reviews, run_experiment_with, synthesize_dataset, ExperimentGrid,
};
use regretlab_core::{ObservationMatrix, State, Strategy, TsConfig};
use serde_json::{json, Value};

use crate::args::{
    Command, Common, ExactRegretArgs, MinMArgs, ReplayArgs, SimulateArgs, TsRegretArgs,
    WorstCaseArgs,
};
use crate::output::{emit, recorded_config, render, Artifact};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn ts_config(common: &Common) -> TsConfig {
    TsConfig {
        pseudo_count: common.pseudo_count,
        seed: common.seed,
        ..TsConfig::default()
    }
}

fn config_value(cmd: &Command, common: &Common) -> Value {
    json!({
        "tool": "regretlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd,
        "common": common,
    })
}

fn absolute(path: &Path) -> Result<PathBuf> {
    fs::canonicalize(path).map_err(|e| {
        CliError::Core(regretlab_core::Error::Data {
            line: None,
            msg: format!("cannot open {}: {e}", path.display()),
        })
    })
}

fn read_state(path: &Path) -> Result<State> {
    let file = File::open(path).map_err(|e| {
        CliError::Core(regretlab_core::Error::Data {
            line: None,
            msg: format!("cannot open {}: {e}", path.display()),
        })
    })?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::Core(e.into()))
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Compact matrix label: counts per product separated by `|`.
fn matrix_label(b: &ObservationMatrix) -> String {
    b.columns()
        .iter()
        .map(|c| c.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("|")
}

fn contribution_rows(rows: &[ObservationContribution]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|c| {
            let weights = c
                .decision
                .weights()
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>();
            vec![
                matrix_label(&c.matrix),
                c.likelihood.to_string(),
                weights.join(" "),
                c.contribution.to_string(),
            ]
        })
        .collect()
}

/// Runs a subcommand and renders its output files. Paths in the recorded
/// config are made absolute so a replay works from any directory.
pub fn execute(cmd: &Command, common: &Common) -> Result<Vec<Artifact>> {
    match cmd {
        Command::WorstCase(a) => worst_case(a, common),
        Command::ExactRegret(a) => {
            let a = ExactRegretArgs {
                state: absolute(&a.state)?,
                ..a.clone()
            };
            exact_regret(&a, common)
        }
        Command::MinM(a) => min_m(a, common),
        Command::Simulate(a) => {
            let a = SimulateArgs {
                dataset: a.dataset.as_deref().map(absolute).transpose()?,
                synthetic: a.synthetic.as_deref().map(absolute).transpose()?,
                ..a.clone()
            };
            simulate(&a, common)
        }
        Command::TsRegret(a) => ts_regret(a, common),
        Command::Replay(_) => Err(usage("replay cannot be nested")),
    }
}

fn single(content: String) -> Vec<Artifact> {
    vec![Artifact {
        suffix: None,
        content,
    }]
}

fn worst_case(a: &WorstCaseArgs, common: &Common) -> Result<Vec<Artifact>> {
    if (a.n_products, a.n_ratings) != (2, 2) {
        return Err(usage(format!(
            "worst-case search covers two products and two ratings, got {} and {}",
            a.n_products, a.n_ratings
        )));
    }
    if a.m_max == 0 {
        return Err(usage("--m-max must be at least 1"));
    }
    if !(a.grid_step > 0.0 && a.grid_step <= 0.5) {
        return Err(usage("--grid-step must lie in (0, 0.5]"));
    }
    let strategy = Strategy::from_kind(a.strategy, ts_config(common));
    let cfg = WorstCaseConfig {
        grid_step: a.grid_step,
        cap: common.cap,
        ..WorstCaseConfig::default()
    };
    let curve = regret_curve(&strategy, a.m_max, &cfg)?;
    let config = config_value(&Command::WorstCase(a.clone()), common);
    let content = render(
        &config,
        common.format,
        || {
            let rows = curve
                .iter()
                .map(|p| {
                    vec![
                        p.m.to_string(),
                        p.regret.to_string(),
                        p.p1_star.to_string(),
                        p.p2_star.to_string(),
                    ]
                })
                .collect();
            csv_string(&["m", "regret", "p1_star", "p2_star"], rows)
        },
        || json!(curve),
    );
    Ok(single(content))
}

fn exact_regret(a: &ExactRegretArgs, common: &Common) -> Result<Vec<Artifact>> {
    let state = read_state(&a.state)?;
    let strategy = Strategy::from_kind(a.strategy, ts_config(common));
    let report = if a.detail {
        expected_regret_detailed(&strategy, &state, a.m, common.cap)?
    } else {
        expected_regret_with_cap(&strategy, &state, a.m, common.cap)?
    };
    let config = config_value(&Command::ExactRegret(a.clone()), common);
    let content = render(
        &config,
        common.format,
        || {
            let mut s = csv_string(
                &["strategy", "m", "payoff", "regret", "best_value"],
                vec![vec![
                    a.strategy.to_string(),
                    a.m.to_string(),
                    report.payoff.to_string(),
                    report.regret.to_string(),
                    report.best_value.to_string(),
                ]],
            );
            if let Some(rows) = &report.per_observation {
                s.push('\n');
                s.push_str(&csv_string(
                    &["observation", "likelihood", "weights", "contribution"],
                    contribution_rows(rows),
                ));
            }
            s
        },
        || json!({ "strategy": a.strategy, "m": a.m, "report": report }),
    );
    Ok(single(content))
}

fn min_m(a: &MinMArgs, common: &Common) -> Result<Vec<Artifact>> {
    let spec = GapSpec::new(a.n_products, a.n_ratings, a.gap, a.delta)?;
    let report = bound_report(&spec);
    let config = config_value(&Command::MinM(a.clone()), common);
    let content = render(
        &config,
        common.format,
        || {
            let m_min = report
                .m_min
                .map_or("unbounded".to_string(), |m| m.to_string());
            let bound = report.bound_at_m.map_or(String::new(), |b| b.to_string());
            csv_string(
                &["n_d", "n_r", "gap", "delta", "m_min", "bound_at_m"],
                vec![vec![
                    report.n_d.to_string(),
                    report.n_r.to_string(),
                    report.gap.to_string(),
                    report.delta.to_string(),
                    m_min,
                    bound,
                ]],
            )
        },
        || json!(report),
    );
    Ok(single(content))
}

fn simulate(a: &SimulateArgs, common: &Common) -> Result<Vec<Artifact>> {
    let dataset = match (&a.dataset, &a.synthetic) {
        (Some(path), _) => load_reviews(path, a.n_ratings)?,
        (None, Some(path)) => {
            let state = read_state(path)?;
            let mut rng = stream_rng(&[common.seed, key_hash("synthetic")]);
            synthesize_dataset(&state, a.reviews, &mut rng)?
        }
        (None, None) => return Err(usage("one of --dataset or --synthetic is required")),
    };
    let ts = ts_config(common);
    let mut kinds = a.strategies.clone();
    kinds.dedup();
    let grid = ExperimentGrid {
        n_d_values: a.n_products.clone(),
        m_values: a.m.clone(),
        trials: a.trials,
        seed: common.seed,
        strategies: kinds.iter().map(|&k| Strategy::from_kind(k, ts)).collect(),
    };
    let table = run_experiment_with(&dataset, &grid, a.trial_log.is_some())?;
    if let Some(path) = &a.trial_log {
        fs::write(path, table.trial_log()).map_err(|e| CliError::Core(e.into()))?;
    }
    let summary = dataset.summary();
    match common.format {
        crate::args::Format::Json => {
            let config = config_value(&Command::Simulate(a.clone()), common);
            let mut table = table;
            table.cells.iter_mut().for_each(|c| c.trial_regrets = None);
            let content = render(
                &config,
                common.format,
                String::new,
                || json!({ "dataset": summary, "table": table }),
            );
            Ok(single(content))
        }
        crate::args::Format::Csv => Ok(kinds
            .iter()
            .map(|&k| {
                // each file records a config that regenerates exactly it
                let own = SimulateArgs {
                    strategies: vec![k],
                    trial_log: None,
                    ..a.clone()
                };
                let config = config_value(&Command::Simulate(own), common);
                Artifact {
                    suffix: Some(k.id().to_string()),
                    content: render(&config, common.format, || table.to_csv(k), || Value::Null),
                }
            })
            .collect()),
    }
}

fn ts_regret(a: &TsRegretArgs, common: &Common) -> Result<Vec<Artifact>> {
    let ts = ts_expected_regret_with_cap(a.p1, a.p2, a.m, ts_config(common), common.cap, a.detail)?;
    let state = State::two_by_two(a.p1, a.p2)?;
    let greedy = expected_regret_with_cap(&Strategy::Greedy, &state, a.m, common.cap)?;
    let config = config_value(&Command::TsRegret(a.clone()), common);
    let content = render(
        &config,
        common.format,
        || {
            let mut s = csv_string(
                &["m", "p1", "p2", "ts_regret", "greedy_regret"],
                vec![vec![
                    a.m.to_string(),
                    a.p1.to_string(),
                    a.p2.to_string(),
                    ts.regret.to_string(),
                    greedy.regret.to_string(),
                ]],
            );
            if let Some(rows) = &ts.per_observation {
                s.push('\n');
                s.push_str(&csv_string(
                    &["observation", "likelihood", "weights", "contribution"],
                    contribution_rows(rows),
                ));
            }
            s
        },
        || {
            json!({
                "m": a.m,
                "p1": a.p1,
                "p2": a.p2,
                "ts_regret": ts.regret,
                "greedy_regret": greedy.regret,
                "ts": ts,
            })
        },
    );
    Ok(single(content))
}

/// Re-runs the config recorded in `r.file` and checks that it regenerates
/// the file byte for byte.
pub fn replay(r: &ReplayArgs, out: Option<&Path>) -> Result<()> {
    let original = fs::read_to_string(&r.file).map_err(|e| CliError::Core(e.into()))?;
    let config = recorded_config(&original)?;
    let parse_err = |e: serde_json::Error| CliError::Core(e.into());
    let cmd: Command = serde_json::from_value(config["command"].clone()).map_err(parse_err)?;
    let common: Common = serde_json::from_value(config["common"].clone()).map_err(parse_err)?;
    let artifacts = execute(&cmd, &common)?;
    if out.is_some() {
        emit(&artifacts, out)?;
    }
    match artifacts.as_slice() {
        [a] if a.content == original => {
            println!("replay matches {}", r.file.display());
            Ok(())
        }
        _ => Err(CliError::Replay(format!(
            "replay of {} produced different output",
            r.file.display()
        ))),
    }
}
