//! Command implementations behind the `so3-fuzzy` binary.
//!
//! Each command resolves its configuration (a TOML file or the bundled
//! `paper_iv_a` preset), runs the core library, and writes CSV artifacts.
//! All randomness flows from the effective seed: `--seed` when given,
//! otherwise the config file's `rng_seed` (default 0).

use std::io::Write;
use std::path::Path;

use so3_fuzzy::abc::{self, AbcConfig, ColonySettings};
use so3_fuzzy::fuzzy::{FuzzyEngine, FuzzyParams};
use so3_fuzzy::harness::{
    run_filter, summarize, write_records_csv, ErrorSignal, GainSource, SummaryMetrics,
};
use so3_fuzzy::sim::{load_scenario, simulate, ScenarioConfig};
use so3_fuzzy::{Error, Result};

use serde_for_abc::AbcFile;

/// Reserved `--config` value selecting the bundled reference scenario.
pub const PAPER_PRESET: &str = "paper_iv_a";

/// Environment variable capping the optimizer worker count.
pub const THREADS_ENV: &str = "SO3_FUZZY_THREADS";

/// Exit code for configuration problems.
pub const EXIT_CONFIG: i32 = 2;

/// Exit code for numerical divergence.
pub const EXIT_DIVERGENCE: i32 = 3;

/// Maps an error to the documented process exit code.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::Scenario(_) | Error::ParamOutOfBounds { .. } => EXIT_CONFIG,
        Error::Divergence(_) => EXIT_DIVERGENCE,
        _ => 1,
    }
}

/// The `--gain` argument: `fixed:<k>` or `fuzzy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GainArg {
    Fixed { k_op: f64 },
    Fuzzy,
}

impl std::str::FromStr for GainArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "fuzzy" {
            return Ok(GainArg::Fuzzy);
        }
        if let Some(value) = s.strip_prefix("fixed:") {
            let k_op: f64 = value
                .parse()
                .map_err(|_| Error::Config(format!("invalid fixed gain {value:?}")))?;
            return Ok(GainArg::Fixed { k_op });
        }
        Err(Error::Config(format!(
            "gain must be `fixed:<k>` or `fuzzy`, got {s:?}"
        )))
    }
}

/// Loads a scenario from a path or the `paper_iv_a` preset, applying the
/// seed override.
pub fn resolve_scenario(source: &str, seed: Option<u64>) -> Result<ScenarioConfig> {
    let path = Path::new(source);
    let mut config = if source == PAPER_PRESET && !path.exists() {
        ScenarioConfig::paper_iv_a(0)
    } else {
        load_scenario(path)?
    };
    if let Some(seed) = seed {
        config.scenario.rng_seed = seed;
    }
    Ok(config)
}

/// One closed-loop run: writes the trace CSV and returns the summary.
pub fn cmd_simulate(
    config: &str,
    gain: GainArg,
    params: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<SummaryMetrics> {
    let scenario_cfg = resolve_scenario(config, seed)?;
    let scenario = &scenario_cfg.scenario;
    let traj = simulate(scenario)?;

    let engine = match (gain, params) {
        (GainArg::Fuzzy, Some(path)) => {
            Some(FuzzyEngine::with_default_rules(FuzzyParams::load(path)?))
        }
        (GainArg::Fuzzy, None) => {
            return Err(Error::Config(
                "--gain fuzzy requires --params <record>".into(),
            ))
        }
        (GainArg::Fixed { .. }, _) => None,
    };
    let source = match (&engine, gain) {
        (Some(engine), _) => GainSource::Scheduled(engine),
        (None, GainArg::Fixed { k_op }) => GainSource::Fixed { k_op },
        _ => unreachable!(),
    };

    let records = run_filter(
        &traj,
        scenario.initial_estimate,
        scenario.gyro.bias,
        source,
        scenario_cfg.gamma,
        ErrorSignal::TruthDistance,
    )?;
    write_records_csv(out, &records)?;
    Ok(summarize(&records, scenario.dt))
}

/// Runs the tuning campaign: writes the convergence log, checkpoint, and
/// final parameter record into `out_dir`.
pub fn cmd_optimize(
    abc_config: &Path,
    seed: Option<u64>,
    out_dir: &Path,
    resume: bool,
) -> Result<FuzzyParams> {
    let config = load_abc_config(abc_config, seed)?;
    std::fs::create_dir_all(out_dir)?;
    let checkpoint_path = out_dir.join("abc.checkpoint");

    let previous = if resume && checkpoint_path.exists() {
        Some(abc::read_checkpoint(&checkpoint_path)?)
    } else {
        None
    };
    let base_iteration = previous.as_ref().map_or(0, |c| c.iteration);

    let report = abc::run_with_checkpoints(&config, Some(&checkpoint_path), previous.as_ref())?;

    let log_path = out_dir.join("convergence.csv");
    let mut log = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
    writeln!(log, "iteration,best_j,mean_j")?;
    for (i, (best, mean)) in report.best_j[1..]
        .iter()
        .zip(&report.mean_j[1..])
        .enumerate()
    {
        writeln!(log, "{},{best},{mean}", base_iteration + i + 1)?;
    }
    log.flush()?;

    let params = FuzzyParams::from_slice(report.final_best_position())?;
    params.save(&out_dir.join("best.params"))?;
    Ok(params)
}

/// Result rows of a gain comparison.
pub type ComparisonTable = Vec<(String, SummaryMetrics)>;

/// Runs the scenario once per fixed gain increment plus once
/// fuzzy-scheduled, on the same measurement realization.
pub fn cmd_compare(
    config: &str,
    params: &Path,
    k_list: &[f64],
    seed: Option<u64>,
    out: &Path,
) -> Result<ComparisonTable> {
    let scenario_cfg = resolve_scenario(config, seed)?;
    let scenario = &scenario_cfg.scenario;
    let traj = simulate(scenario)?;
    let engine = FuzzyEngine::with_default_rules(FuzzyParams::load(params)?);

    let mut rows = ComparisonTable::new();
    let mut run = |label: String, source: GainSource<'_>| -> Result<()> {
        let records = run_filter(
            &traj,
            scenario.initial_estimate,
            scenario.gyro.bias,
            source,
            scenario_cfg.gamma,
            ErrorSignal::TruthDistance,
        )?;
        rows.push((label, summarize(&records, scenario.dt)));
        Ok(())
    };
    for &k_op in k_list {
        run(format!("fixed:{k_op}"), GainSource::Fixed { k_op })?;
    }
    run("fuzzy".into(), GainSource::Scheduled(&engine))?;

    let mut table = std::io::BufWriter::new(std::fs::File::create(out)?);
    writeln!(
        table,
        "run,settling_time,steady_mean,steady_std,objective_j"
    )?;
    for (label, m) in &rows {
        let settling = m
            .settling_time
            .map_or_else(|| "inf".to_string(), |t| t.to_string());
        writeln!(
            table,
            "{label},{settling},{},{},{}",
            m.steady_mean, m.steady_std, m.objective
        )?;
    }
    table.flush()?;
    Ok(rows)
}

/// Parses a comma-separated list of fixed gain increments.
pub fn parse_k_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid gain increment {tok:?}")))
        })
        .collect()
}

/// Reads the worker cap from the environment, when set.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(text) => {
            let n: usize = text
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer")))?;
            if n == 0 {
                return Err(Error::Config(format!("{THREADS_ENV} must be >= 1")));
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Loads an optimizer config file; the seed override applies to both the
/// colony and the measurement noise of the objective scenario.
pub fn load_abc_config(path: &Path, seed: Option<u64>) -> Result<AbcConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let file: AbcFile = serde_for_abc::parse(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;

    let scenario_source = file.scenario.unwrap_or_else(|| PAPER_PRESET.to_string());
    let scenario_cfg = if scenario_source == PAPER_PRESET {
        let mut cfg = ScenarioConfig::paper_iv_a(0);
        if let Some(seed) = seed {
            cfg.scenario.rng_seed = seed;
        }
        cfg
    } else {
        // Relative scenario paths resolve against the optimizer config.
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        resolve_scenario(
            base.join(&scenario_source)
                .to_str()
                .unwrap_or(&scenario_source),
            seed,
        )?
    };

    let config = AbcConfig {
        colony: ColonySettings {
            n_sources: file.n_sources,
            iterations: file.iterations,
            abandonment_limit: file.abandonment_limit,
            rng_seed: seed.unwrap_or(file.rng_seed),
            workers: workers_from_env()?,
        },
        scenario: scenario_cfg.scenario,
        gamma: scenario_cfg.gamma,
        transient_window: (file.transient_window[0], file.transient_window[1]),
        steady_window: (file.steady_window[0], file.steady_window[1]),
        transient_weight: file.transient_weight,
    };
    config.validate()?;
    Ok(config)
}

mod serde_for_abc {
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct AbcFile {
        pub scenario: Option<String>,
        pub n_sources: usize,
        pub iterations: usize,
        #[serde(default = "default_limit")]
        pub abandonment_limit: u32,
        #[serde(default)]
        pub rng_seed: u64,
        #[serde(default = "default_transient")]
        pub transient_window: [f64; 2],
        #[serde(default = "default_steady")]
        pub steady_window: [f64; 2],
        #[serde(default = "default_weight")]
        pub transient_weight: f64,
    }

    fn default_limit() -> u32 {
        100
    }

    fn default_transient() -> [f64; 2] {
        [0.0, 1.0]
    }

    fn default_steady() -> [f64; 2] {
        [4.0, 14.0]
    }

    fn default_weight() -> f64 {
        0.3
    }

    pub fn parse(text: &str) -> std::result::Result<AbcFile, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Renders the comparison table for the terminal.
pub fn format_table(rows: &ComparisonTable) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>14} {:>12} {:>12} {:>12}\n",
        "run", "settling_time", "steady_mean", "steady_std", "objective_j"
    ));
    for (label, m) in rows {
        let settling = m
            .settling_time
            .map_or_else(|| "unsettled".to_string(), |t| format!("{t:.3}"));
        out.push_str(&format!(
            "{label:<14} {settling:>14} {:>12.6} {:>12.6} {:>12.4}\n",
            m.steady_mean, m.steady_std, m.objective
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_argument_parses_both_modes() {
        assert_eq!("fuzzy".parse::<GainArg>().unwrap(), GainArg::Fuzzy);
        assert_eq!(
            "fixed:9".parse::<GainArg>().unwrap(),
            GainArg::Fixed { k_op: 9.0 }
        );
        assert_eq!(
            "fixed:0.5".parse::<GainArg>().unwrap(),
            GainArg::Fixed { k_op: 0.5 }
        );
        assert!("fixed:".parse::<GainArg>().is_err());
        assert!("scheduled".parse::<GainArg>().is_err());
    }

    #[test]
    fn k_list_parses_comma_separated_values() {
        assert_eq!(parse_k_list("0,9,49").unwrap(), vec![0.0, 9.0, 49.0]);
        assert_eq!(parse_k_list(" 1.5 , 2 ").unwrap(), vec![1.5, 2.0]);
        assert!(parse_k_list("1,x").is_err());
    }

    #[test]
    fn worker_cap_comes_from_the_environment() {
        std::env::remove_var(THREADS_ENV);
        assert_eq!(workers_from_env().unwrap(), None);
        std::env::set_var(THREADS_ENV, "3");
        assert_eq!(workers_from_env().unwrap(), Some(3));
        std::env::set_var(THREADS_ENV, "0");
        assert!(workers_from_env().is_err());
        std::env::set_var(THREADS_ENV, "many");
        assert!(workers_from_env().is_err());
        std::env::remove_var(THREADS_ENV);
    }

    #[test]
    fn preset_scenario_resolves_with_seed_override() {
        let cfg = resolve_scenario(PAPER_PRESET, Some(9)).unwrap();
        assert_eq!(cfg.scenario.rng_seed, 9);
        assert_eq!(cfg.scenario.n_samples(), 1401);
        assert!(resolve_scenario("no_such_file.toml", None).is_err());
    }
}
