//! Command-line front end: investigations, debugging passes and benchmarks.

mod args;
mod state;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;
use uatest_core::dataset::{load_csv, make_datasource, read_schema_file, Dataset, Role, SchemaSpec};
use uatest_core::investigations::{self, debug_with_explanatory, InvestigationSpec, ReportModel};
use uatest_core::metrics::{Measure, Metric};
use uatest_core::report::{render_json_all, render_text_all};
use uatest_core::stats::{derive_seed, StatConfig};
use uatest_core::synth::{run_bench, tree_benchmark, tree_vs_itemsets, BenchConfig};
use uatest_core::tree::TreeParams;
use uatest_core::Error;

pub use args::{Cli, Command, Format, SEED_ENV};
pub use state::{State, STATE_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("no saved investigation at {0}; run testing, discovery or error-profile with --state first")]
    MissingState(PathBuf),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingState(_) | CliError::Core(Error::InvalidParameter(_)) => EXIT_USAGE,
            CliError::Core(Error::BudgetExhausted { .. }) => EXIT_BUDGET,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", cli.threads)))?;
    pool.install(|| match cli.command {
        Command::Testing(a) => investigate(a, |p, o| InvestigationSpec::testing(p, o)),
        Command::Discovery { common, top_k } => investigate(common, |p, o| InvestigationSpec::discovery(p, o, top_k)),
        Command::ErrorProfile {
            common,
            ground_truth,
            error_kind,
        } => investigate(common, |p, o| InvestigationSpec {
            error_kind: error_kind.map(Into::into),
            ..InvestigationSpec::error_profiling(p, o, ground_truth.clone())
        }),
        Command::Debug(a) => debug(a),
        Command::Bench(a) => bench(a),
        Command::TreeVsItemsets(a) => compare_searches(a),
    })
}

fn load(data: &Path, schema: Option<&Path>) -> Result<Dataset, CliError> {
    let schema: Option<BTreeMap<String, SchemaSpec>> = schema.map(read_schema_file).transpose()?;
    Ok(load_csv(data, schema.as_ref())?)
}

fn with_role(data: &Dataset, role: Role) -> Vec<String> {
    data.schema().iter().filter(|a| a.role == role).map(|a| a.name.clone()).collect()
}

fn at_most_one(data: &Dataset, role: Role, flag: &str) -> Result<Option<String>, CliError> {
    let mut names = with_role(data, role);
    if names.len() > 1 {
        return Err(CliError::Usage(format!("schema marks {} columns as {flag}; pick one with --{flag}", names.len())));
    }
    Ok(names.pop())
}

fn exactly_one(data: &Dataset, role: Role, flag: &str) -> Result<String, CliError> {
    at_most_one(data, role, flag)?.ok_or_else(|| CliError::Usage(format!("no {flag} column: pass --{flag} or mark one in the schema")))
}

fn tree_params(search: &args::SearchArgs) -> TreeParams {
    TreeParams {
        min_size: search.min_size,
        max_depth: search.max_depth,
        ..TreeParams::default()
    }
}

fn stat_config(stats: &args::StatArgs, seed: u64) -> StatConfig {
    StatConfig {
        conf: stats.conf,
        n_perm: stats.n_perm,
        n_boot: stats.n_boot,
        seed,
        ..StatConfig::default()
    }
}

fn investigate(a: args::InvestigationArgs, make: impl FnOnce(Vec<String>, String) -> InvestigationSpec) -> Result<(), CliError> {
    let data = load(&a.data, a.schema.as_deref())?;
    let protected = if a.protected.is_empty() { with_role(&data, Role::Protected) } else { a.protected };
    if protected.is_empty() {
        return Err(CliError::Usage("no protected attribute: pass --protected or mark one in the schema".into()));
    }
    let output = match a.output {
        Some(o) => o,
        None => exactly_one(&data, Role::Output, "output")?,
    };
    let context = if a.context.is_empty() { with_role(&data, Role::Contextual) } else { a.context };
    let explanatory = match a.explanatory {
        Some(e) => Some(e),
        None => at_most_one(&data, Role::Explanatory, "explanatory")?,
    };

    let mut spec = make(protected, output)
        .with_context(context)
        .with_tree(tree_params(&a.search))
        .with_stats(stat_config(&a.stats, derive_seed(a.seed, 1)));
    spec.explanatory = explanatory;
    spec.metric = a.metric.map(Into::into);
    spec.target = a.target;
    if let Some(g) = &a.groups {
        let (x, y) = g.split_once(',').ok_or_else(|| CliError::Usage(format!("--groups expects `a,b`, got `{g}`")))?;
        spec.groups = Some((x.to_string(), y.to_string()));
    }

    let n_rows = data.n_rows();
    let columns = data.schema().iter().map(|att| att.name.clone()).collect();
    let split_seed = derive_seed(a.seed, 0);
    let mut source = make_datasource(data, a.budget, a.train_fraction, split_seed, spec.tree.min_size)?;
    let (inv, reports) = investigations::run(&spec, &mut source)?;
    write_reports(&reports, &a.out)?;
    if let Some(path) = &a.state {
        State {
            version: STATE_VERSION,
            data: a.data,
            schema: a.schema,
            n_rows,
            columns,
            budget: source.budget(),
            consumed: source.consumed(),
            train_fraction: source.train_fraction(),
            split_seed,
            reports,
            investigation: inv,
        }
        .save(path)?;
    }
    Ok(())
}

fn debug(a: args::DebugArgs) -> Result<(), CliError> {
    let mut state = State::load(&a.state)?;
    if state.consumed >= state.budget {
        return Err(Error::BudgetExhausted { budget: state.budget }.into());
    }
    let raw = load(&state.data, state.schema.as_deref())?;
    state.check_data(&raw)?;
    let inv = &state.investigation;
    let mut source = make_datasource(raw, state.budget, state.train_fraction, state.split_seed, inv.spec.tree.min_size)?;
    source.set_consumed(state.consumed)?;
    let data = inv.materialize(source.data())?;
    source.replace_data(data)?;
    let test = source.next_test_set()?;
    let reports = debug_with_explanatory(inv, &a.explanatory, &test)?;
    state.consumed = source.consumed();
    write_reports(&reports, &a.out)?;
    state.reports = reports;
    state.save(&a.state)
}

fn bench(a: args::BenchArgs) -> Result<(), CliError> {
    let mut config = BenchConfig::new(a.n, a.plants, a.size, a.delta);
    config.metric = a.metric.into();
    config.tree = tree_params(&a.search);
    config.stats = stat_config(&a.stats, 0);
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    for seed in a.seed..a.seed + a.runs {
        let (row, _) = run_bench(&config, seed)?;
        log::info!("seed {seed}: recall {:.3}, {} false discoveries", row.recall, row.false_discoveries);
        w.serialize(row).map_err(Error::from)?;
    }
    flush_csv(w, a.out.as_deref())
}

fn compare_searches(a: args::TreeVsItemsetsArgs) -> Result<(), CliError> {
    let (data, protected, output, context) = match &a.data {
        Some(path) => {
            let data = load(path, a.schema.as_deref())?;
            let protected = match a.protected {
                Some(p) => p,
                None => exactly_one(&data, Role::Protected, "protected")?,
            };
            let output = match a.output {
                Some(o) => o,
                None => exactly_one(&data, Role::Output, "output")?,
            };
            let context = if a.context.is_empty() { with_role(&data, Role::Contextual) } else { a.context };
            (data, protected, output, context)
        }
        None => {
            let data = tree_benchmark(a.n, derive_seed(a.seed, 0));
            let context = with_role(&data, Role::Contextual);
            let protected = exactly_one(&data, Role::Protected, "protected")?;
            let output = exactly_one(&data, Role::Output, "output")?;
            (data, protected, output, context)
        }
    };
    let metric: Metric = match a.metric {
        Some(m) => m.into(),
        None => investigations::select_metric(data.attr(data.attribute(&protected)?), data.attr(data.attribute(&output)?))?,
    };
    let contextual = context.iter().map(|c| data.attribute(c)).collect::<Result<Vec<_>, _>>()?;
    let measure = Measure::new(&data, metric, &protected, &output, None)?;
    let source = make_datasource(Arc::new(data), 1, 0.5, derive_seed(a.seed, 1), a.min_size)?;
    let test = source.peek_test_set(0).expect("one test set");
    let params = TreeParams {
        min_size: a.min_size,
        max_depth: a.max_depth,
        ..TreeParams::default()
    };
    let outcomes = tree_vs_itemsets(source.train(), test, &measure, &contextual, &params)?;
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    for o in outcomes {
        w.serialize(o).map_err(Error::from)?;
    }
    flush_csv(w, a.out.as_deref())
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn flush_csv(w: csv::Writer<Box<dyn Write>>, path: Option<&Path>) -> Result<(), CliError> {
    let mut inner = w.into_inner().map_err(|e| io_error(path, e.into_error()))?;
    inner.flush().map_err(|e| io_error(path, e))
}

fn io_error(path: Option<&Path>, e: io::Error) -> CliError {
    Error::io(path.unwrap_or(Path::new("<stdout>")), e).into()
}

fn write_reports(reports: &[ReportModel], out: &args::OutputArgs) -> Result<(), CliError> {
    let mut text = match out.format {
        Format::Text => render_text_all(reports),
        Format::Json => render_json_all(reports)?,
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let path = out.out.as_deref();
    let mut w = sink(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::MissingState("s.json".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::from(Error::InvalidParameter("conf".into())).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::from(Error::BudgetExhausted { budget: 2 }).exit_code(), EXIT_BUDGET);
        assert_eq!(CliError::from(Error::UnknownAttribute("Zip".into())).exit_code(), EXIT_DATA);
        assert_eq!(CliError::from(Error::Schema("bad".into())).exit_code(), EXIT_DATA);
    }

    #[test]
    fn help_and_parse_errors() {
        assert_eq!(run(["uatest", "--help"]), EXIT_OK);
        assert_eq!(run(["uatest", "bench", "--delta", "lots"]), EXIT_USAGE);
        assert_eq!(run(["uatest", "testing"]), EXIT_USAGE);
        assert_eq!(run(["uatest", "testing", "--data", "d.csv", "--format", "xml"]), EXIT_USAGE);
    }

    #[test]
    fn flags_default_to_library_defaults() {
        let cli = Cli::try_parse_from(["uatest", "testing", "--data", "d.csv"]).unwrap();
        let Command::Testing(a) = cli.command else { panic!() };
        let tree = tree_params(&a.search);
        let stats = stat_config(&a.stats, 0);
        assert_eq!(tree, TreeParams::default());
        assert_eq!(stats, StatConfig { seed: 0, ..StatConfig::default() });
        assert_eq!(a.budget, 1);
        assert_eq!(a.train_fraction, uatest_core::dataset::DEFAULT_TRAIN_FRACTION);
        assert_eq!(a.out.format, Format::Text);
    }
}
