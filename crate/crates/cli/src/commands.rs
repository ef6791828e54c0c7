use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use xtopk::harness::{
    bench_inference, compare, random_bank, random_contexts, run_seeds, synthetic_model,
    synthetic_multilabel, write_bench_csv, write_csv, ExperimentConfig, MeanSe, ModeKind,
    MultiLabelDataset, Outcome, RealizableEnv, ALL_ARMS,
};
use xtopk::hierarchy::build_hierarchy;
use xtopk::harness::experiment::split_and_order;
use xtopk::rng::stream;
use xtopk::{Hierarchy, RegressorBank, Rng, StrategyConfig, StrategyKind};

use crate::args::{BenchArgs, BuildTreeArgs, Command, GenArgs, RunArgs, SynthArgs};
use crate::settings::{resolve, resolve_data_path};
use crate::CliError;

/// Summary output. Results are already on disk, so a closed stdout is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::BuildTree(a) => build_tree(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a),
        Command::Gen(a) => gen(a),
    }
}

fn load_dataset(path: &Path) -> Result<MultiLabelDataset, CliError> {
    Ok(MultiLabelDataset::load(&resolve_data_path(path))?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn build_tree(a: BuildTreeArgs) -> Result<(), CliError> {
    let data = load_dataset(&a.data)?;
    if a.init_size == 0 || a.init_size >= data.len() {
        return Err(CliError::Usage(format!(
            "--init-size must lie in 1..{} for this dataset",
            data.len()
        )));
    }
    let split = ExperimentConfig {
        init_size: a.init_size,
        seed: a.seed,
        ..ExperimentConfig::default()
    };
    let (init, _) = split_and_order(data.len(), &split);
    let part = data.subset(&init);
    let mut rng = Rng::new(a.seed).stream(&[stream::TREE]);
    let h = build_hierarchy(
        part.rows(),
        part.labels(),
        data.num_labels(),
        data.dim(),
        a.max_leaf,
        a.l2,
        &mut rng,
    )?;
    h.save(&a.out)?;
    let tree = &h.tree;
    say!(
        "arms {} nodes {} leaves {} depth {} levels {}",
        tree.num_arms(),
        tree.num_nodes(),
        tree.leaves().count(),
        tree.depth(),
        tree.height()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<Arc<Hierarchy>, CliError> {
    Ok(Arc::new(Hierarchy::load(path)?))
}

fn run(a: RunArgs) -> Result<(), CliError> {
    let resolved = resolve(&a.experiment)?;
    let exp = &resolved.experiment;
    let hierarchy = match (exp.mode, &a.model) {
        (ModeKind::Extreme, None) => {
            return Err(CliError::Usage("extreme mode requires --model".into()))
        }
        (ModeKind::Extreme, Some(p)) => Some(load_model(p)?),
        (ModeKind::Flat, _) => None,
    };
    let data = load_dataset(&a.data)?;
    let runs = run_seeds(exp, &data, hierarchy, None, &resolved.seeds, resolved.jobs)?;
    let mut csv = Vec::new();
    write_csv(&runs, &mut csv)?;
    write_file(&a.out, &csv)?;
    if let Some(path) = &a.save_bank {
        runs[0].bank.save(path)?;
    }
    for run in &runs {
        say!(
            "seed {} final progressive mean {:.4} observed fraction {:.3}",
            run.seed,
            run.stats.final_mean(),
            run.stats.observed_fraction()
        );
    }
    Ok(())
}

fn strategy_path(prefix: &Path, kind: StrategyKind) -> PathBuf {
    let mut name = OsString::from(prefix.as_os_str());
    name.push(format!(".{kind}.csv"));
    PathBuf::from(name)
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let resolved = resolve(&a.experiment)?;
    let data = load_dataset(&a.data)?;
    let env = RealizableEnv::fit(&data, a.noise_sd, resolved.experiment.l2_penalty)?;
    let hierarchy = a.model.as_deref().map(load_model).transpose()?;
    let mut outputs = Vec::new();
    let mut finals = Vec::new();
    for kind in StrategyKind::ALL {
        let mut exp = resolved.experiment.clone();
        exp.strategy.kind = kind;
        let runs = run_seeds(
            &exp,
            &data,
            hierarchy.clone(),
            Some(&env),
            &resolved.seeds,
            resolved.jobs,
        )?;
        let mut csv = Vec::new();
        write_csv(&runs, &mut csv)?;
        outputs.push((strategy_path(&a.out_prefix, kind), csv));
        let means: Vec<f64> = runs.iter().map(|r| r.stats.final_mean()).collect();
        let regrets: Vec<f64> = runs
            .iter()
            .map(|r| r.stats.checkpoints.last().and_then(|c| c.cumulative_regret).unwrap_or(0.0))
            .collect();
        finals.push((kind, MeanSe::of(&means), MeanSe::of(&regrets)));
    }
    for (path, csv) in &outputs {
        write_file(path, csv)?;
    }
    for (kind, mean, regret) in &finals {
        say!("{kind:<15} final progressive mean {mean}  cumulative regret {regret}");
    }
    let igw = finals
        .iter()
        .find(|f| f.0 == StrategyKind::Igw)
        .expect("all strategies ran");
    for (kind, mean, _) in finals.iter().filter(|f| f.0 != StrategyKind::Igw) {
        let verdict = match compare(&igw.1, mean) {
            Outcome::Win => "win",
            Outcome::Draw => "draw",
            Outcome::Loss => "loss",
        };
        say!("igw vs {kind}: {verdict}");
    }
    Ok(())
}

fn parse_beams(raw: &[String]) -> Result<Vec<usize>, CliError> {
    raw.iter()
        .map(|s| match s.trim() {
            "all" => Ok(ALL_ARMS),
            t => match t.parse::<usize>() {
                Ok(b) if b > 0 => Ok(b),
                _ => Err(CliError::Usage(format!("invalid beam width `{t}`"))),
            },
        })
        .collect()
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    let beams = parse_beams(&a.beams)?;
    if a.contexts == 0 {
        return Err(CliError::Usage("--contexts must be positive".into()));
    }
    let mut rng = Rng::new(a.seed);
    let (hierarchy, bank): (Arc<Hierarchy>, RegressorBank) = match (&a.model, a.synthetic_arms) {
        (Some(path), _) => {
            let h = load_model(path)?;
            let bank = match &a.bank {
                Some(p) => RegressorBank::load(p)?,
                None => random_bank(
                    h.tree.num_arms() + h.tree.num_nodes(),
                    h.dim(),
                    a.regressor_nnz,
                    &mut rng,
                )?,
            };
            (h, bank)
        }
        (None, Some(arms)) => synthetic_model(
            arms,
            a.max_leaf,
            a.dim,
            a.routing_nnz,
            a.regressor_nnz,
            &mut rng,
        )?,
        (None, None) => {
            return Err(CliError::Usage(
                "bench needs --model or --synthetic-arms".into(),
            ))
        }
    };
    let contexts = match &a.data {
        Some(p) => {
            let data = load_dataset(p)?;
            data.rows().iter().take(a.contexts).cloned().collect()
        }
        None => random_contexts(a.contexts, hierarchy.dim(), a.context_nnz, &mut rng)?,
    };
    let strategy = StrategyConfig {
        k: a.k,
        r: a.r,
        ..StrategyConfig::default()
    };
    let rows = bench_inference(&hierarchy, &bank, &contexts, &beams, strategy)?;
    let mut csv = Vec::new();
    write_bench_csv(&rows, &mut csv)?;
    write_file(&a.out, &csv)?;
    say!("{}", String::from_utf8_lossy(&csv).trim_end());
    Ok(())
}

fn gen(a: GenArgs) -> Result<(), CliError> {
    let data = synthetic_multilabel(
        a.n,
        a.dim,
        a.labels,
        a.labels_per_row,
        &mut Rng::new(a.seed),
    )?;
    data.save(&a.out)?;
    say!("rows {} dim {} labels {}", data.len(), data.dim(), data.num_labels());
    Ok(())
}
