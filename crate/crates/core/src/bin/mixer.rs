use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use mixer::bench::{
    ablation, compare_with_oracle, format_gap_table, monte_carlo_gap, optimality_gap, precision_recall,
    write_ablation_csv, write_gap_csv, GapBenchConfig, Method,
};
use mixer::io::{
    read_instance, read_result, read_solver_config, read_synth_config, read_truth, write_instance, write_result,
    write_truth, InstanceMetadata, ResultFile,
};
use mixer::oracle::{solve_exact, OracleConfig};
use mixer::problem::{check_cycle_consistency, check_feasible, Assignment};
use mixer::synth::{derive_seed, generate, multimodal_suite, SynthConfig};
use mixer::{solve, Error, SolverConfig};

const EXIT_REPAIRED: u8 = 2;

#[derive(Parser)]
#[command(name = "mixer", version, about = "Multimodal, multiway data association")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance with projected gradient descent.
    Solve {
        instance: PathBuf,
        /// Solver seed; same as --rng-seed.
        #[arg(long, conflicts_with = "rng_seed")]
        seed: Option<u64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Ground-truth file; prints precision/recall/F1 when given.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Result file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance exactly by enumeration.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = 12)]
        max_elements: usize,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic instances and ground truth.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// Benchmark the solver against the oracle, or run the modality ablation.
    Bench {
        /// CSV output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Benchmark every instance_*.json in a directory instead of sampling.
        #[arg(long, conflicts_with = "ablation")]
        corpus: Option<PathBuf>,
        /// Incremental-modality ablation on the four-modality suite.
        #[arg(long)]
        ablation: bool,
        /// Outlier counts, one table row each.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        outliers: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        max_elements: usize,
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Validate a result file against an instance.
    Check { result: PathBuf, instance: PathBuf },
}

#[derive(Args, Clone, Debug)]
struct SolverArgs {
    /// Solver configuration JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "rng-seed")]
    rng_seed: Option<u64>,
    #[arg(long)]
    d_init: Option<f64>,
    #[arg(long)]
    d_growth: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    armijo_sigma: Option<f64>,
    #[arg(long)]
    armijo_beta: Option<f64>,
    #[arg(long)]
    step_init: Option<f64>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    max_inner_iters: Option<usize>,
    #[arg(long)]
    binary_tol: Option<f64>,
}

impl SolverArgs {
    fn build(&self) -> mixer::Result<SolverConfig> {
        let mut c = match &self.config {
            Some(p) => read_solver_config(p)?,
            None => SolverConfig::default(),
        };
        if let Some(v) = self.rng_seed {
            c.rng_seed = v;
        }
        if self.d_init.is_some() {
            c.d_init = self.d_init;
        }
        if let Some(v) = self.d_growth {
            c.d_growth = v;
        }
        if self.d_max.is_some() {
            c.d_max = self.d_max;
        }
        if let Some(v) = self.armijo_sigma {
            c.armijo_sigma = v;
        }
        if let Some(v) = self.armijo_beta {
            c.armijo_beta = v;
        }
        if let Some(v) = self.step_init {
            c.step_init = v;
        }
        if self.inner_tol.is_some() {
            c.inner_tol = self.inner_tol;
        }
        if let Some(v) = self.max_inner_iters {
            c.max_inner_iters = v;
        }
        if let Some(v) = self.binary_tol {
            c.binary_tol = v;
        }
        Ok(c)
    }
}

#[derive(Args, Clone, Debug)]
struct SynthArgs {
    /// Generator configuration JSON; flags override its fields.
    #[arg(long = "synth-config")]
    synth_config: Option<PathBuf>,
    #[arg(long)]
    universe_size: Option<usize>,
    #[arg(long)]
    num_sets: Option<usize>,
    #[arg(long)]
    modalities: Option<usize>,
    #[arg(long)]
    observe_prob: Option<f64>,
    /// Outlier count (synth only; bench takes a list via --outliers).
    #[arg(long = "num-outliers")]
    num_outliers: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    inconclusive_rate: Option<f64>,
    #[arg(long)]
    flip_rate: Option<f64>,
}

impl SynthArgs {
    fn build(&self, base: SynthConfig) -> mixer::Result<SynthConfig> {
        let mut c = match &self.synth_config {
            Some(p) => read_synth_config(p)?,
            None => base,
        };
        c.universe_size = self.universe_size.unwrap_or(c.universe_size);
        c.num_sets = self.num_sets.unwrap_or(c.num_sets);
        c.modality_count = self.modalities.unwrap_or(c.modality_count);
        c.observe_prob = self.observe_prob.unwrap_or(c.observe_prob);
        c.outliers = self.num_outliers.unwrap_or(c.outliers);
        c.noise_sigma = self.noise_sigma.unwrap_or(c.noise_sigma);
        c.inconclusive_rate = self.inconclusive_rate.unwrap_or(c.inconclusive_rate);
        c.flip_rate = self.flip_rate.unwrap_or(c.flip_rate);
        Ok(c)
    }
}

/// Trial template of the gap benchmark: small enough for the oracle.
fn gap_bench_template() -> SynthConfig {
    SynthConfig { universe_size: 4, num_sets: 3, observe_prob: 0.75, ..SynthConfig::default() }
}

fn emit_result(result: &ResultFile, out: Option<&Path>) -> mixer::Result<()> {
    match out {
        Some(p) => write_result(p, result),
        None => {
            let text = serde_json::to_string_pretty(result).map_err(|e| Error::Internal(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn report_truth(clusters: &mixer::ClusterLabeling, truth: Option<&Path>) -> mixer::Result<()> {
    if let Some(p) = truth {
        let t = read_truth(p)?;
        let r = precision_recall(clusters, &t)?;
        eprintln!("precision {:.4}  recall {:.4}  f1 {:.4}", r.precision, r.recall, r.f1);
    }
    Ok(())
}

fn cmd_solve(
    instance: &Path,
    seed: Option<u64>,
    solver: &SolverArgs,
    truth: Option<&Path>,
    out: Option<&Path>,
) -> mixer::Result<u8> {
    let (inst, _) = read_instance(instance)?;
    let mut config = solver.build()?;
    if let Some(s) = seed {
        config.rng_seed = s;
    }
    let res = solve(&inst, &config)?;
    emit_result(&ResultFile::from_solver(&res, &config), out)?;
    eprintln!(
        "m {}  objects {}  frobenius {}  converged {}",
        inst.num_elements(),
        res.assignment.num_columns(),
        res.frobenius_value,
        res.converged
    );
    report_truth(&res.clusters(), truth)?;
    Ok(if res.converged { 0 } else { EXIT_REPAIRED })
}

fn cmd_oracle(instance: &Path, max_elements: usize, truth: Option<&Path>, out: Option<&Path>) -> mixer::Result<u8> {
    let (inst, _) = read_instance(instance)?;
    let res = solve_exact(&inst, &OracleConfig { max_elements, report_all_optima: false })?;
    emit_result(&ResultFile::from_oracle(&res), out)?;
    eprintln!("optimal value {}  ({} assignments enumerated)", res.value, res.enumerated);
    report_truth(&res.assignment.clusters(), truth)?;
    Ok(0)
}

fn cmd_synth(out_dir: &Path, trials: usize, seed: u64, synth: &SynthArgs) -> mixer::Result<u8> {
    let template = synth.build(SynthConfig::default())?;
    fs::create_dir_all(out_dir)?;
    for t in 0..trials {
        let trial_seed = derive_seed(seed, 0, t as u64);
        let config = SynthConfig { rng_seed: trial_seed, ..template.clone() };
        let (inst, truth) = generate(&config)?;
        let meta = InstanceMetadata { seed: Some(trial_seed), generator: Some(config) };
        write_instance(&out_dir.join(format!("instance_{t:03}.json")), &inst, Some(meta))?;
        write_truth(&out_dir.join(format!("truth_{t:03}.json")), &truth)?;
    }
    eprintln!("wrote {trials} instances to {}", out_dir.display());
    Ok(0)
}

fn open_out(out: Option<&Path>) -> mixer::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn bench_corpus(dir: &Path, solver: &SolverConfig, oracle: &OracleConfig, out: Option<&Path>) -> mixer::Result<u8> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("instance_") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    let mut w = open_out(out)?;
    writeln!(w, "file,m,solver_value,oracle_value,gap,precision,recall,f1,converged,runtime_ms")?;
    let mut any_repaired = false;
    for path in &files {
        let (inst, _) = read_instance(path)?;
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let truth_path = path.with_file_name(name.replacen("instance_", "truth_", 1));
        let truth = if truth_path.exists() {
            read_truth(&truth_path)?
        } else {
            // Without ground truth, score against the oracle's partition.
            let exact = solve_exact(&inst, oracle)?;
            mixer::synth::GroundTruth { labels: exact.assignment.clusters().labels }
        };
        let c = compare_with_oracle(&inst, &truth, solver, oracle)?;
        any_repaired |= !c.converged;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            name,
            inst.num_elements(),
            c.solver_value,
            c.oracle_value,
            optimality_gap(c.solver_value, c.oracle_value)?,
            c.solver_metrics.precision,
            c.solver_metrics.recall,
            c.solver_metrics.f1,
            c.converged,
            c.solver_ms
        )?;
    }
    eprintln!("benchmarked {} instances from {}", files.len(), dir.display());
    Ok(if any_repaired { EXIT_REPAIRED } else { 0 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    out: Option<&Path>,
    corpus: Option<&Path>,
    run_ablation: bool,
    outliers: &[usize],
    trials: usize,
    seed: u64,
    max_elements: usize,
    synth: &SynthArgs,
    solver: &SolverArgs,
) -> mixer::Result<u8> {
    let solver = solver.build()?;
    let oracle = OracleConfig { max_elements, report_all_optima: false };
    if let Some(dir) = corpus {
        return bench_corpus(dir, &solver, &oracle, out);
    }
    if run_ablation {
        let suite = multimodal_suite(seed, trials)?;
        let rows = ablation(&suite, &solver)?;
        write_ablation_csv(&rows, open_out(out)?)?;
        for r in rows.iter().filter(|r| r.method == Method::Solver) {
            eprintln!("solver  modalities {:?}  f1 {:.4}", r.modalities, r.f1);
        }
        return Ok(0);
    }
    let config = GapBenchConfig {
        synth: synth.build(gap_bench_template())?,
        outlier_counts: outliers.to_vec(),
        trials,
        solver,
        oracle,
        seed,
    };
    let started = Instant::now();
    let study = monte_carlo_gap(&config)?;
    write_gap_csv(&study.rows, open_out(out)?)?;
    eprint!("{}", format_gap_table(&study.rows));
    eprintln!("{} trials in {:.1} s", study.records.len(), started.elapsed().as_secs_f64());
    Ok(0)
}

fn cmd_check(result: &Path, instance: &Path) -> mixer::Result<u8> {
    let (inst, _) = read_instance(instance)?;
    let res = read_result(result)?;
    let labels = match res.labeling(inst.num_elements()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("invalid: {e}");
            return Ok(1);
        }
    };
    let assignment = match Assignment::from_clusters(&labels, inst.set_sizes()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("infeasible: {e}");
            return Ok(1);
        }
    };
    let report = check_feasible(&assignment.to_matrix(), &inst)?;
    if !report.is_feasible() {
        eprintln!("infeasible: {report:?}");
        return Ok(1);
    }
    if !check_cycle_consistency(&assignment.pairwise())? {
        eprintln!("cycle-inconsistent");
        return Ok(1);
    }
    eprintln!("ok: {} elements in {} clusters", inst.num_elements(), assignment.num_columns());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { instance, seed, solver, truth, out } => {
            cmd_solve(instance, *seed, solver, truth.as_deref(), out.as_deref())
        }
        Command::Oracle { instance, max_elements, truth, out } => {
            cmd_oracle(instance, *max_elements, truth.as_deref(), out.as_deref())
        }
        Command::Synth { out_dir, trials, seed, synth } => cmd_synth(out_dir, *trials, *seed, synth),
        Command::Bench { out, corpus, ablation, outliers, trials, seed, max_elements, synth, solver } => cmd_bench(
            out.as_deref(),
            corpus.as_deref(),
            *ablation,
            outliers,
            *trials,
            *seed,
            *max_elements,
            synth,
            solver,
        ),
        Command::Check { result, instance } => cmd_check(result, instance),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
