//! Command-line front end.
//!
//! Results go to stdout, diagnostics to stderr. Exit codes: 0 success, 1
//! validation or parse error, 2 budget or undersupply-assumption error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hrtmslq::classic::{break_ties, TieBreakPolicy};
use hrtmslq::double_proposal::solve;
use hrtmslq::instances::{
    gap_family_general, gap_family_marriage, gap_family_uniform, gen_random, is_to_2is,
    reduce_2is_to_mslq, GenParams, ModelTag, ReductionError,
};
use hrtmslq::io;
use hrtmslq::model::{BlockReason, Instance, Matching, ModelError};
use hrtmslq::oracle::{enumerate_stable, gap_report, Budget, OracleError};
use hrtmslq::score::Score;
use hrtmslq::strategyproof::{
    probe, random_probe_campaign, verify_aux_equivalence, build_auxiliary, CampaignParams,
    ProbeOutcome, SolverKind, StrategyError,
};

#[derive(Parser)]
#[command(name = "hrtmslq", version, about = "Stable matching with tied lists and soft lower quotas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Alg {
    /// Double-proposal solver (strategy-proof, bounded score loss)
    Double,
    /// Tie-breaking then deferred acceptance
    Gs,
    /// Deferred acceptance with greedy deficiency-first tie-breaking
    Naive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TieBreak {
    Lex,
    Rev,
    Rand,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenModel {
    General,
    Uniform,
    Marriage,
    Rml,
    GapGeneral,
    GapUniform,
    GapMarriage,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RandomModel {
    General,
    Uniform,
    Marriage,
    Rml,
}

impl RandomModel {
    fn tag(self) -> ModelTag {
        match self {
            RandomModel::General => ModelTag::General,
            RandomModel::Uniform => ModelTag::Uniform,
            RandomModel::Marriage => ModelTag::Marriage,
            RandomModel::Rml => ModelTag::RSideMasterList,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the matching plus its score
    Solve {
        #[arg(long, value_enum)]
        alg: Alg,
        /// Tie-breaking policy for --alg gs
        #[arg(long, value_enum, default_value_t = TieBreak::Lex)]
        tiebreak: TieBreak,
        /// Seed for --tiebreak rand
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the double-proposal event log to stderr
        #[arg(long)]
        trace: bool,
        /// Also write the bare matching to this file
        #[arg(long)]
        out: Option<PathBuf>,
        file: PathBuf,
    },
    /// Score a matching file against an instance
    Score { file: PathBuf, matching: PathBuf },
    /// Validate an instance, or check a matching for feasibility/stability
    Check {
        file: PathBuf,
        matching: Option<PathBuf>,
    },
    /// Enumerate all stable matchings; print OPT, WST and the count
    Oracle {
        file: PathBuf,
        /// Abort when more than this many stable matchings exist
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
        /// Print every stable matching
        #[arg(long)]
        all: bool,
    },
    /// Generate an instance (random model or adversarial gap family)
    Gen {
        #[arg(long, value_enum)]
        model: GenModel,
        /// Residents (random models, gap-general)
        #[arg(long)]
        n: Option<usize>,
        /// Hospitals (random models)
        #[arg(long)]
        m: Option<usize>,
        /// Lower quota: exact for uniform/gap-uniform, range top otherwise
        #[arg(long)]
        lower: Option<usize>,
        /// Upper quota: exact for uniform/gap-uniform, range top otherwise
        #[arg(long)]
        upper: Option<usize>,
        /// Probability that an entry joins the previous tie
        #[arg(long, default_value_t = 0.3)]
        tie_density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Copies for gap-marriage
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the score-maximization instance of a 2-independent-set problem
    Reduce {
        #[arg(long)]
        graph: PathBuf,
        /// Residents per vertex
        #[arg(long)]
        p: usize,
        /// First apply the independent-set to 2-independent-set step
        #[arg(long)]
        from_is: bool,
    },
    /// Emit the tie-free auxiliary instance of a double-proposal run
    Aux {
        file: PathBuf,
        /// Also check that deferred acceptance on it reproduces the run
        #[arg(long)]
        verify: bool,
    },
    /// Attack a solver with misreported preference lists
    Probe {
        #[arg(long, value_enum)]
        alg: Alg,
        #[arg(long, value_enum, default_value_t = TieBreak::Lex)]
        tiebreak: TieBreak,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed instance to attack (random residents and fake lists)
        file: Option<PathBuf>,
        /// Random-instance campaign over this model instead
        #[arg(long, value_enum)]
        model: Option<RandomModel>,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
    },
    /// Run all solvers over seeded random instances and append CSV rows
    Bench {
        #[arg(long, value_enum)]
        model: RandomModel,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also compute OPT/WST per instance (costly)
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        m: usize,
    },
}

/// Failures split by exit code.
enum Failure {
    /// exit 1
    Validation(String),
    /// exit 2
    Budget(String),
}

impl Failure {
    fn from_model(e: ModelError) -> Self {
        match e {
            ModelError::AssumptionViolated { .. } => Failure::Budget(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }

    fn from_oracle(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            OracleError::Model(m) => Failure::from_model(m),
            other => Failure::Validation(other.to_string()),
        }
    }

    fn from_reduction(e: ReductionError) -> Self {
        match e {
            ReductionError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }

    fn from_strategy(e: StrategyError) -> Self {
        match e {
            StrategyError::Model(m) => Failure::from_model(m),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<io::IoError> for Failure {
    fn from(e: io::IoError) -> Self {
        match e {
            io::IoError::Model(m) => Failure::from_model(m),
            other => Failure::Validation(other.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let parsed = io::parse_instance(&read_file(path)?)?;
    parsed.into_instance().map_err(Failure::from_model)
}

fn policy_of(tiebreak: TieBreak, seed: u64) -> TieBreakPolicy {
    match tiebreak {
        TieBreak::Lex => TieBreakPolicy::Lexicographic,
        TieBreak::Rev => TieBreakPolicy::ReverseIndex,
        TieBreak::Rand => TieBreakPolicy::SeededRandom(seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve {
            alg,
            tiebreak,
            seed,
            trace,
            out,
            file,
        } => {
            let inst = load_instance(&file)?;
            let mat = match alg {
                Alg::Double => {
                    let (mat, events) = solve(&inst);
                    if trace {
                        eprint!("{}", events.to_text());
                    }
                    mat
                }
                Alg::Gs => {
                    if trace {
                        eprintln!("note: --trace only applies to --alg double");
                    }
                    hrtmslq::classic::gale_shapley(&break_ties(&inst, policy_of(tiebreak, seed)))
                }
                Alg::Naive => {
                    if trace {
                        eprintln!("note: --trace only applies to --alg double");
                    }
                    hrtmslq::classic::naive_adaptive(&inst)
                }
            };
            let text = io::write_matching(&mat);
            print!("{text}");
            println!("score {}", inst.total_score(&mat).map_err(Failure::from_model)?);
            if let Some(out) = out {
                write_file(&out, &text)?;
            }
            Ok(())
        }
        Command::Score { file, matching } => {
            let inst = load_instance(&file)?;
            let mat = io::parse_matching(
                &read_file(&matching)?,
                inst.residents(),
                inst.hospitals(),
            )?;
            println!("score {}", inst.total_score(&mat).map_err(Failure::from_model)?);
            Ok(())
        }
        Command::Check { file, matching } => {
            let inst = load_instance(&file)?;
            match matching {
                None => {
                    println!(
                        "ok instance n {} m {}",
                        inst.residents(),
                        inst.hospitals()
                    );
                }
                Some(matching) => {
                    let mat = io::parse_matching(
                        &read_file(&matching)?,
                        inst.residents(),
                        inst.hospitals(),
                    )?;
                    let feasible = inst.is_feasible(&mat);
                    println!("feasible {feasible}");
                    if feasible {
                        let blocks = inst.blocking_pairs(&mat).map_err(Failure::from_model)?;
                        for b in &blocks {
                            let reason = match b.reason {
                                BlockReason::HospitalUndersubscribed => "undersubscribed",
                                BlockReason::HospitalPrefers => "prefers",
                            };
                            println!(
                                "blocking {} {} {reason}",
                                b.resident + 1,
                                b.hospital + 1
                            );
                        }
                        println!("stable {}", blocks.is_empty());
                        println!(
                            "score {}",
                            inst.total_score(&mat).map_err(Failure::from_model)?
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Oracle { file, cap, all } => {
            let inst = load_instance(&file)?;
            let budget = Budget::new(1_000_000.max(cap as u64 * 1_000), cap);
            let report = gap_report(&inst, budget).map_err(Failure::from_oracle)?;
            println!(
                "opt {} wst {} count {}",
                report.opt, report.wst, report.count_stable
            );
            if all {
                let matchings = enumerate_stable(&inst, budget).map_err(Failure::from_oracle)?;
                for (i, mat) in matchings.iter().enumerate() {
                    println!(
                        "# stable {} score {}",
                        i + 1,
                        inst.total_score(mat).map_err(Failure::from_model)?
                    );
                    print!("{}", io::write_matching(mat));
                }
            }
            Ok(())
        }
        Command::Gen {
            model,
            n,
            m,
            lower,
            upper,
            tie_density,
            seed,
            k,
            out,
        } => {
            let need = |v: Option<usize>, what: &str| {
                v.ok_or_else(|| Failure::Validation(format!("--{what} is required for this model")))
            };
            let inst = match model {
                GenModel::GapGeneral => gap_family_general(need(n, "n")?),
                GenModel::GapUniform => {
                    let l = need(lower, "lower")?;
                    let u = need(upper, "upper")?;
                    if l < 1 || u < l {
                        return Err(Failure::Validation(
                            "gap-uniform needs 1 <= lower <= upper".into(),
                        ));
                    }
                    gap_family_uniform(l, u)
                }
                GenModel::GapMarriage => gap_family_marriage(need(k, "k")?),
                random => {
                    let tag = match random {
                        GenModel::General => ModelTag::General,
                        GenModel::Uniform => ModelTag::Uniform,
                        GenModel::Marriage => ModelTag::Marriage,
                        GenModel::Rml => ModelTag::RSideMasterList,
                        _ => unreachable!(),
                    };
                    let n = need(n, "n")?;
                    let mut params = GenParams::new(tag, n, need(m, "m")?, seed);
                    params.resident_tie_density = tie_density;
                    params.hospital_tie_density = tie_density;
                    if matches!(tag, ModelTag::Uniform) {
                        // exact pair for the uniform model
                        let u = upper.unwrap_or(2).min(n.max(1));
                        let l = lower.unwrap_or(1).min(u);
                        params.lower_range = (l, l);
                        params.upper_range = (u, u);
                    } else {
                        params.lower_range = (0, lower.unwrap_or(2));
                        params.upper_range = (1, upper.unwrap_or(3).max(1));
                    }
                    gen_random(&params).map_err(|e| Failure::Validation(e.to_string()))?
                }
            };
            let text = io::write_instance(&inst);
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Reduce { graph, p, from_is } => {
            if p < 1 {
                return Err(Failure::Validation("--p must be at least 1".into()));
            }
            let mut g = io::parse_graph(&read_file(&graph)?)?;
            if from_is {
                g = is_to_2is(&g).map_err(Failure::from_reduction)?;
            }
            let inst = reduce_2is_to_mslq(&g, p).map_err(Failure::from_reduction)?;
            print!("{}", io::write_instance(&inst));
            Ok(())
        }
        Command::Aux { file, verify } => {
            let inst = load_instance(&file)?;
            let aux = build_auxiliary(&inst);
            print!("{}", io::write_strict_instance(aux.strict()));
            if verify {
                let ok = verify_aux_equivalence(&inst).map_err(Failure::from_strategy)?;
                if ok {
                    eprintln!("aux equivalence: ok");
                } else {
                    return Err(Failure::Validation(
                        "aux equivalence: deferred acceptance diverged from the embedded run"
                            .into(),
                    ));
                }
            }
            Ok(())
        }
        Command::Probe {
            alg,
            tiebreak,
            trials,
            seed,
            file,
            model,
            n,
            m,
        } => {
            if trials == 0 {
                return Err(Failure::Validation("--trials must be at least 1".into()));
            }
            let solver = match alg {
                Alg::Double => SolverKind::DoubleProposal,
                Alg::Gs => SolverKind::GaleShapley(policy_of(tiebreak, seed)),
                Alg::Naive => SolverKind::NaiveAdaptive,
            };
            let summary = match (file, model) {
                (Some(file), None) => {
                    let inst = load_instance(&file)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut gains = 0usize;
                    let mut first = None;
                    for t in 0..trials {
                        let resident = rng.gen_range(0..inst.residents());
                        let fake = hrtmslq::instances::random_order(
                            &mut rng,
                            inst.hospitals(),
                            0.3,
                        );
                        let report = probe(&inst, solver, resident, &fake)
                            .map_err(Failure::from_strategy)?;
                        if report.outcome == ProbeOutcome::StrictGain {
                            gains += 1;
                            first.get_or_insert((t, report));
                        }
                    }
                    (trials, gains, first)
                }
                (None, Some(model)) => {
                    let params = CampaignParams {
                        models: vec![model.tag()],
                        max_n: n,
                        max_m: m,
                        trials,
                        seed,
                    };
                    let s = random_probe_campaign(&params, solver, &[])
                        .map_err(Failure::from_strategy)?;
                    (s.trials, s.strict_gains, s.first_gain)
                }
                _ => {
                    return Err(Failure::Validation(
                        "probe needs exactly one of FILE or --model".into(),
                    ));
                }
            };
            let (trials, gains, first) = summary;
            println!("trials {trials} strict-gains {gains}");
            if let Some((t, report)) = first {
                let show = |h: Option<usize>| {
                    h.map_or("-".to_string(), |h| (h + 1).to_string())
                };
                println!(
                    "first-gain trial {t} resident {} true {} manipulated {}",
                    report.resident + 1,
                    show(report.true_assignment),
                    show(report.manipulated_assignment),
                );
            }
            Ok(())
        }
        Command::Bench {
            model,
            trials,
            seed,
            out,
            oracle,
            n,
            m,
        } => {
            if trials == 0 {
                return Err(Failure::Validation("--trials must be at least 1".into()));
            }
            let mut master = ChaCha8Rng::seed_from_u64(seed);
            let instance_seeds: Vec<u64> = (0..trials).map(|_| master.gen()).collect();
            let mut rows: Vec<(String, String)> = Vec::new();
            for (t, &inst_seed) in instance_seeds.iter().enumerate() {
                let tag = model.tag();
                let (gn, gm) = match tag {
                    ModelTag::Marriage => (n.min(m.saturating_sub(1)).max(1), m.max(2)),
                    _ => (n, m),
                };
                let mut params = GenParams::new(tag, gn, gm, inst_seed);
                params.upper_range = (1, gn);
                let inst =
                    gen_random(&params).map_err(|e| Failure::Validation(e.to_string()))?;
                let id = format!("{}-{seed}-{t:05}", tag.name());
                let report = if oracle {
                    Some(gap_report(&inst, Budget::default()).map_err(Failure::from_oracle)?)
                } else {
                    None
                };
                for solver in [
                    SolverKind::DoubleProposal,
                    SolverKind::GaleShapley(TieBreakPolicy::Lexicographic),
                    SolverKind::NaiveAdaptive,
                ] {
                    let name = match solver {
                        SolverKind::GaleShapley(_) => "gs-lex".to_string(),
                        other => other.name().to_string(),
                    };
                    let started = Instant::now();
                    let mat = hrtmslq::strategyproof::run_solver(solver, &inst);
                    let elapsed_ms = started.elapsed().as_millis();
                    let score = inst.total_score(&mat).map_err(Failure::from_model)?;
                    let stable = inst.is_stable(&mat).map_err(Failure::from_model)?;
                    let (opt_num, opt_den, wst_num, wst_den) = match &report {
                        Some(r) => (
                            r.opt.numer().to_string(),
                            r.opt.denom().to_string(),
                            r.wst.numer().to_string(),
                            r.wst.denom().to_string(),
                        ),
                        None => Default::default(),
                    };
                    let mut row = String::new();
                    write!(
                        row,
                        "{id},{},{},{},{inst_seed},{name},{},{},{opt_num},{opt_den},{wst_num},{wst_den},{stable},{elapsed_ms}",
                        tag.name(),
                        inst.residents(),
                        inst.hospitals(),
                        score.numer(),
                        score.denom(),
                    )
                    .unwrap();
                    rows.push((format!("{id},{name}"), row));
                }
            }
            rows.sort();
            let mut csv = String::from(
                "instance,model,n,m,seed,alg,score_num,score_den,opt_num,opt_den,wst_num,wst_den,stable,elapsed_ms\n",
            );
            for (_, row) in rows {
                csv.push_str(&row);
                csv.push('\n');
            }
            write_file(&out, &csv)?;
            Ok(())
        }
    }
}
