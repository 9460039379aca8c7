use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use eicp::codes::{parse_code, verify_code};
use eicp::covers::{biclique_cover, tree_cover, CoverError, EXACT_COVER_MAX};
use eicp::experiments::{
    fig5, lemma_sweep, theorem2, ExperimentError, ExperimentReport, SweepKind,
};
use eicp::gf::FieldOrder;
use eicp::graphs::{
    all_bicliques, search_covered_pairs, search_regular_trees, GraphError, SideInfoBipartiteGraph,
    StructureWitness, DEFAULT_N_MAX,
};
use eicp::minrank::{
    complexity_report, minrank_bnb, minrank_oracle, MinrankError, MinrankOptions,
    DEFAULT_ORACLE_BUDGET,
};
use eicp::model::{
    classify, gen_random, gen_vanet, parse_instance, serialize_instance, validate, EicpInstance,
    ModelError,
};

const EXIT_INVALID: u8 = 1;
const EXIT_GUARD: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(name = "eicp", version, about = "Embedded index coding workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file against the side-information constraints.
    Validate { instance: PathBuf },
    /// Minimum scalar linear code length.
    Minrank {
        instance: PathBuf,
        /// Cross-check against the shortest-code search.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        stats: bool,
        /// Solve over F_q instead of the file's field.
        #[arg(long, value_name = "Q")]
        q_override: Option<u32>,
        #[arg(long)]
        parallel: bool,
    },
    /// Build a code from a tree or bi-clique cover.
    Cover {
        instance: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        exact: bool,
    },
    /// Check that every user decodes its demand from a code.
    Verify { instance: PathBuf, code: PathBuf },
    /// Generate a random valid instance.
    Gen(GenArgs),
    /// List trees, covered pairs and bi-cliques of a single unicast instance.
    Structures {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
    },
    /// Run one of the experiment drivers.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCmd,
        /// Print JSON instead of TSV.
        #[arg(long, global = true)]
        json: bool,
        /// Write the report here instead of stdout.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Tree,
    Biclique,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Uniform,
    Vanet,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    model: ModelArg,
    #[arg(long, short = 'n', default_value_t = 4)]
    users: usize,
    #[arg(long, short = 'm', default_value_t = 4)]
    messages: usize,
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Holding probability for the uniform model.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Popular-message fraction for the vanet model.
    #[arg(long, default_value_t = 0.8)]
    overlap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// All three-user, three-message side-information classes.
    Fig5,
    /// Connected graphs and the transmission saving over uncoded delivery.
    Theorem2 {
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        m_max: usize,
        #[arg(long, default_value_t = 2)]
        q: u32,
        /// Random instances per size beyond the exhaustive range.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Regular trees or bi-cliques over a range of sizes.
    LemmaSweep {
        #[arg(long, value_enum)]
        kind: SweepArg,
        #[arg(long, default_value_t = 3)]
        from: usize,
        #[arg(long, default_value_t = 5)]
        to: usize,
        /// Random spanning trees per size (tree sweep only).
        #[arg(long, default_value_t = 5)]
        random_trees: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Tree,
    Biclique,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn guard(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_GUARD,
            message: message.into(),
        }
    }
}

impl From<MinrankError> for Failure {
    fn from(e: MinrankError) -> Self {
        match e {
            MinrankError::Field(_) => Failure::invalid(e.to_string()),
            _ => Failure::guard(e.to_string()),
        }
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Failure::guard(e.to_string())
    }
}

impl From<CoverError> for Failure {
    fn from(e: CoverError) -> Self {
        match e {
            CoverError::Graph(g) => g.into(),
            CoverError::Minrank(m) => m.into(),
            other => Failure::invalid(other.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Minrank(m) => m.into(),
            ExperimentError::Cover(c) => c.into(),
            ExperimentError::Graph(g) => g.into(),
            ExperimentError::Model(ModelError::EnumerationTooLarge { .. }) => {
                Failure::guard(e.to_string())
            }
            other => Failure::invalid(other.to_string()),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<EicpInstance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn load_valid(path: &Path) -> Result<EicpInstance, Failure> {
    let inst = load(path)?;
    let report = validate(&inst);
    if !report.is_valid() {
        let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(Failure::invalid(format!(
            "{}: invalid instance\n  {}",
            path.display(),
            lines.join("\n  ")
        )));
    }
    Ok(inst)
}

fn print_json(v: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("json value serializes")
    );
}

fn cmd_validate(path: &Path) -> Outcome {
    let inst = load(path)?;
    let report = validate(&inst);
    print_json(&json!({
        "valid": report.is_valid(),
        "violations": report.violations,
        "warnings": report.warnings,
        "class": classify(&inst),
    }));
    for v in &report.violations {
        eprintln!("violation: {v}");
    }
    Ok(if report.is_valid() { 0 } else { EXIT_INVALID })
}

fn cmd_minrank(
    path: &Path,
    oracle: bool,
    stats: bool,
    q_override: Option<u32>,
    parallel: bool,
) -> Outcome {
    let mut inst = load_valid(path)?;
    if let Some(q) = q_override {
        let q = FieldOrder::new(q).map_err(|e| Failure::invalid(e.to_string()))?;
        inst = inst.with_field(q);
    }
    let opts = if parallel {
        MinrankOptions::parallel()
    } else {
        MinrankOptions::default()
    };
    let result = minrank_bnb(&inst, opts)?;
    let mut out = json!({
        "kappa": result.kappa,
        "witness": result.witness.iter().map(|w| w.coords().to_vec()).collect::<Vec<_>>(),
    });
    if stats {
        out["stats"] = serde_json::to_value(&result.stats).expect("stats serialize");
        out["complexity"] =
            serde_json::to_value(complexity_report(&inst)?).expect("report serializes");
    }
    let mut code = 0;
    if oracle {
        let o = minrank_oracle(&inst, result.kappa, DEFAULT_ORACLE_BUDGET)?;
        let agrees = o.found && o.length == result.kappa;
        out["oracle"] = json!({
            "length": o.length,
            "found": o.found,
            "subsets_checked": o.subsets_checked,
            "agrees": agrees,
        });
        if !agrees {
            eprintln!(
                "mismatch: minrank {} but the shortest linear code has length {}",
                result.kappa, o.length
            );
            code = EXIT_MISMATCH;
        }
    }
    print_json(&out);
    Ok(code)
}

fn cmd_cover(path: &Path, scheme: SchemeArg, exact: bool) -> Outcome {
    let inst = load_valid(path)?;
    if exact && inst.num_users() > EXACT_COVER_MAX {
        return Err(Failure::guard(format!(
            "exact cover limited to N <= {EXACT_COVER_MAX}"
        )));
    }
    let plan = match scheme {
        SchemeArg::Tree => tree_cover(&inst, exact)?,
        SchemeArg::Biclique => biclique_cover(&inst, exact)?,
    };
    let report = verify_code(&plan.code, &inst).map_err(|e| Failure::invalid(e.to_string()))?;
    print_json(&plan.to_json());
    if !report.overall {
        eprintln!(
            "emitted code does not verify: users {:?}",
            report.failing_users()
        );
        return Ok(EXIT_INVALID);
    }
    Ok(0)
}

fn cmd_verify(inst_path: &Path, code_path: &Path) -> Outcome {
    let inst = load(inst_path)?;
    let code = parse_code(&read(code_path)?, &inst)
        .map_err(|e| Failure::invalid(format!("{}: {e}", code_path.display())))?;
    let report = verify_code(&code, &inst).map_err(|e| Failure::invalid(e.to_string()))?;
    print_json(&serde_json::to_value(&report).expect("report serializes"));
    if report.overall {
        return Ok(0);
    }
    for u in report.failing_users() {
        eprintln!("user {u} cannot decode its demand");
    }
    for v in &report.support_violations {
        eprintln!(
            "transmission {} by user {} uses messages {:?} it does not hold",
            v.transmission, v.user, v.messages
        );
    }
    Ok(EXIT_INVALID)
}

fn cmd_gen(args: &GenArgs) -> Outcome {
    let q = FieldOrder::new(args.q).map_err(|e| Failure::invalid(e.to_string()))?;
    let result = match args.model {
        ModelArg::Uniform => gen_random(args.users, args.messages, q, args.density, args.seed),
        ModelArg::Vanet => gen_vanet(args.users, args.messages, q, args.overlap, args.seed),
    };
    match result {
        Ok(inst) => {
            println!("{}", serialize_instance(&inst));
            Ok(0)
        }
        Err(e @ ModelError::GenerationFailed { .. }) => Err(Failure::guard(e.to_string())),
        Err(e) => Err(Failure::invalid(e.to_string())),
    }
}

fn cmd_structures(path: &Path, n_max: usize) -> Outcome {
    let inst = load_valid(path)?;
    if !classify(&inst).single_unicast {
        return Err(CoverError::NotSingleUnicast.into());
    }
    let g = SideInfoBipartiteGraph::from_instance(&inst);
    let pool: Vec<usize> = (0..inst.num_messages()).collect();
    let guard = eicp::node_guard();
    let one_based = |ws: Vec<StructureWitness>| -> Vec<StructureWitness> {
        ws.iter().map(StructureWitness::one_based).collect()
    };
    let trees = search_regular_trees(&g, inst.demands(), &pool, n_max, guard)?;
    let pairs = search_covered_pairs(&g, inst.demands(), &pool);
    let bicliques = all_bicliques(&g, inst.demands(), &pool, n_max, guard)?;
    print_json(&json!({
        "regular_trees": one_based(trees),
        "covered_pairs": one_based(pairs),
        "bicliques": one_based(bicliques),
    }));
    Ok(0)
}

fn cmd_experiment(which: &ExperimentCmd, as_json: bool, out: Option<&Path>) -> Outcome {
    let report: ExperimentReport = match which {
        ExperimentCmd::Fig5 => fig5()?,
        ExperimentCmd::Theorem2 {
            n_max,
            m_max,
            q,
            samples,
            seed,
        } => {
            let q = FieldOrder::new(*q).map_err(|e| Failure::invalid(e.to_string()))?;
            theorem2(*n_max, *m_max, q, *samples, *seed)?
        }
        ExperimentCmd::LemmaSweep {
            kind,
            from,
            to,
            random_trees,
        } => {
            let kind = match kind {
                SweepArg::Tree => SweepKind::Tree,
                SweepArg::Biclique => SweepKind::Biclique,
            };
            lemma_sweep(kind, *from, *to, *random_trees)?
        }
    };
    let text = if as_json {
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    } else {
        report.to_tsv()
    };
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| Failure::invalid(format!("{}: {e}", p.display())))?
        }
        None => print!("{text}"),
    }
    if !report.verdict.pass {
        if let Some(c) = &report.verdict.counterexample {
            eprintln!("verdict: fail ({})", c.reason);
        }
        return Ok(EXIT_INVALID);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { instance } => cmd_validate(instance),
        Command::Minrank {
            instance,
            oracle,
            stats,
            q_override,
            parallel,
        } => cmd_minrank(instance, *oracle, *stats, *q_override, *parallel),
        Command::Cover {
            instance,
            scheme,
            exact,
        } => cmd_cover(instance, *scheme, *exact),
        Command::Verify { instance, code } => cmd_verify(instance, code),
        Command::Gen(args) => cmd_gen(args),
        Command::Structures { instance, n_max } => cmd_structures(instance, *n_max),
        Command::Experiment { which, json, out } => cmd_experiment(which, *json, out.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
