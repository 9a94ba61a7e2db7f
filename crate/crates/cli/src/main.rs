use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use anadex::acsim::ac_sweep;
use anadex::config::Config;
use anadex::dataset::{format_summary, Dataset};
use anadex::explore::{baseline_pnr, random_campaign, NetlistRun};
use anadex::fixtures;
use anadex::gds::{read_gds, write_gds};
use anadex::netlist::{
    apply_fingers, enumerate_finger_permutations, parse_netlist, parse_pairs, parse_template, parse_testbench,
    Circuit, ConcreteNetlist, MatchingPairs, Testbench, DEFAULT_FINGER_SET,
};
use anadex::par::Parallelism;
use anadex::rl::RlExplorer;
use anadex::verify::{check_layout, format_report};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "anadex", version, about = "Analog layout generation and exploration")]
struct Cli {
    /// TOML configuration file; defaults to $ANADEX_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Suppress progress lines on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Random,
    Rl,
}

#[derive(Subcommand)]
enum Command {
    /// List the valid finger assignments of a template.
    Permute {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = anadex::netlist::DEFAULT_MAX_NETLISTS)]
        max: usize,
    },
    /// Place, route and validate one netlist.
    Baseline {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        tb: PathBuf,
        /// Write the layout here.
        #[arg(long)]
        gds: Option<PathBuf>,
    },
    /// Generate a dataset of layout variants.
    Explore {
        #[arg(long, value_enum)]
        strategy: Strategy,
        /// Variants per netlist (random) or shift attempts per selection (rl).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Bundled circuit to explore instead of --template/--pairs/--tb.
        #[arg(long, conflicts_with_all = ["template", "pairs", "tb"])]
        fixture: Option<String>,
        #[arg(long, requires_all = ["pairs", "tb"])]
        template: Option<PathBuf>,
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        tb: Option<PathBuf>,
        /// Dataset folder name; defaults to the fixture or template name.
        #[arg(long)]
        circuit: Option<String>,
        /// Explore only the first M finger assignments.
        #[arg(long)]
        max_netlists: Option<usize>,
        /// Netlists explored concurrently (random strategy).
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Outer iterations for the rl strategy.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Print the AC magnitude response of a netlist.
    Simulate {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        tb: PathBuf,
    },
    /// Run DRC and LVS on a layout.
    Verify {
        #[arg(long)]
        gds: PathBuf,
        #[arg(long)]
        netlist: PathBuf,
    },
    /// Summarise a dataset.
    Report {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// A check that ran and failed; maps to exit status 1 like any other error
/// but prints its report on stdout first.
#[derive(Debug)]
struct Rejected(String);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Rejected {}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_netlist(path: &Path) -> Result<Circuit> {
    parse_netlist(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_tb(path: &Path, c: &Circuit) -> Result<Testbench> {
    let tb = parse_testbench(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    tb.check_against(c).with_context(|| format!("checking {}", path.display()))?;
    Ok(tb)
}

fn enumerate(template: &Circuit, pairs: &MatchingPairs, min_width: i64, max: usize) -> Result<Vec<ConcreteNetlist>> {
    let all = enumerate_finger_permutations(template, pairs, &DEFAULT_FINGER_SET, min_width, max)?;
    all.iter()
        .enumerate()
        .map(|(i, a)| apply_fingers(template, a, i).map_err(Into::into))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(r) = e.downcast_ref::<Rejected>() {
                println!("{r}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::resolve(cli.config.as_deref())?;
    let quiet = cli.quiet;
    match cli.cmd {
        Command::Permute { template, pairs, max } => {
            let t = parse_template(&read(&template)?)?;
            let p = parse_pairs(&read(&pairs)?)?;
            let all = enumerate_finger_permutations(&t, &p, &DEFAULT_FINGER_SET, cfg.tech.min_gate_width, max)?;
            let mut out = std::io::stdout().lock();
            for (i, a) in all.iter().enumerate() {
                let fields: Vec<String> = a.0.iter().map(|(n, f)| format!("{n}={f}")).collect();
                writeln!(out, "{i:04} {}", fields.join(" "))?;
            }
            Ok(())
        }
        Command::Baseline { netlist, tb, gds } => {
            let c = load_netlist(&netlist)?;
            let tb = load_tb(&tb, &c)?;
            let (_, base) = baseline_pnr(0, &c, &tb, &cfg.tech, &cfg.explore)?;
            if let Some(path) = gds {
                fs::write(&path, write_gds(&base.layout, cfg.tech.wire_width)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&base.qos)?);
            Ok(())
        }
        Command::Simulate { netlist, tb } => {
            let c = load_netlist(&netlist)?;
            let tb = load_tb(&tb, &c)?;
            let trace = ac_sweep(&c, &tb, &cfg.tech, Parallelism::Parallel)?;
            print!("{}", trace.to_text());
            Ok(())
        }
        Command::Verify { gds, netlist } => {
            let c = load_netlist(&netlist)?;
            let bytes = fs::read(&gds).with_context(|| format!("reading {}", gds.display()))?;
            let layout = read_gds(&bytes).with_context(|| format!("parsing {}", gds.display()))?;
            let check = check_layout(&layout, &c, &cfg.tech);
            let mut report = format_report(&check.violations);
            report.push_str(&check.lvs.to_string());
            if check.passed() {
                print!("drc clean\n{report}");
                Ok(())
            } else {
                Err(Rejected(format!("drc {} violations\n{}", check.violations.len(), report.trim_end())).into())
            }
        }
        Command::Report { dataset, json } => {
            let rows = Dataset::new(&dataset).summarize()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                print!("{}", format_summary(&rows));
            }
            Ok(())
        }
        Command::Explore {
            strategy,
            n,
            seed,
            out,
            fixture,
            template,
            pairs,
            tb,
            circuit,
            max_netlists,
            workers,
            iterations,
        } => {
            let (name, t_text, p_text, tb_text) = match (&fixture, &template) {
                (Some(f), _) => {
                    let f = fixtures::by_name(f).with_context(|| format!("unknown fixture `{f}`"))?;
                    (f.name.to_string(), f.template.to_string(), f.pairs.to_string(), f.testbench.to_string())
                }
                (None, Some(t)) => (
                    t.file_stem().map_or("circuit".into(), |s| s.to_string_lossy().into_owned()),
                    read(t)?,
                    read(pairs.as_ref().unwrap())?,
                    read(tb.as_ref().unwrap())?,
                ),
                (None, None) => bail!("explore needs --fixture or --template/--pairs/--tb"),
            };
            let name = circuit.unwrap_or(name);
            let t = parse_template(&t_text).context("parsing template")?;
            let p = parse_pairs(&p_text).context("parsing pairs")?;
            let bench = parse_testbench(&tb_text).context("parsing testbench")?;
            bench.check_against(&t)?;
            if let Some(s) = seed {
                cfg.explore.seed = s;
                cfg.rl.seed = s;
            }
            match strategy {
                Strategy::Random => {
                    if let Some(n) = n {
                        cfg.explore.variants = n;
                    }
                }
                Strategy::Rl => {
                    if let Some(n) = n {
                        cfg.rl.inner_steps = n;
                    }
                    if let Some(k) = iterations {
                        cfg.rl.outer_iterations = k;
                    }
                }
            }
            cfg.validate()?;
            let max = max_netlists.unwrap_or(anadex::netlist::DEFAULT_MAX_NETLISTS);
            let netlists = enumerate(&t, &p, cfg.tech.min_gate_width, max)?;
            let ds = Dataset::new(&out);
            ds.emit_circuit(&name, &t_text, &tb_text, &p_text)?;
            let start = Instant::now();
            let emit = |run: &NetlistRun| -> Result<usize> { Ok(ds.emit_run(&name, run, cfg.tech.wire_width)?) };
            let mut failures = Vec::new();
            let mut total = 0;
            match strategy {
                Strategy::Random => {
                    let progress = |e: &anadex::explore::Event| {
                        if !quiet {
                            eprintln!("{e}");
                        }
                    };
                    let results = random_campaign(&netlists, &bench, &cfg.tech, &cfg.explore, workers, &progress, &|run| {
                        let err = run.error.clone();
                        (emit(&run), err)
                    });
                    for (emitted, err) in results {
                        total += emitted?;
                        failures.extend(err);
                    }
                }
                Strategy::Rl => {
                    fs::create_dir_all(&out)?;
                    let log_path = out.join("train_log.jsonl");
                    let log_file = Mutex::new(std::io::BufWriter::new(fs::File::create(&log_path)?));
                    let mut ex = RlExplorer::new(&t, &p, &netlists, &bench, &cfg.tech, &cfg.explore, &cfg.rl)?;
                    let mut log = |r: &anadex::rl::LogRecord| {
                        let mut f = log_file.lock().unwrap();
                        let _ = writeln!(f, "{}", r.to_json_line());
                    };
                    let mut summary = Vec::new();
                    for it in 0..cfg.rl.outer_iterations {
                        let (run, s) = ex.iteration(it, &mut log)?;
                        total += emit(&run)?;
                        summary.push(s);
                    }
                    ex.save_checkpoints(&out.join("checkpoints"))?;
                    log_file.lock().unwrap().flush()?;
                    if !quiet {
                        for (k, s) in summary.iter().enumerate() {
                            eprintln!(
                                "iteration={k} netlist={} reward={:.4} variants={} best_pscore={}",
                                s.netlist,
                                s.reward,
                                s.variants,
                                s.best_pscore.map_or("-".into(), |p| format!("{p:.6e}"))
                            );
                        }
                    }
                }
            }
            if !quiet {
                eprintln!("{total} variants written to {} in {:.1?}", out.display(), start.elapsed());
            }
            if !failures.is_empty() {
                bail!("{} netlists incomplete:\n{}", failures.len(), failures.join("\n"));
            }
            Ok(())
        }
    }
}

