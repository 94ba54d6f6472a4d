use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hymflow::checkpoint::Checkpoint;
use hymflow::config::ScenarioConfig;
use hymflow::scenario::{build_model, run_scenario, Scenario};
use hymflow::{flow, hn, props};

/// Output directory root; runs land in `$HYMFLOW_OUT/<scenario name>`.
const OUT_ENV: &str = "HYMFLOW_OUT";

#[derive(Parser)]
#[command(name = "hymflow", about = "Hermitian-Yang-Mills and Yang-Mills flows on flat tori")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and write trace.csv, summary.json and final.ckpt.
    Run { config: PathBuf },
    /// Run the randomized property batteries.
    Props {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = props::DEFAULT_CASES)]
        cases: usize,
    },
    /// Print the header and monitors of a checkpoint.
    Inspect { checkpoint: PathBuf },
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn run(config: PathBuf) -> hymflow::Result<u8> {
    let cfg = ScenarioConfig::load(&config)?;
    let sc = Scenario::build(&cfg)?;
    let report = run_scenario(&sc)?;
    let dir = out_root().join(&cfg.name);
    report.write_outputs(&sc, &dir)?;
    println!("{}", serde_json::to_string_pretty(&report.summary())?);
    eprintln!("outputs in {}", dir.display());
    Ok(report.exit_code() as u8)
}

fn inspect(path: PathBuf) -> hymflow::Result<u8> {
    let cp = Checkpoint::load(&path)?;
    println!("t = {}  steps = {}  log det shift = {:e}", cp.t, cp.steps, cp.log_det_shift);
    for (name, f) in &cp.fields {
        println!("field {name}: {}x{} on {:?}", f.rows(), f.cols(), f.dims());
    }
    let (Some(cfg), Some(h)) = (&cp.config, cp.field("h")) else {
        return Ok(0);
    };
    let mut model = build_model(cfg)?;
    let beta: Vec<_> = (0..cfg.torus.n).filter_map(|a| cp.field(&format!("beta{a}")).cloned()).collect();
    if beta.len() == cfg.torus.n {
        model = model.with_beta(beta)?;
    }
    let (m, curv) = flow::measure(&model, h, &[])?;
    println!("scenario {}", cfg.name);
    println!("ym = {:.12e}  hym = {:.12e}  sup|ΛF| = {:.6e}", m.ym, m.hym, m.sup_lambda);
    println!("grad = {:.6e}  deg = {:.12}  topo = {:.12}", m.grad_l2, m.deg, m.topo);
    match hn::type_from_spectrum(&curv.i_lambda_unitary(), hn::DEFAULT_CLUSTER_TOL) {
        Ok(t) => println!("type = {:?}", t.values()),
        Err(e) => println!("type: {e}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { config } => run(config),
        Cmd::Props { seed, cases } => {
            let rep = props::run_property_suite(seed, cases);
            print!("{rep}");
            Ok(if rep.all_passed() { 0 } else { 2 })
        }
        Cmd::Inspect { checkpoint } => inspect(checkpoint),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
