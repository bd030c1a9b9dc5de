use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plastdam::checks;
use plastdam::io::{execute, RunConfig};
use plastdam::mesh::{Mesh, Variant};
use plastdam::Result;

#[derive(Parser)]
#[command(name = "plastdam", version, about = "Elasto-plastic damage simulation of a tension test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write CSV, VTK and manifest output.
    Run(RunArgs),
    /// Run the property suites on tiny meshes.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print mesh and boundary statistics.
    MeshInfo {
        #[arg(long, default_value_t = 24)]
        n_sub: usize,
        #[arg(long, default_value = "asymmetric")]
        preset: Variant,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides as KEY=VALUE, applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    preset: Option<Variant>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    n_sub: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    snapshot_every: Option<String>,
    /// Print one line per step.
    #[arg(long, short)]
    verbose: bool,
}

fn build_config(args: &RunArgs) -> Result<RunConfig> {
    // defaults < preset < file < KEY=VALUE < flags
    let mut c = RunConfig::preset(args.preset.unwrap_or(Variant::Asymmetric));
    if let Some(path) = &args.config {
        c.apply_text(&fs::read_to_string(path)?)?;
    }
    for pair in &args.set {
        c.set_pair(pair)?;
    }
    if let Some(p) = args.preset {
        c.set("preset", p.name())?;
    }
    let flags = [
        ("tau", &args.tau),
        ("n_sub", &args.n_sub),
        ("t_end", &args.t_end),
        ("out", &args.out),
        ("snapshot_every", &args.snapshot_every),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            c.set(key, v)?;
        }
    }
    c.validate()?;
    Ok(c)
}

fn run(args: RunArgs) -> Result<()> {
    let config = build_config(&args)?;
    let out = execute(&config)?;
    if args.verbose {
        for r in &out.series.records {
            println!(
                "step {:5}  t {:8.3}  avm {:.6e}  E {:.6e}  diss {:.6e}  amdp {:.6e}",
                r.step,
                r.t,
                r.avg_von_mises,
                r.energy,
                r.diss_plast_cum + r.diss_dam_cum,
                r.amdp_cum
            );
        }
    }
    if let Some(r) = out.series.last() {
        println!(
            "{} steps, t = {}, residuum/dissipation = {:.4}",
            r.step,
            r.t,
            r.amdp_ratio()
        );
    }
    println!("wrote {} and {} snapshots", out.csv.display(), out.snapshots.len());
    Ok(())
}

fn mesh_info(n_sub: usize, preset: Variant) -> Result<()> {
    let mesh = Mesh::crossed(n_sub)?;
    let tags = plastdam::mesh::tag_boundaries(&mesh, preset)?;
    println!("n_sub            {n_sub}");
    println!("nodes            {}", mesh.n_nodes());
    println!("elements         {}", mesh.n_elements());
    println!("clamped nodes    {}", tags.dirichlet_xy.len());
    println!("driven nodes     {}", tags.dirichlet_x.len());
    println!("free boundary    {}", tags.free.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::MeshInfo { n_sub, preset } => mesh_info(n_sub, preset),
        Command::Check { seed } => {
            let outcomes = checks::run_all(seed);
            for c in &outcomes {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if outcomes.iter().all(|c| c.passed) {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
