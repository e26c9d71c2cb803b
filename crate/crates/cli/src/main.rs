//! `stocp`: experiment driver for space-time optimal control of the wave equation.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "stocp", version, about = "Space-time FE optimal control of the wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

/// Options shared by all subcommands; each also reads from `--config`.
#[derive(Args, Debug, Clone, Default)]
pub struct Shared {
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Maximal number of concurrent study cells.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Spatial dimension (1 or 2).
    #[arg(long)]
    pub d: Option<usize>,
    /// Regularization: l2 or energy.
    #[arg(long)]
    pub reg: Option<String>,
    /// Relative accuracy of the outer iteration.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative accuracy of exact inner solves.
    #[arg(long)]
    pub inner_tol: Option<f64>,
    /// AMG strength-of-connection threshold.
    #[arg(long)]
    pub amg_strength: Option<f64>,
    #[arg(long)]
    pub amg_pre_smooth: Option<usize>,
    #[arg(long)]
    pub amg_post_smooth: Option<usize>,
    #[arg(long)]
    pub amg_max_coarse: Option<usize>,
    /// Scaling of the lumped block preconditioner in L2 Bramble-Pasciak.
    #[arg(long)]
    pub bp_delta_l2: Option<f64>,
    /// Scaling of the AMG block preconditioner in energy Bramble-Pasciak.
    #[arg(long)]
    pub bp_delta_energy: Option<f64>,
    /// V-cycles in the energy Bramble-Pasciak block preconditioner.
    #[arg(long)]
    pub bp_cycles: Option<usize>,
    /// V-cycles in the energy GMRES block preconditioner.
    #[arg(long)]
    pub gmres_cycles: Option<usize>,
    /// Constant c of c lump(M) <= M used by L2 Bramble-Pasciak (default 1/(d+3)).
    #[arg(long)]
    pub lumping_constant: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a uniform mesh and report its statistics.
    Mesh {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        level: Option<usize>,
        /// Also write the mesh as VTK.
        #[arg(long)]
        vtk: bool,
    },
    /// Solve one problem with one solver.
    Solve {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        level: Option<usize>,
        /// sc-exact, sc-lumped, sc-amgN, bp, gmres or dense.
        #[arg(long)]
        solver: Option<String>,
        /// Constant regularization parameter (default h^r with the axis spacing).
        #[arg(long)]
        rho: Option<f64>,
        /// Element-wise rho = h_tau^r instead of a constant.
        #[arg(long)]
        rho_local: bool,
        #[arg(long)]
        vtk: bool,
        /// Write binary snapshots of the state and adjoint.
        #[arg(long)]
        snapshot: bool,
    },
    /// Uniform-refinement convergence study.
    Study {
        #[command(flatten)]
        shared: Shared,
        /// Comma-separated target list.
        #[arg(long, visible_alias = "target")]
        targets: Option<String>,
        /// Finest level; levels 1..=N are run.
        #[arg(long)]
        levels: Option<usize>,
        /// Comma-separated solver list; the first one provides the reported error.
        #[arg(long)]
        solvers: Option<String>,
        /// Append the mass-lumped Schur complement solver (L2 only).
        #[arg(long)]
        lumped: bool,
    },
    /// Nested iteration on uniformly or adaptively refined meshes.
    Nested {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        adaptive: bool,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// initial (residual of the prolongated guess) or rhs.
        #[arg(long)]
        nested_tolerance: Option<String>,
        /// Inner solve of the Schur complement (default lumped for L2, amg3 for energy).
        #[arg(long)]
        inner: Option<String>,
    },
    /// Numerical verification of solver properties.
    Verify {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        target: Option<String>,
        /// Extreme eigenvalues of the Schur complement against lump(M).
        #[arg(long)]
        spectral: bool,
        /// Inexact (AMG) against exact inner solves for energy regularization.
        #[arg(long)]
        inexact: bool,
        /// All iterative solvers against a dense direct solve on small meshes.
        #[arg(long)]
        dense: bool,
        #[arg(long)]
        lanczos_iterations: Option<usize>,
        /// Inner solve for --inexact (default amg3).
        #[arg(long)]
        inner: Option<String>,
    },
    /// Regularization sweep on a fixed d = 1 mesh.
    Sweep {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        target: Option<String>,
        /// Range `b^-i..b^-j`, e.g. `2^-14..2^-23`.
        #[arg(long)]
        rho: Option<String>,
        /// Vertices per axis of the structured mesh.
        #[arg(long)]
        n_per_axis: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Mesh { shared, level, vtk } => commands::mesh(&shared, level, vtk),
        Command::Solve { shared, target, level, solver, rho, rho_local, vtk, snapshot } => {
            commands::solve(&shared, commands::SolveArgs { target, level, solver, rho, rho_local, vtk, snapshot })
        }
        Command::Study { shared, targets, levels, solvers, lumped } => commands::study(&shared, targets, levels, solvers, lumped),
        Command::Nested { shared, target, levels, adaptive, theta, alpha, beta, nested_tolerance, inner } => commands::nested(
            &shared,
            commands::NestedArgs { target, levels, adaptive, theta, alpha, beta, nested_tolerance, inner },
        ),
        Command::Verify { shared, levels, target, spectral, inexact, dense, lanczos_iterations, inner } => commands::verify(
            &shared,
            commands::VerifyArgs { levels, target, spectral, inexact, dense, lanczos_iterations, inner },
        ),
        Command::Sweep { shared, target, rho, n_per_axis } => commands::sweep(&shared, target, rho, n_per_axis),
    };
    match result {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::SolverFailure(msg)) => {
            eprintln!("stocp: solver failure: {msg} (partial outputs retained)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("stocp: error: {e:#}");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(1)
        }
    }
}
