//! Command-line front end: `solve`, `embed`, `cluster` and `experiment`.
//!
//! Exit codes: 0 on success, 2 when a solver misses its tolerance, 64 on
//! usage errors, 1 on anything else (unreadable or malformed input).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use bistochastic::baselines::sinkhorn_symmetric_hollow;
use bistochastic::experiments::{
    pooled_z, run_bench_activeset, run_bench_newton, run_gmm, run_sphere_scaling, run_spiral,
    run_torus, ActiveSetBenchConfig, GmmConfig, NewtonBenchConfig, SphereConfig, SpiralConfig,
    TorusConfig, WORKERS_ENV,
};
use bistochastic::io::{
    read_affinity_csv, read_cost_csv, read_labels_csv, read_plan_coo, read_points_csv,
    write_affinity_coo, write_json, write_labels_csv, write_matrix_csv, write_plan_coo,
    write_potential_csv,
};
use bistochastic::qot::{add_random_permutations, knn_support, solve_active_set, solve_dense};
use bistochastic::spectral::{
    eigenmap_embed, eigenpairs_smallest, laplacian, nmi, spectral_clustering, symmetric_normalize,
    Affinity, SymmetricMatrix,
};
use bistochastic::{mean_offdiag, pairwise_cost, CostMatrix, Error, SolverConfig};

const EXIT_TOLERANCE: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "bistochastic",
    version,
    about = "Sparse bistochastic affinities from quadratically regularised OT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a hollow bistochastic plan from points or a cost matrix.
    Solve(SolveArgs),
    /// Eigenmap embedding of a plan or affinity matrix.
    Embed(EmbedArgs),
    /// Spectral clustering of a plan.
    Cluster(ClusterArgs),
    /// Reproduce one of the experiments.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    QotDense,
    QotActive,
    Eot,
}

#[derive(Args)]
struct SolveArgs {
    /// Points, one per row (squared Euclidean cost).
    #[arg(long, conflicts_with = "cost", required_unless_present = "cost")]
    points: Option<PathBuf>,
    /// Dense cost matrix, one row per line.
    #[arg(long)]
    cost: Option<PathBuf>,
    /// Regularisation strength.
    #[arg(
        long,
        conflicts_with = "eps_mean_scale",
        required_unless_present = "eps_mean_scale"
    )]
    eps: Option<f64>,
    /// Set ε to this multiple of the mean cost.
    #[arg(long)]
    eps_mean_scale: Option<f64>,
    /// Solver: dense or active-set quadratic transport, or entropic Sinkhorn.
    #[arg(long, value_enum, default_value = "qot-dense")]
    method: Method,
    /// Neighbours per point in the initial active set.
    #[arg(long, default_value_t = 10)]
    knn_init: usize,
    /// Random permutations added to the initial active set.
    #[arg(long, default_value_t = 0)]
    perm_init: usize,
    /// Seed for the random permutations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Row-sum tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Write the plan here (COO CSV).
    #[arg(long)]
    out_plan: Option<PathBuf>,
    /// Write the dual potential here (CSV).
    #[arg(long)]
    out_potential: Option<PathBuf>,
    /// Write solver diagnostics here (JSON), also on failure.
    #[arg(long)]
    out_diag: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    /// Plan in COO format.
    #[arg(
        long,
        conflicts_with = "affinity",
        required_unless_present = "affinity"
    )]
    plan: Option<PathBuf>,
    /// Dense symmetric affinity matrix.
    #[arg(long)]
    affinity: Option<PathBuf>,
    /// Embedding dimension.
    #[arg(long)]
    dims: usize,
    /// Output CSV with one row per point.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Plan in COO format.
    #[arg(long)]
    plan: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// Seed for k-means++ initialisation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// k-means restarts; the lowest inertia wins.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Scale embedding rows to unit length before k-means.
    #[arg(long)]
    normalize_rows: bool,
    /// Write the cluster labels here (CSV).
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Ground-truth labels; prints the NMI when given.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(subcommand)]
    which: Experiment,
    /// Base seed; grid cells derive their own seeds from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for CSV tables and the JSON record.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for grid cells.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Write zero for every wall-clock field so reruns are bytewise identical.
    #[arg(long, global = true)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Experiment {
    /// Eigenspace angles on the noisy spiral.
    Spiral {
        /// Number of points.
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Ambient dimension.
        #[arg(long, default_value_t = 100)]
        d: usize,
        /// Smallest ε on the grid.
        #[arg(long, default_value_t = 1e-2)]
        eps_lo: f64,
        /// Largest ε on the grid.
        #[arg(long, default_value_t = 1e2)]
        eps_hi: f64,
        /// Grid points per decade of ε.
        #[arg(long, default_value_t = 20)]
        per_decade: usize,
    },
    /// Spectral clustering of a three-component Gaussian mixture.
    Gmm {
        /// Points per mixture component.
        #[arg(long, default_value_t = 200)]
        per_cluster: usize,
        /// Ambient dimensions (repeatable).
        #[arg(long = "d", default_values_t = [10, 50])]
        dims: Vec<usize>,
        /// ε as a multiple of the mean cost.
        #[arg(long, default_value_t = 1.0)]
        eps_mean_scale: f64,
        /// Skip the entropic baseline.
        #[arg(long)]
        no_eot: bool,
    },
    /// Growth of the mean potential with ε on spheres.
    SphereScaling {
        /// Points per sphere.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Sphere dimensions (repeatable).
        #[arg(long = "d", default_values_t = [1, 2, 3])]
        dims: Vec<usize>,
        /// Smallest ε on the grid.
        #[arg(long, default_value_t = 1e2)]
        eps_lo: f64,
        /// Largest ε on the grid.
        #[arg(long, default_value_t = 1e6)]
        eps_hi: f64,
        /// Grid points per decade of ε.
        #[arg(long, default_value_t = 4)]
        per_decade: usize,
    },
    /// Laplacian estimates at a fixed torus point.
    Torus {
        /// Sample sizes (repeatable).
        #[arg(long = "n", default_values_t = [2500])]
        ns: Vec<usize>,
        /// Exponents α in ε = c N^α (repeatable).
        #[arg(long = "alpha", default_values_t = [1.25, 1.5, 1.75, 2.0])]
        alphas: Vec<f64>,
        /// Independent samples per (N, α).
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// Prefactor c in ε = c N^α.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Use the doubled kernel level 2K.
        #[arg(long)]
        doubled: bool,
    },
    /// Newton against alternating projections.
    BenchNewton {
        /// Matrix sizes (repeatable).
        #[arg(long = "n", default_values_t = [250, 1000])]
        ns: Vec<usize>,
        /// Iteration cap for alternating projections.
        #[arg(long, default_value_t = 100_000)]
        ap_max_iters: usize,
    },
    /// Active-set against dense solves on Gaussian clouds.
    BenchActiveset {
        /// Cloud sizes (repeatable).
        #[arg(long = "n", default_values_t = [500, 1000, 2000])]
        ns: Vec<usize>,
        /// Ambient dimension.
        #[arg(long, default_value_t = 50)]
        d: usize,
        /// Timed repeats per size.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Neighbours per point in the initial active set.
        #[arg(long, default_value_t = 50)]
        knn_init: usize,
        /// Random permutations added to the initial active set.
        #[arg(long, default_value_t = 0)]
        perm_init: usize,
        /// Skip the dense comparison.
        #[arg(long)]
        no_dense: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged(_)
        | Error::SinkhornNotConverged { .. }
        | Error::EigenNotConverged { .. } => EXIT_TOLERANCE,
        Error::InvalidParameter(_) | Error::TooFewPoints { .. } => EXIT_USAGE,
        _ => 1,
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn load_cost(points: Option<&Path>, cost: Option<&Path>) -> bistochastic::Result<CostMatrix> {
    match (points, cost) {
        (Some(p), None) => pairwise_cost(&read_points_csv(p)?.points, false),
        (None, Some(c)) => read_cost_csv(c, false),
        _ => Err(usage("exactly one of --points and --cost is required")),
    }
}

fn solve(args: &SolveArgs) -> bistochastic::Result<()> {
    let c = load_cost(args.points.as_deref(), args.cost.as_deref())?;
    let epsilon = match (args.eps, args.eps_mean_scale) {
        (Some(e), None) => e,
        (None, Some(s)) => s * mean_offdiag(&c),
        _ => {
            return Err(usage(
                "exactly one of --eps and --eps-mean-scale is required",
            ))
        }
    };
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(usage(format!("epsilon must be positive, got {epsilon}")));
    }
    let cfg = SolverConfig {
        epsilon,
        newton_tol: args.tol,
        ..SolverConfig::default()
    };
    let method = match args.method {
        Method::QotDense => "qot-dense",
        Method::QotActive => "qot-active",
        Method::Eot => "eot",
    };
    let write_diag = |value: serde_json::Value| -> bistochastic::Result<()> {
        if let Some(p) = &args.out_diag {
            write_json(p, &value)?;
        }
        Ok(())
    };

    if let Method::Eot = args.method {
        return match sinkhorn_symmetric_hollow(&c, epsilon, args.tol, 100_000) {
            Ok(out) => {
                if let Some(p) = &args.out_plan {
                    write_affinity_coo(p, &out.affinity, Some(epsilon))?;
                }
                if let Some(p) = &args.out_potential {
                    write_potential_csv(p, &out.potential)?;
                }
                write_diag(json!({
                    "method": method, "n": c.n(), "epsilon": epsilon, "status": "converged",
                    "iterations": out.iterations, "final_row_violation": out.violation,
                }))?;
                println!(
                    "method={method} n={} eps={epsilon:e} iterations={} violation={:e}",
                    c.n(),
                    out.iterations,
                    out.violation
                );
                Ok(())
            }
            Err(e) => {
                write_diag(json!({
                    "method": method, "n": c.n(), "epsilon": epsilon, "status": "failed", "reason": e.to_string(),
                }))?;
                Err(e)
            }
        };
    }

    let result = match args.method {
        Method::QotActive => {
            let mut s0 = knn_support(&c, args.knn_init.min(c.n().saturating_sub(1)).max(1))?;
            if args.perm_init > 0 {
                s0 = add_random_permutations(&s0, args.perm_init, args.seed);
            }
            solve_active_set(&c, &cfg, &s0)
        }
        _ => solve_dense(&c, &cfg, None),
    };
    match result {
        Ok(mut out) => {
            // never write a plan that does not meet the row-sum tolerance
            if !out.plan.check_feasible(args.tol) {
                return Err(Error::NotConverged(Box::new(
                    bistochastic::qot::SolveFailure {
                        reason: format!(
                            "returned plan violates rows by {:e}",
                            out.plan.max_row_violation()
                        ),
                        potential: out.potential,
                        plan: out.plan,
                        diagnostics: out.diagnostics,
                    },
                )));
            }
            if let Some(p) = &args.out_plan {
                write_plan_coo(p, &out.plan, Some(epsilon))?;
            }
            if let Some(p) = &args.out_potential {
                write_potential_csv(p, &out.potential)?;
            }
            write_diag(json!({
                "method": method, "n": c.n(), "epsilon": epsilon, "status": "converged",
                "diagnostics": out.diagnostics,
            }))?;
            println!(
                "method={method} n={} eps={epsilon:e} newton_iters={} support={} violation={:e}",
                c.n(),
                out.diagnostics.newton_iters,
                out.diagnostics.support_size,
                out.diagnostics.final_row_violation
            );
            Ok(())
        }
        Err(Error::NotConverged(f)) => {
            write_diag(json!({
                "method": method, "n": c.n(), "epsilon": epsilon, "status": "not_converged",
                "reason": f.reason, "diagnostics": f.diagnostics,
            }))?;
            Err(Error::NotConverged(f))
        }
        Err(e) => {
            write_diag(json!({
                "method": method, "n": c.n(), "epsilon": epsilon, "status": "failed", "reason": e.to_string(),
            }))?;
            Err(e)
        }
    }
}

fn laplacian_of(
    plan: Option<&Path>,
    affinity: Option<&Path>,
) -> bistochastic::Result<SymmetricMatrix> {
    match (plan, affinity) {
        (Some(p), None) => {
            let (plan, _) = read_plan_coo(p)?;
            Ok(laplacian(&symmetric_normalize(&plan)?))
        }
        (None, Some(a)) => {
            let w = read_affinity_csv(a)?;
            Ok(laplacian(&symmetric_normalize(&w)?))
        }
        _ => Err(usage("exactly one of --plan and --affinity is required")),
    }
}

fn embed(args: &EmbedArgs) -> bistochastic::Result<()> {
    let l = laplacian_of(args.plan.as_deref(), args.affinity.as_deref())?;
    let n = l.n();
    if args.dims == 0 || args.dims >= n {
        return Err(usage(format!(
            "--dims must lie in 1..{n}, got {}",
            args.dims
        )));
    }
    let es = eigenpairs_smallest(&l, args.dims + 1)?;
    let coords = eigenmap_embed(&es, args.dims)?;
    let header: Vec<String> = (2..=args.dims + 1).map(|j| format!("v{j}")).collect();
    write_matrix_csv(&args.out, &header, &coords)?;
    println!(
        "n={n} dims={} eigenvalues={:?}",
        args.dims,
        &es.eigenvalues[1..]
    );
    Ok(())
}

fn cluster(args: &ClusterArgs) -> bistochastic::Result<()> {
    let (plan, _) = read_plan_coo(&args.plan)?;
    let n = Affinity::n(&plan);
    if args.k == 0 || args.k >= n {
        return Err(usage(format!("--k must lie in 1..{n}, got {}", args.k)));
    }
    if args.restarts == 0 {
        return Err(usage("--restarts must be positive"));
    }
    let l = laplacian(&symmetric_normalize(&plan)?);
    let result = spectral_clustering(&l, args.k, args.seed, args.restarts, args.normalize_rows)?;
    if let Some(p) = &args.labels_out {
        write_labels_csv(p, &result.labels)?;
    }
    print!("n={n} k={} inertia={:e}", args.k, result.inertia);
    if let Some(t) = &args.truth {
        let truth = read_labels_csv(t)?;
        if truth.len() != n {
            println!();
            return Err(usage(format!(
                "truth has {} labels for {n} points",
                truth.len()
            )));
        }
        print!(" nmi={:.6}", nmi(&result.labels, &truth)?);
    }
    println!();
    Ok(())
}

fn ms(no_timing: bool, v: f64) -> f64 {
    if no_timing {
        0.0
    } else {
        v
    }
}

fn experiment(args: &ExperimentArgs) -> bistochastic::Result<()> {
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(usage("--workers must be positive"));
        }
        std::env::set_var(WORKERS_ENV, w.to_string());
    }
    let seed = args.seed;
    let out = args.out_dir.as_deref();
    let nt = args.no_timing;
    let written = match &args.which {
        Experiment::Spiral {
            n,
            d,
            eps_lo,
            eps_hi,
            per_decade,
        } => {
            let cfg = SpiralConfig {
                n: *n,
                d: *d,
                seed,
                eps_lo: *eps_lo,
                eps_hi: *eps_hi,
                per_decade: *per_decade,
                k_grid: SpiralConfig::default()
                    .k_grid
                    .into_iter()
                    .filter(|k| k < n)
                    .collect(),
                ..SpiralConfig::default()
            };
            let mut r = run_spiral(&cfg)?;
            r.runtime_ms = ms(nt, r.runtime_ms);
            println!("method,min_mean_angle,best_parameter,run_decades_within_2x");
            for s in &r.summary {
                println!(
                    "{},{:.6},{:.6e},{:.3}",
                    s.method.name(),
                    s.min_angle,
                    s.best_parameter,
                    s.run_decades
                );
            }
            out.map(|d| r.write(d)).transpose()?
        }
        Experiment::Gmm {
            per_cluster,
            dims,
            eps_mean_scale,
            no_eot,
        } => {
            let n = 3 * per_cluster;
            let cfg = GmmConfig {
                per_cluster: *per_cluster,
                dims: dims.clone(),
                seed,
                eps_mean_scale: *eps_mean_scale,
                k_grid: GmmConfig::default()
                    .k_grid
                    .into_iter()
                    .filter(|k| *k < n)
                    .collect(),
                include_eot: !no_eot,
                ..GmmConfig::default()
            };
            let mut r = run_gmm(&cfg)?;
            r.runtime_ms = ms(nt, r.runtime_ms);
            println!("d,method,parameter,nmi,template_mean_angle");
            for &d in dims {
                for row in [r.qot(d), r.eot(d), r.best_knn(d)].into_iter().flatten() {
                    println!(
                        "{d},{},{:.6e},{:.6},{:.6}",
                        row.method, row.parameter, row.nmi, row.template_angle
                    );
                }
            }
            out.map(|d| r.write(d)).transpose()?
        }
        Experiment::SphereScaling {
            n,
            dims,
            eps_lo,
            eps_hi,
            per_decade,
        } => {
            let cfg = SphereConfig {
                n: *n,
                dims: dims.clone(),
                seed,
                eps_lo: *eps_lo,
                eps_hi: *eps_hi,
                per_decade: *per_decade,
            };
            let mut r = run_sphere_scaling(&cfg)?;
            r.runtime_ms = ms(nt, r.runtime_ms);
            println!("d,slope,expected_slope,r2");
            for dr in &r.dims {
                println!(
                    "{},{:.6},{:.6},{:.6}",
                    dr.d, dr.fit.slope, dr.expected_slope, dr.fit.r2
                );
            }
            out.map(|d| r.write(d)).transpose()?
        }
        Experiment::Torus {
            ns,
            alphas,
            repeats,
            scale,
            doubled,
        } => {
            let cfg = TorusConfig {
                ns: ns.clone(),
                alphas: alphas.clone(),
                repeats: *repeats,
                scale: *scale,
                doubled: *doubled,
                seed,
                ..TorusConfig::default()
            };
            let mut r = run_torus(&cfg)?;
            r.runtime_ms = ms(nt, r.runtime_ms);
            println!("N,alpha,mean,standard_error,z_vs_last_alpha");
            for s in &r.summary {
                let last = r
                    .summary
                    .iter()
                    .rev()
                    .find(|t| t.n == s.n)
                    .expect("summary row exists");
                println!(
                    "{},{},{:.6e},{:.6e},{:.3}",
                    s.n,
                    s.alpha,
                    s.mean,
                    s.standard_error,
                    pooled_z(s, last)
                );
            }
            out.map(|d| r.write(d)).transpose()?
        }
        Experiment::BenchNewton { ns, ap_max_iters } => {
            let cfg = NewtonBenchConfig {
                ns: ns.clone(),
                seed,
                alternating_max_iters: *ap_max_iters,
                ..NewtonBenchConfig::default()
            };
            let mut r = run_bench_newton(&cfg)?;
            r.runtime_ms = ms(nt, r.runtime_ms);
            for row in &mut r.rows {
                row.newton_ms = ms(nt, row.newton_ms);
                row.alternating_ms = ms(nt, row.alternating_ms);
            }
            println!("N,newton_iters,alternating_iters,iteration_ratio");
            for row in &r.rows {
                let f = |v: Option<usize>| {
                    v.map_or_else(|| format!(">{ap_max_iters}"), |k| k.to_string())
                };
                println!(
                    "{},{},{},{:.1}",
                    row.n,
                    f(row.newton_iters),
                    f(row.alternating_iters),
                    row.iteration_ratio(*ap_max_iters)
                );
            }
            out.map(|d| r.write(d)).transpose()?
        }
        Experiment::BenchActiveset {
            ns,
            d,
            repeats,
            knn_init,
            perm_init,
            no_dense,
        } => {
            let cfg = ActiveSetBenchConfig {
                ns: ns.clone(),
                d: *d,
                repeats: *repeats,
                knn_k: *knn_init,
                permutations: *perm_init,
                seed,
                compare_dense: !no_dense,
                ..ActiveSetBenchConfig::default()
            };
            let mut r = run_bench_activeset(&cfg)?;
            r.runtime_ms = ms(nt, r.runtime_ms);
            for row in &mut r.rows {
                row.active_ms = ms(nt, row.active_ms);
                row.dense_ms = row.dense_ms.map(|v| ms(nt, v));
            }
            println!("N,mean_active_ms,mean_dense_ms,max_plan_distance");
            for &n in ns {
                let (a, dn) = r.mean_times(n);
                let dist = r
                    .rows
                    .iter()
                    .filter(|x| x.n == n)
                    .filter_map(|x| x.plan_distance)
                    .fold(f64::NAN, f64::max);
                println!(
                    "{n},{a:.3},{},{dist:.3e}",
                    dn.map_or("".into(), |v| format!("{v:.3}"))
                );
            }
            out.map(|d| r.write(d)).transpose()?
        }
    };
    if let Some(paths) = written {
        for p in paths {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Embed(a) => embed(a),
        Command::Cluster(a) => cluster(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
