use clap::{Args, Parser, Subcommand, ValueEnum};
use loosecubes::feature_size::{external_feature_size_at_least, forbidden_pattern_scan};
use loosecubes::fixtures::{export_frames, generate, loglog_slope, scaling_report, FixtureSpec, Planner};
use loosecubes::io::{parse_polycube, parse_schedule, write_polycube, write_schedule};
use loosecubes::monotone::{plan_monotone_with, CheckCadence, MonotoneOptions};
use loosecubes::motion::Schedule;
use loosecubes::scaffold::{plan_scaffold_2d_with, plan_scaffold_3d_with, ScaffoldOptions};
use loosecubes::verifier::{bfs_reconfigure, verify_schedule_with, Cadence, Limits, Verdict, VerifyOptions};
use loosecubes::{Configuration, Dimension, Error};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const OK: u8 = 0;
const INVALID: u8 = 1;
const USAGE: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "loosecubes", version, about = "Loose sliding-cube reconfiguration planner and verifier")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Looseness parameter.
    #[arg(long, global = true, default_value_t = 2)]
    k: i32,
    /// Print only essential output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a fixture as a polycube file.
    Gen(GenArgs),
    /// Check external feature size >= k.
    CheckFeatureSize {
        #[arg(long)]
        input: PathBuf,
        /// Also list forbidden-pattern occurrences.
        #[arg(long)]
        patterns: bool,
    },
    /// Plan a reconfiguration schedule.
    #[command(subcommand)]
    Plan(PlanCommand),
    /// Replay a schedule and validate every move.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        /// Require every unit slide to be accessible.
        #[arg(long)]
        strict: bool,
        /// Require every module to move exactly once.
        #[arg(long)]
        monotone: bool,
        #[arg(long, value_enum, default_value_t = FsCadence::Never)]
        feature_size_cadence: FsCadence,
    },
    /// Brute-force reachability.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Export configuration snapshots along a schedule.
    Frames {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 1)]
        every: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Planner growth measurements over generated corpora.
    Scaling {
        #[arg(long, value_enum)]
        planner: PlannerKind,
        /// Comma-separated instance sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: FixtureKind,
    /// Module count for random kinds and lines.
    #[arg(long)]
    n: Option<usize>,
    /// Box dimensions as `a,b,c`.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<i32>,
    /// Tower or pillar height.
    #[arg(long)]
    height: Option<i32>,
    #[arg(long, default_value_t = 3)]
    dim: u8,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PlanCommand {
    /// Sweep-plane planner with extra modules.
    Scaffold {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dim: u8,
        #[arg(long)]
        reduced_u: bool,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the start configuration including the extra
        /// modules; defaults to `<out>.initial`.
        #[arg(long)]
        initial_out: Option<PathBuf>,
    },
    /// Slice-based monotone planner.
    Monotone {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = CadenceArg::End)]
        check_cadence: CadenceArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    Reach {
        #[arg(long)]
        start: PathBuf,
        #[arg(long)]
        goal: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        max_states: usize,
        /// Only explore accessible slides.
        #[arg(long)]
        accessible: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    #[value(name = "hollow-square-corners-2d")]
    HollowSquareCorners2d,
    #[value(name = "hollow-cube-corners-3d")]
    HollowCubeCorners3d,
    SolidBox,
    RandomFeature2,
    RandomTree,
    Tower,
    HollowBox,
    BoxWithPillar,
    Line,
}

#[derive(Clone, Copy, ValueEnum)]
enum CadenceArg {
    Move,
    Slice,
    End,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FsCadence {
    Never,
    Move,
    End,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerKind {
    Scaffold2d,
    Scaffold3d,
    Scaffold3dFull,
    Monotone,
}

struct Failure {
    code: u8,
    msg: String,
}

type CmdResult = Result<u8, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: USAGE, msg: msg.into() }
}

fn from_lib(e: Error) -> Failure {
    let code = match e {
        Error::Parse { .. } | Error::Malformed(_) | Error::Duplicate(_) | Error::NonPlanar(_) | Error::Empty => USAGE,
        _ => INVALID,
    };
    Failure { code, msg: e.to_string() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path, dim: Option<Dimension>) -> Result<Configuration, Failure> {
    parse_polycube(&read(path)?, dim).map_err(from_lib)
}

fn read_schedule(path: &Path) -> Result<Schedule, Failure> {
    parse_schedule(&read(path)?).map_err(from_lib)
}

fn dimension(d: u8) -> Result<Dimension, Failure> {
    Dimension::from_int(d).ok_or_else(|| usage(format!("dimension must be 2 or 3, got {d}")))
}

fn require_k2(k: i32) -> Result<(), Failure> {
    if k != 2 {
        return Err(usage(format!("planners emit 2-loose schedules; --k {k} is not supported")));
    }
    Ok(())
}

fn fixture_spec(cli: &Cli, a: &GenArgs) -> Result<FixtureSpec, Failure> {
    let n = || a.n.ok_or_else(|| usage("--n is required for this kind"));
    let dims = || -> Result<[i32; 3], Failure> {
        match a.dims.as_slice() {
            [x, y, z] => Ok([*x, *y, *z]),
            [x, y] => Ok([*x, *y, 1]),
            _ => Err(usage("--dims takes two or three comma-separated sizes")),
        }
    };
    let height = || a.height.ok_or_else(|| usage("--height is required for this kind"));
    Ok(match a.kind {
        FixtureKind::HollowSquareCorners2d => FixtureSpec::HollowSquareCorners2d,
        FixtureKind::HollowCubeCorners3d => FixtureSpec::HollowCubeCorners3d,
        FixtureKind::SolidBox => FixtureSpec::SolidBox { dims: dims()? },
        FixtureKind::RandomFeature2 => FixtureSpec::RandomFeature2 { n: n()?, seed: cli.seed },
        FixtureKind::RandomTree => FixtureSpec::RandomTree { dim: dimension(a.dim)?, n: n()?, seed: cli.seed },
        FixtureKind::Tower => FixtureSpec::Tower { height: height()? },
        FixtureKind::HollowBox => FixtureSpec::HollowBox { dims: dims()? },
        FixtureKind::BoxWithPillar => FixtureSpec::BoxWithPillar { dims: dims()?, pillar: height()? },
        FixtureKind::Line => FixtureSpec::Line { dim: dimension(a.dim)?, n: n()? },
    })
}

fn run(cli: &Cli) -> CmdResult {
    if cli.k < 1 {
        return Err(usage("--k must be at least 1"));
    }
    match &cli.command {
        Command::Gen(a) => {
            let spec = fixture_spec(cli, a)?;
            let config = generate(&spec).map_err(from_lib)?;
            let text = write_polycube(&config);
            match &a.out {
                Some(p) => {
                    write(p, &text)?;
                    if !cli.quiet {
                        println!("{} n={}", spec.name(), config.len());
                    }
                }
                None => print!("{text}"),
            }
            Ok(OK)
        }
        Command::CheckFeatureSize { input, patterns } => {
            let config = read_config(input, None)?;
            let report = external_feature_size_at_least(&config, cli.k);
            for v in &report.violations {
                println!("{v}");
            }
            let mut holds = report.holds;
            if *patterns {
                let occ = forbidden_pattern_scan(&config);
                for o in &occ {
                    println!("pattern {:?} {} {}", o.pattern, o.a, o.b);
                }
                holds &= occ.is_empty();
            }
            if !cli.quiet {
                println!("holds={} violations={}", report.holds, report.violations.len());
            }
            Ok(if holds { OK } else { INVALID })
        }
        Command::Plan(PlanCommand::Scaffold { input, dim, reduced_u, out, initial_out }) => {
            require_k2(cli.k)?;
            let dim = dimension(*dim)?;
            let config = read_config(input, Some(dim))?;
            let opts = ScaffoldOptions { reduced_u: *reduced_u, ..ScaffoldOptions::default() };
            let plan = match dim {
                Dimension::Two => plan_scaffold_2d_with(&config, &opts),
                Dimension::Three => plan_scaffold_3d_with(&config, &opts),
            }
            .map_err(from_lib)?;
            let initial_path = initial_out.clone().unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".initial");
                PathBuf::from(p)
            });
            write(out, &write_schedule(&plan.schedule))?;
            write(&initial_path, &write_polycube(&plan.initial))?;
            println!("{}", plan.stats.line());
            Ok(OK)
        }
        Command::Plan(PlanCommand::Monotone { input, check_cadence, out }) => {
            require_k2(cli.k)?;
            let config = read_config(input, None)?;
            let cadence = match check_cadence {
                CadenceArg::Move => CheckCadence::Move,
                CadenceArg::Slice => CheckCadence::Slice,
                CadenceArg::End => CheckCadence::End,
            };
            let opts = MonotoneOptions { cadence, ..MonotoneOptions::default() };
            let plan = plan_monotone_with(&config, &opts).map_err(from_lib)?;
            write(out, &write_schedule(&plan.schedule))?;
            let s = &plan.stats;
            println!("moves={} steps={} voids_opened={} slices={}", s.moves, s.steps, s.voids_opened, s.slices);
            if !cli.quiet {
                println!(
                    "partial={} fallback_slices={} unguarded={} fs_violations={}",
                    s.partial, s.fallback_slices, s.unguarded, s.fs_violations
                );
            }
            Ok(if cadence == CheckCadence::Move && s.fs_violations > 0 { INVALID } else { OK })
        }
        Command::Verify { input, schedule, strict, monotone, feature_size_cadence } => {
            let config = read_config(input, None)?;
            let schedule = read_schedule(schedule)?;
            let opts = VerifyOptions {
                strict: *strict,
                expect_monotone: *monotone,
                feature_size: match feature_size_cadence {
                    FsCadence::Never => Cadence::Never,
                    FsCadence::Move => Cadence::EveryMove,
                    FsCadence::End => Cadence::End,
                },
                ..VerifyOptions::new(cli.k)
            };
            let report = verify_schedule_with(&config, &schedule, &opts);
            match &report.first_failure {
                None => {
                    println!("ok moves={} steps={}", report.moves_checked, schedule.total_steps());
                    Ok(OK)
                }
                Some((i, msg)) => {
                    println!("invalid at {i}: {msg}");
                    Ok(INVALID)
                }
            }
        }
        Command::Oracle(OracleCommand::Reach { start, goal, max_states, accessible }) => {
            let a = read_config(start, None)?;
            let b = read_config(goal, Some(a.dim()))?;
            let limits = Limits { max_states: *max_states, accessible: *accessible, ..Limits::default() };
            let r = bfs_reconfigure(&a, &b, cli.k, limits).map_err(from_lib)?;
            let verdict = match r.verdict {
                Verdict::Reachable => "reachable",
                Verdict::Unreachable => "unreachable",
                Verdict::Inconclusive => "inconclusive",
            };
            match &r.path {
                Some(p) => println!("{verdict} states={} slides={}", r.states_explored, p.len()),
                None => println!("{verdict} states={}", r.states_explored),
            }
            Ok(match r.verdict {
                Verdict::Reachable => OK,
                Verdict::Unreachable => INVALID,
                Verdict::Inconclusive => INCONCLUSIVE,
            })
        }
        Command::Frames { input, schedule, every, out_dir } => {
            let config = read_config(input, None)?;
            let schedule = read_schedule(schedule)?;
            let frames = export_frames(&config, &schedule, *every).map_err(from_lib)?;
            fs::create_dir_all(out_dir).map_err(|e| usage(format!("{}: {e}", out_dir.display())))?;
            let width = frames.last().map_or(1, |f| f.0.to_string().len()).max(6);
            for (step, frame) in &frames {
                write(&out_dir.join(format!("frame_{step:0width$}.txt")), &write_polycube(frame))?;
            }
            if !cli.quiet {
                println!("frames={}", frames.len());
            }
            Ok(OK)
        }
        Command::Scaling { planner, sizes, trials } => {
            let p = match planner {
                PlannerKind::Scaffold2d => Planner::Scaffold2d,
                PlannerKind::Scaffold3d => Planner::Scaffold3d { reduced_u: true },
                PlannerKind::Scaffold3dFull => Planner::Scaffold3d { reduced_u: false },
                PlannerKind::Monotone => Planner::Monotone,
            };
            let rows = scaling_report(p, sizes, *trials, cli.seed).map_err(from_lib)?;
            println!("n moves steps extra_modules wall_time_s");
            for r in &rows {
                println!("{} {} {} {} {:.3}", r.n, r.moves, r.steps, r.extra_modules, r.wall_time.as_secs_f64());
            }
            if !cli.quiet {
                let pts = |f: fn(&loosecubes::fixtures::ScalingRow) -> usize| {
                    rows.iter().map(|r| (r.n as f64, f(r) as f64)).collect::<Vec<_>>()
                };
                if let Some(s) = loglog_slope(&pts(|r| r.steps)) {
                    println!("slope steps={s:.3}");
                }
                if let Some(s) = loglog_slope(&pts(|r| r.extra_modules)) {
                    println!("slope extra_modules={s:.3}");
                }
            }
            Ok(OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
