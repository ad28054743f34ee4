use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{error::ErrorKind, CommandFactory, Parser, ValueEnum};
use specint::chc::Verdict;
use specint::driver::{oracle_verdict, verify_source, Direction, Emit, PipelineConfig, Source};
use specint::specializer::Generalization;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenArg {
    M,
    Ph,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirArg {
    Fwd,
    Bwd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmitArg {
    Verdict,
    Chc,
    Trace,
    Json,
}

/// Checks the safety of an imperative program (.imp) or of a set of
/// constrained Horn clauses (.clp).
#[derive(Debug, Parser)]
#[command(name = "verify", version)]
struct Args {
    file: PathBuf,
    /// Generalization used when propagating constraints.
    #[arg(long, value_enum, default_value = "ph")]
    gen: GenArg,
    /// Direction of the first iteration.
    #[arg(long, value_enum, default_value = "fwd")]
    direction: DirArg,
    /// Maximum number of reversal cycles.
    #[arg(long, default_value_t = 8)]
    max_iter: usize,
    /// Solver deadline per iteration, in seconds.
    #[arg(long, default_value_t = 15.0)]
    phase_timeout: f64,
    /// Deadline for the whole run, in seconds.
    #[arg(long, default_value_t = 120.0)]
    timeout: f64,
    #[arg(long, value_enum, default_value = "verdict")]
    emit: EmitArg,
    /// Run only the bounded oracle, to this many resolution steps.
    #[arg(long)]
    oracle_depth: Option<usize>,
}

fn exit_for(v: &Verdict) -> ExitCode {
    ExitCode::from(match v {
        Verdict::Safe(_) => 0,
        Verdict::Unsafe(_) => 1,
        Verdict::Unknown(_) => 2,
    })
}

fn seconds(s: f64) -> Option<Duration> {
    (s.is_finite() && s > 0.0).then(|| Duration::from_secs_f64(s))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            eprintln!("{}", Args::command().render_help());
            return ExitCode::from(3);
        }
    };
    let (Some(phase), Some(total)) = (seconds(args.phase_timeout), seconds(args.timeout)) else {
        eprintln!("timeouts must be positive");
        return ExitCode::from(3);
    };
    let source = match Source::from_path(&args.file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if let Some(depth) = args.oracle_depth {
        if depth == 0 {
            eprintln!("oracle depth must be positive");
            return ExitCode::from(3);
        }
        return match oracle_verdict(source, depth) {
            Ok(v) => {
                println!("{}", v.name());
                exit_for(&v)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(3)
            }
        };
    }
    let emit = match args.emit {
        EmitArg::Verdict => Emit::Verdict,
        EmitArg::Chc => Emit::Chc,
        EmitArg::Trace => Emit::Trace,
        EmitArg::Json => Emit::Json,
    };
    let cfg = PipelineConfig {
        gen: match args.gen {
            GenArg::M => Generalization::Monovariant,
            GenArg::Ph => Generalization::Polyhedral,
        },
        max_iterations: args.max_iter,
        phase_deadline: phase.min(total),
        total_deadline: total,
        initial_direction: match args.direction {
            DirArg::Fwd => Direction::Forward,
            DirArg::Bwd => Direction::Backward,
        },
        trace: matches!(emit, Emit::Trace),
        emit,
    };
    match verify_source(source, &cfg) {
        Ok(r) => {
            print!("{}", r.render(emit));
            exit_for(&r.verdict)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
