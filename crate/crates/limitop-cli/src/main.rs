//! Batch front end: ingest an operator spec file, run the diagnostic,
//! extraction, lower-norm, and Fredholm pipelines, emit JSON/CSV reports.
//!
//! Exit codes: 0 success or consistent verdict, 1 input error, 2 not
//! Fredholm, 3 inconclusive (or crosscheck alarm). Identical configurations
//! produce byte-identical JSON artifacts; all randomness flows from `--seed`
//! through one named generator (ChaCha8).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use limitop::diagnostics::{ghost_profile, GhostVerdict};
use limitop::error::Error;
use limitop::fredholm::{
    fredholm_verdict, oracle_crosscheck, CrosscheckConfig, FredholmConfig, VerdictMode,
};
use limitop::galaxy::{dedup_limit_operators, extract_limit_operator, ExtractionConfig};
use limitop::lowernorm::{lower_norm_curve, window_search};
use limitop::operator::Propagation;
use limitop::space::SpaceKind;
use limitop::specfile::SpecFile;
use limitop::{assemble, DivergingStrategy, OperatorHandle, Point, SpaceDescriptor};

#[derive(Parser)]
#[command(name = "limitop", version, about = "Limit-operator analysis of band-dominated operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize the operator: propagation, band flag, norm bound, growth.
    Inspect(CommonArgs),
    /// Extract and deduplicate limit operators along diverging sequences.
    Limitops(CommonArgs),
    /// Lower-norm truncation curve around a center.
    Lowernorm(CommonArgs),
    /// Bounded-window search over a ball, sweeping the diameter budget.
    Window(CommonArgs),
    /// Full Fredholm verdict pipeline.
    Fredholm(CommonArgs),
    /// Ghost decay profile of the kernel.
    Ghost(CommonArgs),
    /// Cross-validate extraction against the symbol oracle.
    Crosscheck(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Operator spec file (JSON, schema bandop-spec/1).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for the manifest and report artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Entrywise tolerance for patch clustering and deduplication.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Radius range `a:b:step`; meaning depends on the command (extraction
    /// schedule, curve radii, window sweep, or ghost cutoffs).
    #[arg(long)]
    radii: Option<String>,
    /// Number of centers per diverging sequence.
    #[arg(long, default_value_t = 64)]
    centers: usize,
    /// Seed for every randomized choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Symbol scan grid size.
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Invertibility threshold for lower-norm estimates.
    #[arg(long, default_value_t = 1e-3)]
    tau: f64,
    /// Verdict mode; defaults to compact when the space has Property A.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Artifact format; csv additionally emits tabular files.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Minimum surviving centers for a conclusive extraction.
    #[arg(long, default_value_t = 3)]
    min_survivors: usize,
    /// Lower-norm probe radius (fredholm, crosscheck).
    #[arg(long, default_value_t = 50)]
    probe: u64,
    /// Radius of the parent ball F = B(0, f_radius) for `window`.
    #[arg(long, default_value_t = 20)]
    f_radius: u64,
    /// Center for `lowernorm`, as comma-separated integers.
    #[arg(long)]
    center: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ghost,
    Compact,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Inspect(a) => ("inspect", a),
        Command::Limitops(a) => ("limitops", a),
        Command::Lowernorm(a) => ("lowernorm", a),
        Command::Window(a) => ("window", a),
        Command::Fredholm(a) => ("fredholm", a),
        Command::Ghost(a) => ("ghost", a),
        Command::Crosscheck(a) => ("crosscheck", a),
    };
    match execute(name, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Inconclusive(_) => 3,
                _ => 1,
            }
        }
    }
}

fn parse_radii(text: &str) -> Result<Vec<u64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "radii must be given as a:b:step, got {text:?}"
        )));
    }
    let a: u64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad radii start {:?}", parts[0])))?;
    let b: u64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad radii end {:?}", parts[1])))?;
    let step: u64 = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad radii step {:?}", parts[2])))?;
    if step == 0 || b < a {
        return Err(Error::Config("radii need step > 0 and b >= a".into()));
    }
    Ok((a..=b).step_by(step as usize).collect())
}

fn radii_or(args: &CommonArgs, default: &str) -> Result<Vec<u64>, Error> {
    parse_radii(args.radii.as_deref().unwrap_or(default))
}

fn load(args: &CommonArgs) -> Result<(SpaceDescriptor, OperatorHandle, String), Error> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec = SpecFile::parse(&text)?;
    let space = spec.space_descriptor()?;
    let op_spec = spec.operator_spec(&space)?;
    let op = assemble(&space, &op_spec)?;
    let id = args
        .spec
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "operator".into());
    Ok((space, op, id))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn emit<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(&dir.join(name), text.as_bytes())
}

fn manifest(command: &str, args: &CommonArgs, radii: &[u64]) -> serde_json::Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "schema": limitop::specfile::SCHEMA,
        "spec": args.spec.display().to_string(),
        "seed": args.seed,
        "tol": args.tol,
        "centers": args.centers,
        "radii": radii,
        "grid": args.grid,
        "tau": args.tau,
        "probe": args.probe,
        "min_survivors": args.min_survivors,
        "format": match args.format { FormatArg::Json => "json", FormatArg::Csv => "csv" },
        "mode": args.mode.map(|m| match m { ModeArg::Ghost => "ghost", ModeArg::Compact => "compact" }),
    })
}

fn default_strategies(space: &SpaceDescriptor) -> Vec<DivergingStrategy> {
    match &space.kind {
        SpaceKind::ZLattice { dim, .. } => {
            let mut out = Vec::new();
            for axis in 0..*dim {
                out.push(DivergingStrategy::AxisRay { axis, negative: false });
                out.push(DivergingStrategy::AxisRay { axis, negative: true });
            }
            if *dim > 1 {
                out.push(DivergingStrategy::DiagonalRay { negative: false });
                out.push(DivergingStrategy::DiagonalRay { negative: true });
            }
            out
        }
        SpaceKind::CoarseUnion(_) => vec![DivergingStrategy::ComponentWalk],
    }
}

fn execute(command: &str, args: &CommonArgs) -> Result<i32, Error> {
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", args.out.display())))?;
    match command {
        "inspect" => inspect(args),
        "limitops" => limitops(args),
        "lowernorm" => lowernorm(args),
        "window" => window(args),
        "fredholm" => fredholm(args),
        "ghost" => ghost(args),
        "crosscheck" => crosscheck(args),
        _ => unreachable!(),
    }
}

fn inspect(args: &CommonArgs) -> Result<i32, Error> {
    let (space, op, id) = load(args)?;
    let radii = radii_or(args, "1:4:1")?;
    let growth: Vec<serde_json::Value> = radii
        .iter()
        .map(|&r| {
            let g = space.growth_bound(r);
            json!({"r": r, "bound": g.value, "exact": g.exact, "horizon": g.horizon})
        })
        .collect();
    let report = json!({
        "operator": id,
        "space": {
            "kind": match &space.kind {
                SpaceKind::ZLattice { dim, .. } => format!("z_lattice(dim {dim})"),
                SpaceKind::CoarseUnion(_) => "coarse_union".into(),
            },
            "property_a": space.property_a,
        },
        "propagation": match op.propagation() {
            Propagation::Bounded(r) => json!(r),
            Propagation::Unbounded => json!("unbounded"),
        },
        "band": op.is_band(),
        "norm_bound": op.norm_bound(),
        "norm_bound_declared": op.declared_norm_bound().is_some(),
        "growth": growth,
    });
    emit(&args.out, "manifest.json", &manifest("inspect", args, &radii))?;
    emit(&args.out, "inspect.json", &report)?;
    println!(
        "{id}: propagation {}, norm bound {:.6}",
        match op.propagation() {
            Propagation::Bounded(r) => r.to_string(),
            Propagation::Unbounded => "unbounded".into(),
        },
        op.norm_bound()
    );
    Ok(0)
}

fn extraction_config(args: &CommonArgs, radii: &[u64]) -> ExtractionConfig {
    ExtractionConfig {
        radii: radii.to_vec(),
        tol: args.tol,
        min_survivors: args.min_survivors,
    }
}

fn limitops(args: &CommonArgs) -> Result<i32, Error> {
    let (space, op, id) = load(args)?;
    let radii = radii_or(args, "2:6:2")?;
    emit(&args.out, "manifest.json", &manifest("limitops", args, &radii))?;
    let config = extraction_config(args, &radii);
    let mut reps = Vec::new();
    let mut strategies = Vec::new();
    for strategy in default_strategies(&space) {
        let centers = space.diverging_sequence(strategy, args.centers, args.seed)?;
        match extract_limit_operator(&op, &centers, &config) {
            Ok(rep) => {
                reps.push(rep);
                strategies.push(strategy.to_string());
            }
            Err(Error::Inconclusive(detail)) => {
                let report = json!({
                    "operator": id,
                    "outcome": "inconclusive",
                    "strategy": strategy.to_string(),
                    "detail": detail,
                });
                emit(&args.out, "limitops.json", &report)?;
                println!("{id}: inconclusive along {strategy}");
                return Ok(3);
            }
            Err(e) => return Err(e),
        }
    }
    let classes = dedup_limit_operators(&reps, args.tol);
    let class_reports: Vec<serde_json::Value> = classes
        .iter()
        .enumerate()
        .map(|(i, class)| {
            json!({
                "class_id": i,
                "strategies": class.member_indices.iter()
                    .map(|&j| strategies[j].clone()).collect::<Vec<_>>(),
                "rep": reps[class.representative()].report(),
            })
        })
        .collect();
    let report = json!({
        "operator": id,
        "outcome": "ok",
        "classes": class_reports,
    });
    emit(&args.out, "limitops.json", &report)?;
    println!(
        "{id}: {} dedup class(es) from {} strategies",
        classes.len(),
        strategies.len()
    );
    Ok(0)
}

fn parse_center(space: &SpaceDescriptor, text: Option<&str>) -> Result<Point, Error> {
    let Some(text) = text else {
        return Ok(space.basepoint());
    };
    let coords: Result<Vec<i64>, _> = text.split(',').map(|p| p.trim().parse()).collect();
    let coords = coords.map_err(|_| Error::Config(format!("bad center {text:?}")))?;
    match &space.kind {
        SpaceKind::ZLattice { .. } => Ok(Point::Lattice(coords)),
        SpaceKind::CoarseUnion(_) => {
            if coords.len() != 2 || coords[0] < 0 || coords[1] < 0 {
                return Err(Error::Config(
                    "coarse union centers are component,vertex".into(),
                ));
            }
            Ok(Point::Component {
                component: coords[0] as u32,
                vertex: coords[1] as u32,
            })
        }
    }
}

fn lowernorm(args: &CommonArgs) -> Result<i32, Error> {
    let (space, op, id) = load(args)?;
    let radii = radii_or(args, "1:40:1")?;
    emit(&args.out, "manifest.json", &manifest("lowernorm", args, &radii))?;
    let center = parse_center(&space, args.center.as_deref())?;
    let curve = lower_norm_curve(&op, &center, &radii)?;
    emit(&args.out, "lowernorm.json", &json!({"operator": id, "curve": curve}))?;
    if args.format == FormatArg::Csv {
        write_atomic(&args.out.join("lowernorm.csv"), curve.to_csv().as_bytes())?;
    }
    println!(
        "{id}: nu({}) = {:.6}",
        radii.last().unwrap(),
        curve.values.last().unwrap()
    );
    Ok(0)
}

fn window(args: &CommonArgs) -> Result<i32, Error> {
    let (space, op, id) = load(args)?;
    let sweep = radii_or(args, "2:10:1")?;
    emit(&args.out, "manifest.json", &manifest("window", args, &sweep))?;
    let parent = space.ball(&space.basepoint(), args.f_radius)?;
    let mut witnesses = Vec::new();
    let mut csv = String::from("s,gap,nu_window,nu_parent\n");
    for &s in &sweep {
        let w = window_search(&op, &parent, s)?;
        csv.push_str(&format!("{},{},{},{}\n", s, w.gap, w.nu_window, w.nu_parent));
        witnesses.push(w);
    }
    emit(
        &args.out,
        "window.json",
        &json!({
            "operator": id,
            "f_radius": args.f_radius,
            "witnesses": witnesses,
        }),
    )?;
    if args.format == FormatArg::Csv {
        write_atomic(&args.out.join("window.csv"), csv.as_bytes())?;
    }
    println!("{id}: {} windows swept over s in {:?}", witnesses.len(), sweep);
    Ok(0)
}

fn fredholm(args: &CommonArgs) -> Result<i32, Error> {
    let (_space, op, id) = load(args)?;
    let radii = radii_or(args, "13:51:19")?;
    emit(&args.out, "manifest.json", &manifest("fredholm", args, &radii))?;
    let probe_radii: Vec<u64> = [args.probe / 4, args.probe / 2, args.probe]
        .into_iter()
        .filter(|r| *r > 0)
        .collect();
    let config = FredholmConfig {
        operator_id: id.clone(),
        strategies: None,
        centers: args.centers,
        seed: args.seed,
        extraction: extraction_config(args, &radii),
        dedup_tol: args.tol,
        probe_radii,
        tau: args.tau,
        mode: args.mode.map(|m| match m {
            ModeArg::Ghost => VerdictMode::GhostIdeal,
            ModeArg::Compact => VerdictMode::CompactIdeal,
        }),
        grid_size: args.grid,
        ghost_tol: 0.05,
        ghost_cutoffs: vec![0, 64, 256, 1024],
    };
    let report = fredholm_verdict(&op, &config)?;
    emit(&args.out, "fredholm.json", &report)?;
    println!(
        "{id}: {:?}, M = {}, index = {}",
        report.verdict,
        report
            .uniform_bound
            .map(|m| format!("{m:.6}"))
            .unwrap_or_else(|| "none".into()),
        report
            .index
            .map(|i| i.to_string())
            .unwrap_or_else(|| "n/a".into()),
    );
    Ok(report.exit_code())
}

fn ghost(args: &CommonArgs) -> Result<i32, Error> {
    let (_space, op, id) = load(args)?;
    let cutoffs = radii_or(args, "0:1024:256")?;
    emit(&args.out, "manifest.json", &manifest("ghost", args, &cutoffs))?;
    let profile = ghost_profile(&op, &cutoffs, args.tol.max(0.05), 64)?;
    emit(&args.out, "ghost.json", &json!({"operator": id, "profile": profile}))?;
    if args.format == FormatArg::Csv {
        write_atomic(&args.out.join("ghost.csv"), profile.to_csv().as_bytes())?;
    }
    println!(
        "{id}: {}",
        match profile.verdict {
            GhostVerdict::GhostConsistent => "ghost-consistent",
            GhostVerdict::NotGhost => "not ghost",
        }
    );
    Ok(0)
}

fn crosscheck(args: &CommonArgs) -> Result<i32, Error> {
    let (_space, op, id) = load(args)?;
    let radii = radii_or(args, "17:51:17")?;
    emit(&args.out, "manifest.json", &manifest("crosscheck", args, &radii))?;
    let config = CrosscheckConfig {
        operator_id: id.clone(),
        centers: args.centers,
        seed: args.seed,
        extraction: extraction_config(args, &radii),
        dedup_tol: args.tol,
        probe_radius: args.probe,
        entry_tol: args.tol,
        nu_tol: args.tau,
        grid_size: args.grid,
    };
    let report = oracle_crosscheck(&op, &config)?;
    emit(&args.out, "crosscheck.json", &report)?;
    if report.pass {
        println!("{id}: crosscheck passed ({} classes)", report.classes.len());
        Ok(0)
    } else {
        println!("{id}: crosscheck DISAGREEMENT");
        for d in &report.disagreements {
            eprintln!("  {d}");
        }
        Ok(3)
    }
}
