use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use ssq_core::geometry::phase_s;
use ssq_core::grid::{bump, gaussian};
use ssq_core::harness::{default_checks, GridSpec};
use ssq_core::star::{star_hbar, weyl_product_fft, weyl_product_quad};
use ssq_core::transform::t_hbar;
use ssq_core::{
    run_suite, Error, EsetStructure, Interpolation, Method, PhaseSpaceGrid, Point, StarParams, Status, SuiteConfig,
    TransformOptions,
};

#[derive(Parser)]
#[command(name = "ssq", version, about = "Deformation quantization on elementary solvable symmetric spaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the structure axioms of an ESET file.
    Validate {
        #[arg(long)]
        eset: PathBuf,
    },
    /// Evaluate the phase S on three points, e.g. "0 0;1 0;0 1".
    Phase {
        #[arg(long)]
        eset: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        points: String,
    },
    /// Deformed product of two grids.
    Star {
        #[arg(long)]
        eset: PathBuf,
        #[arg(long)]
        hbar: f64,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        v: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Conjugation)]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        interp: Option<InterpArg>,
        #[arg(long)]
        oversample: Option<usize>,
        /// Also write "a,l,re,im" rows to this file.
        #[arg(long)]
        dump_csv: Option<PathBuf>,
    },
    /// Flat Moyal-Weyl product.
    Weyl {
        #[arg(long)]
        hbar: f64,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PathArg::Fft)]
        path: PathArg,
        /// Keep every k-th node of the inputs before multiplying.
        #[arg(long, default_value_t = 1)]
        downsample: usize,
    },
    /// Run the verification suite and write a JSON report.
    Suite {
        #[arg(long)]
        eset: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        hbar_list: Option<Vec<f64>>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        extent: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: PathBuf,
        /// Comma separated subset of checks.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        /// Suite configuration JSON; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write an analytic test grid.
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, allow_hyphen_values = true)]
        center: String,
        #[arg(long)]
        width: f64,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        extent: f64,
        #[arg(long)]
        hbar: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print timings of the main kernels.
    Bench {
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Conjugation,
    Kernel,
    Flat,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Conjugation => Method::Conjugation,
            MethodArg::Kernel => Method::Kernel,
            MethodArg::Flat => Method::Flat,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InterpArg {
    Cubic,
    Sinc,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum PathArg {
    Fft,
    Quad,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Gaussian,
    Bump,
}

/// Failure split by exit status: 1 for mathematical failures, 2 for usage and IO.
enum Fail {
    Math(String),
    Usage(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_)
            | Error::Singular(_)
            | Error::Divergence { .. }
            | Error::GridMismatch(_)
            | Error::DualMismatch { .. } => Fail::Math(e.to_string()),
            _ => Fail::Usage(e.to_string()),
        }
    }
}

type Res<T = ()> = std::result::Result<T, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Validate { eset } => validate(&eset),
        Cmd::Phase { eset, points } => phase(&eset, &points),
        Cmd::Star { eset, hbar, u, v, method, out, interp, oversample, dump_csv } => {
            star(&eset, hbar, &u, &v, method.into(), &out, interp, oversample, dump_csv.as_deref())
        }
        Cmd::Weyl { hbar, u, v, out, path, downsample } => weyl(hbar, &u, &v, &out, path, downsample),
        Cmd::Suite { eset, hbar_list, grid, extent, seed, report, checks, config } => {
            suite(&eset, hbar_list, grid, extent, seed, &report, checks, config.as_deref())
        }
        Cmd::Gen { kind, center, width, grid, extent, hbar, out } => gen(kind, &center, width, grid, extent, hbar, &out),
        Cmd::Bench { grid } => {
            bench(grid);
            Ok(())
        }
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Math(m)) => {
            if !m.is_empty() {
                eprintln!("error: {m}");
            }
            ExitCode::from(1)
        }
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn load_eset(path: &Path) -> Res<EsetStructure> {
    let s = std::fs::read_to_string(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))?;
    EsetStructure::from_json_str(&s).map_err(|e| match e {
        Error::Shape(m) => Fail::Math(format!("{}: {m}", path.display())),
        e => Fail::Usage(format!("{}: {e}", path.display())),
    })
}

fn load_grid(path: &Path) -> Res<PhaseSpaceGrid> {
    PhaseSpaceGrid::load(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
}

fn save_grid(g: &PhaseSpaceGrid, path: &Path) -> Res {
    g.save(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
}

fn validate(path: &Path) -> Res {
    let e = load_eset(path)?;
    let v = e.validate();
    if v.is_empty() {
        println!("{}: valid (n_a = {}, n_k = {}, n_l = {})", e.name, e.n_a, e.n_k, e.n_l);
        return Ok(());
    }
    for x in &v {
        println!("{x}");
    }
    Err(Fail::Math(String::new()))
}

/// Parses "x y;x y;…" with '.' decimals.
fn parse_points(s: &str, dim: usize) -> Res<Vec<Point>> {
    s.split(';')
        .map(|p| {
            let xs: Vec<f64> = p
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Fail::Usage(format!("bad number `{t}`"))))
                .collect::<Res<_>>()?;
            if xs.len() != dim {
                return Err(Fail::Usage(format!("point `{}` needs {dim} coordinates", p.trim())));
            }
            Point::from_flat(&xs).map_err(Fail::from)
        })
        .collect()
}

fn phase(path: &Path, points: &str) -> Res {
    let e = load_eset(path)?;
    let p = parse_points(points, e.n_a + e.n_l)?;
    if p.len() != 3 {
        return Err(Fail::Usage(format!("phase needs 3 points, got {}", p.len())));
    }
    println!("{}", sig15(phase_s(&e, &p[0], &p[1], &p[2])));
    Ok(())
}

/// 15 significant digits, positional unless the magnitude is extreme.
fn sig15(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        format!("{:.*}", (14 - mag) as usize, v)
    } else {
        format!("{v:.14e}")
    }
}

fn align_hbar(g: &mut PhaseSpaceGrid, hbar: f64, name: &str) {
    if (g.hbar - hbar).abs() > 1e-12 * hbar.abs() {
        eprintln!("warning: {name} carries hbar = {}, using --hbar {hbar}", g.hbar);
    }
    g.hbar = hbar;
}

#[allow(clippy::too_many_arguments)]
fn star(
    eset: &Path,
    hbar: f64,
    u: &Path,
    v: &Path,
    method: Method,
    out: &Path,
    interp: Option<InterpArg>,
    oversample: Option<usize>,
    dump_csv: Option<&Path>,
) -> Res {
    let e = load_eset(eset)?;
    let (mut u, mut v) = (load_grid(u)?, load_grid(v)?);
    align_hbar(&mut u, hbar, "u");
    align_hbar(&mut v, hbar, "v");
    let mut params = StarParams::new(hbar).with_method(method);
    if let Some(i) = interp {
        params = params.with_interpolation(match i {
            InterpArg::Cubic => Interpolation::Cubic,
            InterpArg::Sinc => Interpolation::Sinc,
        });
    }
    if let Some(os) = oversample {
        params = params.with_oversample(os);
    }
    params.validate()?;
    let t0 = Instant::now();
    let w = star_hbar(&e, &u, &v, &params)?;
    println!(
        "hbar = {hbar}, method = {method:?}, interpolation = {:?}, oversample = {}, shape = {:?}, {:.3}s",
        params.interpolation,
        params.oversample,
        w.shape(),
        t0.elapsed().as_secs_f64()
    );
    save_grid(&w, out)?;
    if let Some(p) = dump_csv {
        write_csv(&w, p).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn write_csv(g: &PhaseSpaceGrid, path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut head: Vec<String> = Vec::new();
    for (p, n) in [("a", g.n_a), ("l", g.n_l)] {
        if n == 1 {
            head.push(p.into());
        } else {
            head.extend((1..=n).map(|i| format!("{p}{i}")));
        }
    }
    writeln!(w, "{},re,im", head.join(","))?;
    for (i, z) in g.data.iter().enumerate() {
        let x: Vec<String> = g.coords(i).iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{},{}", x.join(","), z.re, z.im)?;
    }
    w.flush()
}

fn weyl(hbar: f64, u: &Path, v: &Path, out: &Path, path: PathArg, downsample: usize) -> Res {
    let (mut u, mut v) = (load_grid(u)?, load_grid(v)?);
    if downsample > 1 {
        u = u.downsample(downsample)?;
        v = v.downsample(downsample)?;
    }
    align_hbar(&mut u, hbar, "u");
    align_hbar(&mut v, hbar, "v");
    let t0 = Instant::now();
    let w = match path {
        PathArg::Fft => weyl_product_fft(&u, &v, hbar)?,
        PathArg::Quad => weyl_product_quad(&u, &v, hbar, 4)?,
    };
    println!(
        "hbar = {hbar}, path = {}, shape = {:?}, {:.3}s",
        if path == PathArg::Fft { "fft" } else { "quad" },
        w.shape(),
        t0.elapsed().as_secs_f64()
    );
    save_grid(&w, out)
}

#[allow(clippy::too_many_arguments)]
fn suite(
    eset: &Path,
    hbar_list: Option<Vec<f64>>,
    grid: Option<usize>,
    extent: Option<f64>,
    seed: Option<u64>,
    report: &Path,
    checks: Option<Vec<String>>,
    config: Option<&Path>,
) -> Res {
    let e = load_eset(eset)?;
    let mut cfg = match config {
        Some(p) => SuiteConfig::load(p).map_err(|err| Fail::Usage(format!("{}: {err}", p.display())))?,
        None => SuiteConfig::default(),
    };
    if let Some(h) = hbar_list {
        cfg.hbar = h;
    }
    let defaults = GridSpec::default();
    if let Some(n) = grid {
        cfg.grid.points_per_axis = n;
    }
    if let Some(x) = extent {
        cfg.grid.extent = x;
    }
    if cfg.grid != defaults {
        eprintln!(
            "warning: fixtures are tuned for {} points over [-{e}, {e}]",
            defaults.points_per_axis,
            e = defaults.extent
        );
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(c) = checks {
        cfg.checks = c;
    } else if cfg.checks.is_empty() {
        cfg.checks = default_checks();
    }
    let r = run_suite(&e, &cfg).map_err(|err| match err {
        Error::UnknownCheck(_) | Error::Argument(_) => Fail::Usage(err.to_string()),
        err => Fail::from(err),
    })?;
    for c in &r.checks {
        let tag = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        println!("{tag:<5} {:<26} {:>10.3e} (tol {:.0e})  {:.2}s  {}", c.name, c.residual, c.tolerance, c.seconds, c.details);
    }
    r.save(report).map_err(|err| Fail::Usage(format!("{}: {err}", report.display())))?;
    let failed = r.checks.iter().filter(|c| c.status != Status::Pass).count();
    if failed == 0 {
        println!("all {} checks passed", r.checks.len());
        Ok(())
    } else {
        Err(Fail::Math(format!("{failed} of {} checks did not pass", r.checks.len())))
    }
}

fn gen(kind: KindArg, center: &str, width: f64, grid: usize, extent: f64, hbar: f64, out: &Path) -> Res {
    let c: Vec<f64> = center
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Fail::Usage(format!("bad number `{t}`"))))
        .collect::<Res<_>>()?;
    if c.is_empty() || c.len() % 2 != 0 {
        return Err(Fail::Usage("--center needs an even number of coordinates".into()));
    }
    if !(width > 0.0) || !(extent > 0.0) {
        return Err(Fail::Usage("--width and --extent must be positive".into()));
    }
    let n = c.len() / 2;
    let g = match kind {
        KindArg::Gaussian => gaussian(n, grid, extent, hbar, &c, width, width)?,
        KindArg::Bump => bump(n, grid, extent, hbar, &c, width)?,
    };
    save_grid(&g, out)?;
    println!("wrote {} ({:?} nodes, hbar = {hbar})", out.display(), g.shape());
    Ok(())
}

fn bench(points: usize) {
    let e = EsetStructure::example_2d();
    let time = |label: &str, f: &dyn Fn() -> ssq_core::Result<PhaseSpaceGrid>| {
        let t0 = Instant::now();
        match f() {
            Ok(_) => println!("{label:<28} {:>9.3}s", t0.elapsed().as_secs_f64()),
            Err(err) => println!("{label:<28} error: {err}"),
        }
    };
    let (u, v) = match (
        gaussian(1, points, 8.0, 1.0, &[0.3, -0.2], 1.2, 1.0),
        gaussian(1, points, 8.0, 1.0, &[-0.2, 0.4], 1.0, 1.2),
    ) {
        (Ok(u), Ok(v)) => (u, v),
        (Err(err), _) | (_, Err(err)) => {
            println!("bench: {err}");
            return;
        }
    };
    let n = format!("{points}^2");
    time(&format!("T_hbar sinc {n}"), &|| t_hbar(&e, &u, 1.0, &TransformOptions::sinc(4)));
    time(&format!("weyl fft {n}"), &|| weyl_product_fft(&u, &v, 1.0));
    for m in [Method::Flat, Method::Conjugation] {
        time(&format!("star {m:?} {n}"), &|| star_hbar(&e, &u, &v, &StarParams::new(1.0).with_method(m)));
    }
    let small = (u.downsample(2), v.downsample(2));
    if let (Ok(us), Ok(vs)) = small {
        let n = format!("{}^2", points / 2);
        time(&format!("weyl quad {n}"), &|| weyl_product_quad(&us, &vs, 1.0, 4));
        time(&format!("star Kernel {n}"), &|| {
            star_hbar(&e, &us, &vs, &StarParams::new(1.0).with_method(Method::Kernel))
        });
    }
}
