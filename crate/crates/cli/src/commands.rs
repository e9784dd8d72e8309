use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use coadjoint::embeddings::{
    certify, so6_lagrangian_set, so_upsilon_set, su_grassmann_set, triangle_locus, two_step_so_spec,
    EmbeddingSpec,
};
use coadjoint::error::ErrorClass;
use coadjoint::export::{ChainFile, TrajectoryFile};
use coadjoint::geodesics::{
    closed_form_trajectory, geodesic_from_trajectory, magnetic_geodesic, uniform_times,
};
use coadjoint::lie_core::{CartanSpec, Family, GroupFamily};
use coadjoint::linalg::CMatrix;
use coadjoint::orbits::{orbit_dim, stabilizer_dim};
use coadjoint::spinchain::{integrate, random_state, SpinChainConfig, Trajectory};
use coadjoint::Error;
use serde::Serialize;

use crate::{
    Builtin, CheckEmbeddingArgs, Format, GroupArg, Mode, OrbitInfoArgs, OutputArgs, TrajectoryArgs,
    TriangleArgs,
};

const ENERGY_RELATIVE: f64 = 1e-7;
const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn invariant(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Parse | ErrorClass::Io => 2,
            ErrorClass::Invariant => 3,
            ErrorClass::Numerical => 4,
        };
        let message = match &e {
            Error::NearDivisor { min_singular, time } => match time {
                Some(t) => format!("{e} (min singular value {min_singular:.3e} at t = {t})"),
                None => format!("{e} (min singular value {min_singular:.3e})"),
            },
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn family(g: GroupArg) -> Family {
    match g {
        GroupArg::Su => Family::SU,
        GroupArg::SoEven => Family::SoEven,
        GroupArg::SoOdd => Family::SoOdd,
        GroupArg::Sp => Family::Sp,
    }
}

fn refuse_overwrite(paths: &[&Path], force: bool) -> CliResult<()> {
    for p in paths {
        if p.exists() && !force {
            return Err(CliError::invariant(format!(
                "refusing to overwrite {}; pass --force",
                p.display()
            )));
        }
    }
    Ok(())
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

/// Writes to `--out` or stdout.
fn emit(output: &OutputArgs, contents: &[u8]) -> CliResult<()> {
    match &output.out {
        Some(path) => {
            refuse_overwrite(&[path], output.force)?;
            write_file(path, contents)
        }
        None => std::io::stdout()
            .write_all(contents)
            .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}"))),
    }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text.into_bytes()
}

#[derive(Serialize)]
struct OrbitInfo {
    family: String,
    group: String,
    n: usize,
    multiplicities: Vec<usize>,
    eigenvalues: Vec<f64>,
    orbit_dim: usize,
    stabilizer_dim: usize,
    algebra_dim: usize,
}

fn default_eigenvalues(family: Family, mults: &[usize]) -> Vec<f64> {
    let raw: Vec<f64> = (1..=mults.len()).map(|j| j as f64).collect();
    if family != Family::SU {
        return raw;
    }
    let n: usize = mults.iter().sum();
    let mean = raw.iter().zip(mults).map(|(l, &m)| l * m as f64).sum::<f64>() / n.max(1) as f64;
    raw.iter().map(|l| l - mean).collect()
}

pub fn orbit_info(args: &OrbitInfoArgs) -> CliResult<()> {
    let family = family(args.group);
    let group = GroupFamily::new(family, args.n)?;
    let eigenvalues = args
        .eig
        .clone()
        .unwrap_or_else(|| default_eigenvalues(family, &args.mult));
    let spec = CartanSpec::new(group, args.mult.clone(), eigenvalues)?;
    let report = OrbitInfo {
        family: family.label().to_string(),
        group: group.to_string(),
        n: args.n,
        multiplicities: spec.multiplicities.clone(),
        eigenvalues: spec.eigenvalues.clone(),
        orbit_dim: orbit_dim(&spec)?,
        stabilizer_dim: stabilizer_dim(&spec)?,
        algebra_dim: group.algebra_dim(),
    };
    emit(&args.output, &json(&report))
}

fn builtin_spec(args: &CheckEmbeddingArgs, builtin: Builtin) -> CliResult<EmbeddingSpec> {
    let n = || args.n.ok_or_else(|| CliError::usage("this builtin needs --n"));
    let mult = || {
        args.mult
            .clone()
            .ok_or_else(|| CliError::usage("this builtin needs --mult"))
    };
    let spec = match builtin {
        Builtin::SuGrassmann => su_grassmann_set(n()?, &mult()?)?,
        Builtin::SoUpsilon => {
            let family = family(args.group);
            if family == Family::SU {
                return Err(CliError::usage("so-upsilon needs --group so-even, so-odd or sp"));
            }
            so_upsilon_set(n()?, &mult()?, family)?
        }
        Builtin::So6Lagrangian => so6_lagrangian_set()?,
        Builtin::TwoStepSo => two_step_so_spec(n()?)?,
    };
    Ok(spec)
}

pub fn check_embedding(args: &CheckEmbeddingArgs) -> CliResult<()> {
    let spec = match (&args.spec, args.builtin) {
        (Some(path), _) => {
            let text = read(path)?;
            serde_json::from_str::<EmbeddingSpec>(&text).map_err(|e| {
                // Structural failures inside try_from surface as serde errors too.
                CliError::usage(format!("{}: {e}", path.display()))
            })?
        }
        (None, Some(b)) => builtin_spec(args, b)?,
        (None, None) => return Err(CliError::usage("give --spec FILE or --builtin NAME")),
    };
    let certificate = certify(&spec, args.samples, args.seed)?;
    emit(&args.output, &json(&certificate))?;
    if certificate.isotropy_residual < args.tol {
        Ok(())
    } else {
        Err(CliError::invariant(format!(
            "isotropy residual {:.3e} exceeds tolerance {:.1e}",
            certificate.isotropy_residual, args.tol
        )))
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_chain(args: &TrajectoryArgs) -> CliResult<(SpinChainConfig, CMatrix)> {
    let (config, z0) = match (&args.spec, args.n) {
        (Some(path), _) => {
            let text = read(path)?;
            let file: ChainFile = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            (file.config()?, file.initial_state()?)
        }
        (None, Some(n)) => {
            if n < 2 {
                return Err(CliError::invariant("a spin chain needs n ≥ 2"));
            }
            let levels: Vec<f64> = (1..n).map(|k| k as f64).collect();
            (SpinChainConfig::nested(vec![1.0; n], &levels)?, None)
        }
        (None, None) => return Err(CliError::usage("give --spec FILE or --n N")),
    };
    let z0 = match z0 {
        Some(z) => z,
        None => random_state(&config, args.seed).z,
    };
    Ok((config, z0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    SpinChain,
    Geodesic,
}

#[derive(Serialize)]
struct Conservation {
    energy_drift: f64,
    norm_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ev_deviation: Option<f64>,
}

#[derive(Serialize)]
struct Tolerances {
    agreement: f64,
    energy: f64,
    norm: f64,
}

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    mode: &'static str,
    n: usize,
    t_end: f64,
    dt: f64,
    samples: usize,
    gauge: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric: Option<Conservation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<Conservation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_deviation: Option<f64>,
    tolerances: Tolerances,
    passed: bool,
}

fn conservation(t: &Trajectory, ev_deviation: Option<f64>) -> Conservation {
    Conservation {
        energy_drift: t.energy_drift(),
        norm_drift: t.norm_drift(),
        ev_deviation,
    }
}

fn closed_form_error(e: Error) -> CliError {
    match e {
        Error::NotNested => CliError::invariant(
            "closed form needs nested couplings α_ij = α_max(i,j) (for n = 3: α₁₃ = α₂₃); use --mode numeric",
        ),
        other => other.into(),
    }
}

struct Run {
    trajectory: Trajectory,
    file: TrajectoryFile,
    ev_deviation: Option<f64>,
    geodesic: Option<coadjoint::geodesics::MagneticGeodesic>,
}

fn run_numeric(config: &SpinChainConfig, z0: &CMatrix, args: &TrajectoryArgs, kind: Kind) -> CliResult<Run> {
    let trajectory = integrate(config, z0, args.t_end, args.dt)?;
    Ok(match kind {
        Kind::SpinChain => Run {
            file: TrajectoryFile::from_trajectory(&trajectory),
            trajectory,
            ev_deviation: None,
            geodesic: None,
        },
        Kind::Geodesic => {
            let geodesic = geodesic_from_trajectory(&trajectory)?;
            Run {
                file: TrajectoryFile::from_geodesic(&geodesic, config),
                trajectory,
                ev_deviation: None,
                geodesic: Some(geodesic),
            }
        }
    })
}

fn run_closed(config: &SpinChainConfig, z0: &CMatrix, args: &TrajectoryArgs, kind: Kind) -> CliResult<Run> {
    let times = uniform_times(args.t_end, args.dt)?;
    let trajectory = closed_form_trajectory(z0, config, &times).map_err(closed_form_error)?;
    Ok(match kind {
        Kind::SpinChain => Run {
            file: TrajectoryFile::from_trajectory(&trajectory),
            trajectory,
            ev_deviation: None,
            geodesic: None,
        },
        Kind::Geodesic => {
            let geodesic = magnetic_geodesic(z0, config, &times).map_err(closed_form_error)?;
            Run {
                file: TrajectoryFile::from_geodesic(&geodesic, config),
                ev_deviation: geodesic.ev_deviation,
                trajectory,
                geodesic: Some(geodesic),
            }
        }
    })
}

fn serialize(file: &TrajectoryFile, format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Json => {
            let mut text = file.to_json()?;
            text.push('\n');
            Ok(text.into_bytes())
        }
        Format::Csv => {
            let mut buf = Vec::new();
            file.write_csv(&mut buf)?;
            Ok(buf)
        }
    }
}

/// `run.csv` → `run.<tag>.csv`.
fn tagged(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

pub fn trajectory(args: &TrajectoryArgs, kind: Kind) -> CliResult<()> {
    if !(args.dt.is_finite() && args.dt > 0.0) {
        return Err(CliError::invariant(format!(
            "--dt must be positive, got {}",
            args.dt
        )));
    }
    if !(args.t_end.is_finite() && args.t_end >= 0.0) {
        return Err(CliError::invariant(format!(
            "--t-end must be nonnegative, got {}",
            args.t_end
        )));
    }
    let (config, z0) = load_chain(args)?;

    let targets: Vec<PathBuf> = match (&args.output.out, args.mode) {
        (Some(out), Mode::Both) => vec![
            tagged(out, "numeric"),
            tagged(out, "closed_form"),
            tagged(out, "summary").with_extension("json"),
        ],
        (Some(out), _) => vec![out.clone()],
        (None, Mode::Both) => return Err(CliError::usage("--mode both needs --out")),
        (None, _) => Vec::new(),
    };
    refuse_overwrite(
        &targets.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        args.output.force,
    )?;

    let numeric = matches!(args.mode, Mode::Numeric | Mode::Both)
        .then(|| run_numeric(&config, &z0, args, kind))
        .transpose()?;
    let closed = matches!(args.mode, Mode::ClosedForm | Mode::Both)
        .then(|| run_closed(&config, &z0, args, kind))
        .transpose()?;

    let max_deviation = match (&numeric, &closed) {
        (Some(a), Some(b)) => Some(match (&a.geodesic, &b.geodesic) {
            (Some(ga), Some(gb)) => ga.max_deviation(gb),
            _ => a.trajectory.max_deviation(&b.trajectory)?,
        }),
        _ => None,
    };
    let any = numeric.as_ref().or(closed.as_ref()).expect("at least one run");
    let h0 = any.trajectory.samples[0].diagnostics.energy;
    let tolerances = Tolerances {
        agreement: args.tol,
        energy: ENERGY_RELATIVE * h0.abs().max(1.0),
        norm: NORM_TOLERANCE,
    };
    let conserved = |run: &Option<Run>| {
        run.as_ref().is_none_or(|r| {
            r.trajectory.energy_drift() <= tolerances.energy && r.trajectory.norm_drift() <= tolerances.norm
        })
    };
    let passed = conserved(&numeric) && conserved(&closed) && max_deviation.is_none_or(|d| d <= args.tol);
    let summary = Summary {
        command: match kind {
            Kind::SpinChain => "simulate",
            Kind::Geodesic => "geodesic",
        },
        mode: match args.mode {
            Mode::Numeric => "numeric",
            Mode::ClosedForm => "closed_form",
            Mode::Both => "both",
        },
        n: config.n(),
        t_end: args.t_end,
        dt: args.dt,
        samples: any.trajectory.samples.len(),
        gauge: any.trajectory.gauge.clone(),
        numeric: numeric
            .as_ref()
            .map(|r| conservation(&r.trajectory, r.ev_deviation)),
        closed_form: closed
            .as_ref()
            .map(|r| conservation(&r.trajectory, r.ev_deviation)),
        max_deviation,
        tolerances,
        passed,
    };

    match (&args.output.out, numeric, closed) {
        (Some(_), Some(a), Some(b)) => {
            write_file(&targets[0], &serialize(&a.file, args.format)?)?;
            write_file(&targets[1], &serialize(&b.file, args.format)?)?;
            write_file(&targets[2], &json(&summary))?;
            print(&json(&summary))?;
        }
        (Some(out), Some(run), None) | (Some(out), None, Some(run)) => {
            write_file(out, &serialize(&run.file, args.format)?)?;
            print(&json(&summary))?;
        }
        (None, Some(run), None) | (None, None, Some(run)) => {
            print(&serialize(&run.file, args.format)?)?;
            eprint!("{}", String::from_utf8_lossy(&json(&summary)));
        }
        _ => unreachable!("mode both always has an output path"),
    }

    if passed {
        Ok(())
    } else {
        Err(CliError::numerical(
            "conservation or agreement thresholds not met; see the summary",
        ))
    }
}

fn print(bytes: &[u8]) -> CliResult<()> {
    std::io::stdout()
        .write_all(bytes)
        .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")))
}

pub fn triangle(args: &TriangleArgs) -> CliResult<()> {
    let [a, b, c] = args.eig[..] else {
        return Err(CliError::usage(format!(
            "--eig needs three weights, got {}",
            args.eig.len()
        )));
    };
    let locus = triangle_locus(a, b, c)?;
    emit(&args.output, &json(&locus))
}
