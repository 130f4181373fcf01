mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use weylflow::chamber::{
    complete_bipartite, from_graph, hypercube, load_any, subdivided_complete, validate,
    ChamberSystem, GraphFile, TrianglePresentation,
};
use weylflow::rootdata::Coweight;
use weylflow::sectors::GermSpace;
use weylflow::spectra::{
    eigen, family_from_transfer, json_float, koszul_complexes, taylor_report, CMatrix, Character,
    RankTolerance, SpectrumConfig, DEFAULT_SEED,
};
use weylflow::transfer::{required_radius, transfer_matrix, TransferMatrix};
use weylflow::Error;

/// Fixture names used when `verify` gets no inputs.
const BUNDLED: [&str; 4] = ["k33", "q3", "k4_subdivided", "a2_fano"];

#[derive(Parser)]
#[command(
    name = "weylflow",
    version,
    about = "Sector shifts, transfer operators and joint spectra on quotients of Euclidean buildings"
)]
struct Cli {
    /// Worker threads for enumeration and matrix assembly.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check residue structure, regularity and connectivity.
    Validate { input: String },
    /// Enumerate sector germs of one radius.
    Germs {
        input: String,
        #[arg(long)]
        radius: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Exact transfer matrix of one shift.
    Transfer {
        input: String,
        /// Germ budget; the matrix acts on F_n with n = radius − |mu|.
        #[arg(long)]
        radius: usize,
        /// Coefficients of mu over the fundamental coweights.
        #[arg(long)]
        mu: String,
        #[command(flatten)]
        out: Output,
    },
    /// Joint spectrum on F_1 with Taylor-membership verdicts.
    Spectrum {
        input: String,
        #[command(flatten)]
        spectral: Spectral,
        /// Extra characters to test, generator values separated by commas, e.g. `1+0i,0.5-0.5i`.
        #[arg(long)]
        chi: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Koszul-Taylor (co)homology of the F_1 family at one character.
    Koszul {
        input: String,
        /// Generator values separated by commas.
        #[arg(long)]
        chi: String,
        /// Generators as coweights separated by `;`, e.g. `1,0;0,1`.
        #[arg(long)]
        generators: Option<String>,
        #[arg(long, default_value_t = 1e-9)]
        tol_rank: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Run the full invariant suite and print a pass/fail table.
    Verify {
        /// Inputs; defaults to every bundled fixture.
        inputs: Vec<String>,
        /// Largest radius for the exhaustive metric checks.
        #[arg(long, default_value_t = 3)]
        radius: usize,
        #[command(flatten)]
        spectral: Spectral,
    },
    /// Non-backtracking spectrum of a graph, built directly from its edges.
    Ihara {
        input: String,
        #[command(flatten)]
        out: Output,
    },
    /// Write a generated bipartite graph.
    GenGraph {
        #[arg(value_enum)]
        family: GraphFamily,
        /// Sizes: two part sizes, a dimension, or a vertex count.
        params: Vec<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Write the Fano-plane triangle presentation of an A2~ quotient.
    GenA2 {
        /// Emit the chamber system instead of the presentation.
        #[arg(long)]
        chambers: bool,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Clone)]
struct Spectral {
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol_res: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol_rank: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_merge: f64,
    /// Random off-spectrum characters to test.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Generators as coweights separated by `;`, e.g. `1,0;0,1`.
    #[arg(long)]
    generators: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFamily {
    CompleteBipartite,
    Hypercube,
    SubdividedComplete,
}

/// Exit 1 on semantic failures, 2 on usage and IO problems.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) | Error::Malformed(_) => Failure::Usage(e.to_string()),
            other => Failure::Failed(other.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn fixture_dir() -> PathBuf {
    std::env::var_os("WEYLFLOW_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"))
}

/// A path as given, or the name of a bundled fixture.
fn resolve(input: &str) -> Result<PathBuf, Failure> {
    let direct = PathBuf::from(input);
    if direct.exists() {
        return Ok(direct);
    }
    let dir = fixture_dir();
    [dir.join(input), dir.join(format!("{input}.json"))]
        .into_iter()
        .find(|p| p.exists())
        .ok_or_else(|| Failure::Usage(format!("no such input or fixture: {input}")))
}

fn load(input: &str) -> Result<ChamberSystem, Failure> {
    Ok(load_any(resolve(input)?)?)
}

fn emit(out: &Output, text: &str) -> Result<(), Failure> {
    match &out.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_mu(text: &str, rank: usize) -> Result<Coweight, Failure> {
    let coeffs = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .map_err(|e| Failure::Usage(format!("bad coefficient `{s}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if coeffs.len() != rank {
        return Err(Failure::Usage(format!(
            "mu needs {rank} coefficients, got {}",
            coeffs.len()
        )));
    }
    Ok(Coweight(coeffs))
}

fn parse_generators(text: Option<&str>, rank: usize) -> Result<Vec<Coweight>, Failure> {
    match text {
        None => Ok((0..rank).map(|i| Coweight::fundamental(rank, i)).collect()),
        Some(t) => {
            let gens = t
                .split(';')
                .map(|g| parse_mu(g, rank))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(g) = gens.iter().find(|g| !g.is_dominant() || g.norm() == 0) {
                return Err(Failure::Usage(format!(
                    "generator {:?} must be dominant and nonzero",
                    g.0
                )));
            }
            Ok(gens)
        }
    }
}

fn parse_chi(text: &str, r: usize) -> Result<Character, Failure> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<Complex<f64>>()
                .map_err(|_| Failure::Usage(format!("bad complex value `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != r {
        return Err(Failure::Usage(format!(
            "character needs {r} values, got {}",
            values.len()
        )));
    }
    Ok(Character::new(values))
}

fn check_spectral(s: &Spectral) -> Result<(), Failure> {
    if !(s.theta > 0.0 && s.theta < 1.0) {
        return Err(Failure::Usage(format!(
            "theta must lie in (0, 1), got {}",
            s.theta
        )));
    }
    if [s.tol_res, s.tol_rank, s.tol_merge]
        .iter()
        .any(|t| !t.is_finite() || *t <= 0.0)
    {
        return Err(Failure::Usage("tolerances must be positive".into()));
    }
    Ok(())
}

/// F_1 matrices of the generators, checked for exact commutation.
fn f1_family(
    cs: ChamberSystem,
    generators: &[Coweight],
) -> Result<(Vec<TransferMatrix>, Vec<CMatrix>), Failure> {
    let budget = generators
        .iter()
        .map(|g| required_radius(g, 1))
        .max()
        .unwrap_or(1);
    let space = GermSpace::new(cs, budget)?;
    let table = space.enumerate_germs(1)?;
    let ops = generators
        .iter()
        .map(|g| transfer_matrix(&space, &table, g))
        .collect::<Result<Vec<_>, _>>()?;
    let family = family_from_transfer(&ops)?;
    Ok((ops, family))
}

fn spectrum_config(s: &Spectral, r: usize) -> SpectrumConfig {
    let mut cfg = SpectrumConfig::new(r);
    cfg.theta = s.theta;
    cfg.seed = s.seed;
    cfg.tol_res = s.tol_res;
    cfg.tol_merge = s.tol_merge;
    cfg.rank = RankTolerance {
        relative: s.tol_rank,
        ..RankTolerance::default()
    };
    cfg.samples = s.samples;
    cfg
}

fn cmd_validate(input: &str) -> Outcome {
    let path = resolve(input)?;
    let cs = match load_any(&path) {
        Ok(cs) => cs,
        Err(e @ (Error::Invalid(_) | Error::Graph(_) | Error::Presentation(_))) => {
            println!("{input}: FAIL\n{e}");
            return Ok(false);
        }
        Err(e) => return Err(e.into()),
    };
    let report = validate(&cs);
    println!(
        "{input}: {} ({} chambers, q = {:?})",
        cs.kind.name(),
        cs.num_chambers,
        cs.q.q
    );
    print!("{report}");
    Ok(report.passed())
}

fn cmd_germs(input: &str, radius: usize, out: &Output) -> Outcome {
    if radius == 0 {
        return Err(Failure::Usage("radius must be at least 1".into()));
    }
    let space = GermSpace::new(load(input)?, radius)?;
    let table = space.enumerate_germs(radius)?;
    emit(out, &table.to_json()?)?;
    Ok(true)
}

fn cmd_transfer(input: &str, radius: usize, mu: &str, out: &Output) -> Outcome {
    let cs = load(input)?;
    let mu = parse_mu(mu, cs.kind.rank())?;
    if !mu.is_dominant() {
        return Err(Failure::Failed(Error::NotDominant(mu.0).to_string()));
    }
    if radius < mu.norm() + 1 {
        return Err(Failure::Failed(format!(
            "radius {radius} too small for mu {:?}: the germ budget must be at least |mu| + 1 = {}",
            mu.0,
            mu.norm() + 1
        )));
    }
    let n = radius - mu.norm();
    let space = GermSpace::new(cs, radius)?;
    let table = space.enumerate_germs(n)?;
    let l = transfer_matrix(&space, &table, &mu)?;
    let text = match out.format {
        Format::Json => l.to_json()?,
        Format::Csv => l.to_csv()?,
    };
    emit(out, &text)?;
    Ok(true)
}

fn cmd_spectrum(input: &str, spectral: &Spectral, chi: &[String], out: &Output) -> Outcome {
    check_spectral(spectral)?;
    let cs = load(input)?;
    let gens = parse_generators(spectral.generators.as_deref(), cs.kind.rank())?;
    let (_, family) = f1_family(cs, &gens)?;
    let user = chi
        .iter()
        .map(|c| parse_chi(c, gens.len()))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = spectrum_config(spectral, gens.len());
    let report = taylor_report(
        &family,
        gens.iter().map(|g| g.0.clone()).collect(),
        &cfg,
        &user,
    )?;
    emit(out, &(report.to_json() + "\n"))?;
    if report.ambiguous() > 0 {
        eprintln!(
            "warning: {} characters had singular values inside the ambiguity band",
            report.ambiguous()
        );
    }
    Ok(report.passed())
}

fn cmd_koszul(
    input: &str,
    chi: &str,
    generators: Option<&str>,
    tol_rank: f64,
    out: &Output,
) -> Outcome {
    if !tol_rank.is_finite() || tol_rank <= 0.0 {
        return Err(Failure::Usage("tolerances must be positive".into()));
    }
    let cs = load(input)?;
    let gens = parse_generators(generators, cs.kind.rank())?;
    let (_, family) = f1_family(cs, &gens)?;
    let chi = parse_chi(chi, gens.len())?;
    let k = koszul_complexes(
        &family,
        &chi,
        &RankTolerance {
            relative: tol_rank,
            ..RankTolerance::default()
        },
    )?;
    let ints = |v: &[i64]| v.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
    let mut s = String::from("{\"format\":\"koszul/v1\",\"chi\":[");
    s += &chi
        .values
        .iter()
        .map(|z| format!("[{},{}]", json_float(z.re), json_float(z.im)))
        .collect::<Vec<_>>()
        .join(",");
    writeln!(
        s,
        "],\"dim\":{},\"cohomology\":[{}],\"homology\":[{}],\"euler\":{},\"square_defect\":{},\"ambiguous\":{}}}",
        k.dim,
        ints(&k.cohomology),
        ints(&k.homology),
        k.euler_characteristic(),
        json_float(k.square_defect),
        k.ambiguous()
    )
    .unwrap();
    emit(out, &s)?;
    Ok(k.dims_nonnegative() && k.duality_holds())
}

fn cmd_ihara(input: &str, out: &Output) -> Outcome {
    let path = resolve(input)?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let graph: GraphFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    // rejects odd cycles, irregular sides and disconnected input
    from_graph(&graph.edges)?;
    let oracle = verify::IharaOracle::new(&graph.edges);
    let values = eigen(&oracle.non_backtracking())?;
    let residual = oracle.bass_residual();
    let pair = |z: &Complex<f64>| format!("[{},{}]", json_float(z.re), json_float(z.im));
    let list = |v: &mut dyn Iterator<Item = Complex<f64>>| {
        v.map(|z| pair(&z)).collect::<Vec<_>>().join(",")
    };
    let mut s = format!(
        "{{\"format\":\"ihara/v1\",\"vertices\":{},\"edges\":{},\"eigenvalues\":[{}]",
        oracle.vertices,
        oracle.edges.len(),
        list(&mut values.iter().map(|p| p.value))
    );
    if let Some(q) = oracle.regular_q() {
        write!(
            s,
            ",\"q\":{q},\"normalized\":[{}]",
            list(&mut values.iter().map(|p| p.value / q as f64))
        )
        .unwrap();
    }
    writeln!(s, ",\"identity_residual\":{}}}", json_float(residual)).unwrap();
    emit(out, &s)?;
    Ok(residual <= 1e-10)
}

fn cmd_gen_graph(family: GraphFamily, params: &[usize], out: &Output) -> Outcome {
    let bad =
        |want: &str| Failure::Usage(format!("expected {want}, got {} parameters", params.len()));
    let graph = match family {
        GraphFamily::CompleteBipartite => match params {
            &[a, b] if a > 0 && b > 0 => complete_bipartite(a, b),
            _ => return Err(bad("two positive part sizes")),
        },
        GraphFamily::Hypercube => match params {
            &[d] if d > 0 => hypercube(d),
            _ => return Err(bad("one positive dimension")),
        },
        GraphFamily::SubdividedComplete => match params {
            &[n] if n >= 2 => subdivided_complete(n),
            _ => return Err(bad("a vertex count of at least 2")),
        },
    };
    emit(
        out,
        &(serde_json::to_string(&graph).map_err(Error::from)? + "\n"),
    )?;
    Ok(true)
}

fn cmd_gen_a2(chambers: bool, out: &Output) -> Outcome {
    let tp = TrianglePresentation::fano();
    let text = if chambers {
        weylflow::chamber::from_triangle_presentation(&tp)?.to_json()?
    } else {
        tp.to_json()?
    };
    emit(out, &text)?;
    Ok(true)
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Validate { input } => cmd_validate(input),
        Command::Germs { input, radius, out } => cmd_germs(input, *radius, out),
        Command::Transfer {
            input,
            radius,
            mu,
            out,
        } => cmd_transfer(input, *radius, mu, out),
        Command::Spectrum {
            input,
            spectral,
            chi,
            out,
        } => cmd_spectrum(input, spectral, chi, out),
        Command::Koszul {
            input,
            chi,
            generators,
            tol_rank,
            out,
        } => cmd_koszul(input, chi, generators.as_deref(), *tol_rank, out),
        Command::Verify {
            inputs,
            radius,
            spectral,
        } => {
            check_spectral(spectral)?;
            let names: Vec<String> = if inputs.is_empty() {
                BUNDLED.iter().map(|s| s.to_string()).collect()
            } else {
                inputs.clone()
            };
            let mut all = true;
            let mut table = verify::Table::default();
            for name in &names {
                let cs = load(name)?;
                all &= verify::run_suite(
                    name,
                    cs,
                    *radius,
                    &spectrum_config(spectral, 0),
                    &mut table,
                )?;
            }
            print!("{table}");
            println!(
                "{}",
                if all {
                    "all checks passed"
                } else {
                    "some checks FAILED"
                }
            );
            Ok(all)
        }
        Command::Ihara { input, out } => cmd_ihara(input, out),
        Command::GenGraph {
            family,
            params,
            out,
        } => cmd_gen_graph(*family, params, out),
        Command::GenA2 { chambers, out } => cmd_gen_a2(*chambers, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
