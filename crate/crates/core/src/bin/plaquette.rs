//! Command-line front end for the plaquette library.
//!
//! Subcommands:
//!
//! * `weights` prints the weight table of one family member.
//! * `apply`   applies a family member to a field file.
//! * `verify`  checks family coherence exactly and spot-checks the
//!   floating application path on random fields.
//! * `solve`   classifies the weight families satisfying the coherence
//!   equations for the systems the library has solvers for.
//! * `tower`   averages a base field through a chain of factors and
//!   writes every level.
//! * `lemma`   enumerates block decompositions of a composite offset
//!   and checks the product identity on the centered weights.
//!
//! Exit codes: 0 success (coherent, solved, identity holds); 1
//! verification failure (incoherent family, unresolved solve, failed
//! identity); 2 usage or I/O error.
//!
//! All rationals are printed as `p/q` strings. Randomized checks take
//! `--seed` (default 42) and are deterministic for a fixed seed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use plaquette::coherence::{
    admissible_pairs, check_weight_identity, enumerate_decompositions, field_level_spot_check,
    verify_family_coherence, CoherenceReport, FieldCheckReport,
};
use plaquette::continuum::{build_tower, hat_sample, SampledPolynomial};
use plaquette::engine::{apply, apply_f64};
use plaquette::field::{read_field, write_field, ScaleFraction};
use plaquette::rational::format_rat;
use plaquette::uniqueness::{
    probe_conjecture_6_2, solve_1d_factorized, solve_2d_symmetric, solve_corner, ProbeVerdict,
};
use plaquette::{Convention, FieldData, IndexBox, Scale, ScaleSet, SchemeKind, StencilFamily};

#[derive(Parser)]
#[command(
    name = "plaquette",
    version,
    about = "Coherent families of lattice averaging operators",
    after_help = "Exit codes: 0 success/coherent/solved, 1 verification failure, 2 usage or I/O error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the weight table of one family member.
    Weights(WeightsArgs),
    /// Apply a family member to a field file.
    Apply(ApplyArgs),
    /// Check that composing family members reproduces the member at the
    /// product factor, exactly and on random floating-point fields.
    Verify(VerifyArgs),
    /// Classify the weight families satisfying the coherence equations.
    Solve(SolveArgs),
    /// Average a base field through a chain of factors, writing every level.
    Tower(TowerArgs),
    /// Enumerate block decompositions of an offset, or check the
    /// centered product identity for a factor pair.
    Lemma(LemmaArgs),
}

#[derive(Args)]
struct WeightsArgs {
    /// Scheme name (bf, parity, uniform-corner, ...).
    #[arg(long)]
    family: String,
    /// Refinement factor of the member to print.
    #[arg(long)]
    d: i64,
    /// Lattice dimension.
    #[arg(long)]
    dim: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ApplyArgs {
    /// Scheme name of the averaging family.
    #[arg(long)]
    family: String,
    /// Refinement factor to average by.
    #[arg(long)]
    d: i64,
    /// Field file to read.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the averaged field.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Scheme name of the family to verify.
    #[arg(long)]
    family: String,
    /// Lattice dimension.
    #[arg(long)]
    dim: usize,
    /// Check every admissible ordered pair with both factors at most this.
    #[arg(long)]
    max_factor: i64,
    /// Seed for the randomized floating-point spot checks.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SolveArgs {
    /// Cell labelling convention of the system.
    #[arg(long, value_enum)]
    convention: ConventionArg,
    /// Lattice dimension (1, 2, or 3 for the centered probe).
    #[arg(long)]
    dim: usize,
    /// Genericity assumptions: the solver's classified gate, none, or
    /// the explicit all-weights-nonzero gate where that is the
    /// classified one.
    #[arg(long, value_enum, default_value_t = Genericity::Default)]
    generic: Genericity,
    /// Branch node budget; only the three-dimensional probe takes one.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct TowerArgs {
    /// Scheme name of the averaging family.
    #[arg(long)]
    family: String,
    /// Comma-separated refinement factors, applied in order.
    #[arg(long)]
    factors: String,
    /// Directory that receives one field file per level plus manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Rational field file to use as the base level.
    #[arg(long, conflicts_with = "poly")]
    input: Option<PathBuf>,
    /// Polynomial to sample as the base level, e.g. "x^2 + 1/4*x*y".
    #[arg(long, requires = "scale", requires = "lo", requires = "hi")]
    poly: Option<String>,
    /// Base lattice spacing as "1/n"; used with --poly.
    #[arg(long, requires = "poly")]
    scale: Option<String>,
    /// Scale set the tower runs in; used with --poly.
    #[arg(long, value_enum, default_value_t = ScaleSetArg::AllReciprocals, requires = "poly")]
    scale_set: ScaleSetArg,
    /// Comma-separated lower cell bounds of the base extent; used with --poly.
    #[arg(long, requires = "poly", allow_hyphen_values = true)]
    lo: Option<String>,
    /// Comma-separated upper cell bounds of the base extent; used with --poly.
    #[arg(long, requires = "poly", allow_hyphen_values = true)]
    hi: Option<String>,
}

#[derive(Args)]
struct LemmaArgs {
    /// Inner refinement factor.
    #[arg(long)]
    d: i64,
    /// Outer refinement factor.
    #[arg(long)]
    e: i64,
    /// Composite offset to decompose; without it the product identity
    /// on the centered weights is checked for every composite offset.
    #[arg(long, allow_negative_numbers = true)]
    offset: Option<i64>,
    /// Convention for the decomposition window; only offset
    /// enumeration takes one.
    #[arg(long, value_enum)]
    convention: Option<ConventionArg>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Centered,
    Corner,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Convention {
        match c {
            ConventionArg::Centered => Convention::Centered,
            ConventionArg::Corner => Convention::Corner,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleSetArg {
    PowersOfTwo,
    AllReciprocals,
}

impl From<ScaleSetArg> for ScaleSet {
    fn from(s: ScaleSetArg) -> ScaleSet {
        match s {
            ScaleSetArg::PowersOfTwo => ScaleSet::PowersOfTwo,
            ScaleSetArg::AllReciprocals => ScaleSet::AllReciprocals,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Genericity {
    /// The gate each classification theorem assumes.
    Default,
    /// Drop all genericity assumptions and surface every branch.
    None,
    /// Assume every weight of the factor-2 member is nonzero.
    W2AllNonzero,
}

/// Anything that should terminate with exit code 2: bad arguments past
/// clap's checks, inadmissible parameters, malformed files, I/O.
#[derive(Debug)]
struct CliError(String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Weights(args) => run_weights(args),
        Command::Apply(args) => run_apply(args),
        Command::Verify(args) => run_verify(args),
        Command::Solve(args) => run_solve(args),
        Command::Tower(args) => run_tower(args),
        Command::Lemma(args) => run_lemma(args),
    }
}

fn family_for(name: &str, dim: usize) -> Result<StencilFamily, CliError> {
    let kind: SchemeKind = name.parse()?;
    Ok(StencilFamily::new(kind, dim)?)
}

fn convention_name(c: Convention) -> &'static str {
    match c {
        Convention::Centered => "centered",
        Convention::Corner => "corner",
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    Ok(())
}

fn run_weights(args: WeightsArgs) -> Result<ExitCode, CliError> {
    let family = family_for(&args.family, args.dim)?;
    let stencil = family.stencil(args.d)?;
    match args.format {
        Format::Json => print_json(&stencil)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let mut header: Vec<String> = (0..args.dim).map(|k| format!("i{k}")).collect();
            header.push("weight".to_owned());
            w.write_record(&header)?;
            for (offset, weight) in stencil.support() {
                let mut row: Vec<String> = offset.iter().map(|c| c.to_string()).collect();
                row.push(format_rat(weight));
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_apply(args: ApplyArgs) -> Result<ExitCode, CliError> {
    let mut reader = BufReader::new(
        File::open(&args.input)
            .map_err(|e| usage(format!("cannot open {}: {e}", args.input.display())))?,
    );
    let data = read_field(&mut reader)?;
    let family = family_for(&args.family, data.extent().dim())?;
    if family.convention() != data.convention() {
        return Err(usage(format!(
            "field file uses the {} convention but scheme {} is {}",
            convention_name(data.convention()),
            args.family,
            convention_name(family.convention())
        )));
    }
    let stencil = family.stencil(args.d)?;
    let averaged = match &data {
        FieldData::Rational(f) => FieldData::Rational(apply(&stencil, f)?),
        FieldData::Real(f) => FieldData::Real(apply_f64(&stencil, f)?),
    };
    write_field_file(&args.output, &averaged)?;
    let extent = averaged.extent();
    println!(
        "averaged by d={} onto extent {:?}..{:?}, wrote {}",
        args.d,
        extent.lo(),
        extent.hi(),
        args.output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn write_field_file(path: &Path, data: &FieldData) -> Result<(), CliError> {
    let mut writer = BufWriter::new(
        File::create(path).map_err(|e| usage(format!("cannot create {}: {e}", path.display())))?,
    );
    write_field(&mut writer, data)?;
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput {
    coherence: CoherenceReport,
    seed: u64,
    spot_checks: Vec<FieldCheckReport>,
    pass: bool,
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    if args.max_factor < 1 {
        return Err(usage(format!("--max-factor must be at least 1, got {}", args.max_factor)));
    }
    if args.format == Format::Csv {
        return Err(usage("verify emits JSON only; drop --format csv"));
    }
    let family = family_for(&args.family, args.dim)?;
    let pairs = admissible_pairs(&family, 1, args.max_factor);
    let coherence = verify_family_coherence(&family, &pairs)?;

    // One floating spot check per distinct product keeps the cost
    // bounded while still exercising every composite member once.
    let mut by_product: BTreeMap<i64, (i64, i64)> = BTreeMap::new();
    for &(d, e) in &pairs {
        by_product.entry(e * d).or_insert((d, e));
    }
    let mut spot_checks = Vec::with_capacity(by_product.len());
    for (d, e) in by_product.into_values() {
        spot_checks.push(field_level_spot_check(&family, d, e, args.seed)?);
    }

    let pass = coherence.coherent() && spot_checks.iter().all(|c| c.pass);
    let output = VerifyOutput { coherence, seed: args.seed, spot_checks, pass };
    print_json(&output)?;
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("family {} is not coherent up to factor {}", family.name(), args.max_factor);
        Ok(ExitCode::FAILURE)
    }
}

fn run_solve(args: SolveArgs) -> Result<ExitCode, CliError> {
    if args.format == Format::Csv {
        return Err(usage("solve emits JSON only; drop --format csv"));
    }
    if args.budget.is_some() && !(args.dim == 3 && matches!(args.convention, ConventionArg::Centered)) {
        return Err(usage("--budget applies only to the centered three-dimensional probe"));
    }
    match (args.convention, args.dim) {
        (ConventionArg::Centered, 1) => {
            if args.generic == Genericity::W2AllNonzero {
                return Err(usage(
                    "the one-dimensional system is classified under 'off-center weight nonzero', \
                     not 'w2-all-nonzero'; use --generic default or none",
                ));
            }
            let report = solve_1d_factorized(args.generic == Genericity::Default)?;
            print_json(&report)?;
            Ok(solve_exit(report.exhaustive && report.all_verified()))
        }
        (ConventionArg::Centered, 2) => {
            // The classified gate and "all factor-2 weights nonzero"
            // coincide here: nonzero orbits mean nonzero weights.
            let report = solve_2d_symmetric(args.generic != Genericity::None)?;
            print_json(&report)?;
            Ok(solve_exit(report.exhaustive && report.all_verified()))
        }
        (ConventionArg::Corner, 2) => {
            let report = solve_corner(args.generic != Genericity::None)?;
            print_json(&report)?;
            Ok(solve_exit(report.exhaustive && report.all_verified()))
        }
        (ConventionArg::Centered, 3) => {
            if args.generic != Genericity::Default {
                return Err(usage(
                    "the three-dimensional probe fixes its own genericity assumptions; \
                     only --generic default is available",
                ));
            }
            let report = probe_conjecture_6_2(args.budget.unwrap_or(200_000))?;
            print_json(&report)?;
            Ok(solve_exit(report.verdict == ProbeVerdict::UniqueProductKernel))
        }
        (convention, dim) => Err(usage(format!(
            "no classified system for the {} convention in dimension {dim}; \
             available: centered 1, centered 2, corner 2, centered 3",
            match convention {
                ConventionArg::Centered => "centered",
                ConventionArg::Corner => "corner",
            }
        ))),
    }
}

fn solve_exit(resolved: bool) -> ExitCode {
    if resolved {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

#[derive(Serialize)]
struct TowerManifest {
    family: String,
    dimension: usize,
    convention: Convention,
    factors: Vec<i64>,
    levels: Vec<TowerManifestLevel>,
}

#[derive(Serialize)]
struct TowerManifestLevel {
    index: usize,
    factor: i64,
    cumulative_factor: i64,
    scale: ScaleFraction,
    lo: Vec<i64>,
    hi: Vec<i64>,
    cells: usize,
    path: String,
}

fn parse_i64_list(text: &str, flag: &str) -> Result<Vec<i64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|e| usage(format!("{flag} entry '{}': {e}", part.trim())))
        })
        .collect()
}

fn run_tower(args: TowerArgs) -> Result<ExitCode, CliError> {
    let factors = parse_i64_list(&args.factors, "--factors")?;
    if factors.is_empty() {
        return Err(usage("--factors needs at least one factor"));
    }

    let base = match (&args.input, &args.poly) {
        (Some(path), None) => {
            let mut reader = BufReader::new(
                File::open(path)
                    .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?,
            );
            match read_field(&mut reader)? {
                FieldData::Rational(f) => f,
                FieldData::Real(_) => {
                    return Err(usage(
                        "tower averages exactly and needs a rational field file; \
                         this one holds real values",
                    ));
                }
            }
        }
        (None, Some(text)) => {
            let lo = parse_i64_list(args.lo.as_deref().expect("clap enforces --lo"), "--lo")?;
            let hi = parse_i64_list(args.hi.as_deref().expect("clap enforces --hi"), "--hi")?;
            let extent = IndexBox::new(lo, hi)?;
            let scale_text = args.scale.as_deref().expect("clap enforces --scale");
            let value = plaquette::rational::parse_rat(scale_text)?;
            let scale = Scale::new(value, ScaleSet::from(args.scale_set))?;
            let poly = SampledPolynomial::parse(text, extent.dim())?;
            let kind: SchemeKind = args.family.parse()?;
            hat_sample(&poly, &scale, kind.convention(), &extent)?
        }
        _ => return Err(usage("tower needs a base level: either --input or --poly")),
    };

    let family = family_for(&args.family, base.dim())?;
    let tower = build_tower(base, &family, &factors)?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let mut levels = Vec::with_capacity(tower.levels().len() + 1);
    let write_level = |index: usize,
                           factor: i64,
                           cumulative: i64,
                           field: &plaquette::CellField<plaquette::Rat>|
     -> Result<TowerManifestLevel, CliError> {
        let name = format!("level_{index}.field");
        let path = args.out_dir.join(&name);
        write_field_file(&path, &FieldData::Rational(field.clone()))?;
        Ok(TowerManifestLevel {
            index,
            factor,
            cumulative_factor: cumulative,
            scale: ScaleFraction::of(field.scale()),
            lo: field.extent().lo().to_vec(),
            hi: field.extent().hi().to_vec(),
            cells: field.extent().num_cells(),
            path: name,
        })
    };
    levels.push(write_level(0, 1, 1, tower.base())?);
    for (i, level) in tower.levels().iter().enumerate() {
        levels.push(write_level(i + 1, level.factor, level.cumulative_factor, &level.field)?);
    }

    let manifest = TowerManifest {
        family: family.name().to_owned(),
        dimension: family.dim(),
        convention: family.convention(),
        factors,
        levels,
    };
    let manifest_path = args.out_dir.join("manifest.json");
    let mut writer = BufWriter::new(File::create(&manifest_path).map_err(|e| {
        usage(format!("cannot create {}: {e}", manifest_path.display()))
    })?);
    serde_json::to_writer_pretty(&mut writer, &manifest)?;
    writer.write_all(b"\n")?;
    writer.flush()?;

    print_json(&manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn run_lemma(args: LemmaArgs) -> Result<ExitCode, CliError> {
    if args.format == Format::Csv {
        return Err(usage("lemma emits JSON only; drop --format csv"));
    }
    match args.offset {
        Some(i) => {
            let convention = args.convention.map_or(Convention::Centered, Convention::from);
            let solutions = enumerate_decompositions(i, args.d, args.e, convention)?;
            print_json(&solutions)?;
            Ok(ExitCode::SUCCESS)
        }
        None => {
            if args.convention.is_some() {
                return Err(usage(
                    "the weight identity is a statement about the centered scheme; \
                     --convention applies only to --offset enumeration",
                ));
            }
            let report = check_weight_identity(args.d, args.e)?;
            let holds = report.holds();
            print_json(&report)?;
            if holds {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("weight identity fails for d={}, e={}", args.d, args.e);
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
