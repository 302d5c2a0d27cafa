//! The `qm` command line. Every subcommand is translated into a one-off
//! scenario, so all of them share the report format and exit codes:
//! 0 when every check passes, 1 when a check fails (the report is still
//! written), 2 on invalid input.

pub mod scenario;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::field::{ScalarField, NAMED_FIELDS};
use crate::finsler::{DriftSpec, StructureSpec};
use crate::isometry::FiniteBijection;
use crate::qspace::FiniteQuasiMetric;
use crate::transform::TransformSpec;
pub use scenario::{
    builtin, parse_scenario, run_scenario, Check, CheckEntry, CheckOutcome, Coord, Overrides, Report, RunOutput,
    Scenario, Table, Tolerances,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const DEFAULT_OUT: &str = "qm-out";

#[derive(Debug, Parser)]
#[command(name = "qm", version, about = "Quasi-metric spaces, semi-Lipschitz fields and almost isometries")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Tolerance of the main check (distance error for `distance`, exact
    /// residuals otherwise)
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Solver grid size per axis
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Seed for sampled triples and generated fields
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report directory; the QM_OUT environment variable takes precedence
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the quasi-metric axioms of a finite space
    Validate {
        /// Space file: {"points": [...], "d": [[...]], "t1": bool}
        #[arg(long)]
        space: PathBuf,
    },
    /// Distances of a Randers structure between pairs of points
    Distance {
        /// Structure file or preset (euclidean-line, arctan-line, euclidean-plane)
        #[arg(long, default_value = "arctan-line")]
        structure: String,
        /// Pair `x:y`; 2D points are written `a,b:c,d`
        #[arg(long = "pair", required = true)]
        pairs: Vec<String>,
        /// Improve graph paths by local search (2D)
        #[arg(long)]
        refine: bool,
    },
    /// Forward and backward slip constants of a field on a finite space
    Slip {
        #[arg(long)]
        space: PathBuf,
        /// Field values as a JSON array, or a file holding one
        #[arg(long)]
        field: String,
    },
    /// Largest dual norm of a named field over windows [-R, R] of a line
    SlipSweep {
        /// One of: arctan-potential, half-sine, tanh, gaussian, quarter-slope
        field: String,
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,50")]
        windows: Vec<f64>,
        #[arg(long)]
        structure: Option<String>,
    },
    /// Certify a bijection as an almost isometry, or enumerate all of them
    Almostiso {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Bijection as a JSON array of images, or a file holding one
        #[arg(long, conflicts_with = "enumerate")]
        map: Option<String>,
        #[arg(long)]
        enumerate: bool,
    },
    /// Apply, invert and factor a composition operator on probe fields
    Transform {
        /// Transform file: {"c": ..., "tau": [...], "phi": [...]}
        spec: PathBuf,
        /// Source space of the transformed fields
        #[arg(long, requires = "y")]
        x: Option<PathBuf>,
        /// Space the input fields live on
        #[arg(long, requires = "x")]
        y: Option<PathBuf>,
        /// Probe field (JSON array or file); repeatable
        #[arg(long = "field")]
        fields: Vec<String>,
        /// Additional seeded probe fields
        #[arg(long, default_value_t = 20)]
        random: usize,
    },
    /// Run a built-in scenario
    Reproduce {
        #[arg(value_enum)]
        name: Builtin,
    },
    /// Run a scenario file
    Run { scenario: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    RandersLine,
    Q3Shift,
    CircleCompact,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::RandersLine => "randers-line",
            Builtin::Q3Shift => "q3-shift",
            Builtin::CircleCompact => "circle-compact",
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
        }
    };
    match execute(&cli) {
        Ok(pass) => {
            if pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

/// Runs the command, writes the report and returns whether every check passed.
pub fn execute(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    if let Some(t) = g.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("--tol must be positive, got {t}")));
        }
    }
    let scenario = build_scenario(&cli.command, g)?;
    let overrides = Overrides {
        tol: if matches!(cli.command, Command::Distance { .. }) { None } else { g.tol },
        grid: g.grid,
        seed: g.seed,
    };
    let output = match g.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("--threads: {e}")))?
            .install(|| run_scenario(&scenario, overrides))?,
        None => run_scenario(&scenario, overrides)?,
    };
    let out_dir = std::env::var_os("QM_OUT").map(PathBuf::from).or_else(|| g.out.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
    write_outputs(&out_dir, &output, g.format)?;
    print!("{}", render(&output, g.format)?);
    Ok(output.report.pass)
}

/// Writes `<scenario>.json` and, for CSV output, one `<scenario>-<table>.csv` per table.
pub fn write_outputs(dir: &Path, output: &RunOutput, format: Format) -> Result<()> {
    fs::create_dir_all(dir)?;
    let name = &output.report.scenario;
    fs::write(dir.join(format!("{name}.json")), report_json(&output.report)?)?;
    if format == Format::Csv {
        for t in &output.tables {
            fs::write(dir.join(format!("{name}-{}.csv", t.name)), t.to_csv())?;
        }
    }
    Ok(())
}

pub fn report_json(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Stdout rendering: the JSON report, or the CSV tables (a per-check
/// summary when the run produced none).
pub fn render(output: &RunOutput, format: Format) -> Result<String> {
    match format {
        Format::Json => report_json(&output.report),
        Format::Csv if output.tables.is_empty() => {
            let mut s = String::from("kind,name,pass\n");
            for c in &output.report.checks {
                s.push_str(&format!("{},{},{}\n", c.kind, c.name, c.pass));
            }
            Ok(s)
        }
        Format::Csv => Ok(output.tables.iter().map(Table::to_csv).collect::<Vec<_>>().join("\n")),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidScenario(format!("{}: {e}", path.display())))
}

/// Inline JSON when the argument starts with `[` or `{`, a file otherwise.
fn inline_or_file<T: DeserializeOwned>(arg: &str) -> Result<T> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        serde_json::from_str(trimmed).map_err(|e| Error::InvalidArgument(format!("{arg}: {e}")))
    } else {
        read_json(Path::new(arg))
    }
}

/// Preset structure by name, or a structure file.
pub fn structure_arg(arg: &str) -> Result<StructureSpec> {
    let preset = |dim, drift| StructureSpec { dim, domain: None, base: None, drift };
    match arg {
        "euclidean-line" => Ok(preset(1, DriftSpec::Zero)),
        "arctan-line" => Ok(preset(1, DriftSpec::ArctanPotential)),
        "euclidean-plane" => Ok(preset(2, DriftSpec::Zero)),
        _ => read_json(Path::new(arg)),
    }
}

fn parse_coord(s: &str) -> Result<Coord> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("not a number: '{p}'")));
    match parts.as_slice() {
        [x] => Ok(Coord::Scalar(num(x)?)),
        [a, b] => Ok(Coord::Pair([num(a)?, num(b)?])),
        _ => Err(Error::InvalidArgument(format!("point '{s}' must have 1 or 2 coordinates"))),
    }
}

/// `x:y` with points `a` or `a,b`.
pub fn parse_pair(s: &str) -> Result<(Coord, Coord)> {
    let (a, b) = s.split_once(':').ok_or_else(|| Error::InvalidArgument(format!("pair '{s}' must be written x:y")))?;
    Ok((parse_coord(a)?, parse_coord(b)?))
}

fn single(name: &str, check: Check) -> Scenario {
    Scenario {
        schema: scenario::SCHEMA_VERSION,
        name: name.to_string(),
        seed: 0,
        tolerances: Tolerances::default(),
        spaces: BTreeMap::new(),
        structures: BTreeMap::new(),
        fields: BTreeMap::new(),
        maps: BTreeMap::new(),
        transforms: BTreeMap::new(),
        checks: vec![CheckEntry { name: Some(name.to_string()), check }],
    }
}

fn build_scenario(command: &Command, g: &GlobalOpts) -> Result<Scenario> {
    Ok(match command {
        Command::Validate { space } => {
            let mut s = single("validate", Check::Validate { space: "space".into(), expect_valid: None });
            s.spaces.insert("space".into(), read_json::<FiniteQuasiMetric>(space)?);
            s
        }
        Command::Distance { structure, pairs, refine } => {
            let pairs = pairs.iter().map(|p| parse_pair(p)).collect::<Result<Vec<_>>>()?;
            let check = Check::Distance { structure: "structure".into(), pairs, grid: None, refine: *refine, tol: g.tol };
            let mut s = single("distance", check);
            s.structures.insert("structure".into(), structure_arg(structure)?);
            s
        }
        Command::Slip { space, field } => {
            let check = Check::Slip { space: "space".into(), field: "field".into(), expect_forward: None, expect_backward: None };
            let mut s = single("slip", check);
            s.spaces.insert("space".into(), read_json::<FiniteQuasiMetric>(space)?);
            s.fields.insert("field".into(), inline_or_file::<ScalarField>(field)?);
            s
        }
        Command::SlipSweep { field, windows, structure } => {
            if !NAMED_FIELDS.contains(&field.as_str()) {
                return Err(Error::InvalidArgument(format!("unknown field '{field}'; known: {}", NAMED_FIELDS.join(", "))));
            }
            let check = Check::SlipSweep {
                structure: structure.as_ref().map(|_| "structure".to_string()),
                field: field.clone(),
                windows: windows.clone(),
                grid: 2001,
                expect_limit: None,
            };
            let mut s = single("slip-sweep", check);
            if let Some(st) = structure {
                s.structures.insert("structure".into(), structure_arg(st)?);
            }
            s
        }
        Command::Almostiso { x, y, map, enumerate } => {
            let check = if *enumerate {
                Check::Enumerate { x: "x".into(), y: "y".into(), expect_count: None, expect_identity: false, expect_constant_phi: false }
            } else {
                Check::Certify {
                    x: "x".into(),
                    y: "y".into(),
                    map: map.as_ref().map(|_| "map".to_string()),
                    expect: None,
                    expect_strict: None,
                    base_points: Vec::new(),
                }
            };
            let mut s = single("almostiso", check);
            s.spaces.insert("x".into(), read_json::<FiniteQuasiMetric>(x)?);
            s.spaces.insert("y".into(), read_json::<FiniteQuasiMetric>(y)?);
            if let Some(m) = map {
                s.maps.insert("map".into(), inline_or_file::<FiniteBijection>(m)?);
            }
            s
        }
        Command::Transform { spec, x, y, fields, random } => {
            let names: Vec<String> = (0..fields.len()).map(|i| format!("field-{i}")).collect();
            let check = Check::Transform {
                transform: "t".into(),
                x: x.as_ref().map(|_| "x".to_string()),
                y: y.as_ref().map(|_| "y".to_string()),
                fields: names.clone(),
                random_fields: *random,
                lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            };
            let mut s = single("transform", check);
            s.transforms.insert("t".into(), read_json::<TransformSpec>(spec)?);
            if let (Some(x), Some(y)) = (x, y) {
                s.spaces.insert("x".into(), read_json::<FiniteQuasiMetric>(x)?);
                s.spaces.insert("y".into(), read_json::<FiniteQuasiMetric>(y)?);
            }
            for (name, f) in names.into_iter().zip(fields) {
                s.fields.insert(name, inline_or_file::<ScalarField>(f)?);
            }
            s
        }
        Command::Reproduce { name } => {
            parse_scenario(builtin(name.name()).expect("every variant names a built-in scenario"))?
        }
        Command::Run { scenario } => {
            let text = fs::read_to_string(scenario).map_err(|e| Error::Io(format!("{}: {e}", scenario.display())))?;
            parse_scenario(&text)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_parse_in_one_and_two_dimensions() {
        assert_eq!(parse_pair("0:1").unwrap(), (Coord::Scalar(0.0), Coord::Scalar(1.0)));
        assert_eq!(parse_pair("0,1:2,-1").unwrap(), (Coord::Pair([0.0, 1.0]), Coord::Pair([2.0, -1.0])));
        assert!(parse_pair("0-1").is_err());
        assert!(parse_pair("a:1").is_err());
    }

    #[test]
    fn presets_resolve() {
        for p in ["euclidean-line", "arctan-line", "euclidean-plane"] {
            structure_arg(p).unwrap().build().unwrap();
        }
    }

    #[test]
    fn bad_arguments_are_rejected() {
        assert!(Cli::try_parse_from(["qm", "frobnicate"]).unwrap_err().use_stderr());
        let cli = Cli::try_parse_from(["qm", "validate", "--space", "/nonexistent/space.json"]).unwrap();
        assert!(matches!(execute(&cli), Err(Error::Io(_))));
    }
}
