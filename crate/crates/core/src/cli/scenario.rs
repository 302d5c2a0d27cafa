//! Scenario files: named spaces, structures, fields, maps and transforms
//! followed by a list of checks. Running a scenario yields one report entry
//! per check plus optional CSV tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{named_field, Grid1, GridField, ScalarField};
use crate::finsler::{
    field_slip_sup, finsler_distance_with, line_oracle, smooth_slip_approx, Domain, FinslerMetric, RandersStructure,
    SolverOptions, StructureSpec,
};
use crate::gen;
use crate::geom::Point;
use crate::isometry::{
    certify_almost_isometry, compact_strictness_scan, enumerate_almost_isometries, randers_line_certification,
    recover_phi, sandwich_check, Certification, FiniteBijection,
};
use crate::qspace::{derive, shift_quasimetric, validate_axioms, DeriveMode, FiniteQuasiMetric};
use crate::slip::{lattice_combine, slip_const, LatticeMode};
use crate::transform::{
    annotation_gap, constants_action_check, order_affinity_check, slip_preservation_probe, transform_apply,
    transform_factor, transform_invert, well_posedness_check, TransformSpec,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Built-in scenarios, by name.
pub const BUILTIN: [(&str, &str); 3] = [
    ("randers-line", include_str!("scenarios/randers-line.json")),
    ("q3-shift", include_str!("scenarios/q3-shift.json")),
    ("circle-compact", include_str!("scenarios/circle-compact.json")),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Exact finite checks: triangular residuals, round trips, recovered potentials.
    pub finite: f64,
    /// Checks on distances sampled from a continuum.
    pub continuum: f64,
    /// Absolute error of a computed distance against its closed form.
    pub distance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { finite: 1e-9, continuum: 5e-3, distance: 1e-3 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub spaces: BTreeMap<String, FiniteQuasiMetric>,
    #[serde(default)]
    pub structures: BTreeMap<String, StructureSpec>,
    #[serde(default)]
    pub fields: BTreeMap<String, ScalarField>,
    #[serde(default)]
    pub maps: BTreeMap<String, FiniteBijection>,
    #[serde(default)]
    pub transforms: BTreeMap<String, TransformSpec>,
    pub checks: Vec<CheckEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CheckEntry {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub check: Check,
}

/// A point of a 1D or 2D structure: `0.5` or `[0.5, 1.0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Scalar(f64),
    Pair([f64; 2]),
}

impl Coord {
    pub fn point(self) -> Point {
        match self {
            Coord::Scalar(x) => [x, 0.0],
            Coord::Pair(p) => p,
        }
    }

    fn label(self) -> String {
        match self {
            Coord::Scalar(x) => format!("{x}"),
            Coord::Pair([a, b]) => format!("{a} {b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

/// Piecewise-linear field on a uniform grid of `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFieldSpec {
    pub min: f64,
    pub max: f64,
    pub values: Vec<f64>,
}

impl GridFieldSpec {
    pub fn build(&self) -> Result<GridField> {
        GridField::new(Grid1::new(self.min, self.max, self.values.len())?, self.values.clone())
    }
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_rotation() -> f64 {
    0.5
}

fn default_samples() -> usize {
    64
}

fn default_sweep_grid() -> usize {
    2001
}

fn default_bound() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Check {
    /// Axiom validation; passes when the verdict equals `expect_valid` (default true).
    Validate { space: String, expect_valid: Option<bool> },
    /// Registers the reverse or symmetrized space under `as`.
    Derive {
        space: String,
        mode: DeriveMode,
        #[serde(rename = "as")]
        target: String,
    },
    /// Registers `d + φ(x) - φ(y)` under `as`.
    Shift {
        space: String,
        phi: String,
        #[serde(rename = "as")]
        target: String,
    },
    Slip { space: String, field: String, expect_forward: Option<f64>, expect_backward: Option<f64> },
    /// Joins, meets and convex combinations of seeded fields in the ball of radius `bound`.
    Lattice {
        space: String,
        count: usize,
        #[serde(default = "default_bound")]
        bound: f64,
    },
    Certify {
        x: String,
        y: String,
        map: Option<String>,
        expect: Option<Verdict>,
        expect_strict: Option<bool>,
        #[serde(default)]
        base_points: Vec<usize>,
    },
    Enumerate {
        x: String,
        y: String,
        expect_count: Option<usize>,
        #[serde(default)]
        expect_identity: bool,
        #[serde(default)]
        expect_constant_phi: bool,
    },
    Transform {
        transform: String,
        x: Option<String>,
        y: Option<String>,
        #[serde(default)]
        fields: Vec<String>,
        #[serde(default)]
        random_fields: usize,
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
    },
    Distance {
        structure: String,
        pairs: Vec<(Coord, Coord)>,
        grid: Option<usize>,
        #[serde(default)]
        refine: bool,
        tol: Option<f64>,
    },
    /// `max ‖df|` of a named field over the windows `[-R, R]`.
    SlipSweep {
        structure: Option<String>,
        field: String,
        windows: Vec<f64>,
        #[serde(default = "default_sweep_grid")]
        grid: usize,
        expect_limit: Option<f64>,
    },
    RandersCertify {
        window: f64,
        samples: usize,
        grid: Option<usize>,
    },
    CompactScan {
        amplitudes: Vec<f64>,
        #[serde(default = "default_rotation")]
        rotation: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        grid: Option<usize>,
    },
    Smooth {
        structure: Option<String>,
        field: GridFieldSpec,
        eps: f64,
        r: f64,
    },
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::Validate { .. } => "validate",
            Check::Derive { .. } => "derive",
            Check::Shift { .. } => "shift",
            Check::Slip { .. } => "slip",
            Check::Lattice { .. } => "lattice",
            Check::Certify { .. } => "certify",
            Check::Enumerate { .. } => "enumerate",
            Check::Transform { .. } => "transform",
            Check::Distance { .. } => "distance",
            Check::SlipSweep { .. } => "slip-sweep",
            Check::RandersCertify { .. } => "randers-certify",
            Check::CompactScan { .. } => "compact-scan",
            Check::Smooth { .. } => "smooth",
        }
    }
}

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    /// Replaces the finite tolerance.
    pub tol: Option<f64>,
    /// Replaces every solver grid size.
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub kind: String,
    pub name: String,
    pub pass: bool,
    pub details: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckOutcome>,
    pub pass: bool,
}

/// A CSV table produced by a check.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<Table>,
}

/// Parses a scenario and checks its schema version.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text)?;
    if scenario.schema != SCHEMA_VERSION {
        return Err(Error::InvalidScenario(format!(
            "unsupported schema {} (expected {SCHEMA_VERSION})",
            scenario.schema
        )));
    }
    Ok(scenario)
}

/// Runs every check in order. Unknown names and malformed references are
/// errors; failures inside a check become a failed report entry.
pub fn run_scenario(scenario: &Scenario, overrides: Overrides) -> Result<RunOutput> {
    let mut tol = scenario.tolerances;
    if let Some(t) = overrides.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {t}")));
        }
        tol.finite = t;
    }
    let seed = overrides.seed.unwrap_or(scenario.seed);
    let mut ctx = Context {
        spaces: scenario.spaces.clone(),
        structures: BTreeMap::new(),
        scenario,
        tol,
        seed,
        grid: overrides.grid,
        tables: Vec::new(),
    };
    for (name, spec) in &scenario.structures {
        let built = spec.build().map_err(|e| Error::InvalidScenario(format!("structure {name}: {e}")))?;
        ctx.structures.insert(name.clone(), built);
    }
    let mut checks = Vec::with_capacity(scenario.checks.len());
    for (index, entry) in scenario.checks.iter().enumerate() {
        let kind = entry.check.kind();
        let name = entry.name.clone().unwrap_or_else(|| format!("{kind}-{index}"));
        let (pass, details) = match ctx.run(&name, &entry.check) {
            Ok(r) => r,
            Err(e @ Error::InvalidScenario(_)) => return Err(e),
            Err(e) => (false, json!({ "error": e.to_string() })),
        };
        checks.push(CheckOutcome { kind: kind.to_string(), name, pass, details });
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = Report { schema: SCHEMA_VERSION, scenario: scenario.name.clone(), seed, tolerances: tol, checks, pass };
    Ok(RunOutput { report, tables: ctx.tables })
}

struct Context<'a> {
    scenario: &'a Scenario,
    spaces: BTreeMap<String, FiniteQuasiMetric>,
    structures: BTreeMap<String, RandersStructure>,
    tol: Tolerances,
    seed: u64,
    grid: Option<usize>,
    tables: Vec<Table>,
}

fn missing(what: &str, name: &str) -> Error {
    Error::InvalidScenario(format!("unknown {what} '{name}'"))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl Context<'_> {
    fn space(&self, name: &str) -> Result<&FiniteQuasiMetric> {
        self.spaces.get(name).ok_or_else(|| missing("space", name))
    }

    fn field(&self, name: &str) -> Result<&ScalarField> {
        self.scenario.fields.get(name).ok_or_else(|| missing("field", name))
    }

    fn structure(&self, name: Option<&str>) -> Result<RandersStructure> {
        match name {
            None => Ok(RandersStructure::euclidean_line()),
            Some(n) => self.structures.get(n).cloned().ok_or_else(|| missing("structure", n)),
        }
    }

    fn map(&self, name: Option<&str>, n: usize) -> Result<FiniteBijection> {
        match name {
            None => Ok(FiniteBijection::identity(n)),
            Some(m) => self.scenario.maps.get(m).cloned().ok_or_else(|| missing("map", m)),
        }
    }

    fn solver(&self, grid: Option<usize>) -> SolverOptions {
        SolverOptions { grid_n: self.grid.or(grid), ..SolverOptions::default() }
    }

    fn run(&mut self, name: &str, check: &Check) -> Result<(bool, Value)> {
        let tol = self.tol;
        match check {
            Check::Validate { space, expect_valid } => {
                let report = validate_axioms(self.space(space)?);
                let messages: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
                let valid = report.is_valid();
                let details = json!({ "valid": valid, "violations": to_value(&report.violations), "messages": messages });
                Ok((valid == expect_valid.unwrap_or(true), details))
            }
            Check::Derive { space, mode, target } => {
                let derived = derive(self.space(space)?, *mode)?;
                let details = json!({ "as": target, "d": derived.matrix() });
                self.spaces.insert(target.clone(), derived);
                Ok((true, details))
            }
            Check::Shift { space, phi, target } => {
                let shifted = shift_quasimetric(self.space(space)?, self.field(phi)?)?;
                let valid = validate_axioms(&shifted).is_valid();
                let details = json!({ "as": target, "d": shifted.matrix(), "t1": shifted.t1_required(), "valid": valid });
                self.spaces.insert(target.clone(), shifted);
                Ok((true, details))
            }
            Check::Slip { space, field, expect_forward, expect_backward } => {
                let k = slip_const(self.field(field)?, self.space(space)?)?;
                let ok = |got: f64, want: Option<f64>| want.is_none_or(|w| (got - w).abs() <= tol.finite);
                let pass = ok(k.forward, *expect_forward) && ok(k.backward, *expect_backward);
                Ok((pass, to_value(&k)))
            }
            Check::Lattice { space, count, bound } => {
                let d = self.space(space)?.clone();
                let mut rng = gen::rng(self.seed);
                let mut worst: f64 = 0.0;
                for _ in 0..*count {
                    let f = gen::slip_field(&mut rng, &d, *bound);
                    let g = gen::slip_field(&mut rng, &d, *bound);
                    for mode in [LatticeMode::Join, LatticeMode::Meet, LatticeMode::Convex(0.5)] {
                        worst = worst.max(slip_const(&lattice_combine(&f, &g, mode)?, &d)?.forward);
                    }
                }
                Ok((worst <= bound + tol.finite, json!({ "pairs": count, "bound": bound, "max_const": worst })))
            }
            Check::Certify { x, y, map, expect, expect_strict, base_points } => {
                let (dx, dy) = (self.space(x)?, self.space(y)?);
                let tau = self.map(map.as_deref(), dx.len())?;
                let cert = certify_almost_isometry(&tau, dx, dy, tol.finite)?;
                let mut pass = cert.is_accepted() == (expect.unwrap_or(Verdict::Accepted) == Verdict::Accepted);
                let mut details = json!({ "certification": to_value(&cert) });
                if let Certification::Accepted(c) = &cert {
                    if let Some(s) = expect_strict {
                        pass &= c.strict == *s;
                    }
                    let alpha = c.phi_forward_const.max(c.psi_forward_const);
                    let sandwich = sandwich_check(&tau, dx, dy, alpha)?;
                    pass &= sandwich.verdict == c.strict;
                    let mut spread: f64 = 0.0;
                    for &x0 in base_points {
                        let phi = recover_phi(&tau, dx, dy, x0)?;
                        let shift = phi.get(c.base_point);
                        let aligned = phi.map(|v| v - shift);
                        spread = spread.max(aligned.max_abs_diff(&ScalarField::new(c.phi.clone())));
                    }
                    pass &= spread <= tol.finite;
                    details["sandwich"] = to_value(&sandwich);
                    details["base_point_spread"] = json!(spread);
                }
                Ok((pass, details))
            }
            Check::Enumerate { x, y, expect_count, expect_identity, expect_constant_phi } => {
                let certs = enumerate_almost_isometries(self.space(x)?, self.space(y)?, tol.finite)?;
                let has_identity = certs.iter().any(|c| c.tau.is_identity());
                let max_spread = certs.iter().map(|c| c.phi_spread()).fold(0.0, f64::max);
                let mut pass = expect_count.is_none_or(|n| certs.len() == n);
                pass &= !expect_identity || has_identity;
                pass &= !expect_constant_phi || max_spread <= tol.finite;
                let maps: Vec<&[usize]> = certs.iter().map(|c| c.tau.image()).collect();
                Ok((pass, json!({ "count": certs.len(), "maps": maps, "max_phi_spread": max_spread })))
            }
            Check::Transform { transform, x, y, fields, random_fields, lambdas } => {
                let t = self.scenario.transforms.get(transform).ok_or_else(|| missing("transform", transform))?;
                self.transform_check(t, x.as_deref(), y.as_deref(), fields, *random_fields, lambdas)
            }
            Check::Distance { structure, pairs, grid, refine, tol: dist_tol } => {
                let metric = self.structure(Some(structure))?;
                let opts = self.solver(*grid).with_refine(*refine);
                let limit = dist_tol.unwrap_or(tol.distance);
                let mut rows = Vec::new();
                let mut worst: f64 = 0.0;
                let mut compared = 0;
                for &(a, b) in pairs {
                    let est = finsler_distance_with(&metric, a.point(), b.point(), &opts)?;
                    let oracle = distance_oracle(&metric, a.point(), b.point()).transpose()?;
                    let err = oracle.map(|o| (est.estimate - o).abs());
                    if let Some(e) = err {
                        worst = worst.max(e);
                        compared += 1;
                    }
                    let cell = |v: Option<f64>| v.map(|v| format!("{v:.12}")).unwrap_or_default();
                    rows.push(vec![a.label(), b.label(), format!("{:.12}", est.estimate), cell(oracle), cell(err)]);
                }
                self.tables.push(Table {
                    name: name.to_string(),
                    header: ["x", "y", "estimate", "oracle", "abs_error"].map(String::from).to_vec(),
                    rows,
                });
                let details = json!({ "pairs": pairs.len(), "compared": compared, "max_abs_error": worst, "tol": limit });
                Ok((worst <= limit, details))
            }
            Check::SlipSweep { structure, field, windows, grid, expect_limit } => {
                let metric = self.structure(structure.as_deref())?;
                let f = named_field(field).ok_or_else(|| missing("named field", field))?;
                let grid = self.grid.unwrap_or(*grid);
                let mut values = Vec::with_capacity(windows.len());
                for &r in windows {
                    values.push(field_slip_sup(&metric, &f, Some(&Domain::interval(-r, r)), grid)?.value);
                }
                let monotone = values.windows(2).all(|w| w[1] >= w[0]);
                // closed form for `x - atan x` on the Euclidean line
                let closed: Option<Vec<f64>> = (field == "arctan-potential" && structure.is_none())
                    .then(|| windows.iter().map(|r| r * r / (1.0 + r * r)).collect());
                let closed_error = closed.as_ref().map(|c| {
                    c.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                });
                let last = values.last().copied().unwrap_or(0.0);
                let mut pass = monotone && closed_error.is_none_or(|e| e <= tol.finite);
                pass &= expect_limit.is_none_or(|l| last > l);
                let details = json!({
                    "windows": windows,
                    "values": values,
                    "closed_form": closed,
                    "closed_form_error": closed_error,
                    "monotone": monotone,
                    "strict_on_every_window": values.iter().all(|&v| v < 1.0),
                    "gap_to_one": 1.0 - last,
                });
                Ok((pass, details))
            }
            Check::RandersCertify { window, samples, grid } => {
                let report = randers_line_certification(*window, *samples, &self.solver(*grid), tol.continuum, self.seed)?;
                let pass = report.certification.certificate().is_some_and(|c| c.phi_forward_const < 1.0);
                Ok((pass, json!({
                    "window": window,
                    "samples": samples,
                    "certification": to_value(&report.certification),
                    "phi_derivative_sup": report.phi_derivative_sup,
                })))
            }
            Check::CompactScan { amplitudes, rotation, samples, grid } => {
                let opts = self.solver(*grid);
                let mut scans = Vec::new();
                let mut pass = true;
                for &a in amplitudes {
                    let s = compact_strictness_scan(a, *rotation, *samples, &opts, tol.continuum, self.seed)?;
                    pass &= s.accepted && s.margin >= s.expected_margin - tol.continuum && s.strict == (a.abs() < 1.0);
                    scans.push(s);
                }
                Ok((pass, json!({ "scans": to_value(&scans) })))
            }
            Check::Smooth { structure, field, eps, r } => {
                let metric = self.structure(structure.as_deref())?;
                let res = smooth_slip_approx(&metric, &field.build()?, *eps, *r)?;
                let summary = res.summary();
                Ok((summary.bound_i && summary.bound_ii, to_value(&summary)))
            }
        }
    }

    fn transform_check(
        &self,
        t: &TransformSpec,
        x: Option<&str>,
        y: Option<&str>,
        fields: &[String],
        random_fields: usize,
        lambdas: &[f64],
    ) -> Result<(bool, Value)> {
        let exact = self.tol.finite;
        let n = t.len();
        let mut rng = gen::rng(self.seed);
        let spaces = match (x, y) {
            (Some(x), Some(y)) => Some((self.space(x)?, self.space(y)?)),
            (None, None) => None,
            _ => return Err(Error::InvalidScenario("transform check needs both x and y or neither".into())),
        };
        let mut probes: Vec<ScalarField> = fields.iter().map(|f| self.field(f).cloned()).collect::<Result<_>>()?;
        for _ in 0..random_fields {
            probes.push(match spaces {
                Some((_, dy)) => gen::slip_field(&mut rng, dy, 1.0),
                None => gen::random_field(&mut rng, n),
            });
        }
        for f in &probes {
            f.expect_len(n)?;
        }
        let inverse = transform_invert(t);
        let factors = transform_factor(t);
        let mut round_trip: f64 = 0.0;
        let mut factor_gap: f64 = 0.0;
        for f in &probes {
            let tf = transform_apply(t, f)?;
            round_trip = round_trip.max(transform_apply(&inverse, &tf)?.max_abs_diff(f));
            factor_gap = factor_gap.max(factors.apply(f)?.max_abs_diff(&tf));
        }
        let pairs: Vec<(ScalarField, ScalarField)> = probes
            .windows(2)
            .map(|w| Ok((w[0].zip_with(&w[1], f64::min)?, w[0].clone())))
            .collect::<Result<_>>()?;
        let order = order_affinity_check(t, &pairs, lambdas)?;
        let constants = constants_action_check(t, lambdas)?;
        let mut pass = round_trip <= exact && factor_gap <= exact && order.pass && constants.pass;
        let mut details = json!({
            "fields": probes.len(),
            "round_trip_error": round_trip,
            "factorization_error": factor_gap,
            "order_affinity": { "max_residual": order.max_residual, "order_ok": order.order_ok, "pass": order.pass },
            "constants": to_value(&constants),
            "factors": to_value(&factors.factors),
        });
        if let Some((dx, dy)) = spaces {
            let gap = annotation_gap(t, dx, dy)?;
            let preservation = slip_preservation_probe(t, dx, dy, &probes)?;
            pass &= gap <= exact && preservation.consistent;
            details["annotation_gap"] = json!(gap);
            details["preservation"] = to_value(&preservation);
            if t.c() == 1.0 {
                let wp = well_posedness_check(t, dx, dy, &probes)?;
                pass &= wp.pass;
                details["well_posedness"] = json!({ "t0_const": wp.t0_const, "entries": wp.entries.len(), "pass": wp.pass });
            }
        }
        Ok((pass, details))
    }
}

/// Closed-form distance where one is known: Euclidean-based lines and
/// translation-invariant plane structures, whose straight segments are
/// shortest.
pub fn distance_oracle(metric: &RandersStructure, x: Point, y: Point) -> Option<Result<f64>> {
    match metric.domain() {
        Domain::Line { .. } => line_oracle(metric, x[0], y[0]),
        Domain::Plane { .. } if metric.is_translation_invariant() => Some(Ok(metric.eval(x, [y[0] - x[0], y[1] - x[1]]))),
        _ => None,
    }
}
