//! Run configuration, the staged pipeline for one family, and the report
//! with its JSON and CSV artifacts.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binpoly::{build_group, choose_modulus, conjugacy_classes, FiniteMatrixGroup, GroupSpec};
use crate::chartab::{canonicalize, character_table, mckay_graph, CharacterTable, McKayGraphData, TensorMultiplicities};
use crate::check::{all_passed, Check};
use crate::dquiver::{DimVector, EnumerationCaps, SimplyLacedGraph, DEFAULT_GROUP_CAP, DEFAULT_VARIETY_CAP};
use crate::error::{Error, Result};
use crate::ffla::{rational_to_string, PrimeField};
use crate::hall::{serre_check, EulerConstantRecord, HallAlgebra, PrimeSchedule};
use crate::kacmoody::{dims_compare, DimsReport};
use crate::kleinian::{tor_suite, PointKind, PointRole, TorConfig};

pub const TOOL_NAME: &str = "mckayhall";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the CSV column layout.
pub const CSV_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Group,
    Mckay,
    Tor,
    Serre,
    Dims,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Group, Stage::Mckay, Stage::Tor, Stage::Serre, Stage::Dims];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Group => "group",
            Stage::Mckay => "mckay",
            Stage::Tor => "tor",
            Stage::Serre => "serre",
            Stage::Dims => "dims",
        }
    }

    /// Stages that need a graph without multiple edges.
    pub fn needs_simple_graph(&self) -> bool {
        matches!(self, Stage::Tor | Stage::Serre | Stage::Dims)
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown check '{s}' (expected group, mckay, tor, serre, dims or all)")))
    }
}

/// Parse `all` or a comma-separated list of stages.
pub fn parse_checks(s: &str) -> Result<Vec<Stage>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Stage::ALL.to_vec());
    }
    let set: BTreeSet<Stage> = s.split(',').filter(|t| !t.trim().is_empty()).map(Stage::from_str).collect::<Result<_>>()?;
    if set.is_empty() {
        return Err(Error::Config("empty check list".into()));
    }
    Ok(set.into_iter().collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Safety bound for computing the invariant ideal; `2|G|` when absent.
    pub poly_degree: Option<usize>,
    /// Largest total degree for Hall products.
    pub hall_degree: u32,
    /// Largest total degree for the Serre-presented positive part.
    pub positive_degree: u32,
    pub variety: u64,
    pub group: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            poly_degree: None,
            hall_degree: 3,
            positive_degree: 4,
            variety: DEFAULT_VARIETY_CAP,
            group: DEFAULT_GROUP_CAP,
        }
    }
}

impl Caps {
    /// Apply `key=value` overrides separated by commas.
    pub fn apply(&mut self, spec: &str) -> Result<()> {
        for item in spec.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("cap '{item}' is not key=value")))?;
            let bad = || Error::Config(format!("cap '{item}' has a bad value"));
            match k.trim() {
                "poly" | "poly_degree" => self.poly_degree = Some(v.trim().parse().map_err(|_| bad())?),
                "hall" | "hall_degree" => self.hall_degree = v.trim().parse().map_err(|_| bad())?,
                "positive" | "positive_degree" => self.positive_degree = v.trim().parse().map_err(|_| bad())?,
                "variety" => self.variety = v.trim().parse().map_err(|_| bad())?,
                "group" => self.group = v.trim().parse().map_err(|_| bad())?,
                other => return Err(Error::Config(format!("unknown cap '{other}'"))),
            }
        }
        Ok(())
    }

    fn enumeration(&self) -> EnumerationCaps {
        EnumerationCaps {
            variety: self.variety,
            group: self.group,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: String,
    pub modulus: Option<u32>,
    pub hall_primes: Vec<u32>,
    pub held_out: u32,
    pub caps: Caps,
    /// Explicit Tor pencil parameters `(λ, μ)`; empty means automatic.
    pub tor_samples: Vec<(u32, u32)>,
    pub tor_sample_count: usize,
    pub seed: u64,
    pub checks: Vec<Stage>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: String::new(),
            modulus: None,
            hall_primes: vec![2, 3, 5],
            held_out: 7,
            caps: Caps::default(),
            tor_samples: Vec::new(),
            tor_sample_count: 3,
            seed: 1,
            checks: Stage::ALL.to_vec(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn spec(&self) -> Result<GroupSpec> {
        if self.family.trim().is_empty() {
            return Err(Error::Config("no family given".into()));
        }
        GroupSpec::from_str(&self.family).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn schedule(&self) -> PrimeSchedule {
        PrimeSchedule {
            primes: self.hall_primes.clone(),
            held_out: self.held_out,
            ..PrimeSchedule::default()
        }
    }

    pub fn has(&self, s: Stage) -> bool {
        self.checks.contains(&s)
    }

    /// Every usage error detectable before any computation.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        if spec.order() <= 2 && self.checks.iter().any(Stage::needs_simple_graph) {
            return Err(Error::Config(format!(
                "{} has order 2: its McKay graph is affine A1 with a double edge, and graphs with multiple edges are excluded from the Tor, Serre and dimension stages",
                spec.label()
            )));
        }
        if let Some(p) = self.modulus {
            if !spec.admits_modulus(p) {
                return Err(Error::Config(format!("modulus {p} is not admissible for {}", spec.label())));
            }
        }
        if self.checks.is_empty() {
            return Err(Error::Config("no checks selected".into()));
        }
        self.schedule().validate()?;
        let c = &self.caps;
        if c.hall_degree == 0 || c.positive_degree == 0 || c.variety == 0 || c.group == 0 || c.poly_degree == Some(0) {
            return Err(Error::Config("caps must be positive".into()));
        }
        if let Some(d) = c.poly_degree {
            if d < 2 * spec.order() as usize {
                return Err(Error::Config(format!("poly degree cap {d} is below 2|G| = {}", 2 * spec.order())));
            }
        }
        if self.tor_sample_count == 0 {
            return Err(Error::Config("tor_sample_count must be positive".into()));
        }
        if self.tor_samples.iter().any(|&(l, m)| l == 0 && m == 0) {
            return Err(Error::Config("tor sample (0:0) is not a projective point".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupReport {
    pub family: String,
    pub order: usize,
    pub modulus: u32,
    pub exponent: u32,
    pub class_count: usize,
    pub class_sizes: Vec<usize>,
    /// Trace of the defining representation on each class representative.
    pub representative_traces: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterTableReport {
    pub modulus: u32,
    pub seed: u64,
    pub degrees: Vec<u32>,
    pub trivial: usize,
    pub defining: Option<usize>,
    /// `values[chi][class]` mod p.
    pub values: Vec<Vec<u32>>,
    pub multiplicities: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorReportRow {
    pub pi: usize,
    pub role: PointRole,
    pub rho: Option<usize>,
    pub lambda_mu: Vec<(u32, u32)>,
    pub generators: Vec<String>,
    pub quotient_dim: usize,
    pub regular: bool,
    pub dims: Option<[usize; 3]>,
    pub multiplicities: Option<[Vec<u32>; 3]>,
    /// `false` for rows that are reported without being asserted.
    pub asserted: bool,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TorReport {
    pub generators: Vec<String>,
    pub hilbert_function: Vec<usize>,
    pub pencils: Vec<PencilReport>,
    pub rows: Vec<TorReportRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PencilReport {
    pub pi: usize,
    pub dim: u32,
    pub degree_multiplicities: Vec<(usize, usize)>,
    pub degrees: (usize, usize),
    pub prime_basis: Vec<String>,
    pub double_basis: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SerreRow {
    pub i: usize,
    pub j: usize,
    pub a_ij: i64,
    pub degree: DimVector,
    /// Nonzero coefficients of the Serre element, as `(stratum, value)`.
    pub residual: Vec<(String, String)>,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HallSummary {
    pub primes: Vec<u32>,
    pub held_out: u32,
    pub constant_count: usize,
    pub max_polynomial_degree: usize,
    pub escalated: usize,
    pub all_held_out_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub csv_version: u32,
    pub config: RunConfig,
    pub group: Option<GroupReport>,
    pub character_table: Option<CharacterTableReport>,
    pub mckay: Option<McKayGraphData>,
    pub tor: Option<TorReport>,
    pub serre: Option<Vec<SerreRow>>,
    pub hall: Option<HallSummary>,
    pub dims: Option<DimsReport>,
    #[serde(skip)]
    pub euler_constants: Vec<EulerConstantRecord>,
    pub checks: Vec<Check>,
    pub verdict: String,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn stage_check(stage: Stage, name: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check::new(format!("{}: {name}", stage.name()), passed, detail)
}

fn stage_error(stage: Stage, e: &Error) -> Check {
    stage_check(stage, "stage completed", false, e.to_string())
}

/// Group, classes, canonical character table and McKay data for one modulus.
pub struct FamilyData {
    pub spec: GroupSpec,
    pub group: FiniteMatrixGroup,
    pub table: CharacterTable,
    pub m: TensorMultiplicities,
}

impl FamilyData {
    pub fn build(spec: GroupSpec, modulus: Option<u32>, seed: u64) -> Result<Self> {
        let field = match modulus {
            Some(p) => PrimeField::new(p)?,
            None => choose_modulus(&spec),
        };
        let group = build_group(&spec, &field)?;
        let classes = conjugacy_classes(&group);
        let raw = character_table(&group, &classes, seed)?;
        let (table, m) = canonicalize(&raw)?;
        Ok(Self { spec, group, table, m })
    }
}

fn group_checks(d: &FamilyData) -> (GroupReport, Vec<Check>) {
    let g = &d.group;
    let classes = d.table.classes();
    let distinct: BTreeSet<_> = g.elements().iter().collect();
    let k = g.field();
    let det_one = g
        .elements()
        .iter()
        .all(|e| k.sub(k.mul(e.0[0], e.0[3]), k.mul(e.0[1], e.0[2])) == 1);
    let closed = (0..g.order()).all(|a| (0..g.order()).all(|b| g.mul(a, b) < g.order()));
    let checks = vec![
        stage_check(Stage::Group, "order", g.order() == d.spec.order() as usize, format!("{}", g.order())),
        stage_check(Stage::Group, "closure", closed, "products stay in the element list"),
        stage_check(Stage::Group, "faithful reduction", distinct.len() == g.order(), format!("{} distinct matrices", distinct.len())),
        stage_check(Stage::Group, "determinant one", det_one, ""),
        stage_check(
            Stage::Group,
            "class sizes sum to |G|",
            classes.sizes().iter().sum::<usize>() == g.order(),
            format!("{:?}", classes.sizes()),
        ),
        stage_check(
            Stage::Group,
            "class count equals affine vertex count",
            classes.count() == d.spec.affine_vertex_count(),
            format!("{} classes", classes.count()),
        ),
    ];
    let report = GroupReport {
        family: d.spec.label(),
        order: g.order(),
        modulus: k.p(),
        exponent: d.spec.exponent(),
        class_count: classes.count(),
        class_sizes: classes.sizes().to_vec(),
        representative_traces: d.table.tau().to_vec(),
    };
    (report, checks)
}

fn table_checks(t: &CharacterTable) -> Vec<Check> {
    let sq: u64 = t.degrees().iter().map(|&d| (d as u64).pow(2)).sum();
    vec![
        stage_check(Stage::Mckay, "character count equals class count", t.len() == t.classes().count(), format!("{}", t.len())),
        stage_check(Stage::Mckay, "sum of squared degrees is |G|", sq == t.group_order() as u64, format!("{sq}")),
        stage_check(Stage::Mckay, "row orthogonality", t.check_row_orthogonality(), ""),
        stage_check(Stage::Mckay, "column orthogonality", t.check_column_orthogonality(), ""),
        stage_check(Stage::Mckay, "trivial character has degree 1", t.degree(t.trivial()) == 1, ""),
    ]
}

fn mckay_checks(g: &McKayGraphData, m: &TensorMultiplicities, t: &CharacterTable) -> Vec<Check> {
    let n = g.vertex_count;
    let sym = (0..n).all(|a| (0..n).all(|b| m.get(a, b) == m.get(b, a)));
    let diag = t.group_order() < 3 || (0..n).all(|a| m.get(a, a) == 0);
    let rows = (0..n).all(|a| (0..n).map(|b| m.get(a, b) * t.degree(b)).sum::<u32>() == 2 * t.degree(a));
    let null = g
        .affine_cartan
        .iter()
        .all(|r| r.iter().zip(&g.dims).map(|(&x, &d)| x * d as i64).sum::<i64>() == 0);
    let minors_positive = g.leading_minors.iter().all(|d| !d.starts_with('-') && d != "0");
    vec![
        stage_check(Stage::Mckay, "m symmetric", sym, ""),
        stage_check(Stage::Mckay, "m zero diagonal", diag, ""),
        stage_check(Stage::Mckay, "row dimension sums equal 2 d", rows, format!("{:?}", g.dims)),
        stage_check(Stage::Mckay, "affine Cartan annihilates the dimension vector", null, ""),
        stage_check(Stage::Mckay, "affine Cartan determinant is zero", g.affine_det == "0", g.affine_det.clone()),
        stage_check(Stage::Mckay, "affine Cartan kernel is a line", g.kernel_dim == 1, ""),
        stage_check(Stage::Mckay, "finite Cartan positive definite", minors_positive, g.leading_minors.join(" ")),
        stage_check(
            Stage::Mckay,
            "isomorphic to the expected affine diagram",
            g.isomorphism.len() == n,
            format!("{} via {:?}", g.shape.label(), g.isomorphism),
        ),
    ]
}

fn tor_report(d: &FamilyData, cfg: &RunConfig) -> Result<(TorReport, Vec<Check>)> {
    let tc = TorConfig {
        degree_cap: cfg.caps.poly_degree,
        samples: cfg.tor_samples.clone(),
        sample_count: cfg.tor_sample_count,
    };
    let suite = tor_suite(&d.group, &d.table, &d.m, &tc)?;
    let mut checks: Vec<Check> = suite
        .checks
        .iter()
        .map(|c| stage_check(Stage::Tor, &c.name, c.passed, c.detail.clone()))
        .collect();
    let mut rows = Vec::new();
    for r in &suite.rows {
        let (rho, lambda_mu) = match &r.point.kind {
            PointKind::Pencil { lambda, mu } => (None, vec![(*lambda, *mu)]),
            PointKind::Intersection { rho, pi_point, rho_point } => (Some(*rho), vec![*pi_point, *rho_point]),
        };
        let asserted = !r.checks.is_empty();
        if asserted && !all_passed(&r.checks) {
            let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
            checks.push(stage_check(
                Stage::Tor,
                &format!("pi{} {:?} at {:?}", r.pi, r.role, lambda_mu),
                false,
                failed.join("; "),
            ));
        }
        rows.push(TorReportRow {
            pi: r.pi,
            role: r.role,
            rho,
            lambda_mu,
            generators: r.point.generators.clone(),
            quotient_dim: r.point.quotient_dim,
            regular: r.point.regular,
            dims: r.tor.as_ref().map(|t| t.dims),
            multiplicities: r.tor.as_ref().map(|t| t.multiplicities.clone()),
            asserted,
            checks: r.checks.clone(),
        });
    }
    let asserted = rows.iter().filter(|r| r.asserted).count();
    checks.push(stage_check(
        Stage::Tor,
        "all asserted point ideals pass",
        rows.iter().filter(|r| r.asserted).all(|r| all_passed(&r.checks)),
        format!("{asserted} asserted rows"),
    ));
    let pencils = suite
        .pairs
        .iter()
        .map(|p| PencilReport {
            pi: p.pi,
            dim: p.dim,
            degree_multiplicities: p.degree_multiplicities.clone(),
            degrees: p.degrees,
            prime_basis: p.prime_basis.clone(),
            double_basis: p.double_basis.clone(),
        })
        .collect();
    Ok((
        TorReport {
            generators: suite.generators,
            hilbert_function: suite.hilbert_function,
            pencils,
            rows,
        },
        checks,
    ))
}

/// The McKay graph as a simply laced graph, in canonical vertex order.
pub fn quiver_graph(g: &McKayGraphData) -> Result<SimplyLacedGraph> {
    SimplyLacedGraph::from_adjacency(&g.adjacency())
}

fn serre_rows(h: &mut HallAlgebra, graph: &SimplyLacedGraph) -> Vec<SerreRow> {
    let cartan = graph.cartan();
    let n = graph.vertex_count();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut degree = vec![0u32; n];
            degree[i] = (1 - cartan[i][j]) as u32;
            degree[j] = 1;
            let (residual, passed, error) = match serre_check(h, &cartan, i, j) {
                Ok(e) => (e.to_strings(), e.is_zero(), None),
                Err(e) => (Vec::new(), false, Some(e.to_string())),
            };
            rows.push(SerreRow {
                i,
                j,
                a_ij: cartan[i][j],
                degree: DimVector(degree),
                residual,
                passed,
                error,
            });
        }
    }
    rows
}

fn hall_summary(h: &HallAlgebra, cfg: &RunConfig) -> HallSummary {
    let records = h.all_records();
    HallSummary {
        primes: cfg.hall_primes.clone(),
        held_out: cfg.held_out,
        constant_count: records.len(),
        max_polynomial_degree: records.iter().filter_map(|r| r.polynomial.degree()).max().unwrap_or(0),
        escalated: records.iter().filter(|r| r.primes != cfg.hall_primes).count(),
        all_held_out_ok: records.iter().all(|r| r.held_out_ok),
    }
}

/// Run every selected stage. Usage errors are returned as `Err`; failures of
/// the mathematics are recorded as failing checks in the report.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let mut report = Report {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        csv_version: CSV_VERSION,
        config: cfg.clone(),
        group: None,
        character_table: None,
        mckay: None,
        tor: None,
        serre: None,
        hall: None,
        dims: None,
        euler_constants: Vec::new(),
        checks: Vec::new(),
        verdict: String::new(),
    };
    report.config.modulus = Some(cfg.modulus.unwrap_or_else(|| choose_modulus(&spec).p()));
    let finish = |mut r: Report| {
        r.verdict = if all_passed(&r.checks) && !r.checks.is_empty() { "pass" } else { "fail" }.into();
        r
    };
    let data = match FamilyData::build(spec, cfg.modulus, cfg.seed) {
        Ok(d) => d,
        Err(e) => {
            report.checks.push(stage_error(Stage::Group, &e));
            return Ok(finish(report));
        }
    };
    let (group, gchecks) = group_checks(&data);
    report.group = Some(group);
    report.checks.extend(gchecks);
    report.character_table = Some(CharacterTableReport {
        modulus: data.table.field().p(),
        seed: data.table.seed(),
        degrees: data.table.degrees().to_vec(),
        trivial: data.table.trivial(),
        defining: data.table.defining(),
        values: data.table.values().to_vec(),
        multiplicities: data.m.0.clone(),
    });
    let needs_graph = cfg.checks.iter().any(|s| *s != Stage::Group);
    if !needs_graph {
        return Ok(finish(report));
    }
    report.checks.extend(table_checks(&data.table));
    let mckay = match mckay_graph(&spec, &data.m, &data.table) {
        Ok(g) => g,
        Err(e) => {
            report.checks.push(stage_error(Stage::Mckay, &e));
            return Ok(finish(report));
        }
    };
    report.checks.extend(mckay_checks(&mckay, &data.m, &data.table));
    report.mckay = Some(mckay.clone());

    if cfg.has(Stage::Tor) {
        match tor_report(&data, cfg) {
            Ok((t, c)) => {
                report.tor = Some(t);
                report.checks.extend(c);
            }
            Err(e) => report.checks.push(stage_error(Stage::Tor, &e)),
        }
    }

    if cfg.has(Stage::Serre) || cfg.has(Stage::Dims) {
        let built = quiver_graph(&mckay).and_then(|g| Ok((HallAlgebra::new(&g, cfg.schedule(), cfg.caps.enumeration())?, g)));
        match built {
            Ok((mut h, graph)) => {
                if cfg.has(Stage::Serre) {
                    let rows = serre_rows(&mut h, &graph);
                    let ok = rows.iter().filter(|r| r.passed).count();
                    report.checks.push(stage_check(
                        Stage::Serre,
                        "Serre elements vanish for every ordered pair",
                        ok == rows.len(),
                        format!("{ok} of {} pairs", rows.len()),
                    ));
                    for r in rows.iter().filter(|r| !r.passed) {
                        report.checks.push(stage_check(
                            Stage::Serre,
                            &format!("pair ({}, {})", r.i, r.j),
                            false,
                            r.error.clone().unwrap_or_else(|| format!("{} nonzero terms", r.residual.len())),
                        ));
                    }
                    report.serre = Some(rows);
                }
                if cfg.has(Stage::Dims) {
                    let generators: Vec<usize> = (0..graph.vertex_count()).collect();
                    match dims_compare(&mut h, &graph, cfg.caps.positive_degree, cfg.caps.hall_degree, &generators) {
                        Ok(d) => {
                            let bad: Vec<String> = d.rows.iter().filter(|r| !r.passed).map(|r| r.alpha.to_string()).collect();
                            report.checks.push(stage_check(
                                Stage::Dims,
                                "composition dim <= positive part dim, PBW agreement on finite supports",
                                bad.is_empty(),
                                if bad.is_empty() { format!("{} degrees", d.rows.len()) } else { bad.join(" ") },
                            ));
                            report.dims = Some(d);
                        }
                        Err(e) => report.checks.push(stage_error(Stage::Dims, &e)),
                    }
                }
                let summary = hall_summary(&h, cfg);
                report.checks.push(stage_check(
                    if cfg.has(Stage::Serre) { Stage::Serre } else { Stage::Dims },
                    "every counting polynomial predicts its held-out prime",
                    summary.all_held_out_ok,
                    format!("{} constants, max degree {}", summary.constant_count, summary.max_polynomial_degree),
                ));
                report.euler_constants = h.all_records();
                report.hall = Some(summary);
            }
            Err(e) => report.checks.push(stage_error(Stage::Serre, &e)),
        }
    }
    Ok(finish(report))
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

pub fn chartable_csv(r: &Report) -> Option<String> {
    let t = r.character_table.as_ref()?;
    let g = r.group.as_ref()?;
    let mut s = String::new();
    writeln!(s, "# p={}", t.modulus).unwrap();
    writeln!(s, "# seed={}", t.seed).unwrap();
    let chis: Vec<String> = (0..t.degrees.len()).map(|i| format!("chi_{i}")).collect();
    writeln!(s, "class_size,rep_trace,{}", chis.join(",")).unwrap();
    for c in 0..g.class_count {
        let vals: Vec<u32> = t.values.iter().map(|row| row[c]).collect();
        writeln!(s, "{},{},{}", g.class_sizes[c], g.representative_traces[c], join(&vals, ",")).unwrap();
    }
    Some(s)
}

pub fn mckay_csv(r: &Report) -> Option<String> {
    let g = r.mckay.as_ref()?;
    let mut s = String::new();
    let cols: Vec<String> = (0..g.vertex_count).map(|i| format!("m_{i}")).collect();
    writeln!(s, "vertex,dim,trivial,{}", cols.join(",")).unwrap();
    for (v, row) in g.adjacency().iter().enumerate() {
        writeln!(s, "{v},{},{},{}", g.dims[v], u8::from(v == g.trivial), join(row, ",")).unwrap();
    }
    Some(s)
}

fn role_name(r: PointRole) -> &'static str {
    match r {
        PointRole::Interior => "interior",
        PointRole::Boundary => "boundary",
        PointRole::Intersection => "intersection",
    }
}

pub fn tor_csv(r: &Report) -> Option<String> {
    let t = r.tor.as_ref()?;
    let family = r.group.as_ref().map_or(String::new(), |g| g.family.clone());
    let mut s = String::from("family,pi,rho,role,lambda_mu,quotient_dim,regular,tor_dims,tor0,tor1,tor2,verdict\n");
    for row in &t.rows {
        let lm: Vec<String> = row.lambda_mu.iter().map(|(l, m)| format!("{l}:{m}")).collect();
        let dims = row.dims.map_or(String::new(), |d| join(&d, ";"));
        let mult = |i: usize| row.multiplicities.as_ref().map_or(String::new(), |m| join(&m[i], ";"));
        let verdict = if !row.asserted {
            "reported"
        } else if all_passed(&row.checks) {
            "pass"
        } else {
            "fail"
        };
        writeln!(
            s,
            "{family},{},{},{},{},{},{},{},{},{},{},{verdict}",
            row.pi,
            row.rho.map_or(String::new(), |x| x.to_string()),
            role_name(row.role),
            lm.join(" "),
            row.quotient_dim,
            row.regular,
            dims,
            mult(0),
            mult(1),
            mult(2)
        )
        .unwrap();
    }
    Some(s)
}

pub fn serre_csv(r: &Report) -> Option<String> {
    let rows = r.serre.as_ref()?;
    let mut s = String::from("i,j,a_ij,degree,nonzero_terms,verdict\n");
    for row in rows {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            row.i,
            row.j,
            row.a_ij,
            join(&row.degree.0, ";"),
            row.residual.len(),
            if row.passed { "pass" } else { "fail" }
        )
        .unwrap();
    }
    Some(s)
}

pub fn dims_csv(r: &Report) -> Option<String> {
    let d = r.dims.as_ref()?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    let mut s = String::from("alpha,free_dim,ideal_rank,positive_dim,pbw_dim,hall_dim,hall_equal,verdict\n");
    for row in &d.rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            join(&row.alpha.0, ";"),
            row.free_dim,
            row.ideal_rank,
            row.positive_dim,
            opt(row.pbw_dim.map(|x| x.to_string())),
            opt(row.hall_dim.map(|x| x.to_string())),
            opt(row.hall_equal.map(|x| x.to_string())),
            if row.passed { "pass" } else { "fail" }
        )
        .unwrap();
    }
    Some(s)
}

pub fn euler_csv(r: &Report) -> Option<String> {
    r.hall.as_ref()?;
    let mut s = String::from("sub,quotient,target,primes,counts,polynomial,held_out,held_out_count,held_out_ok,chi\n");
    for e in &r.euler_constants {
        let coeffs: Vec<String> = e.polynomial.coefficients().iter().map(rational_to_string).collect();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            e.sub,
            e.quotient,
            e.target,
            join(&e.primes, ";"),
            join(&e.counts, ";"),
            coeffs.join(";"),
            e.held_out,
            e.held_out_count,
            e.held_out_ok,
            e.value_at_one
        )
        .unwrap();
    }
    Some(s)
}

pub fn report_json(r: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(r)?;
    s.push('\n');
    Ok(s)
}

/// Write `report.json` and every CSV table the report has data for.
/// Returns the written paths in order.
pub fn emit_report(r: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("report.json", report_json(r)?)?;
    let tables: [(&str, fn(&Report) -> Option<String>); 6] = [
        ("chartable.csv", chartable_csv),
        ("mckay.csv", mckay_csv),
        ("tor.csv", tor_csv),
        ("serre.csv", serre_csv),
        ("dims.csv", dims_csv),
        ("euler.csv", euler_csv),
    ];
    for (name, f) in tables {
        if let Some(body) = f(r) {
            put(name, body)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(family: &str) -> RunConfig {
        RunConfig {
            family: family.into(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        assert!(cfg("A 2").validate().is_err());
        let mut c = cfg("A 2");
        c.checks = vec![Stage::Group, Stage::Mckay];
        assert!(c.validate().is_ok());
        let mut c = cfg("A 3");
        c.held_out = 5;
        assert!(c.validate().is_err());
        let mut c = cfg("A 3");
        c.modulus = Some(11);
        assert!(c.validate().is_err());
        assert!(cfg("F4").validate().is_err());
        assert!(cfg("").validate().is_err());
    }

    #[test]
    fn checks_and_caps_parse() {
        assert_eq!(parse_checks("all").unwrap().len(), 5);
        assert_eq!(parse_checks("tor,mckay").unwrap(), vec![Stage::Mckay, Stage::Tor]);
        assert!(parse_checks("bogus").is_err());
        let mut caps = Caps::default();
        caps.apply("hall=2,positive=3").unwrap();
        assert_eq!((caps.hall_degree, caps.positive_degree), (2, 3));
        assert!(caps.apply("speed=9").is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = RunConfig::from_json(r#"{"family": "E6", "hall_primes": [2, 3, 5], "held_out": 11, "caps": {"hall_degree": 2}}"#).unwrap();
        assert_eq!(c.held_out, 11);
        assert_eq!(c.caps.hall_degree, 2);
        assert_eq!(c.caps.positive_degree, 4);
        assert!(RunConfig::from_json(r#"{"familly": "E6"}"#).is_err());
    }

    #[test]
    fn small_cyclic_run_passes() {
        let r = run(&cfg("A3")).unwrap();
        assert!(r.passed(), "{:?}", r.failed_checks());
        assert_eq!(chartable_csv(&r).unwrap().lines().count(), 3 + 3);
    }
}
