//! Ratio ladders against the closed-form limits, zero-attraction counts and
//! report emission.

use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::joukowski::{limit_modified, limit_sobolev, phi, sqrt_z2m1, CUT_TOL};
use crate::measure::{recurrence_for, BaseMeasureSpec, Basis, PolyInBasis, Precision, QuadratureRule, RecurrenceTable};
use crate::modified::{solve_q, RationalModifier};
use crate::numeric::{c, C64};
use crate::pade::{approximation_error, error_ratio_limit, ratio_of_errors, StieltjesFn};
use crate::sobolev::{regularity, sn_kernel, LambdaWorkspace, SobolevOP, SobolevSpec};
use crate::zeros::{cluster, roots, ZeroReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Errors at or below this multiple of `max(1, |limit|)` count as converged.
pub const ROUNDING_FLOOR: f64 = 1e-12;

pub fn default_ladder() -> Vec<usize> {
    vec![10, 20, 40, 80]
}

pub fn default_probes() -> Vec<C64> {
    vec![c(3.0, 0.0), c(-2.5, 0.0), c(0.0, 2.0), c(1.5, 1.5)]
}

fn default_jets() -> usize {
    1
}

/// The family whose asymptotics are checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    BaseOnly,
    Modified { modifier: RationalModifier },
    Sobolev { spec: SobolevSpec },
    Pade { function: StieltjesFn },
}

/// Axis-aligned rectangle whose boundary is sampled for uniform checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

impl Rect {
    /// `count` points spaced evenly along the boundary by arc length.
    pub fn boundary(&self, count: usize) -> Vec<C64> {
        let (w, h) = (self.re[1] - self.re[0], self.im[1] - self.im[0]);
        let perimeter = 2.0 * (w + h);
        (0..count)
            .map(|k| {
                let mut s = perimeter * k as f64 / count as f64;
                if s < w {
                    return c(self.re[0] + s, self.im[0]);
                }
                s -= w;
                if s < h {
                    return c(self.re[1], self.im[0] + s);
                }
                s -= h;
                if s < w {
                    return c(self.re[1] - s, self.im[1]);
                }
                s -= w;
                c(self.re[0], self.im[1] - s)
            })
            .collect()
    }
}

pub const UNIFORM_GRID_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroConfig {
    pub n: Vec<usize>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub support_band: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub measure: BaseMeasureSpec,
    pub target: Target,
    #[serde(default = "default_probes")]
    pub probe_points: Vec<C64>,
    #[serde(default = "default_ladder")]
    pub n_ladder: Vec<usize>,
    /// Highest derivative order ν.
    #[serde(default = "default_jets")]
    pub jets: usize,
    #[serde(default)]
    pub compact: Option<Rect>,
    #[serde(default)]
    pub zeros: Option<ZeroConfig>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Attraction centers with the number of zeros each one attracts.
    pub fn attraction(&self) -> Vec<(C64, u32)> {
        match &self.target {
            Target::Sobolev { spec } => regularity(spec).attraction(spec),
            Target::Pade { function } => function.attraction(),
            _ => vec![],
        }
    }

    /// Normalize the target and reject anything the ladders cannot use.
    pub fn validated(mut self) -> Result<Self> {
        self.measure.validate()?;
        if self.n_ladder.is_empty() || self.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n ladder must be nonempty and increasing".into()));
        }
        match &mut self.target {
            Target::BaseOnly => {}
            Target::Modified { modifier } => modifier.validate(&self.measure)?,
            Target::Sobolev { spec } => {
                *spec = spec.clone().normalized()?;
                for t in &spec.terms {
                    if self.measure.distance_to_support(t.c) <= CUT_TOL {
                        return Err(Error::InvalidSpec(format!("point {} lies on the support", t.c)));
                    }
                }
                if !regularity(spec).overall_regular {
                    return Err(Error::NotRegular(
                        "a reduced operator matrix is not square and nonsingular".into(),
                    ));
                }
            }
            Target::Pade { function } => {
                function.validate()?;
                if function.base != self.measure {
                    return Err(Error::Config("Padé function must use the scenario measure".into()));
                }
            }
        }
        let centers = self.attraction();
        let compact = self
            .compact
            .as_ref()
            .map(|r| r.boundary(UNIFORM_GRID_POINTS))
            .unwrap_or_default();
        for z in self.probe_points.iter().chain(&compact) {
            phi(*z)?;
            if self.measure.distance_to_support(*z) <= CUT_TOL {
                return Err(Error::OnCut {
                    re: z.re,
                    im: z.im,
                    tol: CUT_TOL,
                });
            }
            if centers.iter().any(|(cj, _)| (z - cj).norm() <= 1e-8) {
                return Err(Error::Config(format!("probe {z} sits on an attraction center")));
            }
        }
        Ok(self)
    }

    fn extra_degree(&self) -> usize {
        match &self.target {
            Target::BaseOnly => 0,
            Target::Modified { modifier } => modifier.zero_degree() + modifier.pole_degree(),
            Target::Sobolev { spec } => spec.total_order(),
            Target::Pade { function } => function.total_order() + 300,
        }
    }

    fn max_n(&self) -> usize {
        let ladder = self.n_ladder.last().copied().unwrap_or(0);
        let zeros = self
            .zeros
            .as_ref()
            .and_then(|z| z.n.iter().max().copied())
            .unwrap_or(0);
        ladder.max(zeros)
    }

    /// Recurrence table and base rule deep enough for every member.
    pub fn setup(&self) -> Result<(RecurrenceTable, QuadratureRule)> {
        let table = recurrence_for(&self.measure, self.max_n() + self.extra_degree() + 8)?;
        let rule = QuadratureRule::for_measure(&self.measure, 40)?;
        Ok((table, rule))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioKind {
    /// `X_n^{(ν)} / L_n^{(ν)}` against the target's limit function.
    Relative,
    /// `X_{n+1}^{(ν)} / X_n^{(ν)}` against `phi/2`.
    Consecutive,
    /// `X_n^{(ν+1)} / (n X_n^{(ν)})` against `1/sqrt(z^2 - 1)`.
    LogDerivative,
    /// `(f - pi_{n+1}) / (f - pi_n)` against `1/phi^2`.
    ErrorRatio,
}

impl RatioKind {
    pub fn label(self) -> &'static str {
        match self {
            RatioKind::Relative => "relative",
            RatioKind::Consecutive => "consecutive",
            RatioKind::LogDerivative => "log_derivative",
            RatioKind::ErrorRatio => "error_ratio",
        }
    }

    fn for_target(target: &Target) -> Vec<RatioKind> {
        match target {
            Target::BaseOnly => vec![RatioKind::Consecutive, RatioKind::LogDerivative],
            Target::Modified { .. } | Target::Sobolev { .. } => {
                vec![RatioKind::Relative, RatioKind::Consecutive, RatioKind::LogDerivative]
            }
            Target::Pade { .. } => vec![
                RatioKind::Relative,
                RatioKind::Consecutive,
                RatioKind::LogDerivative,
                RatioKind::ErrorRatio,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub n: usize,
    pub z: C64,
    pub nu: usize,
    pub kind: RatioKind,
    pub ratio: Option<C64>,
    pub limit: C64,
    pub abs_err: Option<f64>,
    pub est_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// One member of the family at degree n.
#[derive(Debug, Clone)]
enum Member {
    Plain(PolyInBasis),
    Sobolev(SobolevOP),
}

impl Member {
    fn poly(&self) -> &PolyInBasis {
        match self {
            Member::Plain(p) => p,
            Member::Sobolev(s) => &s.orth,
        }
    }
}

/// Members for every degree in `ns`, keyed by degree.
fn build_members(
    cfg: &ExperimentConfig,
    ns: &[usize],
    table: &RecurrenceTable,
    rule: &QuadratureRule,
    mode: Execution,
) -> Result<BTreeMap<usize, std::result::Result<Member, String>>> {
    let out: Vec<std::result::Result<Member, String>> = match &cfg.target {
        Target::BaseOnly => ns
            .iter()
            .map(|&n| Ok(Member::Plain(PolyInBasis::unit(Basis::MonicMu, n))))
            .collect(),
        Target::Modified { modifier } => map_ordered(ns, mode, |&n| {
            solve_q(n, modifier, table, rule)
                .map(|op| Member::Plain(op.q))
                .map_err(|e| e.to_string())
        }),
        Target::Sobolev { spec } => lambda_members(spec, ns, table, rule)?,
        Target::Pade { function } => lambda_members(&function.sobolev_spec(), ns, table, rule)?,
    };
    Ok(ns.iter().copied().zip(out).collect())
}

fn lambda_members(
    spec: &SobolevSpec,
    ns: &[usize],
    table: &RecurrenceTable,
    rule: &QuadratureRule,
) -> Result<Vec<std::result::Result<Member, String>>> {
    if spec.terms.is_empty() {
        return Ok(ns
            .iter()
            .map(|&n| {
                sn_kernel(n, spec, table, rule)
                    .map(Member::Sobolev)
                    .map_err(|e| e.to_string())
            })
            .collect());
    }
    let mut ws = LambdaWorkspace::new(spec, table, rule)?;
    Ok(ns
        .iter()
        .map(|&n| ws.solve(n).map(Member::Sobolev).map_err(|e| e.to_string()))
        .collect())
}

/// Context shared by every row of one run.
struct Ladder<'a> {
    cfg: &'a ExperimentConfig,
    table: &'a RecurrenceTable,
    members: BTreeMap<usize, std::result::Result<Member, String>>,
    precision: Precision,
}

impl Ladder<'_> {
    fn target_limit(&self, z: C64) -> Result<C64> {
        match &self.cfg.target {
            Target::BaseOnly => Ok(c(1.0, 0.0)),
            Target::Modified { modifier } => limit_modified(z, modifier),
            Target::Sobolev { .. } | Target::Pade { .. } => limit_sobolev(z, &self.cfg.attraction()),
        }
    }

    fn limit(&self, kind: RatioKind, z: C64) -> Result<C64> {
        match kind {
            RatioKind::Relative => self.target_limit(z),
            RatioKind::Consecutive => Ok(phi(z)? / 2.0),
            RatioKind::LogDerivative => Ok(1.0 / sqrt_z2m1(z)?),
            RatioKind::ErrorRatio => error_ratio_limit(z),
        }
    }

    fn member(&self, n: usize) -> std::result::Result<&Member, String> {
        match self.members.get(&n) {
            Some(Ok(m)) => Ok(m),
            Some(Err(e)) => Err(e.clone()),
            None => Err(format!("degree {n} was not built")),
        }
    }

    fn jet(&self, p: &PolyInBasis, z: C64, order: usize) -> Vec<C64> {
        p.eval_jet_with(self.table, z, order, self.precision)
    }

    fn ratio(&self, kind: RatioKind, n: usize, nu: usize, z: C64) -> std::result::Result<C64, String> {
        let x = self.member(n)?;
        let value = match kind {
            RatioKind::Relative => {
                let base = PolyInBasis::unit(Basis::MonicMu, n);
                self.jet(x.poly(), z, nu)[nu] / self.jet(&base, z, nu)[nu]
            }
            RatioKind::Consecutive => {
                let next = self.member(n + 1)?;
                self.jet(next.poly(), z, nu)[nu] / self.jet(x.poly(), z, nu)[nu]
            }
            RatioKind::LogDerivative => {
                let j = self.jet(x.poly(), z, nu + 1);
                j[nu + 1] / (j[nu] * n as f64)
            }
            RatioKind::ErrorRatio => {
                let (Member::Sobolev(a), Member::Sobolev(b)) = (x, self.member(n + 1)?) else {
                    return Err("error ratios need Padé denominators".into());
                };
                let Target::Pade { function } = &self.cfg.target else {
                    return Err("error ratios need a Padé target".into());
                };
                let ea = approximation_error(a, function, z, self.table).map_err(|e| e.to_string())?;
                let eb = approximation_error(b, function, z, self.table).map_err(|e| e.to_string())?;
                ratio_of_errors(ea, eb).map_err(|e| e.to_string())?
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(format!("non-finite ratio at n = {n}"))
        }
    }

    fn rows_at(&self, z: C64) -> Result<Vec<RatioRow>> {
        let mut rows = Vec::new();
        for kind in RatioKind::for_target(&self.cfg.target) {
            let limit = self.limit(kind, z)?;
            let nus = if kind == RatioKind::ErrorRatio { 0 } else { self.cfg.jets };
            for nu in 0..=nus {
                let mut prev: Option<(usize, f64)> = None;
                for &n in &self.cfg.n_ladder {
                    let (ratio, flag) = match self.ratio(kind, n, nu, z) {
                        Ok(r) => (Some(r), None),
                        Err(e) => (None, Some(e)),
                    };
                    let abs_err = ratio.map(|r| (r - limit).norm());
                    let est_rate = match (prev, abs_err) {
                        (Some((n0, e0)), Some(e1)) if e0 > 0.0 && e1 > 0.0 => {
                            Some((e0 / e1).ln() / (n - n0) as f64)
                        }
                        _ => None,
                    };
                    prev = abs_err.map(|e| (n, e));
                    rows.push(RatioRow {
                        n,
                        z,
                        nu,
                        kind,
                        ratio,
                        limit,
                        abs_err,
                        est_rate,
                        flag,
                    });
                }
            }
        }
        Ok(rows)
    }
}

fn ladder_degrees(cfg: &ExperimentConfig) -> Vec<usize> {
    let mut ns: Vec<usize> = cfg.n_ladder.iter().flat_map(|&n| [n, n + 1]).collect();
    ns.sort_unstable();
    ns.dedup();
    ns
}

/// Rows at arbitrary points, ordered by point, kind, ν and n.
pub fn ratio_rows(
    cfg: &ExperimentConfig,
    points: &[C64],
    table: &RecurrenceTable,
    rule: &QuadratureRule,
    precision: Precision,
    mode: Execution,
) -> Result<Vec<RatioRow>> {
    let ladder = Ladder {
        cfg,
        table,
        members: build_members(cfg, &ladder_degrees(cfg), table, rule, mode)?,
        precision,
    };
    let per_point = map_ordered(points, mode, |&z| ladder.rows_at(z));
    let mut out = Vec::new();
    for rows in per_point {
        out.extend(rows?);
    }
    Ok(out)
}

/// Rows at the configured probe points.
pub fn run_ratio_ladder(cfg: &ExperimentConfig, precision: Precision, mode: Execution) -> Result<Vec<RatioRow>> {
    let (table, rule) = cfg.setup()?;
    ratio_rows(cfg, &cfg.probe_points, &table, &rule, precision, mode)
}

/// Whether consecutive errors decrease strictly, allowing errors already at
/// the rounding floor.
pub fn strictly_decreasing(errors: &[Option<f64>], limit: C64) -> bool {
    let floor = ROUNDING_FLOOR * limit.norm().max(1.0);
    errors.iter().all(|e| e.is_some())
        && errors.windows(2).all(|w| {
            let (a, b) = (w[0].unwrap(), w[1].unwrap());
            b < a || b <= floor
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderCheck {
    pub kind: RatioKind,
    pub nu: usize,
    pub z: Option<C64>,
    pub n: Vec<usize>,
    pub errors: Vec<Option<f64>>,
    pub passed: bool,
}

/// One check per (point, kind, ν) sequence of rows.
pub fn ladder_checks(rows: &[RatioRow]) -> Vec<LadderCheck> {
    let mut out: Vec<LadderCheck> = Vec::new();
    let mut limits: Vec<C64> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(chk) if chk.kind == r.kind && chk.nu == r.nu && chk.z == Some(r.z) => {
                chk.n.push(r.n);
                chk.errors.push(r.abs_err);
            }
            _ => {
                out.push(LadderCheck {
                    kind: r.kind,
                    nu: r.nu,
                    z: Some(r.z),
                    n: vec![r.n],
                    errors: vec![r.abs_err],
                    passed: false,
                });
                limits.push(r.limit);
            }
        }
    }
    for (chk, lim) in out.iter_mut().zip(limits) {
        chk.passed = strictly_decreasing(&chk.errors, lim);
    }
    out
}

/// Largest error over the boundary grid of the configured rectangle, per
/// kind and ν, along the ladder.
pub fn uniform_checks(
    cfg: &ExperimentConfig,
    table: &RecurrenceTable,
    rule: &QuadratureRule,
    precision: Precision,
    mode: Execution,
) -> Result<Vec<LadderCheck>> {
    let Some(rect) = &cfg.compact else {
        return Ok(vec![]);
    };
    let rows = ratio_rows(cfg, &rect.boundary(UNIFORM_GRID_POINTS), table, rule, precision, mode)?;
    let mut grouped: BTreeMap<(RatioKind, usize, usize), (Option<f64>, f64)> = BTreeMap::new();
    for r in &rows {
        let e = grouped.entry((r.kind, r.nu, r.n)).or_insert((Some(0.0), 0.0));
        e.0 = match (e.0, r.abs_err) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        e.1 = e.1.max(r.limit.norm());
    }
    let mut out: Vec<LadderCheck> = Vec::new();
    let mut floors: Vec<f64> = Vec::new();
    for ((kind, nu, n), (err, lim)) in grouped {
        match out.last_mut() {
            Some(chk) if chk.kind == kind && chk.nu == nu => {
                chk.n.push(n);
                chk.errors.push(err);
                let f = floors.last_mut().unwrap();
                *f = f.max(lim);
            }
            _ => {
                out.push(LadderCheck {
                    kind,
                    nu,
                    z: None,
                    n: vec![n],
                    errors: vec![err],
                    passed: false,
                });
                floors.push(lim);
            }
        }
    }
    for (chk, lim) in out.iter_mut().zip(floors) {
        chk.passed = strictly_decreasing(&chk.errors, c(lim, 0.0));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCheck {
    pub n: usize,
    pub expected: Vec<usize>,
    pub report: ZeroReport,
    pub passed: bool,
}

/// Root counts near each attraction center for the configured degrees.
pub fn run_zero_attraction(cfg: &ExperimentConfig, mode: Execution) -> Result<Vec<ZeroCheck>> {
    let Some(zc) = &cfg.zeros else {
        return Ok(vec![]);
    };
    let (table, rule) = cfg.setup()?;
    let members = build_members(cfg, &zc.n, &table, &rule, mode)?;
    let attraction = cfg.attraction();
    let centers: Vec<C64> = attraction.iter().filter(|a| a.1 > 0).map(|a| a.0).collect();
    let expected: Vec<usize> = attraction.iter().filter(|a| a.1 > 0).map(|a| a.1 as usize).collect();
    let items: Vec<(usize, &std::result::Result<Member, String>)> = members.iter().map(|(n, m)| (*n, m)).collect();
    let checks = map_ordered(&items, mode, |(n, m)| -> Result<ZeroCheck> {
        let m = m.as_ref().map_err(|e| Error::PreAsymptotic {
            n: *n,
            reason: e.clone(),
        })?;
        let monic = m.poly().to_basis(&table, Basis::MonicMu);
        let r = roots(&monic, &table)?;
        let report = cluster(&r, &centers, zc.radius, zc.support_band)?;
        let attracted: usize = expected.iter().sum();
        let passed = report.cluster_counts == expected && report.support_count + attracted == *n;
        Ok(ZeroCheck {
            n: *n,
            expected: expected.clone(),
            report,
            passed,
        })
    });
    checks.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub scenario: String,
    pub rows: Vec<RatioRow>,
    pub checks: Vec<LadderCheck>,
    pub uniform: Vec<LadderCheck>,
    pub zeros: Vec<ZeroCheck>,
    pub passed: bool,
}

/// Ladders, uniform checks and zero counts for one configuration.
pub fn run_verification(cfg: &ExperimentConfig, precision: Precision, mode: Execution) -> Result<VerifyReport> {
    let (table, rule) = cfg.setup()?;
    let rows = ratio_rows(cfg, &cfg.probe_points, &table, &rule, precision, mode)?;
    let checks = ladder_checks(&rows);
    let uniform = uniform_checks(cfg, &table, &rule, precision, mode)?;
    let zeros = run_zero_attraction(cfg, mode)?;
    let passed = checks.iter().chain(&uniform).all(|c| c.passed) && zeros.iter().all(|z| z.passed);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        scenario: cfg.name.clone(),
        rows,
        checks,
        uniform,
        zeros,
        passed,
    })
}

pub const CSV_HEADER: &str = "n,z_re,z_im,nu,ratio_re,ratio_im,limit_re,limit_im,abs_err,est_rate";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

/// Rows as CSV in the fixed column order.
pub fn csv_string(rows: &[RatioRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.z.re,
            r.z.im,
            r.nu,
            opt(r.ratio.map(|v| v.re)),
            opt(r.ratio.map(|v| v.im)),
            r.limit.re,
            r.limit.im,
            opt(r.abs_err),
            opt(r.est_rate)
        ));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

/// Write the report. CSV holds the rows of one ratio kind per file, named
/// `<stem>_<kind>.csv` next to `path`; JSON holds everything.
pub fn emit_report(report: &VerifyReport, format: ReportFormat, path: &Path) -> Result<Vec<std::path::PathBuf>> {
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)?;
            text.push('\n');
            write_file(path, &text)?;
            Ok(vec![path.to_path_buf()])
        }
        ReportFormat::Csv => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
            let dir = path.parent().unwrap_or(Path::new("."));
            let mut kinds: Vec<RatioKind> = report.rows.iter().map(|r| r.kind).collect();
            kinds.sort();
            kinds.dedup();
            let mut written = Vec::new();
            for kind in kinds {
                let rows: Vec<RatioRow> = report.rows.iter().filter(|r| r.kind == kind).cloned().collect();
                let p = dir.join(format!("{stem}_{}.csv", kind.label()));
                write_file(&p, &csv_string(&rows))?;
                written.push(p);
            }
            Ok(written)
        }
    }
}

/// Configurations shipped with the crate.
const BUNDLED: &[(&str, &str)] = &[
    ("base_chebyshev", include_str!("../scenarios/base_chebyshev.json")),
    ("base_legendre", include_str!("../scenarios/base_legendre.json")),
    ("base_jacobi", include_str!("../scenarios/base_jacobi.json")),
    ("base_atom", include_str!("../scenarios/base_atom.json")),
    ("modified_real_zero", include_str!("../scenarios/modified_real_zero.json")),
    ("modified_complex_zero", include_str!("../scenarios/modified_complex_zero.json")),
    ("modified_complex_rational", include_str!("../scenarios/modified_complex_rational.json")),
    ("sobolev_point_derivative", include_str!("../scenarios/sobolev_point_derivative.json")),
    ("sobolev_complex_point", include_str!("../scenarios/sobolev_complex_point.json")),
    ("sobolev_general", include_str!("../scenarios/sobolev_general.json")),
    ("pade_gonchar", include_str!("../scenarios/pade_gonchar.json")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.0).collect()
}

pub fn bundled(name: &str) -> Result<ExperimentConfig> {
    let text = BUNDLED
        .iter()
        .find(|b| b.0 == name)
        .ok_or_else(|| Error::Config(format!("no bundled scenario named {name}")))?
        .1;
    ExperimentConfig::from_json(text)?.validated()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::WeightKind;

    fn base_cfg() -> ExperimentConfig {
        ExperimentConfig {
            name: "t".into(),
            measure: BaseMeasureSpec::pure(WeightKind::ChebyshevFirstKind),
            target: Target::BaseOnly,
            probe_points: vec![c(3.0, 0.0)],
            n_ladder: vec![10, 20, 40],
            jets: 1,
            compact: None,
            zeros: None,
            outputs: Outputs::default(),
        }
    }

    #[test]
    fn bundled_scenarios_parse() {
        for name in bundled_names() {
            let cfg = bundled(name).unwrap();
            assert_eq!(cfg.name, name);
        }
        assert!(bundled("nope").is_err());
    }

    #[test]
    fn probe_on_cut_is_rejected() {
        let mut cfg = base_cfg();
        cfg.probe_points.push(c(0.5, 0.0));
        assert!(matches!(cfg.validated(), Err(Error::OnCut { .. })));
    }

    #[test]
    fn base_ladder_decreases() {
        let cfg = base_cfg().validated().unwrap();
        let rows = run_ratio_ladder(&cfg, Precision::Double, Execution::Sequential).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        for chk in ladder_checks(&rows) {
            assert!(chk.passed, "{chk:?}");
        }
        let par = run_ratio_ladder(&cfg, Precision::Double, Execution::Parallel).unwrap();
        assert_eq!(rows, par);
    }

    #[test]
    fn modified_derivative_ladder_decreases() {
        let mut cfg = base_cfg();
        cfg.target = Target::Modified {
            modifier: RationalModifier::new(vec![(c(0.0, 2.0), 1)], vec![]),
        };
        let rows = run_ratio_ladder(&cfg.validated().unwrap(), Precision::Double, Execution::Parallel).unwrap();
        let checks = ladder_checks(&rows);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
        let row = RatioRow {
            n: 10,
            z: c(3.0, 0.0),
            nu: 0,
            kind: RatioKind::Consecutive,
            ratio: Some(c(2.9, 0.0)),
            limit: c(2.91, 0.0),
            abs_err: Some(0.01),
            est_rate: None,
            flag: None,
        };
        let s = csv_string(&[row]);
        assert_eq!(s.lines().count(), 2);
        assert!(s.ends_with(",NaN\n"));
    }

    #[test]
    fn boundary_grid() {
        let r = Rect {
            re: [1.5, 2.5],
            im: [0.5, 1.5],
        };
        let pts = r.boundary(20);
        assert_eq!(pts.len(), 20);
        assert_eq!(pts[0], c(1.5, 0.5));
        assert!((pts[5] - c(2.5, 0.5)).norm() < 1e-12);
        assert!((pts[10] - c(2.5, 1.5)).norm() < 1e-12);
    }
}
