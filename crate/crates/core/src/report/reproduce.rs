//! Regression targets: each reruns one pipeline and compares against the
//! published value at a stated tolerance.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{num, Report, ReportError, DEFAULT_SEED, DEFAULT_SHOTS};
use crate::dsl::{parse_rs, parse_scenario, var, Comparator, RsExpression};
use crate::lhv::{classical_extrema, monogamy_check};
use crate::optimize::{maximize_violation, scan_envelope, SearchConfig, SettingsParametrization, StateFamily, ViolationProblem};
use crate::poly::{chained_cycle_source, classify, cycle_sum, derive_inequality, CorrelationInequality, TermKind};
use crate::protocol::{analytic_signaling, estimate_f, signaling_test};
use crate::quantum::{
    build_f_operator, evaluate_inequality_quantum, hybrid_f_product, hybrid_f_singlet, operator_norm,
    s2_squared_identity, tsirelson_envelope, BlochVector, DensityMatrix, HybridSettings, Subsystem,
    TermAssignment, HYBRID_SOURCE,
};

const EQ_RS1: &str = include_str!("../../fixtures/eq_rs1.rsx");
const KCBS: &str = include_str!("../../fixtures/kcbs.rsx");
const EQ_THIS2: &str = include_str!("../../fixtures/eq_this2.rsx");
const LG_RS2: &str = include_str!("../../fixtures/lg_rs2.rsx");
const EQ_EKH: &str = include_str!("../../fixtures/eq_ekh.rsx");
const MONOGAMY: &str = include_str!("../../fixtures/monogamy.rsx");
const CHSH_SCN: &str = include_str!("../../fixtures/chsh.scn");
const KCBS_SCN: &str = include_str!("../../fixtures/kcbs.scn");
const LG_SCN: &str = include_str!("../../fixtures/lg.scn");
const HYBRID_SCN: &str = include_str!("../../fixtures/hybrid.scn");
const MONOGAMY_SCN: &str = include_str!("../../fixtures/monogamy.scn");

pub(crate) const TARGET_NAMES: [&str; 10] = [
    "chsh-bound",
    "kcbs-bound",
    "ncycle-bounds",
    "lg-bound",
    "hybrid-singlet",
    "hybrid-product",
    "tsirelson-envelope",
    "s2-identity",
    "monogamy",
    "protocol-mc",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    ChshBound,
    KcbsBound,
    NcycleBounds,
    LgBound,
    HybridSinglet,
    HybridProduct,
    TsirelsonEnvelope,
    S2Identity,
    Monogamy,
    ProtocolMc,
}

impl Target {
    pub const ALL: [Target; 10] = [
        Target::ChshBound,
        Target::KcbsBound,
        Target::NcycleBounds,
        Target::LgBound,
        Target::HybridSinglet,
        Target::HybridProduct,
        Target::TsirelsonEnvelope,
        Target::S2Identity,
        Target::Monogamy,
        Target::ProtocolMc,
    ];

    pub fn name(self) -> &'static str {
        TARGET_NAMES[self as usize]
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Target::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ReportError::UnknownTarget(s.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetOptions {
    pub shots: u64,
    pub seed: u64,
    /// Points per angle for the envelope scan.
    pub grid: usize,
    pub search: SearchConfig,
}

impl Default for TargetOptions {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            seed: DEFAULT_SEED,
            grid: 400,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CheckValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for CheckValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckValue::Number(x) => f.write_str(&num(*x)),
            CheckValue::Text(s) => f.write_str(s),
        }
    }
}

/// One comparison of a computed value against the expected one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: CheckValue,
    pub actual: CheckValue,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn close(name: impl Into<String>, expected: f64, actual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected: CheckValue::Number(expected),
            actual: CheckValue::Number(actual),
            tolerance,
            pass: (expected - actual).abs() <= tolerance,
        }
    }

    /// `actual <= limit + tolerance`.
    pub fn at_most(name: impl Into<String>, limit: f64, actual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected: CheckValue::Text(format!("<= {}", num(limit))),
            actual: CheckValue::Number(actual),
            tolerance,
            pass: actual <= limit + tolerance,
        }
    }

    /// `actual < limit` strictly.
    pub fn below(name: impl Into<String>, limit: f64, actual: f64) -> Self {
        Self {
            name: name.into(),
            expected: CheckValue::Text(format!("< {}", num(limit))),
            actual: CheckValue::Number(actual),
            tolerance: 0.0,
            pass: actual < limit,
        }
    }

    /// `actual > limit` strictly.
    pub fn above(name: impl Into<String>, limit: f64, actual: f64) -> Self {
        Self {
            name: name.into(),
            expected: CheckValue::Text(format!("> {}", num(limit))),
            actual: CheckValue::Number(actual),
            tolerance: 0.0,
            pass: actual > limit,
        }
    }

    pub fn same(name: impl Into<String>, expected: impl fmt::Display, actual: impl fmt::Display) -> Self {
        let (e, a) = (expected.to_string(), actual.to_string());
        Self {
            name: name.into(),
            pass: e == a,
            expected: CheckValue::Text(e),
            actual: CheckValue::Text(a),
            tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct TargetResult {
    target: &'static str,
    pass: bool,
    checks: Vec<Check>,
}

/// Runs one target and returns its checks.
pub fn run_target(target: Target, options: &TargetOptions) -> Result<Vec<Check>, ReportError> {
    match target {
        Target::ChshBound => chsh_bound(),
        Target::KcbsBound => kcbs_bound(),
        Target::NcycleBounds => ncycle_bounds(),
        Target::LgBound => lg_bound(),
        Target::HybridSinglet => hybrid_singlet(&options.search),
        Target::HybridProduct => hybrid_product(),
        Target::TsirelsonEnvelope => tsirelson(options.grid),
        Target::S2Identity => s2_identity(options.seed),
        Target::Monogamy => monogamy(),
        Target::ProtocolMc => protocol_mc(options.shots, options.seed),
    }
}

fn target_lines(result: &TargetResult) -> Vec<String> {
    let mut lines = vec![format!("{}: {}", result.target, if result.pass { "PASS" } else { "FAIL" })];
    for c in &result.checks {
        lines.push(format!(
            "  [{}] {}: expected {}, got {} (tolerance {})",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.expected,
            c.actual,
            c.tolerance
        ));
    }
    lines
}

fn run(target: Target, options: &TargetOptions) -> Result<TargetResult, ReportError> {
    let checks = run_target(target, options)?;
    Ok(TargetResult {
        target: target.name(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

/// Runs one target. The report's `result.pass` says whether every check held.
pub fn reproduce(target: Target, options: &TargetOptions) -> Result<Report, ReportError> {
    let result = run(target, options)?;
    let lines = target_lines(&result);
    let mut report = Report::new(
        "reproduce",
        serde_json::json!({ "target": target.name(), "options": options }),
        result,
    );
    report.summary = lines;
    Ok(report)
}

/// Runs every target in order.
pub fn reproduce_all(options: &TargetOptions) -> Result<Report, ReportError> {
    let results = Target::ALL
        .into_iter()
        .map(|t| run(t, options))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = results.iter().all(|r| r.pass);
    let lines: Vec<String> = results.iter().flat_map(target_lines).collect();
    let mut report = Report::new(
        "reproduce",
        serde_json::json!({ "target": "all", "options": options }),
        serde_json::json!({ "pass": pass, "targets": results }),
    );
    report.summary = lines;
    Ok(report)
}

fn parsed(text: &str) -> RsExpression {
    parse_rs(text).expect("bundled fixture parses")
}

fn derived(text: &str) -> Result<CorrelationInequality, ReportError> {
    Ok(derive_inequality(&parsed(text))?.inequality)
}

fn expected(terms: &[(&str, &str, i64)], direction: Comparator, bound: i64) -> CorrelationInequality {
    CorrelationInequality::from_terms(
        terms.iter().map(|(a, b, c)| (var(a), var(b), *c)),
        direction,
        Ratio::from_integer(bound),
    )
}

fn lhs_text(ineq: &CorrelationInequality) -> String {
    let s = ineq.to_string();
    s.rsplit_once(if ineq.direction == Comparator::AtMost { " <= " } else { " >= " })
        .map(|(l, _)| l.to_string())
        .unwrap_or(s)
}

fn poly_text(p: &crate::poly::MultilinearPoly) -> String {
    let ineq = CorrelationInequality::from_terms(
        p.iter().map(|(k, c)| (k[0], k[1], c)),
        Comparator::AtMost,
        Ratio::from_integer(0),
    );
    lhs_text(&ineq)
}

fn chsh_bound() -> Result<Vec<Check>, ReportError> {
    let ineq = derived(EQ_RS1)?;
    let want = expected(
        &[("X1", "Y1", 1), ("X1", "Y2", 1), ("X2", "Y1", 1), ("X2", "Y2", -1)],
        Comparator::AtMost,
        2,
    );
    let ext = classical_extrema(&ineq.lhs())?;
    let class = classify(&ineq, &parse_scenario(CHSH_SCN).expect("fixture"))?;
    Ok(vec![
        Check::same("derived inequality", &want, &ineq),
        Check::same("bound", "2", ineq.bound),
        Check::close("classical maximum", 2.0, ext.max as f64, 0.0),
        Check::same("classification", "spatial", class),
    ])
}

fn kcbs_bound() -> Result<Vec<Check>, ReportError> {
    let five = derived(KCBS)?;
    let ext5 = classical_extrema(&five.lhs())?;
    let seven = derived(EQ_THIS2)?;
    let ext7 = classical_extrema(&seven.lhs())?;
    let class = classify(&five, &parse_scenario(KCBS_SCN).expect("fixture"))?;
    Ok(vec![
        Check::same("pentagon terms", poly_text(&cycle_sum(5)), lhs_text(&five)),
        Check::same("pentagon direction", ">=", five.direction.symbol()),
        Check::same("pentagon bound", "-3", five.bound),
        Check::close("pentagon classical minimum", -3.0, ext5.min as f64, 0.0),
        Check::same("pentagon classification", "contextual", class),
        Check::same("heptagon terms", poly_text(&cycle_sum(7)), lhs_text(&seven)),
        Check::same("heptagon bound", "-5", seven.bound),
        Check::close("heptagon classical minimum", -5.0, ext7.min as f64, 0.0),
    ])
}

fn ncycle_bounds() -> Result<Vec<Check>, ReportError> {
    let mut checks = Vec::new();
    for n in [5usize, 7, 9, 11] {
        let q = (n - 2) as i64;
        let plain = derive_inequality(&chained_cycle_source(n, false))?.inequality;
        let ext = classical_extrema(&plain.lhs())?;
        checks.push(Check::same(format!("{n}-cycle terms"), poly_text(&cycle_sum(n)), lhs_text(&plain)));
        checks.push(Check::same(format!("{n}-cycle bound"), format!(">= {}", -q), format!("{} {}", plain.direction.symbol(), plain.bound)));
        checks.push(Check::close(format!("{n}-cycle classical minimum"), -q as f64, ext.min as f64, 0.0));

        let alt = derive_inequality(&chained_cycle_source(n, true))?.inequality;
        let ext = classical_extrema(&alt.lhs())?;
        checks.push(Check::same(format!("alternating {n}-cycle bound"), format!("<= {q}"), format!("{} {}", alt.direction.symbol(), alt.bound)));
        checks.push(Check::close(format!("alternating {n}-cycle classical maximum"), q as f64, ext.max as f64, 0.0));
    }
    Ok(checks)
}

fn lg_bound() -> Result<Vec<Check>, ReportError> {
    let ineq = derived(LG_RS2)?;
    let want = expected(
        &[("J", "K", 1), ("K", "L", 1), ("L", "M", 1), ("J", "M", -1)],
        Comparator::AtMost,
        2,
    );
    let ext = classical_extrema(&ineq.lhs())?;
    let class = classify(&ineq, &parse_scenario(LG_SCN).expect("fixture"))?;
    Ok(vec![
        Check::same("derived inequality", &want, &ineq),
        Check::close("classical maximum", 2.0, ext.max as f64, 0.0),
        Check::same("classification", "temporal", class),
    ])
}

/// The hybrid inequality `⟨X1X2⟩ + ⟨X1Y2⟩ − ⟨X2Y1⟩ + ⟨Y1Y2⟩ <= 2`.
pub(crate) fn hybrid_inequality() -> CorrelationInequality {
    derive_inequality(&parsed(HYBRID_SOURCE))
        .expect("hybrid source derives")
        .inequality
}

fn hybrid_settings_of(settings: &std::collections::BTreeMap<crate::dsl::VariableId, BlochVector>) -> HybridSettings {
    HybridSettings {
        x1: settings[&var("X1")],
        x2: settings[&var("X2")],
        y1: settings[&var("Y1")],
        y2: settings[&var("Y2")],
    }
}

fn hybrid_singlet(search: &SearchConfig) -> Result<Vec<Check>, ReportError> {
    let ineq = derived(EQ_EKH)?;
    let want = expected(
        &[("X1", "X2", 1), ("X1", "Y2", 1), ("X2", "Y1", -1), ("Y1", "Y2", 1)],
        Comparator::AtMost,
        2,
    );
    let mixed = ineq.terms.iter().any(|t| t.kind == TermKind::SameParty)
        && ineq.terms.iter().any(|t| t.kind == TermKind::CrossParty);
    let class = classify(&ineq, &parse_scenario(HYBRID_SCN).expect("fixture"))?;

    let assignment = TermAssignment::by_party(&ineq, &[('X', Subsystem::A), ('Y', Subsystem::B)])?;
    let problem = ViolationProblem {
        inequality: ineq.clone(),
        assignment: assignment.clone(),
        family: StateFamily::Fixed(DensityMatrix::singlet()),
        parametrization: SettingsParametrization::Coplanar,
    };
    let best = maximize_violation(&problem, search)?;
    let norm = operator_norm(&build_f_operator(&hybrid_settings_of(&best.settings)).f)?;
    let ladder = HybridSettings::singlet_ladder();
    let matrix = evaluate_inequality_quantum(&ineq, &DensityMatrix::singlet(), &ladder.as_map(), &assignment)?;
    let t = 2.0 * SQRT_2;
    Ok(vec![
        Check::same("derived inequality", &want, &ineq),
        Check::same("mixed term kinds", true, mixed),
        Check::same("classification", "hybrid", class),
        Check::close("optimized singlet value", t, best.value, 1e-6),
        Check::close("operator norm at found settings", best.value, norm, 1e-9),
        Check::close("closed form on the singlet ladder", t, hybrid_f_singlet(&ladder), 1e-12),
        Check::close("matrix path on the singlet ladder", t, matrix, 1e-12),
    ])
}

fn hybrid_product() -> Result<Vec<Check>, ReportError> {
    let s = HybridSettings::quoted_ladder();
    let analytic = hybrid_f_product(&s.y2, &s.y2, &s);
    let ineq = hybrid_inequality();
    let assignment = TermAssignment::by_party(&ineq, &[('X', Subsystem::A), ('Y', Subsystem::B)])?;
    let matrix = evaluate_inequality_quantum(&ineq, &DensityMatrix::product(&s.y2, &s.y2), &s.as_map(), &assignment)?;
    Ok(vec![
        Check::close("closed form on |y2>|y2>", 3.0 / SQRT_2, analytic, 1e-12),
        Check::close("matrix path agrees", analytic, matrix, 1e-12),
        Check::above("exceeds the classical bound", 2.0, analytic),
    ])
}

fn tsirelson(grid: usize) -> Result<Vec<Check>, ReportError> {
    if grid < 2 {
        return Err(ReportError::Unsupported("the envelope grid needs at least 2 points per angle".into()));
    }
    let scan = scan_envelope(grid);
    let t = 2.0 * SQRT_2;
    let worst = scan.points.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        Check::close("grid maximum", t, scan.max, 1e-5),
        Check::close("value at (pi/4, -pi/4)", t, tsirelson_envelope(FRAC_PI_4, -FRAC_PI_4), 1e-5),
        Check::close("maximum sits at (pi/4, -pi/4) up to mirror symmetry", FRAC_PI_4, scan.argmax.0.abs().min(scan.argmax.1.abs()), PI / grid as f64),
        Check::at_most("everywhere on the grid", t, worst, 1e-12),
    ])
}

fn random_direction(rng: &mut ChaCha8Rng) -> BlochVector {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    BlochVector::from_spherical(z.acos(), phi)
}

fn s2_identity(seed: u64) -> Result<Vec<Check>, ReportError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s = HybridSettings {
            x1: random_direction(&mut rng),
            x2: random_direction(&mut rng),
            y1: random_direction(&mut rng),
            y2: random_direction(&mut rng),
        };
        let s2 = build_f_operator(&s).s2;
        worst = worst.max((&s2 * &s2).max_abs_diff(&s2_squared_identity(&s)));
    }
    Ok(vec![Check::at_most("largest entry difference over 100 settings", 0.0, worst, 1e-12)])
}

fn split_parts(expr: &RsExpression, first: usize) -> (RsExpression, RsExpression) {
    let part = |g: &[crate::dsl::LinearForm]| {
        RsExpression::new(g.to_vec(), 0, Comparator::AtLeast, g.len() as i64).expect("non-empty part")
    };
    let (a, b) = expr.groups().split_at(first);
    (part(a), part(b))
}

fn monogamy() -> Result<Vec<Check>, ReportError> {
    let whole = derive_inequality(&parsed(MONOGAMY))?.inequality;
    let (a, b) = split_parts(&parsed(MONOGAMY), 2);
    let chsh = derive_inequality(&a)?.inequality;
    let kcbs = derive_inequality(&b)?.inequality;
    let report = monogamy_check(&parse_scenario(MONOGAMY_SCN).expect("fixture"), &chsh, &kcbs)?;
    let sum = &chsh.lhs() + &kcbs.lhs();
    Ok(vec![
        Check::same("objective is the sum of both parts", poly_text(&sum), lhs_text(&whole)),
        Check::same("symbolic bound", "-5", whole.bound),
        Check::same("symbolic bound from the parts", "-5", report.combined.symbolic),
        Check::close("classical minimum", -5.0, report.combined.classical_min as f64, 0.0),
        Check::close("no-disturbance minimum", -5.0, report.combined.nodisturbance_min, 1e-7),
        Check::below("minimum without marginal consistency", -5.0 - 1e-7, report.relaxed_min),
    ])
}

fn protocol_mc(shots: u64, seed: u64) -> Result<Vec<Check>, ReportError> {
    if shots < 2 {
        return Err(ReportError::Unsupported("at least 2 shots are needed".into()));
    }
    let f = estimate_f(&DensityMatrix::singlet(), &HybridSettings::singlet_ladder(), shots, seed)?;
    let s = HybridSettings::coplanar(0.0, 0.0, FRAC_PI_4, 0.0);
    let rho = DensityMatrix::product(&s.x1, &s.y2);
    let sig = signaling_test(&rho, &s, shots, seed)?;
    let (alone, after) = analytic_signaling(&rho, &s)?;
    Ok(vec![
        Check::close("F estimate on the singlet", 2.0 * SQRT_2, f.f, 3.0 * f.stderr),
        Check::close("P(Y2=+1) alone", 1.0, alone, 1e-12),
        Check::close("P(Y2=+1) after Y1", 0.75, after, 1e-12),
        Check::close("sampled signaling gap", alone - after, sig.difference, 3.0 * sig.stderr),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_passes(t: Target, o: &TargetOptions) {
        let checks = run_target(t, o).unwrap();
        for c in &checks {
            assert!(c.pass, "{t}: {c:?}");
        }
    }

    #[test]
    fn names_round_trip() {
        for t in Target::ALL {
            assert_eq!(t.name().parse::<Target>().unwrap(), t);
        }
        assert!("nope".parse::<Target>().is_err());
    }

    #[test]
    fn cheap_targets_pass() {
        let o = TargetOptions { grid: 80, ..Default::default() };
        for t in [
            Target::ChshBound,
            Target::KcbsBound,
            Target::NcycleBounds,
            Target::LgBound,
            Target::HybridProduct,
            Target::TsirelsonEnvelope,
            Target::S2Identity,
            Target::Monogamy,
        ] {
            assert_passes(t, &o);
        }
    }

    #[test]
    fn small_protocol_run_passes() {
        assert_passes(Target::ProtocolMc, &TargetOptions { shots: 45_000, ..Default::default() });
    }

    #[test]
    fn failing_check_is_reported() {
        let c = Check::close("x", 1.0, 1.1, 0.05);
        assert!(!c.pass);
        assert!(Check::below("y", -5.0, -5.0).pass == false);
    }
}
