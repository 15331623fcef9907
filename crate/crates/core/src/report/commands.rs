use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, SQRT_2};

use serde::Serialize;

use super::{num, Estimate, Quantity, Report, ReportError, Source};
use crate::dsl::{Comparator, ScenarioSpec, VariableId};
use crate::lhv::{
    classical_extrema, jd_feasibility, nodisturbance_optimum, simplex::FEASIBILITY_TOL, Extrema,
    Feasibility, LhvError, Sense,
};
use crate::optimize::{
    maximize_violation, multistart_violation, scan_envelope, OptimizationResult, OptimizeError,
    SearchConfig, SettingsParametrization, StateFamily, ViolationProblem,
};
use crate::poly::{
    classify, derive_inequality, Classification, CorrelationInequality, DeriveWarning, Derivation,
};
use crate::protocol::{analytic_signaling, estimate_f, signaling_test, FEstimate, SignalingReport};
use crate::quantum::{
    evaluate_inequality_quantum, hermitian_eigenvalues, pauli_observable, BlochVector, CMatrix,
    DensityMatrix, HybridSettings, Subsystem, TermAssignment, TermRule,
};

fn describe_direction(c: Comparator) -> &'static str {
    match c {
        Comparator::AtMost => "maximum",
        Comparator::AtLeast => "minimum",
    }
}

fn tight(ineq: &CorrelationInequality, ext: &Extrema) -> bool {
    let edge = match ineq.direction {
        Comparator::AtMost => ext.max,
        Comparator::AtLeast => ext.min,
    };
    ineq.bound == num_rational::Ratio::from_integer(edge)
}

/// `w1<a> - w2<b> ...` with unit weights left implicit.
fn weighted_sum(terms: impl Iterator<Item = (String, f64)>) -> String {
    let mut out = String::new();
    for (i, (label, w)) in terms.enumerate() {
        let sign = match (i, w < 0.0) {
            (0, true) => "-",
            (0, false) => "",
            (_, true) => " - ",
            (_, false) => " + ",
        };
        out.push_str(sign);
        if (w.abs() - 1.0).abs() > 1e-12 {
            out.push_str(&num(w.abs()));
        }
        out.push_str(&label);
    }
    out
}

fn load_scenario(scenario: Option<&Source>) -> Result<Option<ScenarioSpec>, ReportError> {
    scenario.map(Source::scenario).transpose()
}

#[derive(Serialize)]
struct PathInputs<'a> {
    input: Option<&'a str>,
    scenario: Option<&'a str>,
    observations: Option<&'a str>,
}

impl<'a> PathInputs<'a> {
    fn new(input: Option<&'a Source>, scenario: Option<&'a Source>) -> Self {
        Self {
            input: input.map(|s| s.name.as_str()),
            scenario: scenario.map(|s| s.name.as_str()),
            observations: None,
        }
    }
}

#[derive(Serialize)]
struct ClassicalRange {
    min: Quantity,
    max: Quantity,
    extrema: Extrema,
    /// The derived bound equals the classical extremum.
    tight: bool,
}

fn classical_range(ineq: &CorrelationInequality) -> Result<ClassicalRange, ReportError> {
    let extrema = classical_extrema(&ineq.lhs())?;
    Ok(ClassicalRange {
        min: Quantity::exact(extrema.min as f64),
        max: Quantity::exact(extrema.max as f64),
        tight: tight(ineq, &extrema),
        extrema,
    })
}

#[derive(Serialize)]
struct DeriveResult {
    display: String,
    derivation: Derivation,
    classical: ClassicalRange,
    classification: Option<Classification>,
}

/// Expands a sum-of-squares source into its correlation inequality, with
/// the group parity checks, the brute-force classical range and, given a
/// scenario, the classification.
pub fn derive_report(input: &Source, scenario: Option<&Source>) -> Result<Report, ReportError> {
    let expr = input.expression()?;
    let derivation = derive_inequality(&expr)?;
    let spec = load_scenario(scenario)?;
    let classification = spec
        .as_ref()
        .map(|s| classify(&derivation.inequality, s))
        .transpose()?;
    let classical = classical_range(&derivation.inequality)?;
    let ineq = &derivation.inequality;

    let mut lines = vec![ineq.to_string()];
    let odd = derivation.groups.groups.iter().filter(|g| g.odd).count();
    let total = derivation.groups.groups.len();
    lines.push(if odd == total {
        format!("groups: {total}, all odd")
    } else {
        format!("groups: {total}, {} even", total - odd)
    });
    for w in &derivation.warnings {
        lines.push(match w {
            DeriveWarning::EvenGroup { index, term_count } => format!(
                "warning: group {index} has {term_count} terms; an even group can vanish and only adds >= 0"
            ),
            DeriveWarning::BoundTightened { stated, implied } => format!(
                "note: the odd groups force the left-hand side to be at least {implied}, stronger than the stated {stated}"
            ),
        });
    }
    lines.push(format!(
        "classical range: [{}, {}]{}",
        classical.extrema.min,
        classical.extrema.max,
        if classical.tight { ", bound is tight" } else { "" }
    ));
    if let Some(c) = classification {
        lines.push(format!("classification: {c}"));
    }

    let mut report = Report::new(
        "derive",
        PathInputs::new(Some(input), scenario),
        DeriveResult {
            display: ineq.to_string(),
            classical,
            classification,
            derivation,
        },
    );
    report.summary = lines;
    Ok(report)
}

#[derive(Serialize)]
struct NdBound {
    value: Quantity,
    /// Same optimum with marginal consistency dropped.
    relaxed: Quantity,
}

#[derive(Serialize)]
struct BoundResult {
    display: String,
    #[serde(with = "crate::poly::ratio_string")]
    bound: num_rational::Ratio<i64>,
    direction: Comparator,
    classical: ClassicalRange,
    nodisturbance: Option<NdBound>,
    note: Option<String>,
}

/// Classical and, with a scenario, no-disturbance optima of the left-hand
/// side in the direction that would violate the inequality.
pub fn bound_report(input: &Source, scenario: Option<&Source>) -> Result<Report, ReportError> {
    let derivation = derive_inequality(&input.expression()?)?;
    let ineq = derivation.inequality;
    let classical = classical_range(&ineq)?;
    let spec = load_scenario(scenario)?;
    let sense = match ineq.direction {
        Comparator::AtMost => Sense::Maximize,
        Comparator::AtLeast => Sense::Minimize,
    };
    let (mut nodisturbance, mut note) = (None, None);
    if let Some(spec) = &spec {
        let lhs = ineq.lhs();
        match nodisturbance_optimum(spec, &lhs, sense, false) {
            Ok(nd) => {
                let relaxed = nodisturbance_optimum(spec, &lhs, sense, true)?;
                nodisturbance = Some(NdBound {
                    value: Quantity::within(nd.value, FEASIBILITY_TOL),
                    relaxed: Quantity::within(relaxed.value, FEASIBILITY_TOL),
                });
            }
            Err(LhvError::TermOutsideContext(t)) => {
                note = Some(format!("{t} is not measured jointly in any context; no no-disturbance bound"));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut lines = vec![ineq.to_string()];
    let which = describe_direction(ineq.direction);
    let edge = match ineq.direction {
        Comparator::AtMost => classical.extrema.max,
        Comparator::AtLeast => classical.extrema.min,
    };
    lines.push(format!("classical {which}: {edge}"));
    if let Some(nd) = &nodisturbance {
        lines.push(format!("no-disturbance {which}: {}", num(nd.value.value)));
        lines.push(format!("without marginal consistency: {}", num(nd.relaxed.value)));
    }
    if let Some(n) = &note {
        lines.push(n.clone());
    }
    let mut report = Report::new(
        "bound",
        PathInputs::new(Some(input), scenario),
        BoundResult {
            display: ineq.to_string(),
            bound: ineq.bound,
            direction: ineq.direction,
            classical,
            nodisturbance,
            note,
        },
    );
    report.summary = lines;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckVerdict {
    Feasible,
    Infeasible,
}

#[derive(Serialize)]
struct InequalityCheck {
    display: String,
    observed: Quantity,
    holds: bool,
}

#[derive(Serialize)]
struct CheckResult {
    verdict: CheckVerdict,
    tolerance: f64,
    feasibility: Feasibility,
    inequality: Option<InequalityCheck>,
}

/// Joint-distribution test of observed correlators. Data are called
/// infeasible only when the separating certificate is violated by more
/// than `tolerance`.
pub fn check_report(
    scenario: &Source,
    observations: &Source,
    input: Option<&Source>,
    tolerance: f64,
) -> Result<(Report, CheckVerdict), ReportError> {
    let spec = scenario.scenario()?;
    let observed = super::parse_observations(&observations.name, &observations.text)?;
    let feasibility = jd_feasibility(&spec, &observed)?;
    let verdict = match &feasibility {
        Feasibility::Infeasible { certificate } if certificate.violation() > tolerance => CheckVerdict::Infeasible,
        _ => CheckVerdict::Feasible,
    };

    let mut lines = Vec::new();
    match &feasibility {
        Feasibility::Feasible { model, residual, .. } => lines.push(format!(
            "feasible: a {}-point classical model reproduces the data (residual {residual:.1e})",
            model.support().len()
        )),
        Feasibility::Infeasible { certificate } => {
            let terms = certificate
                .correlator_weights
                .iter()
                .map(|(a, b, w)| (format!("<{a}{b}>"), *w))
                .chain(certificate.mean_weights.iter().map(|(a, w)| (format!("<{a}>"), *w)));
            lines.push(format!(
                "{}: {} = {} exceeds the classical maximum {}",
                if verdict == CheckVerdict::Infeasible { "infeasible" } else { "feasible within tolerance" },
                weighted_sum(terms),
                num(certificate.observed),
                num(certificate.classical_max)
            ));
        }
    }

    let inequality = match input {
        None => None,
        Some(src) => {
            let ineq = derive_inequality(&src.expression()?)?.inequality;
            let mut missing = None;
            let value = ineq.evaluate(|a, b| {
                observed.correlators.get(&(a, b)).copied().unwrap_or_else(|| {
                    missing.get_or_insert(format!("<{a}{b}>"));
                    f64::NAN
                })
            });
            if let Some(m) = missing {
                return Err(ReportError::Unsupported(format!(
                    "{}: correlator {m} is not in {}",
                    src.name, observations.name
                )));
            }
            let holds = ineq.holds(value, tolerance);
            lines.push(format!(
                "{ineq}: observed {}, {}",
                num(value),
                if holds { "satisfied" } else { "violated" }
            ));
            Some(InequalityCheck {
                display: ineq.to_string(),
                observed: Quantity::within(value, tolerance),
                holds,
            })
        }
    };

    let inputs = PathInputs {
        input: input.map(|s| s.name.as_str()),
        scenario: Some(&scenario.name),
        observations: Some(&observations.name),
    };
    let mut report = Report::new(
        "check",
        inputs,
        CheckResult {
            verdict,
            tolerance,
            feasibility,
            inequality,
        },
    );
    report.summary = lines;
    Ok((report, verdict))
}

/// Quantum states for `optimize` and `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StateChoice {
    /// `(|01⟩ − |10⟩)/√2`.
    Singlet,
    /// `|n_A⟩|n_B⟩`; free in `optimize`, `|ŷ2⟩|ŷ2⟩` in `simulate`.
    Product,
    /// `|n⟩|n⟩` with one free direction.
    EqualProduct,
    /// Qubit B in the `ŷ2` eigenstate with `ŷ1` at 45 degrees (`simulate` only).
    Signaling,
}

impl StateChoice {
    /// State and settings used by `simulate`.
    pub fn protocol_setup(self) -> (DensityMatrix, HybridSettings) {
        match self {
            StateChoice::Singlet => (DensityMatrix::singlet(), HybridSettings::singlet_ladder()),
            StateChoice::Product | StateChoice::EqualProduct => {
                let s = HybridSettings::quoted_ladder();
                (DensityMatrix::product(&s.y2, &s.y2), s)
            }
            StateChoice::Signaling => {
                let s = HybridSettings::coplanar(0.0, 0.0, FRAC_PI_4, 0.0);
                (DensityMatrix::product(&s.x1, &s.y2), s)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeOptions {
    pub state: StateChoice,
    pub parametrization: SettingsParametrization,
    pub search: SearchConfig,
    /// Extra random-start refinements on top of the grid search.
    pub starts: usize,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            state: StateChoice::Singlet,
            parametrization: SettingsParametrization::Coplanar,
            search: SearchConfig::default(),
            starts: 0,
            seed: super::DEFAULT_SEED,
        }
    }
}

/// Puts each party on a qubit and each same-party term in measurement
/// order. Parties come from the scenario when given, else from variable
/// letters.
fn qubit_assignment(
    ineq: &CorrelationInequality,
    spec: Option<&ScenarioSpec>,
) -> Result<(TermAssignment, BTreeMap<VariableId, Subsystem>), ReportError> {
    let party = |v: VariableId| -> Result<String, ReportError> {
        match spec {
            Some(s) => s
                .party_of(v)
                .map(str::to_string)
                .ok_or_else(|| ReportError::Unsupported(format!("{v} has no party in the scenario"))),
            None => Ok(v.party().to_string()),
        }
    };
    let mut parties: Vec<String> = Vec::new();
    let mut placement = BTreeMap::new();
    for v in ineq.variables() {
        let p = party(v)?;
        let slot = match parties.iter().position(|q| *q == p) {
            Some(i) => i,
            None => {
                parties.push(p);
                parties.len() - 1
            }
        };
        let sub = match slot {
            0 => Subsystem::A,
            1 => Subsystem::B,
            _ => {
                return Err(ReportError::Unsupported(format!(
                    "the qubit model has two parties but the inequality uses {}{}",
                    parties.join(", "),
                    if spec.is_none() { "; pass a scenario to group variables" } else { "" }
                )))
            }
        };
        placement.insert(v, sub);
    }
    let mut assignment = TermAssignment::new();
    for t in &ineq.terms {
        let (sa, sb) = (placement[&t.first], placement[&t.second]);
        let rule = if sa != sb {
            TermRule::Tensor { a: sa, b: sb }
        } else {
            let (first, second) = spec
                .and_then(|s| s.sequential_order(t.first, t.second))
                .unwrap_or((t.first, t.second));
            TermRule::Sequential { subsystem: sa, first, second }
        };
        assignment.insert(t.first, t.second, rule);
    }
    Ok((assignment, placement))
}

/// The left-hand side as a two-qubit operator: tensor terms give
/// `c (a·σ)⊗(b·σ)` and sequential terms the state-independent `c (a·b) I`.
fn lhs_operator(
    ineq: &CorrelationInequality,
    assignment: &TermAssignment,
    settings: &BTreeMap<VariableId, BlochVector>,
) -> CMatrix {
    let mut op = CMatrix::zeros(4);
    for t in &ineq.terms {
        let (a, b) = (&settings[&t.first], &settings[&t.second]);
        let term = match assignment.get(t.first, t.second).expect("every term has a rule") {
            TermRule::Tensor { a: Subsystem::A, .. } => pauli_observable(a).kron(&pauli_observable(b)),
            TermRule::Tensor { .. } => pauli_observable(b).kron(&pauli_observable(a)),
            TermRule::Sequential { .. } => CMatrix::identity(4).scale_re(a.dot(b)),
        };
        op = &op + &term.scale_re(t.coefficient as f64);
    }
    op
}

#[derive(Serialize)]
struct OptimizeResult {
    display: String,
    #[serde(with = "crate::poly::ratio_string")]
    bound: num_rational::Ratio<i64>,
    value: Quantity,
    violation: f64,
    placement: BTreeMap<VariableId, Subsystem>,
    best: OptimizationResult,
    /// Extreme eigenvalue of the left-hand operator at the found settings:
    /// the best any two-qubit state can do there.
    operator_bound: Quantity,
    budget_exhausted: bool,
}

/// Searches settings (and product states) for the largest violation.
pub fn optimize_report(
    input: &Source,
    scenario: Option<&Source>,
    options: &OptimizeOptions,
) -> Result<Report, ReportError> {
    let ineq = derive_inequality(&input.expression()?)?.inequality;
    let spec = load_scenario(scenario)?;
    let (assignment, placement) = qubit_assignment(&ineq, spec.as_ref())?;
    let family = match options.state {
        StateChoice::Singlet => StateFamily::Fixed(DensityMatrix::singlet()),
        StateChoice::Product => StateFamily::Product,
        StateChoice::EqualProduct => StateFamily::EqualProduct,
        StateChoice::Signaling => {
            return Err(ReportError::Unsupported("the signaling state is only used by simulate".into()))
        }
    };
    let problem = ViolationProblem {
        inequality: ineq.clone(),
        assignment: assignment.clone(),
        family,
        parametrization: options.parametrization,
    };
    let (mut best, budget_exhausted) = match maximize_violation(&problem, &options.search) {
        Ok(r) => (r, false),
        Err(OptimizeError::BudgetExhausted { best }) => {
            let (settings, state_directions, _) = problem.decode(&best.parameters);
            let r = OptimizationResult {
                value: best.value,
                settings,
                state_directions,
                evaluations: best.evaluations,
                grid_value: best.grid_value,
                converged: false,
                parameters: best.parameters,
            };
            (r, true)
        }
        Err(e) => return Err(e.into()),
    };
    if options.starts > 0 {
        let sign = if ineq.direction == Comparator::AtMost { 1.0 } else { -1.0 };
        for r in multistart_violation(&problem, options.starts, options.seed, &options.search)? {
            if sign * r.value > sign * best.value {
                best = r;
            }
        }
    }
    let (settings, _, rho) = problem.decode(&best.parameters);
    let recheck = evaluate_inequality_quantum(&ineq, &rho, &settings, &assignment)?;
    let eig = hermitian_eigenvalues(&lhs_operator(&ineq, &assignment, &settings))?;
    let edge = match ineq.direction {
        Comparator::AtMost => eig[eig.len() - 1],
        Comparator::AtLeast => eig[0],
    };
    let violation = match ineq.direction {
        Comparator::AtMost => best.value - ineq.bound_f64(),
        Comparator::AtLeast => ineq.bound_f64() - best.value,
    };

    let which = describe_direction(ineq.direction);
    let mut report = Report::new(
        "optimize",
        serde_json::json!({
            "input": input.name,
            "scenario": scenario.map(|s| s.name.as_str()),
            "options": options,
        }),
        OptimizeResult {
            display: ineq.to_string(),
            bound: ineq.bound,
            value: Quantity::within(best.value, (recheck - best.value).abs().max(options.search.min_step)),
            violation,
            placement,
            operator_bound: Quantity::within(edge, crate::quantum::HERMITIAN_TOL),
            budget_exhausted,
            best,
        },
    );
    let found = report.result["value"]["value"].as_f64().unwrap_or(f64::NAN);
    let evaluations = report.result["best"]["evaluations"].clone();
    report.line(ineq.to_string());
    report.line(format!(
        "quantum {which} found: {} (classical bound {})",
        num(found),
        num(ineq.bound_f64())
    ));
    report.line(format!("operator {which} at these settings: {}", num(edge)));
    let settings_line: Vec<String> = settings
        .iter()
        .map(|(v, b)| {
            let c = b.components();
            format!("{v}=({:.6}, {:.6}, {:.6})", c[0], c[1], c[2])
        })
        .collect();
    report.line(format!("settings: {}", settings_line.join(" ")));
    report.line(format!(
        "evaluations: {}{}",
        evaluations,
        if budget_exhausted { " (budget exhausted)" } else { "" }
    ));
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOptions {
    pub state: StateChoice,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Serialize)]
struct SimulateResult {
    settings: HybridSettings,
    estimate: FEstimate,
    f: Estimate,
    exact_f: Quantity,
    /// `(estimate − exact) / stderr`.
    z: f64,
    signaling: SignalingReport,
    exact_signaling: (Quantity, Quantity),
}

/// Monte Carlo run of the hybrid protocol plus the sequential signaling
/// test on the same state and settings.
pub fn simulate_report(options: &SimulateOptions) -> Result<Report, ReportError> {
    if options.shots < 2 {
        return Err(ReportError::Unsupported("at least 2 shots are needed".into()));
    }
    let (rho, settings) = options.state.protocol_setup();
    let estimate = estimate_f(&rho, &settings, options.shots, options.seed)?;
    let signaling = signaling_test(&rho, &settings, options.shots, options.seed)?;
    let (alone, after) = analytic_signaling(&rho, &settings)?;
    let exact = exact_hybrid(&rho, &settings)?;
    let z = (estimate.f - exact) / estimate.stderr;

    let mut report = Report::new(
        "simulate",
        options,
        SimulateResult {
            settings,
            f: Estimate { value: estimate.f, stderr: estimate.stderr },
            exact_f: Quantity::within(exact, 1e-12),
            z,
            estimate: estimate.clone(),
            signaling,
            exact_signaling: (Quantity::within(alone, 1e-12), Quantity::within(after, 1e-12)),
        },
    );
    report.line(format!(
        "F = {} ± {} over {} shots (exact {}, z = {:.2})",
        num(estimate.f),
        num(estimate.stderr),
        options.shots,
        num(exact),
        z
    ));
    for t in &estimate.terms {
        report.line(format!(
            "  {} = {} ± {} ({} data)",
            t.datum.label(),
            num(t.mean),
            num(t.stderr),
            t.shots
        ));
    }
    report.line(format!(
        "P(Y2=+1): alone {} ± {}, after Y1 {} ± {} (exact {} vs {}), z = {:.2}",
        num(signaling.p_alone),
        num(signaling.stderr_alone),
        num(signaling.p_after),
        num(signaling.stderr_after),
        num(alone),
        num(after),
        signaling.z
    ));
    Ok(report)
}

/// Exact hybrid value on `rho`, via the matrix path.
fn exact_hybrid(rho: &DensityMatrix, s: &HybridSettings) -> Result<f64, ReportError> {
    let ineq = super::reproduce::hybrid_inequality();
    let assignment = TermAssignment::by_party(&ineq, &[('X', Subsystem::A), ('Y', Subsystem::B)])?;
    Ok(evaluate_inequality_quantum(&ineq, rho, &s.as_map(), &assignment)?)
}

#[derive(Serialize)]
struct ScanResult {
    resolution: usize,
    max: Quantity,
    argmax: (f64, f64),
    tsirelson: f64,
    points_above_tsirelson: usize,
}

/// Envelope of the hybrid value over the two setting angles.
pub fn scan_report(resolution: usize) -> Result<Report, ReportError> {
    if resolution < 2 {
        return Err(ReportError::Unsupported("the grid needs at least 2 points per angle".into()));
    }
    let scan = scan_envelope(resolution);
    let tsirelson = 2.0 * SQRT_2;
    let above = scan.points.iter().filter(|p| p.2 > tsirelson + 1e-12).count();
    let mut report = Report::new(
        "scan",
        serde_json::json!({ "grid": resolution }),
        ScanResult {
            resolution,
            max: Quantity::within(scan.max, 1e-12),
            argmax: scan.argmax,
            tsirelson,
            points_above_tsirelson: above,
        },
    );
    report.line(format!(
        "grid {resolution}x{resolution}: max {} at ({}, {}), {above} points above 2√2",
        num(scan.max),
        num(scan.argmax.0),
        num(scan.argmax.1)
    ));
    report.csv = Some(scan.to_csv());
    Ok(report)
}
