use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::choice::{admissible_data, Datum, LocalChoice, MeasurementChoice};
use crate::quantum::{
    embed, qubit_projector, BlochVector, CMatrix, DensityMatrix, HybridSettings, QuantumError,
    Subsystem,
};

const CHUNK: u64 = 1 << 13;

/// Outcomes of one shot; a slot is filled iff that observable was measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcomes {
    pub x1: Option<i8>,
    pub x2: Option<i8>,
    pub y1: Option<i8>,
    pub y2: Option<i8>,
}

impl Outcomes {
    fn set(&mut self, party: Subsystem, which: u8, value: i8) {
        let slot = match (party, which) {
            (Subsystem::A, 1) => &mut self.x1,
            (Subsystem::A, _) => &mut self.x2,
            (Subsystem::B, 1) => &mut self.y1,
            (Subsystem::B, _) => &mut self.y2,
        };
        *slot = Some(value);
    }

    /// Product of the two outcomes behind `datum`, if both were measured.
    pub fn product(&self, datum: Datum) -> Option<i8> {
        let (a, b) = match datum {
            Datum::X1X2 => (self.x1, self.x2),
            Datum::X1Y1 => (self.x1, self.y1),
            Datum::X1Y2 => (self.x1, self.y2),
            Datum::X2Y1 => (self.x2, self.y1),
            Datum::Y1Y2 => (self.y1, self.y2),
        };
        Some(a? * b?)
    }
}

/// One simulated run of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShotRecord {
    pub choice: MeasurementChoice,
    pub outcomes: Outcomes,
    /// Random stream the shot drew from (its index under the master seed).
    pub stream: u64,
}

impl fmt::Display for ShotRecord {
    /// `<stream> <alice> <bob> [NAME=±1 ...]`, outcomes in time order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.stream, self.choice)?;
        for (name, v) in [("X1", self.outcomes.x1), ("Y1", self.outcomes.y1), ("X2", self.outcomes.x2), ("Y2", self.outcomes.y2)] {
            if let Some(v) = v {
                write!(f, " {name}={}", if v > 0 { "+1" } else { "-1" })?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed shot line `{0}`")]
pub struct InvalidShotLine(pub String);

impl FromStr for ShotRecord {
    type Err = InvalidShotLine;

    fn from_str(line: &str) -> Result<Self, InvalidShotLine> {
        let bad = || InvalidShotLine(line.to_string());
        let mut parts = line.split_whitespace();
        let stream = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let a = parts.next().ok_or_else(bad)?;
        let b = parts.next().ok_or_else(bad)?;
        let choice: MeasurementChoice = format!("{a} {b}").parse().map_err(|_| bad())?;
        let mut outcomes = Outcomes::default();
        for item in parts {
            let (name, value) = item.split_once('=').ok_or_else(bad)?;
            let v = match value {
                "+1" => 1,
                "-1" => -1,
                _ => return Err(bad()),
            };
            let slot = match name {
                "X1" => &mut outcomes.x1,
                "X2" => &mut outcomes.x2,
                "Y1" => &mut outcomes.y1,
                "Y2" => &mut outcomes.y2,
                _ => return Err(bad()),
            };
            if slot.replace(v).is_some() {
                return Err(bad());
            }
        }
        let record = ShotRecord { choice, outcomes, stream };
        if record.outcomes != expected_slots(choice, &outcomes) {
            return Err(bad());
        }
        Ok(record)
    }
}

/// Keeps only the slots `choice` measures (used to validate parsed lines).
fn expected_slots(choice: MeasurementChoice, o: &Outcomes) -> Outcomes {
    let mut out = Outcomes::default();
    for (party, local) in [(Subsystem::A, choice.alice), (Subsystem::B, choice.bob)] {
        for which in [local.at_t1(), local.at_t2()].into_iter().flatten() {
            let v = match (party, which) {
                (Subsystem::A, 1) => o.x1,
                (Subsystem::A, _) => o.x2,
                (Subsystem::B, 1) => o.y1,
                (Subsystem::B, _) => o.y2,
            };
            match v {
                Some(v) => out.set(party, which, v),
                None => return Outcomes { x1: Some(0), ..Outcomes::default() },
            }
        }
    }
    out
}

/// Writes one [`ShotRecord`] per line.
pub fn write_shot_dump<W: Write>(mut w: W, records: &[ShotRecord]) -> io::Result<()> {
    for r in records {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// Measurement `(party, observable index)`.
type Step = (Subsystem, u8);

/// Outcome tables for one choice: the `t1` joint distribution and, for
/// each `t1` outcome, the conditional `t2` distribution. Outcome tuples are
/// indexed by bits in step order, set bit = +1.
#[derive(Debug, Clone)]
struct ShotPlan {
    choice: MeasurementChoice,
    t1: Vec<Step>,
    t2: Vec<Step>,
    p1: Vec<f64>,
    p2: Vec<Vec<f64>>,
}

fn direction(settings: &HybridSettings, (party, which): Step) -> &BlochVector {
    match (party, which) {
        (Subsystem::A, 1) => &settings.x1,
        (Subsystem::A, _) => &settings.x2,
        (Subsystem::B, 1) => &settings.y1,
        (Subsystem::B, _) => &settings.y2,
    }
}

fn sign(bits: usize, len: usize, i: usize) -> i8 {
    if (bits >> (len - 1 - i)) & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Product of projectors for `steps` with outcomes `bits`.
fn projector(settings: &HybridSettings, steps: &[Step], bits: usize) -> Result<CMatrix, QuantumError> {
    let mut p = CMatrix::identity(4);
    for (i, s) in steps.iter().enumerate() {
        p = &p * &embed(&qubit_projector(direction(settings, *s), sign(bits, steps.len(), i)), s.0, 4)?;
    }
    Ok(p)
}

impl ShotPlan {
    fn new(rho: &DensityMatrix, settings: &HybridSettings, choice: MeasurementChoice) -> Result<Self, QuantumError> {
        if rho.dim() != 4 {
            return Err(QuantumError::DimensionMismatch { expected: 4, found: rho.dim() });
        }
        let mut t1 = Vec::new();
        let mut t2 = Vec::new();
        for (party, local) in [(Subsystem::A, choice.alice), (Subsystem::B, choice.bob)] {
            t1.extend(local.at_t1().map(|w| (party, w)));
            t2.extend(local.at_t2().map(|w| (party, w)));
        }
        let mut p1 = Vec::with_capacity(1 << t1.len());
        let mut p2 = Vec::with_capacity(1 << t1.len());
        for b1 in 0..1usize << t1.len() {
            let q = projector(settings, &t1, b1)?;
            // Lüders update; the two factors commute (different qubits).
            let post = &(&q * rho.matrix()) * &q;
            let mass = post.trace().re.max(0.0);
            p1.push(mass);
            let mut cond = Vec::with_capacity(1 << t2.len());
            for b2 in 0..1usize << t2.len() {
                let r = projector(settings, &t2, b2)?;
                let joint = post.trace_product_re(&r).max(0.0);
                cond.push(if mass > 0.0 { joint / mass } else { 0.0 });
            }
            p2.push(cond);
        }
        Ok(Self { choice, t1, t2, p1, p2 })
    }

    fn sample(&self, u1: f64, u2: f64, stream: u64) -> ShotRecord {
        let b1 = pick(&self.p1, u1);
        let b2 = pick(&self.p2[b1], u2);
        let mut outcomes = Outcomes::default();
        for (i, s) in self.t1.iter().enumerate() {
            outcomes.set(s.0, s.1, sign(b1, self.t1.len(), i));
        }
        for (i, s) in self.t2.iter().enumerate() {
            outcomes.set(s.0, s.1, sign(b2, self.t2.len(), i));
        }
        ShotRecord { choice: self.choice, outcomes, stream }
    }
}

/// Inverse-CDF draw; rounding slack falls to the last non-zero cell.
fn pick(p: &[f64], u: f64) -> usize {
    let total: f64 = p.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in p.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    p.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// The two uniforms of shot `stream` under `seed`.
fn uniforms(seed: u64, stream: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (rng.random::<f64>(), rng.random::<f64>())
}

/// Simulates shot `stream` of `choice`: Born sampling of the `t1`
/// measurements, Lüders collapse, then the `t2` measurements.
pub fn simulate_shot(
    rho: &DensityMatrix,
    choice: MeasurementChoice,
    settings: &HybridSettings,
    seed: u64,
    stream: u64,
) -> Result<ShotRecord, QuantumError> {
    let plan = ShotPlan::new(rho, settings, choice)?;
    let (u1, u2) = uniforms(seed, stream);
    Ok(plan.sample(u1, u2, stream))
}

/// Simulates shots `0..shots`, shot `i` using `choices[i % len]`.
pub fn simulate_shots(
    rho: &DensityMatrix,
    settings: &HybridSettings,
    choices: &[MeasurementChoice],
    shots: u64,
    seed: u64,
) -> Result<Vec<ShotRecord>, QuantumError> {
    let plans = choices
        .iter()
        .map(|c| ShotPlan::new(rho, settings, *c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..shots)
        .into_par_iter()
        .map(|i| {
            let (u1, u2) = uniforms(seed, i);
            plans[(i % plans.len() as u64) as usize].sample(u1, u2, i)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub datum: Datum,
    pub mean: f64,
    pub stderr: f64,
    pub shots: u64,
}

impl CorrelatorEstimate {
    /// From the sum of `n` products of ±1 outcomes.
    fn from_sum(datum: Datum, sum: i64, n: u64) -> Self {
        if n == 0 {
            return Self { datum, mean: f64::NAN, stderr: f64::NAN, shots: 0 };
        }
        let mean = sum as f64 / n as f64;
        let var = if n > 1 { (1.0 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64 } else { 0.0 };
        Self { datum, mean, stderr: (var / n as f64).sqrt(), shots: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FEstimate {
    pub terms: Vec<CorrelatorEstimate>,
    pub f: f64,
    /// Root-sum-square of the per-term standard errors; terms are estimated
    /// from disjoint or same-shot samples and covariance is ignored.
    pub stderr: f64,
    pub shots: u64,
}

/// Per-datum sums `(Σ product, count)` over shots `0..shots`.
fn tally(
    rho: &DensityMatrix,
    settings: &HybridSettings,
    choices: &[MeasurementChoice],
    shots: u64,
    seed: u64,
) -> Result<[(i64, u64); 5], QuantumError> {
    let plans = choices
        .iter()
        .map(|c| ShotPlan::new(rho, settings, *c))
        .collect::<Result<Vec<_>, _>>()?;
    let data: Vec<Vec<Datum>> = choices.iter().map(|c| admissible_data(*c)).collect();
    let chunks = shots.div_ceil(CHUNK);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [(0i64, 0u64); 5];
            for i in c * CHUNK..((c + 1) * CHUNK).min(shots) {
                let k = (i % plans.len() as u64) as usize;
                let (u1, u2) = uniforms(seed, i);
                let rec = plans[k].sample(u1, u2, i);
                for d in &data[k] {
                    let slot = &mut acc[*d as usize];
                    slot.0 += i64::from(rec.outcomes.product(*d).expect("admissible data are measured"));
                    slot.1 += 1;
                }
            }
            acc
        })
        .reduce(
            || [(0, 0); 5],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.0 += y.0;
                    x.1 += y.1;
                }
                a
            },
        );
    Ok(sums)
}

/// Runs `shots` shots cycling over the nine data-yielding choices, pools
/// the admissible data and combines them into the hybrid value.
pub fn estimate_f(
    rho: &DensityMatrix,
    settings: &HybridSettings,
    shots: u64,
    seed: u64,
) -> Result<FEstimate, QuantumError> {
    let sums = tally(rho, settings, &MeasurementChoice::data_yielding(), shots, seed)?;
    let terms: Vec<CorrelatorEstimate> = Datum::ALL
        .into_iter()
        .map(|d| CorrelatorEstimate::from_sum(d, sums[d as usize].0, sums[d as usize].1))
        .collect();
    let mut f = 0.0;
    let mut var = 0.0;
    for t in &terms {
        let c = f64::from(t.datum.hybrid_coefficient());
        if c != 0.0 {
            f += c * t.mean;
            var += t.stderr * t.stderr;
        }
    }
    Ok(FEstimate { terms, f, stderr: var.sqrt(), shots })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalingReport {
    /// `P(Y2 = +1)` with `Y2` measured alone.
    pub p_alone: f64,
    pub stderr_alone: f64,
    /// `P(Y2 = +1)` when `Y1` is measured first.
    pub p_after: f64,
    pub stderr_after: f64,
    pub difference: f64,
    pub stderr: f64,
    /// `difference / stderr`; infinite when the difference is exact.
    pub z: f64,
    pub shots: u64,
}

fn proportion(hits: u64, n: u64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    let se = if n > 1 { (p * (1.0 - p) / (n - 1) as f64).sqrt() } else { 0.0 };
    (p, se)
}

/// Compares `P(Y2 = +1)` under choices `(∅, Y2)` and `(∅, Y1 then Y2)`,
/// alternating shots between the two.
pub fn signaling_test(
    rho: &DensityMatrix,
    settings: &HybridSettings,
    shots: u64,
    seed: u64,
) -> Result<SignalingReport, QuantumError> {
    let choices = [
        MeasurementChoice::new(LocalChoice::None, LocalChoice::Second),
        MeasurementChoice::new(LocalChoice::None, LocalChoice::Both),
    ];
    let plans = choices
        .iter()
        .map(|c| ShotPlan::new(rho, settings, *c))
        .collect::<Result<Vec<_>, _>>()?;
    let chunks = shots.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [(0u64, 0u64); 2];
            for i in c * CHUNK..((c + 1) * CHUNK).min(shots) {
                let k = (i % 2) as usize;
                let (u1, u2) = uniforms(seed, i);
                let rec = plans[k].sample(u1, u2, i);
                acc[k].0 += u64::from(rec.outcomes.y2 == Some(1));
                acc[k].1 += 1;
            }
            acc
        })
        .reduce(
            || [(0, 0); 2],
            |a, b| [(a[0].0 + b[0].0, a[0].1 + b[0].1), (a[1].0 + b[1].0, a[1].1 + b[1].1)],
        );
    let (p_alone, stderr_alone) = proportion(counts[0].0, counts[0].1);
    let (p_after, stderr_after) = proportion(counts[1].0, counts[1].1);
    let difference = p_alone - p_after;
    let stderr = (stderr_alone.powi(2) + stderr_after.powi(2)).sqrt();
    let z = if stderr > 0.0 {
        difference / stderr
    } else if difference == 0.0 {
        0.0
    } else {
        difference.signum() * f64::INFINITY
    };
    Ok(SignalingReport { p_alone, stderr_alone, p_after, stderr_after, difference, stderr, z, shots })
}

/// Exact `(P(Y2 = +1) alone, P(Y2 = +1) after Y1)`.
pub fn analytic_signaling(rho: &DensityMatrix, settings: &HybridSettings) -> Result<(f64, f64), QuantumError> {
    let alone = ShotPlan::new(rho, settings, MeasurementChoice::new(LocalChoice::None, LocalChoice::Second))?;
    let after = ShotPlan::new(rho, settings, MeasurementChoice::new(LocalChoice::None, LocalChoice::Both))?;
    let p_after = after.p1.iter().zip(&after.p2).map(|(p, cond)| p * cond[1]).sum();
    Ok((alone.p1[1], p_after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn all_z() -> HybridSettings {
        HybridSettings::coplanar(0.0, 0.0, 0.0, 0.0)
    }

    #[test]
    fn singlet_same_axis_is_anticorrelated() {
        let rho = DensityMatrix::singlet();
        let c = MeasurementChoice::new(LocalChoice::First, LocalChoice::First);
        for i in 0..200 {
            let r = simulate_shot(&rho, c, &all_z(), 7, i).unwrap();
            assert_eq!(r.outcomes.x1.unwrap(), -r.outcomes.y1.unwrap());
            assert!(r.outcomes.x2.is_none() && r.outcomes.y2.is_none());
        }
    }

    #[test]
    fn empty_choice_has_no_outcomes() {
        let c = MeasurementChoice::new(LocalChoice::None, LocalChoice::None);
        let r = simulate_shot(&DensityMatrix::singlet(), c, &all_z(), 1, 0).unwrap();
        assert_eq!(r.outcomes, Outcomes::default());
    }

    #[test]
    fn repeated_measurement_repeats() {
        let n = crate::quantum::BlochVector::in_xz_plane(1.1);
        let rho = DensityMatrix::product(&n, &n);
        let s = HybridSettings::coplanar(0.4, 0.4, 0.0, 0.0);
        let c = MeasurementChoice::new(LocalChoice::Both, LocalChoice::None);
        for i in 0..200 {
            let r = simulate_shot(&rho, c, &s, 3, i).unwrap();
            assert_eq!(r.outcomes.x1, r.outcomes.x2);
        }
    }

    #[test]
    fn reproducible_and_chunk_independent() {
        let rho = DensityMatrix::singlet();
        let s = HybridSettings::singlet_ladder();
        let choices = MeasurementChoice::data_yielding();
        let a = simulate_shots(&rho, &s, &choices, 500, 42).unwrap();
        let b = simulate_shots(&rho, &s, &choices, 500, 42).unwrap();
        assert_eq!(a, b);
        for r in a.iter().step_by(37) {
            assert_eq!(simulate_shot(&rho, r.choice, &s, 42, r.stream).unwrap(), *r);
        }
        let c = simulate_shots(&rho, &s, &choices, 500, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn shot_lines_round_trip() {
        let rho = DensityMatrix::singlet();
        let records = simulate_shots(&rho, &HybridSettings::singlet_ladder(), &MeasurementChoice::all(), 64, 5).unwrap();
        let mut buf = Vec::new();
        write_shot_dump(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: Vec<ShotRecord> = text.lines().map(|l| l.parse().unwrap()).collect();
        assert_eq!(parsed, records);
        assert!("3 X1 - Y1=+1".parse::<ShotRecord>().is_err());
        assert!("3 X1 - X1=+1 X1=-1".parse::<ShotRecord>().is_err());
        assert!("3 X1 -".parse::<ShotRecord>().is_err());
    }

    #[test]
    fn signaling_probabilities_exact() {
        let s = HybridSettings::coplanar(0.0, 0.0, FRAC_PI_4, 0.0);
        let rho = DensityMatrix::product(&s.x1, &s.y2);
        let (alone, after) = analytic_signaling(&rho, &s).unwrap();
        assert!((alone - 1.0).abs() < 1e-12);
        let c = (std::f64::consts::PI / 8.0).cos();
        let sn = (std::f64::consts::PI / 8.0).sin();
        assert!((after - (c.powi(4) + sn.powi(4))).abs() < 1e-12);
        assert!((after - 0.75).abs() < 1e-12);
    }

    #[test]
    fn no_signaling_between_repeats() {
        let s = HybridSettings::coplanar(0.0, 0.0, 0.3, 0.3);
        let rho = DensityMatrix::product(&s.x1, &s.y2);
        let r = signaling_test(&rho, &s, 20_000, 9).unwrap();
        let (alone, after) = analytic_signaling(&rho, &s).unwrap();
        assert!((alone - after).abs() < 1e-12);
        assert!(r.z.abs() < 5.0);
    }

    #[test]
    fn mixed_b_is_fair() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let s = HybridSettings::coplanar(0.0, 0.0, FRAC_PI_4, 0.0);
        let (alone, after) = analytic_signaling(&rho, &s).unwrap();
        assert!((alone - 0.5).abs() < 1e-12 && (after - 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_estimate_is_sane() {
        let e = estimate_f(&DensityMatrix::singlet(), &HybridSettings::singlet_ladder(), 90_000, 1).unwrap();
        assert_eq!(e.terms.iter().map(|t| t.shots).sum::<u64>(), 90_000 / 9 * 13);
        assert!((e.f - 2.0 * 2f64.sqrt()).abs() < 5.0 * e.stderr);
    }
}
