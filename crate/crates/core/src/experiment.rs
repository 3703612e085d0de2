//! Backflowing states and the probability current they carry.
//!
//! The current at ring angle `θ0` for `ψ(θ) = Σ a_m e^{imθ}/√(2π)` is
//! `J = (1/2π) Re Σ a_m* n a_n e^{i(n-m)θ0}`. At `θ0 = 0` this is
//! `⟨ψ|J_N|ψ⟩/(4π)` with the integer operator of [`crate::pauli`], which is
//! what the measurement pipeline estimates term by term.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    backflow_angles, grouped_setting, measurement_circuit, measurement_plan, parity_sign,
    per_term_setting, preparation_circuit, MeasurementSetting, Plan, PlannedSetting, PrepAngles,
    CONTROLLED_ROTATION_CONVENTION,
};
use crate::dd::{Dd, DdComplex};
use crate::error::{Error, Result};
use crate::pauli::{current_decomposition, parse_word, PauliString, WeightedPauliSum};
use crate::statevector::{parse_bitstring, OutcomeCounts, Statevector, MAX_QUBITS, RNG_ALGORITHM};

/// Shots per measurement setting used by the hardware runs being reproduced.
pub const DEFAULT_SHOTS_PER_SETTING: u64 = 8000;

/// Accepted deviation of a coefficient vector's squared norm from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Accepted deviation of ingested probabilities from summing to 1.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-6;

/// Converts `⟨J_N⟩` into the current `J`.
pub fn scale_to_current(operator_expectation: f64) -> f64 {
    operator_expectation / (4.0 * PI)
}

/// Real affine amplitudes `a_m ∝ 3m - 2(2^N - 1)` of the backflowing state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BackflowCoefficients {
    n_qubits: usize,
    a: Vec<f64>,
}

impl BackflowCoefficients {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.a
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.a.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    pub fn to_statevector(&self) -> Result<Statevector> {
        Statevector::from_real(self.n_qubits, &self.a)
    }
}

pub fn backflow_coefficients(n_qubits: usize) -> Result<BackflowCoefficients> {
    if n_qubits == 0 {
        return Err(Error::NoQubits);
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::DimensionTooLarge {
            n_qubits,
            max: MAX_QUBITS,
        });
    }
    let dim = (1u64 << n_qubits) as f64;
    let norm = ((2.0 * dim + 1.0) * (dim - 1.0) * (dim / 2.0)).sqrt();
    let offset = 2.0 * (dim - 1.0);
    let a = (0..1usize << n_qubits)
        .map(|m| (3.0 * m as f64 - offset) / norm)
        .collect();
    Ok(BackflowCoefficients { n_qubits, a })
}

/// Probability current at ring angle `theta0` for momentum amplitudes
/// `coeffs[m]`, `m = 0..2^N`.
pub fn exact_current(coeffs: &[Complex64], theta0: f64) -> Result<f64> {
    if coeffs.len() < 2 || !coeffs.len().is_power_of_two() {
        return Err(Error::WrongLength {
            expected: coeffs.len().next_power_of_two().max(2),
            got: coeffs.len(),
        });
    }
    if !theta0.is_finite() {
        return Err(Error::NonFiniteCoefficient(theta0));
    }
    let norm_sqr: f64 = coeffs.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized { norm_sqr });
    }
    // J = (1/2π) Re[conj(Σ a_m e^{imθ}) · Σ n a_n e^{inθ}], accumulated
    // with exact products so the heavy cancellation in Σ n a_n survives.
    let mut field = DdComplex::default();
    let mut momentum = DdComplex::default();
    for (m, &a) in coeffs.iter().enumerate() {
        let w = if theta0 == 0.0 {
            a
        } else {
            a * Complex64::from_polar(1.0, m as f64 * theta0)
        };
        field.re += Dd::from_f64(w.re);
        field.im += Dd::from_f64(w.im);
        momentum.re += Dd::product(w.re, m as f64);
        momentum.im += Dd::product(w.im, m as f64);
    }
    let re = field.re * momentum.re + field.im * momentum.im;
    Ok(re.to_f64() / (2.0 * PI))
}

/// `J = -(1/4π) 2^N (2^N - 1) / (2^{N+1} + 1)` for the backflowing state.
pub fn closed_form_current(n_qubits: usize) -> Result<f64> {
    if n_qubits == 0 {
        return Err(Error::NoQubits);
    }
    let dim = 2f64.powi(n_qubits as i32);
    Ok(-(dim * (dim - 1.0)) / (2.0 * dim + 1.0) / (4.0 * PI))
}

pub fn relative_error(observed: f64, theory: f64) -> Result<f64> {
    if theory == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((observed - theory).abs() / theory.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Shots,
    Ingest,
}

/// One estimated `⟨V_k⟩` and its weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub word: String,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub setting: Option<String>,
    pub expectation: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
}

/// Outcome data for one measured circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingRecord {
    pub basis_word: String,
    pub terms: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rng_stream: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counts: Option<BTreeMap<String, u64>>,
    pub probabilities: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub n_qubits: usize,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plan: Option<Plan>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shots_per_setting: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rng: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub readout_flip: Option<f64>,
    /// Ring angle of `j_exact`. The decomposition terms always refer to 0.
    pub theta0: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preparation: Option<Preparation>,
    pub lambda0: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub settings: Vec<SettingRecord>,
    pub terms: Vec<TermRecord>,
    pub j_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j_std_error: Option<f64>,
    pub j_exact: f64,
    pub j_closed_form: f64,
    /// `|j_estimate - j_closed_form| / |j_closed_form|`.
    pub relative_error: f64,
}

/// How the measured state was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Preparation {
    Circuit {
        angles: PrepAngles,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        convention: Option<String>,
    },
    AmplitudeLoad,
}

impl ExperimentReport {
    /// Recomputes `(λ0 + Σ λk ⟨V_k⟩)/(4π)` from the report's own records.
    pub fn reassembled_current(&self) -> f64 {
        assemble_current(self.lambda0, &self.terms)
    }
}

/// Weights span `1..2^N` and cancel heavily, so the sum is carried in
/// double-double.
fn assemble_current(lambda0: f64, terms: &[TermRecord]) -> f64 {
    let mut total = Dd::from_f64(lambda0);
    for t in terms {
        total += Dd::product(t.lambda, t.expectation);
    }
    scale_to_current(total.to_f64())
}

fn combined_std_error(terms: &[TermRecord]) -> Option<f64> {
    let mut acc = 0.0;
    for t in terms {
        let se = t.std_error?;
        acc += (t.lambda * se).powi(2);
    }
    Some(scale_to_current(acc.sqrt()))
}

/// Plug-in binomial standard error of a ±1 average.
pub fn parity_std_error(expectation: f64, shots: u64) -> f64 {
    ((1.0 - expectation * expectation).max(0.0) / shots as f64).sqrt()
}

/// Parity-weighted average over an outcome distribution keyed by bitstring.
pub fn parity_expectation(
    term: &PauliString,
    probabilities: &BTreeMap<String, f64>,
) -> Result<f64> {
    let n = term.n_qubits();
    let mut acc = 0.0;
    for (bits, &p) in probabilities {
        let outcome = parse_bitstring(bits, n)
            .ok_or_else(|| Error::Data(format!("bitstring {bits:?} is not {n} bits")))?;
        acc += p * parity_sign(term, outcome) as f64;
    }
    Ok(acc)
}

fn finish_report(
    mut report: ExperimentReport,
    coeffs: &BackflowCoefficients,
) -> Result<ExperimentReport> {
    report.j_estimate = assemble_current(report.lambda0, &report.terms);
    report.j_std_error = combined_std_error(&report.terms);
    report.j_exact = exact_current(&coeffs.to_complex(), report.theta0)?;
    report.j_closed_form = closed_form_current(report.n_qubits)?;
    report.relative_error = relative_error(report.j_estimate, report.j_closed_form)?;
    Ok(report)
}

fn blank_report(n_qubits: usize, mode: Mode, lambda0: f64) -> ExperimentReport {
    ExperimentReport {
        n_qubits,
        mode,
        plan: None,
        shots_per_setting: None,
        seed: None,
        rng: None,
        readout_flip: None,
        theta0: 0.0,
        preparation: None,
        lambda0,
        settings: Vec::new(),
        terms: Vec::new(),
        j_estimate: 0.0,
        j_std_error: None,
        j_exact: 0.0,
        j_closed_form: 0.0,
        relative_error: 0.0,
    }
}

/// Prepares the backflowing state: synthesized circuit for one or two
/// qubits, exact amplitude load above that.
pub fn prepare_backflow_state(n_qubits: usize) -> Result<(Statevector, Preparation)> {
    if n_qubits <= 2 {
        let angles = backflow_angles(n_qubits)?;
        let state = preparation_circuit(angles)?.simulate()?;
        let convention = matches!(angles, PrepAngles::Two { .. })
            .then(|| CONTROLLED_ROTATION_CONVENTION.to_string());
        Ok((state, Preparation::Circuit { angles, convention }))
    } else {
        let state = backflow_coefficients(n_qubits)?.to_statevector()?;
        Ok((state, Preparation::AmplitudeLoad))
    }
}

/// Noise-free report: every `⟨V_k⟩` evaluated exactly on the statevector.
pub fn run_exact(n_qubits: usize, theta0: f64) -> Result<ExperimentReport> {
    let coeffs = backflow_coefficients(n_qubits)?;
    let sum = current_decomposition(n_qubits)?;
    let (state, preparation) = prepare_backflow_state(n_qubits)?;
    let values = if sum.len().saturating_mul(state.dim()) <= 1 << 24 {
        sum.terms()
            .iter()
            .map(|t| state.expectation_string(t))
            .collect::<Result<Vec<_>>>()?
    } else {
        state.string_expectations_batched(sum.terms())?
    };
    let mut report = blank_report(n_qubits, Mode::Exact, sum.identity_weight());
    report.theta0 = theta0;
    report.preparation = Some(preparation);
    report.terms = sum
        .terms()
        .iter()
        .zip(values)
        .map(|(t, v)| TermRecord {
            word: t.word(),
            lambda: t.coefficient(),
            setting: None,
            expectation: v,
            std_error: None,
        })
        .collect();
    finish_report(report, &coeffs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_qubits: usize,
    pub shots_per_setting: u64,
    pub seed: u64,
    pub plan: Plan,
    pub readout_flip: f64,
}

impl SimulationConfig {
    pub fn new(n_qubits: usize) -> Self {
        SimulationConfig {
            n_qubits,
            shots_per_setting: DEFAULT_SHOTS_PER_SETTING,
            seed: 0,
            plan: Plan::Grouped,
            readout_flip: 0.0,
        }
    }
}

/// Shot-based estimate of the current.
///
/// Setting `i` draws from `ChaCha8Rng` seeded with the base seed on stream
/// `i`, so settings are independent and the run is reproducible whether or
/// not they execute in parallel.
pub fn run_simulation(config: &SimulationConfig) -> Result<ExperimentReport> {
    if config.shots_per_setting == 0 {
        return Err(Error::NoShots);
    }
    if !(0.0..0.5).contains(&config.readout_flip) {
        return Err(Error::BadFlipProbability(config.readout_flip));
    }
    let n = config.n_qubits;
    let coeffs = backflow_coefficients(n)?;
    let sum = current_decomposition(n)?;
    let plan = measurement_plan(&sum, config.plan)?;
    let (state, preparation) = prepare_backflow_state(n)?;

    let measure = |(index, planned): (usize, &PlannedSetting)| -> Result<OutcomeCounts> {
        let mut rotated = state.clone();
        measurement_circuit(&planned.setting)?.apply_to(&mut rotated)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);
        rotated.sample_with(&mut rng, config.shots_per_setting, config.readout_flip)
    };
    #[cfg(feature = "parallel")]
    let outcomes: Vec<OutcomeCounts> = {
        use rayon::prelude::*;
        plan.par_iter()
            .enumerate()
            .map(measure)
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<OutcomeCounts> = plan
        .iter()
        .enumerate()
        .map(measure)
        .collect::<Result<_>>()?;

    let mut report = blank_report(n, Mode::Shots, sum.identity_weight());
    report.plan = Some(config.plan);
    report.shots_per_setting = Some(config.shots_per_setting);
    report.seed = Some(config.seed);
    report.rng = Some(RNG_ALGORITHM.to_string());
    report.readout_flip = Some(config.readout_flip);
    report.preparation = Some(preparation);

    let mut estimates: BTreeMap<String, TermRecord> = BTreeMap::new();
    for (index, (planned, counts)) in plan.iter().zip(&outcomes).enumerate() {
        let probabilities = counts.frequencies();
        let basis_word = planned.setting.to_string();
        for term in &planned.terms {
            let v = parity_expectation(term, &probabilities)?;
            estimates.insert(
                term.word(),
                TermRecord {
                    word: term.word(),
                    lambda: term.coefficient(),
                    setting: Some(basis_word.clone()),
                    expectation: v,
                    std_error: Some(parity_std_error(v, counts.shots())),
                },
            );
        }
        report.settings.push(SettingRecord {
            basis_word,
            terms: planned.terms.iter().map(PauliString::word).collect(),
            shots: Some(counts.shots()),
            rng_stream: Some(index as u64),
            counts: Some(counts.to_map()),
            probabilities,
        });
    }
    report.terms = ordered_records(&sum, estimates)?;
    finish_report(report, &coeffs)
}

fn ordered_records(
    sum: &WeightedPauliSum,
    mut records: BTreeMap<String, TermRecord>,
) -> Result<Vec<TermRecord>> {
    sum.terms()
        .iter()
        .map(|t| {
            records
                .remove(&t.word())
                .ok_or_else(|| Error::Data(format!("no estimate for term {}", t.word())))
        })
        .collect()
}

/// Externally measured data: outcome distributions per setting, or the
/// term expectations directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasuredData {
    Settings {
        #[serde(alias = "n_qubits")]
        n: usize,
        settings: Vec<MeasuredSetting>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        shots: Option<u64>,
    },
    Expectations {
        #[serde(alias = "n_qubits")]
        n: usize,
        expectations: Vec<MeasuredExpectation>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSetting {
    pub basis_word: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probabilities: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counts: Option<BTreeMap<String, u64>>,
    /// Terms read out from this setting; inferred when absent.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub terms: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shots: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredExpectation {
    pub word: String,
    pub value: f64,
}

impl MeasuredData {
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Data("empty input".into()));
        }
        serde_json::from_str(text).map_err(|e| Error::Data(e.to_string()))
    }

    /// The per-setting data recorded in a report.
    pub fn from_report(report: &ExperimentReport) -> Self {
        MeasuredData::Settings {
            n: report.n_qubits,
            settings: report
                .settings
                .iter()
                .map(|s| MeasuredSetting {
                    basis_word: s.basis_word.clone(),
                    probabilities: Some(s.probabilities.clone()),
                    counts: s.counts.clone(),
                    terms: Some(s.terms.clone()),
                    shots: s.shots,
                })
                .collect(),
            shots: report.shots_per_setting,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            MeasuredData::Settings { n, .. } | MeasuredData::Expectations { n, .. } => *n,
        }
    }
}

struct IngestedSetting {
    setting: MeasurementSetting,
    basis_word: String,
    probabilities: BTreeMap<String, f64>,
    counts: Option<BTreeMap<String, u64>>,
    shots: Option<u64>,
    listed: Option<Vec<String>>,
}

fn validate_setting(
    raw: &MeasuredSetting,
    n: usize,
    default_shots: Option<u64>,
) -> Result<IngestedSetting> {
    let setting: MeasurementSetting = raw.basis_word.parse()?;
    if setting.n_qubits() != n {
        return Err(Error::Data(format!(
            "basis word {:?} does not have {n} letters",
            raw.basis_word
        )));
    }
    let (probabilities, counts, shots) = match (&raw.counts, &raw.probabilities) {
        (Some(map), _) => {
            let counts = OutcomeCounts::from_map(map)?;
            if counts.n_qubits() != n {
                return Err(Error::Data(format!(
                    "counts for {:?} are not {n}-bit",
                    raw.basis_word
                )));
            }
            (
                counts.frequencies(),
                Some(counts.to_map()),
                Some(counts.shots()),
            )
        }
        (None, Some(probs)) => {
            let mut total = 0.0;
            for (bits, &p) in probs {
                if parse_bitstring(bits, n).is_none() {
                    return Err(Error::Data(format!("bitstring {bits:?} is not {n} bits")));
                }
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::Data(format!("probability {p} for {bits:?}")));
                }
                total += p;
            }
            if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                return Err(Error::Data(format!(
                    "probabilities for {:?} sum to {total}",
                    raw.basis_word
                )));
            }
            (probs.clone(), None, raw.shots.or(default_shots))
        }
        (None, None) => {
            return Err(Error::Data(format!(
                "setting {:?} has neither probabilities nor counts",
                raw.basis_word
            )))
        }
    };
    Ok(IngestedSetting {
        setting,
        basis_word: raw.basis_word.clone(),
        probabilities,
        counts,
        shots,
        listed: raw.terms.clone(),
    })
}

/// Picks the setting a term is read from: an explicit listing wins, then the
/// grouped setting, then the single-term setting, then any accepting one.
fn assign_setting(term: &PauliString, settings: &[IngestedSetting]) -> Result<usize> {
    let word = term.word();
    if let Some(i) = settings
        .iter()
        .position(|s| s.listed.as_ref().is_some_and(|l| l.contains(&word)))
    {
        if !settings[i].setting.accepts(term) {
            return Err(Error::Data(format!(
                "term {word} is listed under incompatible setting {}",
                settings[i].basis_word
            )));
        }
        return Ok(i);
    }
    let preferred = [grouped_setting(term).ok(), per_term_setting(term).ok()];
    for candidate in preferred.iter().flatten() {
        if let Some(i) = settings.iter().position(|s| &s.setting == candidate) {
            return Ok(i);
        }
    }
    settings
        .iter()
        .position(|s| s.setting.accepts(term))
        .ok_or_else(|| Error::Data(format!("no measured setting covers term {word}")))
}

/// Recombines externally measured data into a current estimate. No
/// simulation is involved.
pub fn ingest_measurements(data: &MeasuredData) -> Result<ExperimentReport> {
    let n = data.n_qubits();
    if n == 0 {
        return Err(Error::Data("n must be at least 1".into()));
    }
    let coeffs = backflow_coefficients(n)?;
    let sum = current_decomposition(n)?;
    let mut report = blank_report(n, Mode::Ingest, sum.identity_weight());

    match data {
        MeasuredData::Settings {
            settings, shots, ..
        } => {
            if settings.is_empty() {
                return Err(Error::Data("no settings".into()));
            }
            let ingested = settings
                .iter()
                .map(|s| validate_setting(s, n, *shots))
                .collect::<Result<Vec<_>>>()?;
            for s in &ingested {
                for w in s.listed.iter().flatten() {
                    if sum.coefficient_of(w).is_none() {
                        return Err(Error::Data(format!("unknown term {w:?}")));
                    }
                }
            }
            let mut assigned: Vec<Vec<String>> = vec![Vec::new(); ingested.len()];
            for term in sum.terms() {
                let i = assign_setting(term, &ingested)?;
                let s = &ingested[i];
                let v = parity_expectation(term, &s.probabilities)?;
                assigned[i].push(term.word());
                report.terms.push(TermRecord {
                    word: term.word(),
                    lambda: term.coefficient(),
                    setting: Some(s.basis_word.clone()),
                    expectation: v,
                    std_error: s.shots.map(|shots| parity_std_error(v, shots)),
                });
            }
            report.settings = ingested
                .into_iter()
                .zip(assigned)
                .map(|(s, terms)| SettingRecord {
                    basis_word: s.basis_word,
                    terms,
                    shots: s.shots,
                    rng_stream: None,
                    counts: s.counts,
                    probabilities: s.probabilities,
                })
                .collect();
        }
        MeasuredData::Expectations { expectations, .. } => {
            let mut given: BTreeMap<Vec<crate::pauli::Letter>, f64> = BTreeMap::new();
            for e in expectations {
                let letters = parse_word(&e.word)
                    .map_err(|_| Error::Data(format!("bad word {:?}", e.word)))?;
                if letters.len() != n || sum.coefficient_of(&e.word).is_none() {
                    return Err(Error::Data(format!("unknown term {:?}", e.word)));
                }
                if !e.value.is_finite() {
                    return Err(Error::Data(format!(
                        "expectation {} for {}",
                        e.value, e.word
                    )));
                }
                if given.insert(letters, e.value).is_some() {
                    return Err(Error::Data(format!("duplicate term {:?}", e.word)));
                }
            }
            for term in sum.terms() {
                let v = *given
                    .get(term.letters())
                    .ok_or_else(|| Error::Data(format!("missing term {}", term.word())))?;
                report.terms.push(TermRecord {
                    word: term.word(),
                    lambda: term.coefficient(),
                    setting: None,
                    expectation: v,
                    std_error: None,
                });
            }
        }
    }
    finish_report(report, &coeffs)
}
