//! State-preparation and measurement-basis circuits.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::backflow_coefficients;
use crate::pauli::{Letter, PauliString, WeightedPauliSum};
use crate::statevector::{Gate, Statevector};

/// Ordered gate list on a fixed register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::NoQubits);
        }
        Ok(Circuit {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Appends all gates of `other`.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    pub fn apply_to(&self, state: &mut Statevector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: state.n_qubits(),
            });
        }
        state.apply_all(&self.gates)
    }

    /// Runs the circuit on `|0…0⟩`.
    pub fn simulate(&self) -> Result<Statevector> {
        let mut state = Statevector::basis(self.n_qubits, 0)?;
        self.apply_to(&mut state)?;
        Ok(state)
    }

    /// JSON gate list `[{kind, target, control?, angle?}]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.gates).expect("gates serialize")
    }
}

/// Wraps an angle into `[0, 4π)`, the period of `RY`.
fn wrap_4pi(angle: f64) -> f64 {
    angle.rem_euclid(4.0 * PI)
}

/// Rotation angles of the backflow preparation circuits.
///
/// For two qubits the controlled rotation is applied as `RY(-alpha1)` on
/// qubit 0 controlled by qubit 1, i.e. `alpha1` is quoted in the opposite
/// rotation sense to the single-qubit `RY` convention
/// `[[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrepAngles {
    One { alpha: f64 },
    Two { alpha0: f64, alpha1: f64 },
}

/// Describes the controlled-rotation convention used by [`PrepAngles::Two`].
pub const CONTROLLED_ROTATION_CONVENTION: &str =
    "CR(alpha1): control qubit 1 (S2), target qubit 0 (S1), applies RY(-alpha1); \
     expanded as RY(-alpha1/2), CNOT(1->0), RY(+alpha1/2), CNOT(1->0)";

/// Solves the rotation angles for real target amplitudes.
///
/// One qubit: `RY(α)|0⟩ = (cos α/2, sin α/2)`. Two qubits: the ansatz
/// `CR · CNOT(0→1) · (RY(α0) ⊗ I)|00⟩` reaches real states with a zero `|10⟩`
/// amplitude.
pub fn synthesis_angles(amplitudes: &[f64]) -> Result<PrepAngles> {
    let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let a: Vec<f64> = amplitudes.iter().map(|x| x / norm).collect();
    match a.len() {
        2 => Ok(PrepAngles::One {
            alpha: wrap_4pi(2.0 * a[1].atan2(a[0])),
        }),
        4 => {
            if a[2].abs() > 1e-12 {
                return Err(Error::Unreachable(format!(
                    "|10> amplitude {} must vanish",
                    a[2]
                )));
            }
            // After RY(α0) and CNOT: c|00⟩ + s|11⟩ with s = ±√(a1² + a3²).
            // Choose the sign of s so the |01⟩/|11⟩ pair is reached by a
            // rotation; both signs work, the negative one gives the
            // conventional α0 ≈ 7.51414.
            let s = -(a[1] * a[1] + a[3] * a[3]).sqrt();
            let alpha0 = wrap_4pi(2.0 * s.atan2(a[0]));
            // Controlled RY(θ) on qubit 0 maps s|11⟩ to s(-sin θ/2 |01⟩ + cos θ/2 |11⟩).
            let theta = if s == 0.0 {
                0.0
            } else {
                2.0 * (-a[1] / s).atan2(a[3] / s)
            };
            Ok(PrepAngles::Two {
                alpha0,
                alpha1: -theta,
            })
        }
        n if n.is_power_of_two() && n > 1 => {
            Err(Error::UnsupportedSynthesis(n.trailing_zeros() as usize))
        }
        n => Err(Error::Unreachable(format!(
            "{n} amplitudes is not a register size"
        ))),
    }
}

/// Angles for the backflow state on one or two qubits.
pub fn backflow_angles(n_qubits: usize) -> Result<PrepAngles> {
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::UnsupportedSynthesis(n_qubits));
    }
    synthesis_angles(backflow_coefficients(n_qubits)?.amplitudes())
}

/// Gate sequence realizing [`PrepAngles`].
pub fn preparation_circuit(angles: PrepAngles) -> Result<Circuit> {
    match angles {
        PrepAngles::One { alpha } => {
            let mut c = Circuit::new(1)?;
            c.push(Gate::RY {
                target: 0,
                angle: alpha,
            })?;
            Ok(c)
        }
        PrepAngles::Two { alpha0, alpha1 } => {
            let theta = -alpha1;
            let mut c = Circuit::new(2)?;
            c.push(Gate::RY {
                target: 0,
                angle: alpha0,
            })?
            .push(Gate::CNOT {
                control: 0,
                target: 1,
            })?
            // controlled RY(θ), control 1, target 0
            .push(Gate::RY {
                target: 0,
                angle: theta / 2.0,
            })?
            .push(Gate::CNOT {
                control: 1,
                target: 0,
            })?
            .push(Gate::RY {
                target: 0,
                angle: -theta / 2.0,
            })?
            .push(Gate::CNOT {
                control: 1,
                target: 0,
            })?;
            Ok(c)
        }
    }
}

/// Synthesized circuit preparing the backflow state from `|0…0⟩`.
pub fn prepare_backflow_circuit(n_qubits: usize) -> Result<Circuit> {
    preparation_circuit(backflow_angles(n_qubits)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

/// Per-qubit measurement basis; `X` means a Hadamard before readout.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementSetting {
    bases: Vec<Basis>,
}

impl MeasurementSetting {
    pub fn new(bases: Vec<Basis>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::NoQubits);
        }
        Ok(MeasurementSetting { bases })
    }

    pub fn all(n_qubits: usize, basis: Basis) -> Self {
        MeasurementSetting {
            bases: vec![basis; n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    /// Whether `term` is diagonal after this setting's basis change.
    pub fn accepts(&self, term: &PauliString) -> bool {
        term.n_qubits() == self.bases.len()
            && term
                .letters()
                .iter()
                .zip(&self.bases)
                .all(|(l, b)| match l {
                    Letter::I => true,
                    Letter::X => *b == Basis::X,
                    Letter::Z => *b == Basis::Z,
                    Letter::Y => false,
                })
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bases {
            f.write_str(match b {
                Basis::X => "X",
                Basis::Z => "Z",
            })?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bases = s
            .chars()
            .map(|c| match c {
                'X' => Ok(Basis::X),
                'Z' => Ok(Basis::Z),
                _ => Err(Error::Data(format!("bad basis word {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementSetting::new(bases)
    }
}

impl Serialize for MeasurementSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeasurementSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One Hadamard per X-basis qubit.
pub fn measurement_circuit(setting: &MeasurementSetting) -> Result<Circuit> {
    let mut c = Circuit::new(setting.n_qubits())?;
    for (q, b) in setting.bases.iter().enumerate() {
        if *b == Basis::X {
            c.push(Gate::H { target: q })?;
        }
    }
    Ok(c)
}

fn check_groupable(term: &PauliString) -> Result<()> {
    if term.y_count() > 0 || term.z_count() > 1 {
        return Err(Error::Ungroupable(term.word()));
    }
    Ok(())
}

/// The grouped setting for a term: Z at its Z letter (if any), X elsewhere.
pub fn grouped_setting(term: &PauliString) -> Result<MeasurementSetting> {
    check_groupable(term)?;
    Ok(MeasurementSetting {
        bases: term
            .letters()
            .iter()
            .map(|l| if *l == Letter::Z { Basis::Z } else { Basis::X })
            .collect(),
    })
}

/// The single-term setting: X at X letters, Z (no rotation) elsewhere.
pub fn per_term_setting(term: &PauliString) -> Result<MeasurementSetting> {
    if term.y_count() > 0 {
        return Err(Error::Ungroupable(term.word()));
    }
    Ok(MeasurementSetting {
        bases: term
            .letters()
            .iter()
            .map(|l| if *l == Letter::X { Basis::X } else { Basis::Z })
            .collect(),
    })
}

/// Assigns every term to one of at most `N + 1` settings: all-X for Z-free
/// terms, and Z at position `n` with X elsewhere for terms whose Z sits at `n`.
pub fn group_terms(
    sum: &WeightedPauliSum,
) -> Result<BTreeMap<MeasurementSetting, Vec<PauliString>>> {
    let mut groups: BTreeMap<MeasurementSetting, Vec<PauliString>> = BTreeMap::new();
    for term in sum.terms() {
        groups
            .entry(grouped_setting(term)?)
            .or_default()
            .push(term.clone());
    }
    Ok(groups)
}

/// How terms are mapped to measured circuits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plan {
    /// Shared settings from [`group_terms`].
    #[default]
    Grouped,
    /// One circuit per term, as in the original two-qubit experiment.
    PerTerm,
}

/// A measured circuit and the terms read out from it.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedSetting {
    pub setting: MeasurementSetting,
    pub terms: Vec<PauliString>,
}

pub fn measurement_plan(sum: &WeightedPauliSum, plan: Plan) -> Result<Vec<PlannedSetting>> {
    match plan {
        Plan::Grouped => Ok(group_terms(sum)?
            .into_iter()
            .map(|(setting, terms)| PlannedSetting { setting, terms })
            .collect()),
        Plan::PerTerm => sum
            .terms()
            .iter()
            .map(|t| {
                Ok(PlannedSetting {
                    setting: per_term_setting(t)?,
                    terms: vec![t.clone()],
                })
            })
            .collect(),
    }
}

/// `(-1)` to the number of set outcome bits on the term's support.
pub fn parity_sign(term: &PauliString, outcome: usize) -> i32 {
    if (outcome & term.support_mask())
        .count_ones()
        .is_multiple_of(2)
    {
        1
    } else {
        -1
    }
}
