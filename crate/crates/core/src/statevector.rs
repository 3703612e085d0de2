//! Dense statevector simulation.
//!
//! Qubit 0 is the most significant bit of the basis index, so basis index `m`
//! is the momentum state `|m⟩`. Gates act in place through strided amplitude
//! pair updates; no `2^N × 2^N` unitary is ever formed.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dd::{Dd, DdComplex};
use crate::error::{Error, Result};
use crate::pauli::{PauliString, WeightedPauliSum};

/// Largest register the engine will allocate.
pub const MAX_QUBITS: usize = 30;

/// Tolerance on squared-norm drift before a kernel result is rejected.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-9;

/// Imaginary residue allowed on a single string expectation.
pub const IMAGINARY_RESIDUE_TOLERANCE: f64 = 1e-10;

/// Name of the generator used by [`Statevector::sample`].
pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Gate {
    RY {
        target: usize,
        angle: f64,
    },
    H {
        target: usize,
    },
    X {
        target: usize,
    },
    Z {
        target: usize,
    },
    CNOT {
        control: usize,
        target: usize,
    },
    CRY {
        control: usize,
        target: usize,
        angle: f64,
    },
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::RY { target, .. }
            | Gate::H { target }
            | Gate::X { target }
            | Gate::Z { target }
            | Gate::CNOT { target, .. }
            | Gate::CRY { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::CNOT { control, .. } | Gate::CRY { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::RY { .. } => "RY",
            Gate::H { .. } => "H",
            Gate::X { .. } => "X",
            Gate::Z { .. } => "Z",
            Gate::CNOT { .. } => "CNOT",
            Gate::CRY { .. } => "CRY",
        }
    }

    /// Checks qubit indices against a register size and rejects non-finite
    /// angles.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if let Gate::RY { angle, .. } | Gate::CRY { angle, .. } = *self {
            if !angle.is_finite() {
                return Err(Error::NonFiniteAngle(angle));
            }
        }
        let target = self.target();
        if target >= n_qubits {
            return Err(Error::BadQubit {
                qubit: target,
                n_qubits,
            });
        }
        if let Some(control) = self.control() {
            if control >= n_qubits {
                return Err(Error::BadQubit {
                    qubit: control,
                    n_qubits,
                });
            }
            if control == target {
                return Err(Error::ControlIsTarget(target));
            }
        }
        Ok(())
    }

    /// The 2×2 action on the target qubit.
    fn matrix(&self) -> [[Complex64; 2]; 2] {
        let r = |v: f64| Complex64::new(v, 0.0);
        match *self {
            Gate::RY { angle, .. } | Gate::CRY { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                [[r(c), r(-s)], [r(s), r(c)]]
            }
            Gate::H { .. } => [
                [r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)],
                [r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)],
            ],
            Gate::X { .. } | Gate::CNOT { .. } => [[r(0.0), r(1.0)], [r(1.0), r(0.0)]],
            Gate::Z { .. } => [[r(1.0), r(0.0)], [r(0.0), r(-1.0)]],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn check_register(n_qubits: usize) -> Result<usize> {
    if n_qubits == 0 {
        return Err(Error::NoQubits);
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::DimensionTooLarge {
            n_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(1usize << n_qubits)
}

impl Statevector {
    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = check_register(n_qubits)?;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, n_qubits });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector {
            n_qubits,
            amplitudes,
        })
    }

    /// Loads amplitudes and rescales them to unit norm.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = check_register(n_qubits)?;
        if amplitudes.len() != dim {
            return Err(Error::WrongLength {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFiniteAmplitude);
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Statevector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_real(n_qubits: usize, amplitudes: &[f64]) -> Result<Self> {
        Self::from_amplitudes(
            n_qubits,
            amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Stride between the two amplitudes of a pair for `qubit`.
    fn stride(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let m = gate.matrix();
        let stride = self.stride(gate.target());
        let control_bit = gate.control().map(|c| self.stride(c));
        let dim = self.dim();
        let amps = &mut self.amplitudes;
        let mut base = 0;
        while base < dim {
            for lo in base..base + stride {
                if let Some(cb) = control_bit {
                    if lo & cb == 0 {
                        continue;
                    }
                }
                let hi = lo + stride;
                let (a, b) = (amps[lo], amps[hi]);
                amps[lo] = m[0][0] * a + m[0][1] * b;
                amps[hi] = m[1][0] * a + m[1][1] * b;
            }
            base += 2 * stride;
        }
        self.check_norm(gate.name())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.apply(g))
    }

    fn check_norm(&self, op: &str) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        // written so that a NaN norm also fails
        let within = (norm_sqr - 1.0).abs() <= NORM_DRIFT_TOLERANCE;
        if !within {
            return Err(Error::NormDrift {
                norm_sqr,
                op: op.to_string(),
            });
        }
        Ok(())
    }

    /// `|amplitude|²` per basis index.
    pub fn z_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨ψ|P|ψ⟩` for one string (its coefficient is ignored), evaluated
    /// in place without materializing `P|ψ⟩`.
    pub fn expectation_string(&self, term: &PauliString) -> Result<f64> {
        if term.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: term.n_qubits(),
            });
        }
        let (x, z) = (term.x_mask(), term.z_mask());
        let raw: Complex64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(col, &a)| {
                let v = self.amplitudes[col ^ x].conj() * a;
                if (col & z).count_ones() % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .sum();
        real_part(phase_i_pow(term.y_count()) * raw)
    }

    /// `λ0 + Σ λk ⟨V_k⟩`, dispatching between the per-string kernel and the
    /// batched spectral kernel by estimated cost.
    pub fn expectation(&self, sum: &WeightedPauliSum) -> Result<f64> {
        const PER_STRING_BUDGET: usize = 1 << 24;
        if sum.len().saturating_mul(self.dim()) <= PER_STRING_BUDGET {
            self.expectation_per_string(sum)
        } else {
            self.expectation_batched(sum)
        }
    }

    /// Reference path: one in-place pass over the amplitudes per string.
    pub fn expectation_per_string(&self, sum: &WeightedPauliSum) -> Result<f64> {
        self.check_sum(sum)?;
        let mut total = sum.identity_weight();
        for term in sum.terms() {
            total += term.coefficient() * self.expectation_string(term)?;
        }
        Ok(total)
    }

    /// All string expectations at once.
    ///
    /// For strings sharing a sign mask `z`, `⟨X^x Z^z⟩` over every flip mask
    /// `x` is an XOR cross-correlation of `ψ*` with `Z^z ψ`, which the
    /// Walsh–Hadamard transform diagonalizes. Cost is
    /// `O(#distinct z · N · 2^N)` instead of `O(#terms · 2^N)`. Transforms and
    /// the weighted reduction run in double-double arithmetic: sums such as
    /// the current operator weight strings by up to `2^N` and cancel heavily.
    pub fn expectation_batched(&self, sum: &WeightedPauliSum) -> Result<f64> {
        self.check_sum(sum)?;
        let values = self.batched_values(sum.terms())?;
        let mut total = Dd::from_f64(sum.identity_weight());
        for (t, v) in sum.terms().iter().zip(values) {
            total += v.scale(t.coefficient());
        }
        Ok(total.to_f64())
    }

    /// Per-string expectations (coefficients ignored) via the spectral kernel.
    pub fn string_expectations_batched(&self, terms: &[PauliString]) -> Result<Vec<f64>> {
        Ok(self
            .batched_values(terms)?
            .into_iter()
            .map(Dd::to_f64)
            .collect())
    }

    fn batched_values(&self, terms: &[PauliString]) -> Result<Vec<Dd>> {
        for t in terms {
            if t.n_qubits() != self.n_qubits {
                return Err(Error::QubitMismatch {
                    left: self.n_qubits,
                    right: t.n_qubits(),
                });
            }
        }
        let mut by_z: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            by_z.entry(t.z_mask()).or_default().push(i);
        }
        let real = self.amplitudes.iter().all(|a| a.im == 0.0);
        let mut conj_hat = Lanes::from_fn(&self.amplitudes, real, |_, a| a.conj());
        conj_hat.transform();
        let scale = 1.0 / self.dim() as f64;

        let correlate = |z: usize| -> Lanes {
            let mut lanes = Lanes::from_fn(&self.amplitudes, real, |j, a| {
                if (j & z).count_ones().is_multiple_of(2) {
                    a
                } else {
                    -a
                }
            });
            lanes.transform();
            lanes.multiply(&conj_hat);
            lanes.transform();
            lanes.scale(scale);
            lanes
        };

        let groups: Vec<(&usize, &Vec<usize>)> = by_z.iter().collect();
        #[cfg(feature = "parallel")]
        let correlations: Vec<Lanes> = {
            use rayon::prelude::*;
            groups.par_iter().map(|(z, _)| correlate(**z)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let correlations: Vec<Lanes> = groups.iter().map(|(z, _)| correlate(**z)).collect();

        let mut out = vec![Dd::ZERO; terms.len()];
        for ((_, idxs), corr) in groups.iter().zip(&correlations) {
            for &i in idxs.iter() {
                let t = &terms[i];
                let x = t.x_mask();
                let re = corr.re[x];
                let im = corr.im.as_ref().map_or(Dd::ZERO, |im| im[x]);
                // multiply by i^{#Y} and keep the real part
                let (value, residue) = match t.y_count() % 4 {
                    0 => (re, im),
                    1 => (-im, re),
                    2 => (-re, -im),
                    _ => (im, -re),
                };
                real_part(Complex64::new(value.to_f64(), residue.to_f64()))?;
                out[i] = value;
            }
        }
        Ok(out)
    }

    fn check_sum(&self, sum: &WeightedPauliSum) -> Result<()> {
        if sum.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: sum.n_qubits(),
            });
        }
        Ok(())
    }

    /// Z-basis sampling with a seeded generator and a classical readout
    /// bit-flip channel applied to each outcome bit.
    pub fn sample(&self, shots: u64, seed: u64, readout_flip: f64) -> Result<OutcomeCounts> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, shots, readout_flip)
    }

    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        shots: u64,
        readout_flip: f64,
    ) -> Result<OutcomeCounts> {
        if shots == 0 {
            return Err(Error::NoShots);
        }
        if !(0.0..0.5).contains(&readout_flip) {
            return Err(Error::BadFlipProbability(readout_flip));
        }
        let probs = self.z_probabilities();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        let mut counts = vec![0u64; probs.len()];
        for _ in 0..shots {
            let u: f64 = rng.gen();
            let mut outcome = cdf.partition_point(|&c| c <= u).min(last_nonzero);
            if readout_flip > 0.0 {
                for q in 0..self.n_qubits {
                    if rng.gen_bool(readout_flip) {
                        outcome ^= 1 << q;
                    }
                }
            }
            counts[outcome] += 1;
        }
        Ok(OutcomeCounts {
            n_qubits: self.n_qubits,
            shots,
            counts,
        })
    }
}

fn phase_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn real_part(v: Complex64) -> Result<f64> {
    if v.im.abs() > IMAGINARY_RESIDUE_TOLERANCE {
        return Err(Error::ComplexExpectation { residue: v.im });
    }
    Ok(v.re)
}

/// Real and (optionally) imaginary parts of a vector in double-double.
struct Lanes {
    re: Vec<Dd>,
    im: Option<Vec<Dd>>,
}

impl Lanes {
    fn from_fn(amps: &[Complex64], real: bool, f: impl Fn(usize, Complex64) -> Complex64) -> Lanes {
        let values: Vec<Complex64> = amps.iter().enumerate().map(|(i, &a)| f(i, a)).collect();
        Lanes {
            re: values.iter().map(|v| Dd::from_f64(v.re)).collect(),
            im: (!real).then(|| values.iter().map(|v| Dd::from_f64(v.im)).collect()),
        }
    }

    fn transform(&mut self) {
        walsh_hadamard(&mut self.re);
        if let Some(im) = &mut self.im {
            walsh_hadamard(im);
        }
    }

    /// Pointwise complex product with `other`.
    fn multiply(&mut self, other: &Lanes) {
        match (&mut self.im, &other.im) {
            (None, None) => {
                for (a, b) in self.re.iter_mut().zip(&other.re) {
                    *a = *a * *b;
                }
            }
            _ => {
                let zeros = vec![Dd::ZERO; self.re.len()];
                let self_im = self.im.take().unwrap_or_else(|| zeros.clone());
                let other_im = other.im.as_deref().unwrap_or(&zeros);
                let mut im = Vec::with_capacity(self.re.len());
                for i in 0..self.re.len() {
                    let a = DdComplex {
                        re: self.re[i],
                        im: self_im[i],
                    };
                    let b = DdComplex {
                        re: other.re[i],
                        im: other_im[i],
                    };
                    let p = a * b;
                    self.re[i] = p.re;
                    im.push(p.im);
                }
                self.im = Some(im);
            }
        }
    }

    fn scale(&mut self, s: f64) {
        self.re.iter_mut().for_each(|v| *v = v.scale(s));
        if let Some(im) = &mut self.im {
            im.iter_mut().for_each(|v| *v = v.scale(s));
        }
    }
}

/// Unnormalized in-place fast Walsh–Hadamard transform.
fn walsh_hadamard(v: &mut [Dd]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Render a basis index as a bitstring, qubit 0 first.
pub fn bitstring(index: usize, n_qubits: usize) -> String {
    format!("{index:0n_qubits$b}")
}

/// Parse a qubit-0-first bitstring into a basis index.
pub fn parse_bitstring(s: &str, n_qubits: usize) -> Option<usize> {
    if s.len() != n_qubits || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return None;
    }
    usize::from_str_radix(s, 2).ok()
}

/// Histogram of measured basis indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeCounts {
    n_qubits: usize,
    shots: u64,
    counts: Vec<u64>,
}

impl OutcomeCounts {
    pub fn new(n_qubits: usize, counts: Vec<u64>) -> Result<Self> {
        let dim = check_register(n_qubits)?;
        if counts.len() != dim {
            return Err(Error::WrongLength {
                expected: dim,
                got: counts.len(),
            });
        }
        let shots = counts.iter().sum();
        if shots == 0 {
            return Err(Error::NoShots);
        }
        Ok(OutcomeCounts {
            n_qubits,
            shots,
            counts,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    /// Relative frequencies keyed by bitstring; zero-count outcomes omitted.
    pub fn frequencies(&self) -> BTreeMap<String, f64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (bitstring(i, self.n_qubits), c as f64 / self.shots as f64))
            .collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (bitstring(i, self.n_qubits), c))
            .collect()
    }

    /// Builds counts from a bitstring map; all keys must share one length.
    pub fn from_map(map: &BTreeMap<String, u64>) -> Result<Self> {
        let n_qubits = map
            .keys()
            .next()
            .map(|k| k.len())
            .ok_or_else(|| Error::Data("empty counts".into()))?;
        let dim = check_register(n_qubits)?;
        let mut counts = vec![0u64; dim];
        for (k, &c) in map {
            let idx = parse_bitstring(k, n_qubits)
                .ok_or_else(|| Error::Data(format!("bad bitstring {k:?}")))?;
            counts[idx] += c;
        }
        OutcomeCounts::new(n_qubits, counts)
    }
}

#[derive(Serialize, Deserialize)]
struct CountsRepr {
    shots: u64,
    counts: BTreeMap<String, u64>,
}

impl Serialize for OutcomeCounts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CountsRepr {
            shots: self.shots,
            counts: self.to_map(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OutcomeCounts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CountsRepr::deserialize(d)?;
        let counts = OutcomeCounts::from_map(&repr.counts).map_err(serde::de::Error::custom)?;
        if counts.shots != repr.shots {
            return Err(serde::de::Error::custom(format!(
                "shots {} does not match count total {}",
                repr.shots, counts.shots
            )));
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_states() {
        let s = Statevector::basis(1, 0).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0)]);
        let s = Statevector::basis(2, 2).unwrap();
        assert_eq!(s.z_probabilities(), vec![0.0, 0.0, 1.0, 0.0]);
        let s = Statevector::basis(3, 7).unwrap();
        assert_eq!(s.amplitudes()[7], c(1.0));
        assert_eq!(
            Statevector::basis(2, 4),
            Err(Error::IndexOutOfRange {
                index: 4,
                n_qubits: 2
            })
        );
        assert_eq!(Statevector::basis(0, 0), Err(Error::NoQubits));
    }

    #[test]
    fn amplitude_loading() {
        let s = Statevector::from_real(1, &[2.0, 0.0]).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0)]);
        let r5 = 5f64.sqrt();
        let s = Statevector::from_real(1, &[-2.0 / r5, 1.0 / r5]).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
        assert_eq!(
            Statevector::from_real(2, &[1.0, 0.0]),
            Err(Error::WrongLength {
                expected: 4,
                got: 2
            })
        );
        assert_eq!(
            Statevector::from_real(1, &[0.0, 0.0]),
            Err(Error::ZeroVector)
        );
        assert_eq!(
            Statevector::from_real(1, &[f64::NAN, 0.0]),
            Err(Error::NonFiniteAmplitude)
        );
    }

    #[test]
    fn hadamard_and_ry() {
        let mut s = Statevector::basis(1, 0).unwrap();
        s.apply(&Gate::H { target: 0 }).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(s.z_probabilities().len(), 2);

        let mut s = Statevector::basis(1, 0).unwrap();
        s.apply(&Gate::RY {
            target: 0,
            angle: 5.35589,
        })
        .unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, -0.894427, epsilon = 1e-5);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 0.447214, epsilon = 1e-5);
    }

    #[test]
    fn cnot_permutes() {
        // a|00⟩ + b|10⟩ -> a|00⟩ + b|11⟩
        let mut s = Statevector::from_real(2, &[0.6, 0.0, 0.8, 0.0]).unwrap();
        s.apply(&Gate::CNOT {
            control: 0,
            target: 1,
        })
        .unwrap();
        let p = s.z_probabilities();
        assert_abs_diff_eq!(p[0], 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(p[3], 0.64, epsilon = 1e-15);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn bad_gate_indices() {
        let mut s = Statevector::basis(2, 0).unwrap();
        assert_eq!(
            s.apply(&Gate::H { target: 2 }),
            Err(Error::BadQubit {
                qubit: 2,
                n_qubits: 2
            })
        );
        assert_eq!(
            s.apply(&Gate::CNOT {
                control: 1,
                target: 1
            }),
            Err(Error::ControlIsTarget(1))
        );
        assert_eq!(
            s.apply(&Gate::CRY {
                control: 5,
                target: 0,
                angle: 1.0
            }),
            Err(Error::BadQubit {
                qubit: 5,
                n_qubits: 2
            })
        );
    }

    #[test]
    fn norm_drift_is_an_error() {
        let mut s = Statevector::basis(1, 0).unwrap();
        s.amplitudes[0] = c(1.1);
        assert!(matches!(
            s.apply(&Gate::X { target: 0 }),
            Err(Error::NormDrift { .. })
        ));
    }

    #[test]
    fn identity_only_expectation() {
        let s = Statevector::from_real(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let sum = WeightedPauliSum::new(2, 4.25, vec![]).unwrap();
        assert_eq!(s.expectation(&sum).unwrap(), 4.25);
        let wrong = WeightedPauliSum::new(1, 1.0, vec![]).unwrap();
        assert!(matches!(
            s.expectation(&wrong),
            Err(Error::QubitMismatch { .. })
        ));
    }

    #[test]
    fn y_expectation_on_circular_state() {
        // (|0⟩ + i|1⟩)/√2 has ⟨Y⟩ = 1
        let s = Statevector::from_amplitudes(1, vec![c(1.0), Complex64::new(0.0, 1.0)]).unwrap();
        let y = PauliString::from_word("Y", 1.0).unwrap();
        assert_abs_diff_eq!(s.expectation_string(&y).unwrap(), 1.0, epsilon = 1e-15);
        let batched = s.string_expectations_batched(&[y]).unwrap();
        assert_abs_diff_eq!(batched[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sampling_basis_state_and_errors() {
        let s = Statevector::basis(1, 0).unwrap();
        let counts = s.sample(1000, 3, 0.0).unwrap();
        assert_eq!(counts.count(0), 1000);
        assert_eq!(s.sample(0, 3, 0.0), Err(Error::NoShots));
        assert_eq!(s.sample(10, 3, 0.5), Err(Error::BadFlipProbability(0.5)));
        assert_eq!(s.sample(10, 3, -0.1), Err(Error::BadFlipProbability(-0.1)));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let s = Statevector::from_real(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            s.sample(500, 11, 0.05).unwrap(),
            s.sample(500, 11, 0.05).unwrap()
        );
        assert_ne!(
            s.sample(500, 11, 0.0).unwrap(),
            s.sample(500, 12, 0.0).unwrap()
        );
    }

    #[test]
    fn zero_probability_outcomes_never_drawn() {
        let s = Statevector::from_real(2, &[0.0, 1.0, 0.0, 1.0]).unwrap();
        let counts = s.sample(20_000, 5, 0.0).unwrap();
        assert_eq!(counts.count(0), 0);
        assert_eq!(counts.count(2), 0);
    }

    #[test]
    fn counts_json() {
        let counts = OutcomeCounts::new(2, vec![3, 0, 1, 4]).unwrap();
        let v = serde_json::to_value(&counts).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"shots": 8, "counts": {"00": 3, "10": 1, "11": 4}})
        );
        let back: OutcomeCounts = serde_json::from_value(v).unwrap();
        assert_eq!(back, counts);
        let bad = serde_json::json!({"shots": 9, "counts": {"00": 3}});
        assert!(serde_json::from_value::<OutcomeCounts>(bad).is_err());
    }

    #[test]
    fn bitstrings() {
        assert_eq!(bitstring(2, 2), "10");
        assert_eq!(bitstring(1, 3), "001");
        assert_eq!(parse_bitstring("10", 2), Some(2));
        assert_eq!(parse_bitstring("1", 2), None);
        assert_eq!(parse_bitstring("1a", 2), None);
    }
}
