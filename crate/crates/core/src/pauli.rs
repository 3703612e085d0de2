//! Pauli-string algebra for the ring current operator.
//!
//! The current operator on `N` qubits has integer matrix entries `m + n` in
//! the momentum basis. It expands into Pauli strings over `{I, X, Z}` as
//!
//! ```text
//! J_N = (2^N - 1) (I + X)^{⊗N} - Σ_n 2^n (I + X)^{⊗(N-1-n)} ⊗ Z ⊗ (I + X)^{⊗n}
//! ```
//!
//! Letter position 0 is the leftmost tensor factor, which is also the most
//! significant bit of the basis index.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default largest qubit count for which dense matrices are materialized.
pub const DEFAULT_DENSE_MAX_QUBITS: usize = 12;

/// Hard upper bound for dense matrices regardless of configuration.
pub const DENSE_QUBIT_CEILING: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// Parse a word such as `"IXZ"` into letters.
pub fn parse_word(word: &str) -> Result<Vec<Letter>> {
    if word.is_empty() {
        return Err(Error::ParsePauli(word.to_string()));
    }
    word.chars()
        .map(|c| Letter::from_char(c).ok_or_else(|| Error::ParsePauli(word.to_string())))
        .collect()
}

/// One weighted term `coefficient · P_1 ⊗ … ⊗ P_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TermRepr", into = "TermRepr")]
pub struct PauliString {
    letters: Vec<Letter>,
    coefficient: f64,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: f64,
    word: String,
}

impl TryFrom<TermRepr> for PauliString {
    type Error = Error;

    fn try_from(repr: TermRepr) -> Result<Self> {
        PauliString::new(parse_word(&repr.word)?, repr.coeff)
    }
}

impl From<PauliString> for TermRepr {
    fn from(p: PauliString) -> Self {
        TermRepr {
            coeff: p.coefficient,
            word: p.word(),
        }
    }
}

impl PauliString {
    pub fn new(letters: Vec<Letter>, coefficient: f64) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::NoQubits);
        }
        if !coefficient.is_finite() {
            return Err(Error::NonFiniteCoefficient(coefficient));
        }
        Ok(PauliString {
            letters,
            coefficient,
        })
    }

    /// Build from a word like `"ZX"`.
    pub fn from_word(word: &str, coefficient: f64) -> Result<Self> {
        Self::new(parse_word(word)?, coefficient)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn word(&self) -> String {
        self.letters.iter().map(|l| l.as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == Letter::I)
    }

    fn mask_of(&self, pred: impl Fn(Letter) -> bool) -> usize {
        let n = self.letters.len();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &l)| pred(l))
            .fold(0, |acc, (pos, _)| acc | 1 << (n - 1 - pos))
    }

    /// Basis-index bits flipped by the string (X and Y positions).
    pub fn x_mask(&self) -> usize {
        self.mask_of(|l| matches!(l, Letter::X | Letter::Y))
    }

    /// Basis-index bits that pick up a sign (Z and Y positions).
    pub fn z_mask(&self) -> usize {
        self.mask_of(|l| matches!(l, Letter::Z | Letter::Y))
    }

    /// Bits at non-identity positions.
    pub fn support_mask(&self) -> usize {
        self.mask_of(|l| l != Letter::I)
    }

    pub fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&l| l == Letter::Y).count()
    }

    pub fn z_count(&self) -> usize {
        self.letters.iter().filter(|&&l| l == Letter::Z).count()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}*{}", self.coefficient, self.word())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `"+3*IX"`, `"+0.5*IX"`, `"-2*ZI"` or a bare word (coefficient 1).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once('*') {
            Some((coeff, word)) => {
                let coeff: f64 = coeff
                    .trim()
                    .parse()
                    .map_err(|_| Error::ParsePauli(s.to_string()))?;
                PauliString::from_word(word.trim(), coeff)
            }
            None => PauliString::from_word(s, 1.0),
        }
    }
}

/// `identity_weight · I + Σ terms`, with like terms merged and sorted by word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SumRepr", into = "SumRepr")]
pub struct WeightedPauliSum {
    n_qubits: usize,
    identity_weight: f64,
    terms: Vec<PauliString>,
}

#[derive(Serialize, Deserialize)]
struct SumRepr {
    n: usize,
    lambda0: f64,
    terms: Vec<PauliString>,
}

impl TryFrom<SumRepr> for WeightedPauliSum {
    type Error = Error;

    fn try_from(repr: SumRepr) -> Result<Self> {
        WeightedPauliSum::new(repr.n, repr.lambda0, repr.terms)
    }
}

impl From<WeightedPauliSum> for SumRepr {
    fn from(s: WeightedPauliSum) -> Self {
        SumRepr {
            n: s.n_qubits,
            lambda0: s.identity_weight,
            terms: s.terms,
        }
    }
}

impl WeightedPauliSum {
    /// Canonicalizes: identity strings fold into the identity weight, like
    /// words are summed, exact zeros are dropped, terms are sorted by word.
    pub fn new(n_qubits: usize, identity_weight: f64, terms: Vec<PauliString>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::NoQubits);
        }
        if !identity_weight.is_finite() {
            return Err(Error::NonFiniteCoefficient(identity_weight));
        }
        let mut lambda0 = identity_weight;
        let mut merged: BTreeMap<Vec<Letter>, f64> = BTreeMap::new();
        for term in terms {
            if term.n_qubits() != n_qubits {
                return Err(Error::QubitMismatch {
                    left: n_qubits,
                    right: term.n_qubits(),
                });
            }
            if term.is_identity() {
                lambda0 += term.coefficient;
            } else {
                *merged.entry(term.letters).or_insert(0.0) += term.coefficient;
            }
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(letters, coefficient)| PauliString::new(letters, coefficient))
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightedPauliSum {
            n_qubits,
            identity_weight: lambda0,
            terms,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// λ0.
    pub fn identity_weight(&self) -> f64 {
        self.identity_weight
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Looks up the coefficient of a word; `None` if absent.
    pub fn coefficient_of(&self, word: &str) -> Option<f64> {
        let letters = parse_word(word).ok()?;
        self.terms
            .binary_search_by(|t| t.letters.as_slice().cmp(letters.as_slice()))
            .ok()
            .map(|i| self.terms[i].coefficient)
    }
}

impl fmt::Display for WeightedPauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.identity_weight)?;
        for t in &self.terms {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseOperator<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Copy + PartialEq> DenseOperator<T> {
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(f(r, c));
            }
        }
        DenseOperator { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.entries[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }

    /// Square sub-block of side `size` starting at `(row0, col0)`.
    pub fn block(&self, row0: usize, col0: usize, size: usize) -> DenseOperator<T> {
        DenseOperator::from_fn(size, |r, c| self.get(row0 + r, col0 + c))
    }

    pub fn map<U: Copy + PartialEq>(&self, f: impl Fn(T) -> U) -> DenseOperator<U> {
        DenseOperator {
            dim: self.dim,
            entries: self.entries.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T: Copy + PartialEq + std::iter::Sum<T>> DenseOperator<T> {
    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

fn check_dense(n_qubits: usize, max_qubits: usize) -> Result<usize> {
    if n_qubits == 0 {
        return Err(Error::NoQubits);
    }
    let max = max_qubits.min(DENSE_QUBIT_CEILING);
    if n_qubits > max {
        return Err(Error::DimensionTooLarge { n_qubits, max });
    }
    Ok(1usize << n_qubits)
}

/// Matrix of the current operator: entry `(m, n) = m + n`.
pub fn dense_current_matrix(n_qubits: usize) -> Result<DenseOperator<i64>> {
    dense_current_matrix_with_limit(n_qubits, DEFAULT_DENSE_MAX_QUBITS)
}

pub fn dense_current_matrix_with_limit(
    n_qubits: usize,
    max_qubits: usize,
) -> Result<DenseOperator<i64>> {
    let dim = check_dense(n_qubits, max_qubits)?;
    Ok(DenseOperator::from_fn(dim, |m, n| (m + n) as i64))
}

/// Number of non-identity strings in the expansion: `2^N + N·2^(N-1) - 1`.
pub fn term_count(n_qubits: usize) -> Result<u64> {
    if n_qubits == 0 {
        return Err(Error::NoQubits);
    }
    if n_qubits > 58 {
        return Err(Error::DimensionTooLarge { n_qubits, max: 58 });
    }
    let n = n_qubits as u64;
    Ok((1u64 << n) + n * (1u64 << (n - 1)) - 1)
}

/// A linear combination of single-qubit letters, one tensor factor.
type Factor = Vec<(Letter, f64)>;

/// Multiplies out `scale · f_1 ⊗ f_2 ⊗ …` into weighted words.
fn expand_tensor_product(scale: f64, factors: &[Factor]) -> Vec<(Vec<Letter>, f64)> {
    let mut acc: Vec<(Vec<Letter>, f64)> = vec![(Vec::with_capacity(factors.len()), scale)];
    for factor in factors {
        let mut next = Vec::with_capacity(acc.len() * factor.len());
        for (word, coeff) in &acc {
            for &(letter, c) in factor {
                let mut w = word.clone();
                w.push(letter);
                next.push((w, coeff * c));
            }
        }
        acc = next;
    }
    acc
}

/// Fully expanded Pauli decomposition of the current operator on `n_qubits`.
pub fn current_decomposition(n_qubits: usize) -> Result<WeightedPauliSum> {
    let count = term_count(n_qubits)?;
    if n_qubits > 30 {
        return Err(Error::DimensionTooLarge { n_qubits, max: 30 });
    }
    let ones: Factor = vec![(Letter::I, 1.0), (Letter::X, 1.0)];
    let z: Factor = vec![(Letter::Z, 1.0)];
    let dim = (1u64 << n_qubits) as f64;

    let mut words = expand_tensor_product(dim - 1.0, &vec![ones.clone(); n_qubits]);
    words.reserve(count as usize + 1 - words.len());
    for n in 0..n_qubits {
        let mut factors = vec![ones.clone(); n_qubits];
        factors[n_qubits - 1 - n] = z.clone();
        words.extend(expand_tensor_product(-((1u64 << n) as f64), &factors));
    }

    let terms = words
        .into_iter()
        .map(|(letters, c)| PauliString::new(letters, c))
        .collect::<Result<Vec<_>>>()?;
    WeightedPauliSum::new(n_qubits, 0.0, terms)
}

/// Dense realization `λ0·I + Σ λk·V_k` in floating point.
pub fn realize_dense(sum: &WeightedPauliSum) -> Result<DenseOperator<f64>> {
    realize_dense_with_limit(sum, DEFAULT_DENSE_MAX_QUBITS)
}

pub fn realize_dense_with_limit(
    sum: &WeightedPauliSum,
    max_qubits: usize,
) -> Result<DenseOperator<f64>> {
    let dim = check_dense(sum.n_qubits, max_qubits)?;
    let mut re = vec![0.0f64; dim * dim];
    let mut im = vec![0.0f64; dim * dim];
    for i in 0..dim {
        re[i * dim + i] = sum.identity_weight;
    }
    for term in &sum.terms {
        let (x, z) = (term.x_mask(), term.z_mask());
        // i^{#Y}
        let (pr, pi) = match term.y_count() % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        for col in 0..dim {
            let row = col ^ x;
            let sign = if (col & z).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let v = term.coefficient * sign;
            re[row * dim + col] += v * pr;
            im[row * dim + col] += v * pi;
        }
    }
    if im.iter().any(|&v| v != 0.0) {
        return Err(Error::NotReal);
    }
    Ok(DenseOperator { dim, entries: re })
}

/// Integer realization; every coefficient must be an integer.
pub fn realize_dense_exact(sum: &WeightedPauliSum) -> Result<DenseOperator<i64>> {
    realize_dense_exact_with_limit(sum, DEFAULT_DENSE_MAX_QUBITS)
}

pub fn realize_dense_exact_with_limit(
    sum: &WeightedPauliSum,
    max_qubits: usize,
) -> Result<DenseOperator<i64>> {
    let dim = check_dense(sum.n_qubits, max_qubits)?;
    let as_int = |c: f64| -> Result<i64> {
        if c.fract() == 0.0 && c.abs() < 9.0e15 {
            Ok(c as i64)
        } else {
            Err(Error::NonIntegerCoefficient(c))
        }
    };
    let mut re = vec![0i64; dim * dim];
    let mut im = vec![0i64; dim * dim];
    let lambda0 = as_int(sum.identity_weight)?;
    for i in 0..dim {
        re[i * dim + i] = lambda0;
    }
    for term in &sum.terms {
        let coeff = as_int(term.coefficient)?;
        let (x, z) = (term.x_mask(), term.z_mask());
        let (pr, pi) = match term.y_count() % 4 {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        };
        for col in 0..dim {
            let row = col ^ x;
            let v = if (col & z).count_ones() % 2 == 0 {
                coeff
            } else {
                -coeff
            };
            re[row * dim + col] += v * pr;
            im[row * dim + col] += v * pi;
        }
    }
    if im.iter().any(|&v| v != 0) {
        return Err(Error::NotReal);
    }
    Ok(DenseOperator { dim, entries: re })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(sum: &WeightedPauliSum) -> Vec<(String, f64)> {
        sum.terms()
            .iter()
            .map(|t| (t.word(), t.coefficient()))
            .collect()
    }

    #[test]
    fn one_qubit_decomposition() {
        let j1 = current_decomposition(1).unwrap();
        assert_eq!(j1.identity_weight(), 1.0);
        assert_eq!(words(&j1), vec![("X".into(), 1.0), ("Z".into(), -1.0)]);
    }

    #[test]
    fn two_qubit_decomposition_has_seven_terms() {
        let j2 = current_decomposition(2).unwrap();
        assert_eq!(j2.identity_weight(), 3.0);
        let expected = [
            ("IX", 3.0),
            ("IZ", -1.0),
            ("XI", 3.0),
            ("XX", 3.0),
            ("XZ", -1.0),
            ("ZI", -2.0),
            ("ZX", -2.0),
        ];
        let got = words(&j2);
        assert_eq!(got.len(), 7);
        for (w, c) in expected {
            assert_eq!(j2.coefficient_of(w), Some(c), "{w}");
        }
    }

    #[test]
    fn dense_small_cases() {
        let j1 = dense_current_matrix(1).unwrap();
        assert_eq!(j1.row(0), &[0, 1]);
        assert_eq!(j1.row(1), &[1, 2]);
        let j2 = dense_current_matrix(2).unwrap();
        assert_eq!(j2.row(3), &[3, 4, 5, 6]);
        let j3 = dense_current_matrix(3).unwrap();
        assert_eq!(j3.get(7, 7), 14);
    }

    #[test]
    fn dense_cap() {
        assert_eq!(
            dense_current_matrix(13),
            Err(Error::DimensionTooLarge {
                n_qubits: 13,
                max: 12
            })
        );
        assert_eq!(dense_current_matrix(0), Err(Error::NoQubits));
        assert!(dense_current_matrix_with_limit(17, 32).is_err());
        assert!(dense_current_matrix_with_limit(13, 13).is_ok());
    }

    #[test]
    fn term_counts() {
        assert_eq!(term_count(1).unwrap(), 2);
        assert_eq!(term_count(2).unwrap(), 7);
        assert_eq!(term_count(3).unwrap(), 19);
        assert_eq!(term_count(4).unwrap(), 47);
        assert!(term_count(0).is_err());
    }

    #[test]
    fn realize_identity_only() {
        let s = WeightedPauliSum::new(2, 2.5, vec![]).unwrap();
        let d = realize_dense(&s).unwrap();
        assert_eq!(
            d,
            DenseOperator::from_fn(4, |r, c| if r == c { 2.5 } else { 0.0 })
        );
    }

    #[test]
    fn realize_one_qubit_sum() {
        let s = WeightedPauliSum::new(
            1,
            1.0,
            vec!["+1*X".parse().unwrap(), "-1*Z".parse().unwrap()],
        )
        .unwrap();
        assert_eq!(
            realize_dense_exact(&s).unwrap(),
            dense_current_matrix(1).unwrap()
        );
    }

    #[test]
    fn y_letters_realize() {
        // Y⊗Y is real: [[0,0,0,-1],[0,0,1,0],[0,1,0,0],[-1,0,0,0]]
        let yy = WeightedPauliSum::new(2, 0.0, vec!["YY".parse().unwrap()]).unwrap();
        let d = realize_dense_exact(&yy).unwrap();
        assert_eq!(d.row(0), &[0, 0, 0, -1]);
        assert_eq!(d.row(1), &[0, 0, 1, 0]);
        let y = WeightedPauliSum::new(1, 0.0, vec!["Y".parse().unwrap()]).unwrap();
        assert_eq!(realize_dense(&y), Err(Error::NotReal));
    }

    #[test]
    fn merging_and_ordering() {
        let s = WeightedPauliSum::new(
            2,
            1.0,
            vec![
                "+2*ZZ".parse().unwrap(),
                "+1*IX".parse().unwrap(),
                "-2*ZZ".parse().unwrap(),
                "+0.5*IX".parse().unwrap(),
                "+4*II".parse().unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(s.identity_weight(), 5.0);
        assert_eq!(words(&s), vec![("IX".into(), 1.5)]);
    }

    #[test]
    fn non_integer_rejected_by_exact_realization() {
        let s = WeightedPauliSum::new(1, 0.5, vec![]).unwrap();
        assert_eq!(
            realize_dense_exact(&s),
            Err(Error::NonIntegerCoefficient(0.5))
        );
    }

    #[test]
    fn text_format() {
        let p = PauliString::from_word("IX", 3.0).unwrap();
        assert_eq!(p.to_string(), "+3*IX");
        assert_eq!("+3.0*IX".parse::<PauliString>().unwrap(), p);
        assert_eq!(
            "-2*ZI".parse::<PauliString>().unwrap(),
            PauliString::from_word("ZI", -2.0).unwrap()
        );
        assert!("+1*IQ".parse::<PauliString>().is_err());
        assert!("abc*X".parse::<PauliString>().is_err());
        assert!(PauliString::from_word("X", f64::NAN).is_err());
    }

    #[test]
    fn json_shape() {
        let j1 = current_decomposition(1).unwrap();
        let v = serde_json::to_value(&j1).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "n": 1,
                "lambda0": 1.0,
                "terms": [{"coeff": 1.0, "word": "X"}, {"coeff": -1.0, "word": "Z"}]
            })
        );
        let back: WeightedPauliSum = serde_json::from_value(v).unwrap();
        assert_eq!(back, j1);
        let bad =
            serde_json::json!({"n": 2, "lambda0": 0.0, "terms": [{"coeff": 1.0, "word": "X"}]});
        assert!(serde_json::from_value::<WeightedPauliSum>(bad).is_err());
    }

    #[test]
    fn masks_follow_msb_convention() {
        let p = PauliString::from_word("XIZ", 1.0).unwrap();
        assert_eq!(p.x_mask(), 0b100);
        assert_eq!(p.z_mask(), 0b001);
        assert_eq!(p.support_mask(), 0b101);
        let y = PauliString::from_word("YI", 1.0).unwrap();
        assert_eq!((y.x_mask(), y.z_mask(), y.y_count()), (0b10, 0b10, 1));
    }
}
