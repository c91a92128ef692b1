//! Pauli linear-combination-of-unitaries form of an electronic Hamiltonian.
//!
//! Coefficients come from the Majorana expansion of the integrals and are
//! mapped to Pauli strings with Jordan–Wigner in blocked spin order
//! (spin-up orbitals on qubits `0..N`, spin-down on `N..2N`).

pub mod monomials;
mod pauli;

pub use pauli::{Bits, PauliString, MAX_QUBITS};

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::integrals::ElectronIntegrals;
use crate::{Error, Result};

/// Majorana coefficients at or below this magnitude are dropped.
pub const COEFFICIENT_FLOOR: f64 = 1e-12;

/// Largest register accepted by [`jw_matrix`].
pub const MAX_DENSE_QUBITS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub pauli: PauliString,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    n_qubits: usize,
    constant: f64,
    terms: Vec<PauliTerm>,
    sorted: bool,
    l1: f64,
}

impl CoefficientTable {
    /// Build a table; duplicate masks are merged and identity terms folded into the constant.
    pub fn new(n_qubits: usize, constant: f64, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Domain(format!("{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit limit")));
        }
        let mut constant = constant;
        let mut terms: Vec<PauliTerm> = terms
            .into_iter()
            .filter(|t| {
                if t.pauli.is_identity() {
                    constant += t.coefficient;
                    false
                } else {
                    true
                }
            })
            .collect();
        for t in &terms {
            if t.pauli.x.width() > n_qubits || t.pauli.z.width() > n_qubits {
                return Err(Error::Domain("Pauli mask exceeds the register".into()));
            }
            if !t.coefficient.is_finite() {
                return Err(Error::Domain("non-finite coefficient".into()));
            }
        }
        terms.sort_by(|a, b| a.pauli.cmp(&b.pauli));
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.pauli == t.pauli => last.coefficient += t.coefficient,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coefficient != 0.0);
        Ok(Self::from_parts(n_qubits, constant, merged, false))
    }

    fn from_parts(n_qubits: usize, constant: f64, terms: Vec<PauliTerm>, sorted: bool) -> Self {
        let l1 = terms.iter().map(|t| t.coefficient.abs()).sum();
        Self { n_qubits, constant, terms, sorted, l1 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    /// `λ = Σ |c_ℓ|`, constant excluded.
    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.coefficient.abs()).collect()
    }

    /// Stable descending sort by magnitude; ties by ascending `(z, x)`.
    pub fn prepare_sorted(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| {
            b.coefficient
                .abs()
                .total_cmp(&a.coefficient.abs())
                .then_with(|| a.pauli.cmp(&b.pauli))
        });
        Self::from_parts(self.n_qubits, self.constant, terms, true)
    }

    /// Drop the longest tail whose cumulative weight stays within `threshold`.
    pub fn truncate_tail(&self, threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::Domain("truncation threshold must be non-negative".into()));
        }
        let sorted = if self.sorted { self.clone() } else { self.prepare_sorted() };
        let mut keep = sorted.terms.len();
        let mut dropped = 0.0;
        while keep > 0 {
            let next = dropped + sorted.terms[keep - 1].coefficient.abs();
            if next > threshold {
                break;
            }
            dropped = next;
            keep -= 1;
        }
        let terms = sorted.terms[..keep].to_vec();
        Ok(Self::from_parts(self.n_qubits, self.constant, terms, true))
    }

    /// Same terms with the constant replaced.
    pub fn with_constant(&self, constant: f64) -> Self {
        Self { constant, ..self.clone() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# constant={:e} n_qubits={}", self.constant, self.n_qubits).unwrap();
        writeln!(out, "x_bits,z_bits,coefficient").unwrap();
        for t in &self.terms {
            writeln!(out, "{},{},{:e}", t.pauli.x.to_hex(), t.pauli.z.to_hex(), t.coefficient).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
        let (i0, first) = lines.next().ok_or_else(|| parse_err(0, "empty table"))?;
        let mut constant = None;
        let mut n_qubits = None;
        for tok in first.trim_start_matches('#').split_whitespace() {
            if let Some(v) = tok.strip_prefix("constant=") {
                constant = v.parse::<f64>().ok();
            } else if let Some(v) = tok.strip_prefix("n_qubits=") {
                n_qubits = v.parse::<usize>().ok();
            }
        }
        let (constant, n_qubits) = constant
            .zip(n_qubits)
            .ok_or_else(|| parse_err(i0, "expected `# constant=<value> n_qubits=<n>`"))?;
        let mut terms = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with("x_bits") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(parse_err(i, "expected three columns"));
            }
            let x = Bits::from_hex(f[0]).ok_or_else(|| parse_err(i, "bad x_bits"))?;
            let z = Bits::from_hex(f[1]).ok_or_else(|| parse_err(i, "bad z_bits"))?;
            let coefficient = f[2].trim().parse().map_err(|_| parse_err(i, "bad coefficient"))?;
            terms.push(PauliTerm { pauli: PauliString { x, z }, coefficient });
        }
        Self::new(n_qubits, constant, terms)
    }
}

/// Coefficient table of the Majorana expansion.
pub fn extract_coefficients(x: &ElectronIntegrals) -> CoefficientTable {
    let view = x.view();
    let values = monomials::values(&view);
    let images = monomials::paulis(x.n_orbitals);
    let terms = values
        .iter()
        .zip(images)
        .filter(|(v, _)| v.abs() > COEFFICIENT_FLOOR)
        .map(|(v, (pauli, sign))| PauliTerm { pauli, coefficient: sign * v })
        .collect();
    let constant = monomials::constant(&view, x.core_energy);
    CoefficientTable::new(x.n_qubits(), constant, terms).expect("extraction produces a valid table")
}

/// `λ` of the extracted table without building masks.
pub fn l1_of(x: &ElectronIntegrals) -> f64 {
    monomials::values(&x.view())
        .iter()
        .filter(|v| v.abs() > COEFFICIENT_FLOOR)
        .map(|v| v.abs())
        .sum()
}

/// Dense `Σ c_ℓ P_ℓ + constant · I`.
pub fn jw_matrix(table: &CoefficientTable) -> Result<DMatrix<Complex64>> {
    let nq = table.n_qubits();
    if nq > MAX_DENSE_QUBITS {
        return Err(Error::Domain(format!("dense matrix limited to {MAX_DENSE_QUBITS} qubits, got {nq}")));
    }
    let dim = 1usize << nq;
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for b in 0..dim {
        m[(b, b)] += table.constant();
        for t in table.terms() {
            let (row, amp) = t.pauli.apply_basis(b);
            m[(row, b)] += amp * t.coefficient;
        }
    }
    Ok(m)
}
