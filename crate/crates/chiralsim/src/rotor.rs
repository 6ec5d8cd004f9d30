//! Rigid asymmetric-top eigenstates.
//!
//! `H_rot = A Ja² + B Jb² + C Jc²` is diagonalized per `J` in the prolate
//! symmetric-top basis `|J K⟩` (quantization along the `a` axis), where it
//! is real symmetric and block-independent of `M`:
//!
//! ```text
//! ⟨K|H|K⟩    = (B+C)/2 [J(J+1) − K²] + A K²
//! ⟨K±2|H|K⟩  = (B−C)/4 √[(J(J+1)−K(K±1)) (J(J+1)−(K±1)(K±2))]
//! ```
//!
//! Energies are returned in units of B. `(Ka, Kc)` labels are attached by
//! the prolate–oblate correlation: energies sorted ascending map onto
//! `(0,J), (1,J), (1,J−1), (2,J−1), …, (J,0)`.
//!
//! Eigenvector phase convention: the coefficient on the largest-|K| basis
//! ket with nonzero weight (ties broken toward positive K) is made real
//! positive. Physical observables do not depend on this choice.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmetry::Irrep;

/// Cyclic Jacobi eigensolver for small real symmetric matrices.
///
/// Returns (eigenvalues, eigenvectors as columns), unsorted. Converges to
/// machine precision (relative residuals ~1e-15) including for the
/// near-degenerate K-doublets where QR-based solvers lose accuracy.
pub(crate) fn jacobi_eigen(mat: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    let mut a = mat.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let off = |a: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let scale = mat.norm().max(1.0);
    for _sweep in 0..60 {
        if off(&a) < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cos * akp - sin * akq;
                    a[(k, q)] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cos * apk - sin * aqk;
                    a[(q, k)] = sin * apk + cos * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cos * vkp - sin * vkq;
                    v[(k, q)] = sin * vkp + cos * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[(i, i)]).collect();
    (vals, v)
}

/// Rotational constants in MHz with A ≥ B ≥ C > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationalConstants {
    pub a_mhz: f64,
    pub b_mhz: f64,
    pub c_mhz: f64,
}

impl RotationalConstants {
    pub fn new(a_mhz: f64, b_mhz: f64, c_mhz: f64) -> Result<Self> {
        if !(a_mhz >= b_mhz && b_mhz >= c_mhz && c_mhz > 0.0) {
            return Err(Error::InvalidConstants(format!(
                "need A >= B >= C > 0, got A={a_mhz}, B={b_mhz}, C={c_mhz} MHz"
            )));
        }
        Ok(RotationalConstants {
            a_mhz,
            b_mhz,
            c_mhz,
        })
    }

    /// COFCl constants used throughout the worked examples.
    pub fn cofcl() -> Self {
        RotationalConstants {
            a_mhz: 11781.84,
            b_mhz: 5246.37,
            c_mhz: 3627.49,
        }
    }

    pub fn a_over_b(&self) -> f64 {
        self.a_mhz / self.b_mhz
    }

    pub fn c_over_b(&self) -> f64 {
        self.c_mhz / self.b_mhz
    }
}

/// K parity for Table-I style irrep lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: u32) -> Parity {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// D₂ irrep of an asymmetric-top state from the parities of (Ka, Kc):
/// (e,e) → A, (e,o) → Ba, (o,o) → Bb, (o,e) → Bc.
pub fn d2_irrep(ka: Parity, kc: Parity) -> Irrep {
    match (ka, kc) {
        (Parity::Even, Parity::Even) => Irrep::A,
        (Parity::Even, Parity::Odd) => Irrep::Ba,
        (Parity::Odd, Parity::Odd) => Irrep::Bb,
        (Parity::Odd, Parity::Even) => Irrep::Bc,
    }
}

/// One rotational level `J_{Ka,Kc}` (shared by all 2J+1 values of M).
#[derive(Debug, Clone, PartialEq)]
pub struct AsymTopLevel {
    pub j: u32,
    pub ka: u32,
    pub kc: u32,
    /// Energy in units of B.
    pub energy: f64,
    /// Expansion over |J K⟩, K = −J..=J (index K + J).
    pub coeffs: Vec<f64>,
    pub irrep: Irrep,
}

impl AsymTopLevel {
    pub fn coeff(&self, k: i32) -> f64 {
        self.coeffs[(k + self.j as i32) as usize]
    }

    pub fn label(&self) -> String {
        format!("{}_{}{}", self.j, self.ka, self.kc)
    }
}

/// One asymmetric-top eigenstate `|J_{Ka,Kc}, M⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymTopState {
    pub j: u32,
    pub ka: u32,
    pub kc: u32,
    pub m: i32,
    pub energy: f64,
    pub coeffs: Vec<f64>,
    pub irrep: Irrep,
}

/// Rigid-rotor Hamiltonian block for fixed J (and any M), in units of B,
/// over the prolate basis K = −J..=J.
pub fn build_rigid_rotor_block(j: u32, constants: &RotationalConstants) -> DMatrix<f64> {
    let a = constants.a_over_b();
    let c = constants.c_over_b();
    let n = (2 * j + 1) as usize;
    let jj = (j * (j + 1)) as f64;
    let mut h = DMatrix::zeros(n, n);
    for ki in -(j as i32)..=(j as i32) {
        let row = (ki + j as i32) as usize;
        let k = ki as f64;
        h[(row, row)] = 0.5 * (1.0 + c) * (jj - k * k) + a * k * k;
        if ki + 2 <= j as i32 {
            let f = |x: f64| jj - x * (x + 1.0);
            let off = 0.25 * (1.0 - c) * (f(k) * f(k + 1.0)).sqrt();
            let col = (ki + 2 + j as i32) as usize;
            h[(row, col)] = off;
            h[(col, row)] = off;
        }
    }
    h
}

/// Prolate–oblate correlation sequence of (Ka, Kc) labels in ascending
/// energy order: (0,J), (1,J), (1,J−1), (2,J−1), ..., (J,0).
fn correlation_labels(j: u32) -> Vec<(u32, u32)> {
    let mut labels = Vec::with_capacity((2 * j + 1) as usize);
    labels.push((0, j));
    let mut ka = 1;
    while labels.len() < (2 * j + 1) as usize {
        labels.push((ka, j + 1 - ka));
        if labels.len() < (2 * j + 1) as usize {
            labels.push((ka, j - ka));
        }
        ka += 1;
    }
    labels
}

fn fix_phase(coeffs: &mut [f64], j: u32) {
    let tol = 1e-12;
    // largest |K| with nonzero coefficient, ties toward positive K
    let mut pivot = None;
    for absk in (0..=j as i32).rev() {
        for &k in &[absk, -absk] {
            let c = coeffs[(k + j as i32) as usize];
            if c.abs() > tol {
                pivot = Some((k + j as i32) as usize);
                break;
            }
        }
        if pivot.is_some() {
            break;
        }
    }
    if let Some(idx) = pivot {
        if coeffs[idx] < 0.0 {
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
        }
    }
}

/// Diagonalize all J-blocks up to `jmax` and attach labels and irreps.
pub fn diagonalize_levels(constants: &RotationalConstants, jmax: u32) -> Vec<AsymTopLevel> {
    let mut levels = Vec::new();
    for j in 0..=jmax {
        let h = build_rigid_rotor_block(j, constants);
        let (vals, vecs) = jacobi_eigen(&h);
        let n = (2 * j + 1) as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| vals[x].partial_cmp(&vals[y]).unwrap());
        let labels = correlation_labels(j);
        for (rank, &col) in order.iter().enumerate() {
            let (ka, kc) = labels[rank];
            let mut coeffs: Vec<f64> = vecs.column(col).iter().copied().collect();
            fix_phase(&mut coeffs, j);
            levels.push(AsymTopLevel {
                j,
                ka,
                kc,
                energy: vals[col],
                coeffs,
                irrep: d2_irrep(Parity::of(ka), Parity::of(kc)),
            });
        }
    }
    levels
}

/// All eigenstates up to `jmax`, ordered by (J, energy rank within J,
/// M ascending). Energies are M-independent by construction.
pub fn diagonalize_and_label(
    constants: &RotationalConstants,
    jmax: u32,
) -> Vec<AsymTopState> {
    let levels = diagonalize_levels(constants, jmax);
    let mut states = Vec::new();
    for level in &levels {
        for m in -(level.j as i32)..=(level.j as i32) {
            states.push(AsymTopState {
                j: level.j,
                ka: level.ka,
                kc: level.kc,
                m,
                energy: level.energy,
                coeffs: level.coeffs.clone(),
                irrep: level.irrep,
            });
        }
    }
    states
}
