//! Wigner 3-j symbols and rank-1 Wigner D-matrix elements.
//!
//! The 3-j symbol is evaluated with the Racah sum in exact big-rational
//! arithmetic (factorials as exact integers, the alternating sum as an
//! exact rational) and converted to `f64` only at the end, so there is no
//! cancellation error for the angular momenta used here (guarded to
//! `j ≤ 40`).
//!
//! Matrix elements of the rank-1 D-matrix components `D¹_{pq}` are taken
//! between symmetric-top kets `|J K M⟩` in the Condon–Shortley/Zare phase
//! convention:
//!
//! ```text
//! ⟨J'K'M'| D¹_{pq} |JKM⟩ = √((2J+1)(2J'+1)) (−1)^{M'−K'}
//!                          ( J' 1 J; −M' p M ) ( J' 1 J; −K' q K )
//! ```
//!
//! so an element is nonzero only for `|J−J'| ≤ 1`, `M' = M + p`,
//! `K' = K + q`. The independent Euler-angle quadrature oracle in the test
//! suite pins this convention down numerically.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest angular momentum supported by the exact 3-j evaluation.
pub const MAX_J: u32 = 40;

/// A symmetric-top ket `|J K M⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymTopKet {
    pub j: u32,
    pub k: i32,
    pub m: i32,
}

impl SymTopKet {
    pub fn new(j: u32, k: i32, m: i32) -> Result<Self> {
        if k.unsigned_abs() > j || m.unsigned_abs() > j {
            return Err(Error::InvalidQuantumNumbers(format!(
                "|K| and |M| must not exceed J (J={j}, K={k}, M={m})"
            )));
        }
        Ok(SymTopKet { j, k, m })
    }
}

fn factorial_big(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// Convert a big rational to f64, shifting numerator and denominator down
/// together when they exceed the f64 exponent range.
fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let n = r.numer();
    let d = r.denom();
    let bits = n.abs().bits().max(d.bits());
    if bits > 900 {
        let shift = bits - 900;
        let n2 = n >> shift;
        let d2 = d >> shift;
        n2.to_f64().unwrap_or(f64::NAN) / d2.to_f64().unwrap_or(f64::NAN)
    } else {
        n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    }
}

/// Wigner 3-j symbol `(j1 j2 j3; m1 m2 m3)` for integer angular momenta.
///
/// Out-of-domain arguments (triangle violation, `m1+m2+m3 ≠ 0`, `|m| > j`)
/// return 0 rather than an error.
pub fn wigner3j(j1: u32, j2: u32, j3: u32, m1: i32, m2: i32, m3: i32) -> f64 {
    assert!(
        j1 <= MAX_J && j2 <= MAX_J && j3 <= MAX_J,
        "wigner3j: j exceeds supported bound {MAX_J}"
    );
    if m1.unsigned_abs() > j1 || m2.unsigned_abs() > j2 || m3.unsigned_abs() > j3 {
        return 0.0;
    }
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    let (j1, j2, j3) = (j1 as i64, j2 as i64, j3 as i64);
    let (m1, m2, m3) = (m1 as i64, m2 as i64, m3 as i64);
    if j3 > j1 + j2 || j3 < (j1 - j2).abs() {
        return 0.0;
    }

    // Triangle coefficient and the (j±m)! prefactor, both exact rationals.
    let delta = BigRational::new(
        factorial_big(j1 + j2 - j3) * factorial_big(j1 - j2 + j3) * factorial_big(-j1 + j2 + j3),
        factorial_big(j1 + j2 + j3 + 1),
    );
    let norm = BigRational::from_integer(
        factorial_big(j1 + m1)
            * factorial_big(j1 - m1)
            * factorial_big(j2 + m2)
            * factorial_big(j2 - m2)
            * factorial_big(j3 + m3)
            * factorial_big(j3 - m3),
    );

    // Racah alternating sum, exact.
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    if k_min > k_max {
        return 0.0;
    }
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let denom = factorial_big(k)
            * factorial_big(j1 + j2 - j3 - k)
            * factorial_big(j1 - m1 - k)
            * factorial_big(j2 + m2 - k)
            * factorial_big(j3 - j2 + m1 + k)
            * factorial_big(j3 - j1 - m2 + k);
        let term = BigRational::new(BigInt::one(), denom);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }

    // 3j = phase * sign(sum) * sqrt(delta * norm * sum^2), all exact inside.
    let square = delta * norm * &sum * &sum;
    let mut sign = if sum.is_negative() { -1.0 } else { 1.0 };
    if (j1 - j2 - m3).rem_euclid(2) == 1 {
        sign = -sign;
    }
    sign * ratio_to_f64(&square).sqrt()
}

/// Matrix element `⟨bra| D¹_{pq} |ket⟩` (real in this phase convention).
pub fn d1_element(bra: SymTopKet, p: i32, q: i32, ket: SymTopKet) -> f64 {
    debug_assert!(p.abs() <= 1 && q.abs() <= 1);
    let (jb, jk) = (bra.j, ket.j);
    if jb > jk + 1 || jk > jb + 1 {
        return 0.0;
    }
    if bra.m != ket.m + p || bra.k != ket.k + q {
        return 0.0;
    }
    let factor = (((2 * jb + 1) * (2 * jk + 1)) as f64).sqrt();
    let phase = if (bra.m - bra.k).rem_euclid(2) == 1 {
        -1.0
    } else {
        1.0
    };
    factor
        * phase
        * wigner3j(jb, 1, jk, -bra.m, p, ket.m)
        * wigner3j(jb, 1, jk, -bra.k, q, ket.k)
}

/// Molecule-fixed dipole axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    A,
    B,
    C,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::A => write!(f, "a"),
            Axis::B => write!(f, "b"),
            Axis::C => write!(f, "c"),
        }
    }
}

/// Laboratory-frame polarization of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    X,
    Y,
    Z,
    SigmaPlus,
    SigmaMinus,
}

impl Polarization {
    /// ΔM values an element of this polarization can carry.
    pub fn delta_m(self) -> &'static [i32] {
        match self {
            Polarization::Z => &[0],
            _ => &[-1, 1],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Polarization::X => "x",
            Polarization::Y => "y",
            Polarization::Z => "z",
            Polarization::SigmaPlus => "sigma+",
            Polarization::SigmaMinus => "sigma-",
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// One term `coefficient · D¹_{pq}` in a lab-frame dipole projection,
/// tagged with the molecule-fixed axis it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DMatrixTerm {
    pub p: i32,
    pub q: i32,
    pub coefficient: Complex64,
    pub component: Axis,
}

const SQRT2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn push(terms: &mut Vec<DMatrixTerm>, p: i32, q: i32, re: f64, im: f64, component: Axis) {
    let coefficient = Complex64::new(re, im);
    if coefficient.norm() != 0.0 {
        terms.push(DMatrixTerm {
            p,
            q,
            coefficient,
            component,
        });
    }
}

fn projection_xyz(mu: [f64; 3], pol: Polarization) -> Vec<DMatrixTerm> {
    let [mu_a, mu_b, mu_c] = mu;
    let mut t = Vec::new();
    match pol {
        Polarization::X => {
            push(&mut t, -1, 0, mu_a * SQRT2_INV, 0.0, Axis::A);
            push(&mut t, 1, 0, -mu_a * SQRT2_INV, 0.0, Axis::A);
            push(&mut t, 1, 1, mu_b / 2.0, 0.0, Axis::B);
            push(&mut t, 1, -1, -mu_b / 2.0, 0.0, Axis::B);
            push(&mut t, -1, 1, -mu_b / 2.0, 0.0, Axis::B);
            push(&mut t, -1, -1, mu_b / 2.0, 0.0, Axis::B);
            push(&mut t, 1, 1, 0.0, -mu_c / 2.0, Axis::C);
            push(&mut t, 1, -1, 0.0, -mu_c / 2.0, Axis::C);
            push(&mut t, -1, 1, 0.0, mu_c / 2.0, Axis::C);
            push(&mut t, -1, -1, 0.0, mu_c / 2.0, Axis::C);
        }
        Polarization::Y => {
            push(&mut t, -1, 0, 0.0, -mu_a * SQRT2_INV, Axis::A);
            push(&mut t, 1, 0, 0.0, -mu_a * SQRT2_INV, Axis::A);
            push(&mut t, 1, 1, 0.0, mu_b / 2.0, Axis::B);
            push(&mut t, 1, -1, 0.0, -mu_b / 2.0, Axis::B);
            push(&mut t, -1, 1, 0.0, mu_b / 2.0, Axis::B);
            push(&mut t, -1, -1, 0.0, -mu_b / 2.0, Axis::B);
            push(&mut t, 1, 1, mu_c / 2.0, 0.0, Axis::C);
            push(&mut t, 1, -1, mu_c / 2.0, 0.0, Axis::C);
            push(&mut t, -1, 1, mu_c / 2.0, 0.0, Axis::C);
            push(&mut t, -1, -1, mu_c / 2.0, 0.0, Axis::C);
        }
        Polarization::Z => {
            push(&mut t, 0, 0, mu_a, 0.0, Axis::A);
            push(&mut t, 0, 1, -mu_b * SQRT2_INV, 0.0, Axis::B);
            push(&mut t, 0, -1, mu_b * SQRT2_INV, 0.0, Axis::B);
            push(&mut t, 0, 1, 0.0, mu_c * SQRT2_INV, Axis::C);
            push(&mut t, 0, -1, 0.0, mu_c * SQRT2_INV, Axis::C);
        }
        _ => unreachable!("σ± handled by lab_projection"),
    }
    t
}

/// Lab-frame projection `μ · R(γ) · e_pol` as a list of `D¹_{pq}` terms.
///
/// σ± are the complex combinations `x ± i y` (no 1/√2), used only for the
/// graph analysis; physical pulses use the linear polarizations.
pub fn lab_projection(mu: [f64; 3], pol: Polarization) -> Vec<DMatrixTerm> {
    match pol {
        Polarization::X | Polarization::Y | Polarization::Z => projection_xyz(mu, pol),
        Polarization::SigmaPlus | Polarization::SigmaMinus => {
            let sign = if pol == Polarization::SigmaPlus {
                1.0
            } else {
                -1.0
            };
            let x = projection_xyz(mu, Polarization::X);
            let y = projection_xyz(mu, Polarization::Y);
            let mut merged: Vec<DMatrixTerm> = Vec::new();
            for term in x.into_iter().chain(y.into_iter().map(|mut t| {
                t.coefficient *= Complex64::new(0.0, sign);
                t
            })) {
                if let Some(existing) = merged
                    .iter_mut()
                    .find(|e| e.p == term.p && e.q == term.q && e.component == term.component)
                {
                    existing.coefficient += term.coefficient;
                } else {
                    merged.push(term);
                }
            }
            merged.retain(|t| t.coefficient.norm() > 1e-15);
            merged
        }
    }
}
