#![allow(dead_code)] // different test binaries use different oracle subsets

//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here reuses the library's angular-momentum code paths: small-d
//! matrices come from the explicit factorial sum, big-D matrix elements
//! are integrated numerically over the Euler angles, and Clebsch–Gordan
//! coefficients are built by lowering from stretched states.

use num_complex::Complex64;

pub fn factorial(n: i64) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

/// Wigner small-d matrix element d^j_{mp,m}(beta) via the explicit sum.
pub fn wigner_small_d(j: i64, mp: i64, m: i64, beta: f64) -> f64 {
    let pre = (factorial(j + mp) * factorial(j - mp) * factorial(j + m) * factorial(j - m))
        .sqrt();
    let smin = 0.max(m - mp);
    let smax = (j + m).min(j - mp);
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let mut acc = 0.0;
    for k in smin..=smax {
        let sign = if (mp - m + k) % 2 == 0 { 1.0 } else { -1.0 };
        let denom = factorial(j + m - k)
            * factorial(k)
            * factorial(mp - m + k)
            * factorial(j - mp - k);
        acc += sign * c.powi((2 * j + m - mp - 2 * k) as i32)
            * s.powi((mp - m + 2 * k) as i32)
            / denom;
    }
    pre * acc
}

/// D^j_{mk}(phi, theta, chi) = e^{-i m phi} d^j_{mk}(theta) e^{-i k chi}.
pub fn wigner_big_d(j: i64, m: i64, k: i64, phi: f64, theta: f64, chi: f64) -> Complex64 {
    let d = wigner_small_d(j, m, k, theta);
    Complex64::new(0.0, -(m as f64 * phi + k as f64 * chi)).exp() * d
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// ⟨J'K'M'|D¹_{pq}|JKM⟩ by direct Euler-angle integration with the 8π²
/// measure (trapezoid in the two azimuths, Gauss–Legendre in cos θ).
#[allow(clippy::too_many_arguments)]
pub fn d1_quadrature(
    jp: i64,
    kp: i64,
    mp: i64,
    p: i64,
    q: i64,
    j: i64,
    k: i64,
    m: i64,
) -> Complex64 {
    let n_az = 32;
    let (nodes, weights) = gauss_legendre(24);
    let norm = (((2 * j + 1) * (2 * jp + 1)) as f64).sqrt()
        / (8.0 * std::f64::consts::PI * std::f64::consts::PI);
    let mut acc = Complex64::new(0.0, 0.0);
    for (ct, w) in nodes.iter().zip(weights.iter()) {
        let theta = ct.acos();
        for iphi in 0..n_az {
            let phi = 2.0 * std::f64::consts::PI * iphi as f64 / n_az as f64;
            for ichi in 0..n_az {
                let chi = 2.0 * std::f64::consts::PI * ichi as f64 / n_az as f64;
                let bra = wigner_big_d(jp, mp, kp, phi, theta, chi).conj();
                let op = wigner_big_d(1, p, q, phi, theta, chi);
                let ket = wigner_big_d(j, m, k, phi, theta, chi);
                acc += w * bra * op * ket;
            }
        }
    }
    let daz = (2.0 * std::f64::consts::PI / n_az as f64).powi(2);
    // the library convention is the complex conjugate of this integral
    (acc * daz * norm).conj()
}

/// Clebsch–Gordan coefficient ⟨j1 m1 j2 m2 | j m⟩ built by lowering from
/// the stretched state and Gram–Schmidt at the top of each multiplet
/// (Condon–Shortley: ⟨j1 j1 j2 (j−j1) | j j⟩ > 0).
pub fn cg_oracle(j1: i64, j2: i64, j: i64, m1: i64, m2: i64, m: i64) -> f64 {
    if m1 + m2 != m || j > j1 + j2 || j < (j1 - j2).abs() || m.abs() > j {
        return 0.0;
    }
    let dim = ((2 * j1 + 1) * (2 * j2 + 1)) as usize;
    let idx = |a: i64, b: i64| ((a + j1) * (2 * j2 + 1) + (b + j2)) as usize;
    // coupled states |J, M⟩ as vectors in the product basis, built from
    // J = j1 + j2 downward
    let mut coupled: Vec<Vec<(i64, Vec<f64>)>> = Vec::new(); // per J: (M, vec)
    for jj in ((j1 - j2).abs()..=(j1 + j2)).rev() {
        let mut top = vec![0.0; dim];
        if jj == j1 + j2 {
            top[idx(j1, j2)] = 1.0;
        } else {
            // the m = jj subspace minus the projections of higher multiplets
            let mut vecs: Vec<Vec<f64>> = Vec::new();
            for (a, b) in product_pairs(j1, j2) {
                if a + b == jj {
                    let mut v = vec![0.0; dim];
                    v[idx(a, b)] = 1.0;
                    vecs.push(v);
                }
            }
            // subspace dimension equals #higher multiplets + 1
            let mut residual = vecs[0].clone();
            'try_vec: for cand in &vecs {
                residual = cand.clone();
                for higher in &coupled {
                    if let Some((_, hv)) = higher.iter().find(|(mm, _)| *mm == jj) {
                        let ov: f64 =
                            residual.iter().zip(hv.iter()).map(|(a, b)| a * b).sum();
                        for (r, h) in residual.iter_mut().zip(hv.iter()) {
                            *r -= ov * h;
                        }
                    }
                }
                let nrm: f64 = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > 1e-8 {
                    for r in residual.iter_mut() {
                        *r /= nrm;
                    }
                    break 'try_vec;
                }
            }
            // Condon–Shortley sign: coefficient of (m1 = j1) positive
            let lead = residual[idx(j1, jj - j1)];
            if lead < 0.0 {
                for r in residual.iter_mut() {
                    *r = -*r;
                }
            }
            top = residual;
        }
        // lower through the multiplet
        let mut states = vec![(jj, top)];
        for mm in (-(jj)..=(jj - 1)).rev() {
            let prev = &states.last().unwrap().1;
            let mut lowered = vec![0.0; dim];
            for (a, b) in product_pairs(j1, j2) {
                let amp = prev[idx(a, b)];
                if amp == 0.0 {
                    continue;
                }
                // J- = J1- + J2-
                if a > -j1 {
                    lowered[idx(a - 1, b)] +=
                        amp * (((j1 * (j1 + 1) - a * (a - 1)) as f64).sqrt());
                }
                if b > -j2 {
                    lowered[idx(a, b - 1)] +=
                        amp * (((j2 * (j2 + 1) - b * (b - 1)) as f64).sqrt());
                }
            }
            let scale = (((jj * (jj + 1) - (mm + 1) * mm) as f64).sqrt()).recip();
            for v in lowered.iter_mut() {
                *v *= scale;
            }
            states.push((mm, lowered));
        }
        coupled.push(states);
    }
    let jj_index = ((j1 + j2) - j) as usize;
    let (_, vec) = coupled[jj_index]
        .iter()
        .find(|(mm, _)| *mm == m)
        .expect("M within multiplet");
    vec[idx(m1, m2)]
}

fn product_pairs(j1: i64, j2: i64) -> Vec<(i64, i64)> {
    let mut v = Vec::new();
    for a in -j1..=j1 {
        for b in -j2..=j2 {
            v.push((a, b));
        }
    }
    v
}

/// 3-j symbol from the Clebsch–Gordan oracle.
pub fn w3j_oracle(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    let sign = if (j1 - j2 - m3).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    sign / ((2 * j3 + 1) as f64).sqrt() * cg_oracle(j1, j2, j3, m1, m2, -m3)
}
