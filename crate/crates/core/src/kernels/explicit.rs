//! Closed-form Laguerre expression for the full kernel `K_{n,q}`; the pure
//! kernel is the difference of consecutive full kernels.

use num_complex::Complex64;

use super::{laguerre, Convention};
use crate::special::{ln_factorial, pow_log, LogPolarSum};

/// `K_{n,q}(z, w)` from the double Laguerre sum
/// `n Σ_{r<q} Σ_{i<n-r} r!/(r+i)! (n z w̄)^i L_r^i(n|z|^2) L_r^i(n|w|^2)
///  + n Σ_{j≤q-2, j<n} Σ_{1≤k≤q-j-1} j!/(k+j)! (n z̄ w)^k L_j^k(n|z|^2) L_j^k(n|w|^2)`.
pub fn full_kernel(n: u32, q: u32, z: Complex64, w: Complex64, conv: Convention) -> Complex64 {
    let mut sum = LogPolarSum::new();
    push_full_terms(&mut sum, n, q, z, w, conv, 1.0);
    sum.value()
}

/// `K_{δ;n,q} = K_{n,q} - K_{n,q-1}`.
pub fn pure_kernel(n: u32, q: u32, z: Complex64, w: Complex64, conv: Convention) -> Complex64 {
    let mut sum = LogPolarSum::new();
    push_full_terms(&mut sum, n, q, z, w, conv, 1.0);
    if q > 1 {
        push_full_terms(&mut sum, n, q - 1, z, w, conv, -1.0);
    }
    sum.value()
}

fn push_full_terms(
    sum: &mut LogPolarSum,
    n: u32,
    q: u32,
    z: Complex64,
    w: Complex64,
    conv: Convention,
    sign: f64,
) {
    let nf = n as f64;
    let (rz, tz) = z.to_polar();
    let (rw, tw) = w.to_polar();
    let xz = nf * rz * rz;
    let xw = nf * rw * rw;
    let ln_cross = (nf * rz * rw).ln();
    let weight = match conv {
        Convention::Weighted => -0.5 * (xz + xw),
        Convention::Raw => 0.0,
    };
    let base = nf.ln() + weight;

    for r in 0..q {
        if r >= n {
            break;
        }
        for i in 0..(n - r) {
            let lz = laguerre(r, i, xz);
            let lw = laguerre(r, i, xw);
            let prod = lz * lw;
            if prod == 0.0 {
                continue;
            }
            let log = base + ln_factorial(r) - ln_factorial(r + i) + pow_log(i, ln_cross) + prod.abs().ln();
            sum.push(log, i as f64 * (tz - tw), sign * prod.signum());
        }
    }
    if q >= 2 {
        // only indices j < n label basis functions e_j
        let jmax = (q - 2).min(n - 1);
        for j in 0..=jmax {
            for k in 1..=(q - j - 1) {
                let lz = laguerre(j, k, xz);
                let lw = laguerre(j, k, xw);
                let prod = lz * lw;
                if prod == 0.0 {
                    continue;
                }
                let log = base + ln_factorial(j) - ln_factorial(k + j) + pow_log(k, ln_cross) + prod.abs().ln();
                sum.push(log, k as f64 * (tw - tz), sign * prod.signum());
            }
        }
    }
}
