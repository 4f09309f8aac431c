//! Reference computations that share no code path with `crystalchain`.
//!
//! Nothing here diagonalizes anything: time evolution goes through a
//! Taylor scaling-and-squaring matrix exponential, time averages through
//! trapezoidal quadrature, and label validity through brute-force search.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;

/// `exp(−i·H·t)` by scaling and squaring a truncated Taylor series.
pub fn propagator(h: &DMatrix<f64>, t: f64) -> DMatrix<C64> {
    let dim = h.nrows();
    let norm = h.iter().map(|x| x.abs()).sum::<f64>() * t.abs();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a: DMatrix<C64> = h.map(|x| C64::new(0.0, -x * t * scale));
    let mut term = DMatrix::<C64>::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..=20 {
        term = &term * &a / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `|⟨f|exp(−iHt)|i⟩|²` for every `f`.
pub fn probabilities_at(h: &DMatrix<f64>, initial: usize, t: f64) -> Vec<f64> {
    let u = propagator(h, t);
    u.column(initial).iter().map(|z| z.norm_sqr()).collect()
}

/// Trapezoidal average of `p_if(t)` over `[0, horizon]` with `samples`
/// intervals, stepping the state with a fixed one-step propagator.
pub fn quadrature_average(h: &DMatrix<f64>, initial: usize, horizon: f64, samples: usize) -> Vec<f64> {
    let dim = h.nrows();
    let dt = horizon / samples as f64;
    let step = propagator(h, dt);
    let mut psi = DVector::<C64>::zeros(dim);
    psi[initial] = C64::new(1.0, 0.0);
    let mut acc = vec![0.0; dim];
    for j in 0..=samples {
        let w = if j == 0 || j == samples { 0.5 } else { 1.0 };
        for (a, z) in acc.iter_mut().zip(psi.iter()) {
            *a += w * z.norm_sqr();
        }
        if j < samples {
            psi = &step * psi;
        }
    }
    acc.iter().map(|a| a / samples as f64).collect()
}

/// Average over `[0, horizon]` of the probability of ending `d` flips away
/// under `H = μ0·Σσz + β·Σσx` on `n` independent sites, by trapezoid.
///
/// Each site flips with probability `(β/Ω)² sin²(Ωt)`, `Ω = √(μ0² + β²)`.
pub fn site_product_average(n: usize, d: usize, mu0: f64, beta: f64, horizon: f64, samples: usize) -> f64 {
    let omega = (mu0 * mu0 + beta * beta).sqrt();
    let flip = |t: f64| {
        if omega == 0.0 {
            0.0
        } else {
            (beta / omega).powi(2) * (omega * t).sin().powi(2)
        }
    };
    let dt = horizon / samples as f64;
    let mut acc = 0.0;
    for j in 0..=samples {
        let w = if j == 0 || j == samples { 0.5 } else { 1.0 };
        let s = flip(j as f64 * dt);
        acc += w * s.powi(d as i32) * (1.0 - s).powi((n - d) as i32);
    }
    acc / samples as f64
}

/// Counts tuples `(2J3, 2J^2..2J^N)` accepted by `is_valid`, trying every
/// `|2J3| ≤ N` and every `0 ≤ 2J^i ≤ i` (a prefix of `i` spins cannot exceed
/// spin `i/2`).
pub fn count_valid_tuples(n: usize, is_valid: impl Fn(i32, &[i32]) -> bool) -> usize {
    let len = n - 1;
    let max = n as i32;
    let mut count = 0;
    let mut tuple = vec![0i32; len];
    loop {
        for two_j3 in -max..=max {
            if is_valid(two_j3, &tuple) {
                count += 1;
            }
        }
        // Odometer; slot `pos` holds 2J^{pos+2}.
        let mut pos = 0;
        loop {
            if pos == len {
                return count;
            }
            tuple[pos] += 1;
            if tuple[pos] <= pos as i32 + 2 {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// Counts label tuples accepted by `is_valid` among those reachable by
/// coupling spin-½ sites one at a time (`2J^i = 2J^{i−1} ± 1`, `2J^1 = 1`),
/// with every `2J3` in `−N..=N` tried at each leaf.
pub fn count_coupling_tree_tuples(n: usize, is_valid: impl Fn(i32, &[i32]) -> bool) -> usize {
    fn walk(n: usize, prev: i32, tuple: &mut Vec<i32>, is_valid: &dyn Fn(i32, &[i32]) -> bool) -> usize {
        if tuple.len() == n - 1 {
            let max = n as i32;
            return (-max..=max).filter(|&m| is_valid(m, tuple)).count();
        }
        let mut count = 0;
        for next in [prev - 1, prev + 1] {
            if next >= 0 {
                tuple.push(next);
                count += walk(n, next, tuple, is_valid);
                tuple.pop();
            }
        }
        count
    }
    walk(n, 1, &mut Vec::with_capacity(n), &is_valid)
}
