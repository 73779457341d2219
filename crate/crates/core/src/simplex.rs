//! Nelder–Mead simplex search inside the unit box.
//!
//! Trial points are projected onto `[0, 1]^d`; callers map the box onto
//! their parameter bounds. Uses the dimension-adaptive coefficients of Gao
//! and Han, which behave better than the classical ones past three
//! dimensions.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Stop when every vertex is within `xtol` (max norm) of the best.
    pub xtol: f64,
    /// ...or when the value spread is within `ftol` relative.
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { initial_step: 0.05, xtol: 1e-11, ftol: 1e-15, max_iter: 5000 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    let dn = d as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / dn, 0.75 - 0.5 / dn, 1.0 - 1.0 / dn);

    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    project(&mut start);
    pts.push(start.clone());
    for i in 0..d {
        let mut p = start.clone();
        p[i] += if p[i] + opts.initial_step <= 1.0 { opts.initial_step } else { -opts.initial_step };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut order: Vec<usize> = (0..=d).collect();
    let mut centroid = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut trial2 = vec![0.0; d];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, second) = (order[0], order[d], order[d - 1]);

        let spread_x = pts
            .iter()
            .flat_map(|p| p.iter().zip(&pts[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread_f = vals[worst] - vals[best];
        if spread_x <= opts.xtol || spread_f <= opts.ftol * vals[best].abs() {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &k in &order[..d] {
            for (c, x) in centroid.iter_mut().zip(&pts[k]) {
                *c += x / dn;
            }
        }

        let along = |out: &mut Vec<f64>, from: &[f64], coef: f64, centroid: &[f64]| {
            for ((o, c), x) in out.iter_mut().zip(centroid).zip(from) {
                *o = c + coef * (c - x);
            }
            project(out);
        };

        along(&mut trial, &pts[worst], alpha, &centroid);
        let f_r = eval(&trial);

        if f_r < vals[best] {
            along(&mut trial2, &pts[worst], alpha * gamma, &centroid);
            let f_e = eval(&trial2);
            if f_e < f_r {
                pts[worst].copy_from_slice(&trial2);
                vals[worst] = f_e;
            } else {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = f_r;
            }
            continue;
        }
        if f_r < vals[second] {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = f_r;
            continue;
        }
        let (coef, bar) = if f_r < vals[worst] { (alpha * rho, f_r) } else { (-rho, vals[worst]) };
        along(&mut trial2, &pts[worst], coef, &centroid);
        let f_c = eval(&trial2);
        if f_c < bar || (coef > 0.0 && f_c <= bar) {
            pts[worst].copy_from_slice(&trial2);
            vals[worst] = f_c;
            continue;
        }
        // shrink toward the best vertex
        let anchor = pts[best].clone();
        for k in 0..=d {
            if k == best {
                continue;
            }
            for (x, a) in pts[k].iter_mut().zip(&anchor) {
                *x = a + sigma * (*x - a);
            }
            vals[k] = eval(&pts[k]);
        }
    }

    let best = (0..=d).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    SimplexOutcome { x: pts[best].clone(), value: vals[best], iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let target = [0.3, 0.7, 0.5, 0.1, 0.9];
        let out = minimize(
            |x| x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b) * 10.0).sum(),
            &[0.5; 5],
            &SimplexOptions::default(),
        );
        assert!(out.converged);
        for (a, b) in out.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rosenbrock_in_box() {
        // minimum at (0.5, 0.25) after shifting into the box
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (0.5 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let out = minimize(f, &[0.1, 0.9], &SimplexOptions { max_iter: 20000, ..Default::default() });
        assert!((out.x[0] - 0.5).abs() < 1e-6 && (out.x[1] - 0.25).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn respects_box() {
        let out = minimize(|x| -x[0] - x[1], &[0.5, 0.5], &SimplexOptions::default());
        assert!(out.x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!((out.x[0] - 1.0).abs() < 1e-9);
    }
}
