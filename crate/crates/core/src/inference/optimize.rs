use crate::error::{DolError, Result};

/// Nelder–Mead on `f` (to be minimized), starting from a simplex with
/// relative steps `step * x0[i]` (absolute `step` where `x0[i] == 0`).
/// Infinite values act as a barrier. Returns the best vertex and its value.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, iters: usize) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i] != 0.0 { step * x[i] } else { step };
        let v = eval(&x);
        simplex.push((x, v));
    }
    if simplex.iter().all(|(_, v)| *v == f64::INFINITY) {
        return Err(DolError::numeric(
            "objective is infinite on the whole initial simplex",
        ));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..iters {
        simplex.sort_by(|p, q| p.1.total_cmp(&q.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if worst.is_finite() && (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let x = along(rho);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-rho);
            let v = eval(&x);
            (x, v)
        };
        if fc < fr.min(worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for p in simplex.iter_mut().skip(1) {
            for (xj, bj) in p.0.iter_mut().zip(&x_best) {
                *xj = bj + sigma * (*xj - bj);
            }
            p.1 = eval(&p.0);
        }
    }
    simplex.sort_by(|p, q| p.1.total_cmp(&q.1));
    let (x, v) = simplex.swap_remove(0);
    Ok((x, v))
}
