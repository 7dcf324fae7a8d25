//! Nelder-Mead simplex minimization.

pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimize `f` from `x0` with per-coordinate initial steps. Points where `f`
/// returns a non-finite value are treated as infeasible (+inf). The simplex is
/// rebuilt around the best vertex after each convergence until the budget is
/// spent or a restart stops improving.
pub(crate) fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], max_iter: usize, tol: f64) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut best = Minimum {
        x: x0.to_vec(),
        value: eval(x0),
        iterations: 0,
    };
    let mut used = 0;
    while used < max_iter {
        let (x, value, iters) = run(&eval, &best.x, steps, max_iter - used, tol);
        used += iters.max(1);
        let improved = value < best.value - tol * best.value.abs().max(1.0);
        if value <= best.value {
            best.x = x;
            best.value = value;
        }
        if !improved {
            break;
        }
    }
    best.iterations = used;
    best
}

fn run<F>(f: &F, x0: &[f64], steps: &[f64], max_iter: usize, tol: f64) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let mut v = f(&x);
        if !v.is_finite() {
            x[i] = x0[i] - steps[i];
            v = f(&x);
        }
        simplex.push((x, v));
    }

    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let lo = simplex[0].1;
        let hi = simplex[n].1;
        if hi.is_finite() && (hi - lo).abs() <= tol * (lo.abs() + hi.abs()).max(1e-300) {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(-0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = along(0.5);
            let v = f(&x);
            (x, v)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = f(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, v, iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], 5000, 1e-14);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn respects_infeasible_region() {
        // Unconstrained minimum at 2 lies outside the feasible half-line x < 1.
        let f = |x: &[f64]| if x[0] >= 1.0 { f64::INFINITY } else { (x[0] - 2.0).powi(2) };
        let m = nelder_mead(f, &[0.0], &[0.1], 2000, 1e-14);
        assert!(m.x[0] < 1.0 && m.x[0] > 0.99);
    }
}
