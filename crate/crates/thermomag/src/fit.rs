//! Small fitting toolbox shared by the calibration and spectroscopy layers:
//! linear least squares, a Nelder-Mead simplex minimiser and a
//! Levenberg-Marquardt curve fitter with numeric Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordinary linear least squares fit y = X beta, returning beta.
pub fn linear_lsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let xt = x.transpose();
    let normal = &xt * x;
    let rhs = &xt * y;
    normal
        .lu()
        .solve(&rhs)
        .ok_or(Error::NonConvergence { residual: f64::INFINITY })
}

/// Fit a straight line y = a + b x; returns (a, b).
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    assert_eq!(xs.len(), ys.len());
    let design = DMatrix::from_fn(xs.len(), 2, |r, c| if c == 0 { 1.0 } else { xs[r] });
    let beta = linear_lsq(&design, &DVector::from_column_slice(ys))?;
    Ok((beta[0], beta[1]))
}

/// Nelder-Mead simplex minimisation of `f` starting at `x0`.
///
/// `scale` sets the initial simplex edge per coordinate. Returns the best
/// point and its objective value.
pub fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    scale: &[f64],
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += scale[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        if (values[worst] - values[best]).abs() <= tol * (1.0 + values[best].abs()) {
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (k, v) in simplex.iter().enumerate() {
            if k == worst {
                continue;
            }
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };

        let reflected = lerp(&centroid, &simplex[worst], -1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = lerp(&centroid, &simplex[worst], -2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = lerp(&centroid, &simplex[worst], 0.5);
            let fc = f(&contracted);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let best_v = simplex[best].clone();
                for (k, v) in simplex.iter_mut().enumerate() {
                    if k == best {
                        continue;
                    }
                    *v = lerp(&best_v, v, 0.5);
                    values[k] = f(v);
                }
            }
        }
    }

    let (argmin, min) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .expect("non-empty simplex");
    (simplex[argmin].clone(), min)
}

/// Levenberg-Marquardt least squares with forward-difference Jacobian.
///
/// `residuals(p, out)` fills `out` with the residual vector at parameters `p`.
pub fn levenberg_marquardt<F>(
    residuals: F,
    p0: &[f64],
    n_res: usize,
    max_iter: usize,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = vec![0.0; n_res];
    residuals(&p, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;

    for _ in 0..max_iter {
        // numeric Jacobian
        let mut jac = DMatrix::zeros(n_res, n);
        let mut rp = vec![0.0; n_res];
        for j in 0..n {
            let h = 1e-7 * (1.0 + p[j].abs());
            let mut pj = p.clone();
            pj[j] += h;
            residuals(&pj, &mut rp);
            for i in 0..n_res {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let jtr = &jt * DVector::from_column_slice(&r);
        let jtj = &jt * &jac;

        let mut improved = false;
        for _ in 0..12 {
            let mut damped = jtj.clone();
            for j in 0..n {
                damped[(j, j)] += lambda * (1.0 + jtj[(j, j)].abs());
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let candidate: Vec<f64> = p.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            residuals(&candidate, &mut rp);
            let new_cost: f64 = rp.iter().map(|v| v * v).sum();
            if new_cost < cost {
                p = candidate;
                r.copy_from_slice(&rp);
                let rel = (cost - new_cost) / (cost + 1e-300);
                cost = new_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-12 {
                    return Ok(p);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(p)
}

/// Parabolic refinement of a discrete extremum at index `i` of `ys`.
///
/// Returns the sub-grid abscissa of the vertex, clamped to the bracket.
pub fn parabolic_vertex(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= ys.len() {
        return xs[i];
    }
    let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom.abs() < 1e-300 {
        return xs[i];
    }
    let delta = 0.5 * (y0 - y2) / denom;
    let delta = delta.clamp(-1.0, 1.0);
    // assumes a uniform grid near i
    xs[i] + delta * (xs[i + 1] - xs[i])
}

/// Fit y = a * exp(-t / tau) + c; returns (a, tau, c).
pub fn exp_decay_fit(ts: &[f64], ys: &[f64], tau_guess: f64) -> Result<(f64, f64, f64)> {
    assert_eq!(ts.len(), ys.len());
    let y_last = *ys.last().expect("non-empty");
    let a0 = ys[0] - y_last;
    let p0 = [a0, tau_guess, y_last];
    let n = ts.len();
    let p = levenberg_marquardt(
        |p, out| {
            for i in 0..n {
                let model = p[0] * (-ts[i] / p[1].max(1e-300)).exp() + p[2];
                out[i] = model - ys[i];
            }
        },
        &p0,
        n,
        200,
    )?;
    if !p[1].is_finite() || p[1] <= 0.0 {
        return Err(Error::NonConvergence { residual: f64::INFINITY });
    }
    Ok((p[0], p[1], p[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 - 0.25 * x).collect();
        let (a, b) = line_fit(&xs, &ys).unwrap();
        assert_relative_eq!(a, 3.5, epsilon = 1e-12);
        assert_relative_eq!(b, -0.25, epsilon = 1e-12);
    }

    #[test]
    fn nelder_mead_minimises_quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 4.0 * (x[1] + 2.0).powi(2);
        let (x, v) = nelder_mead(f, &[0.0, 0.0], &[0.5, 0.5], 500, 1e-14);
        assert!(v < 1e-10);
        assert_relative_eq!(x[0], 1.5, epsilon = 1e-4);
        assert_relative_eq!(x[1], -2.0, epsilon = 1e-4);
    }

    #[test]
    fn lm_fits_exponential_exactly_on_clean_data() {
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * (-t / 0.8).exp() + 0.3).collect();
        let (a, tau, c) = exp_decay_fit(&ts, &ys, 0.4).unwrap();
        assert_relative_eq!(a, 2.0, epsilon = 1e-6);
        assert_relative_eq!(tau, 0.8, epsilon = 1e-6);
        assert_relative_eq!(c, 0.3, epsilon = 1e-6);
    }

    #[test]
    fn parabolic_vertex_finds_offset_minimum() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x - 4.3).powi(2)).collect();
        let i = ys
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let v = parabolic_vertex(&xs, &ys, i);
        assert_relative_eq!(v, 4.3, epsilon = 1e-9);
    }
}
