//! Box-constrained local minimization: a Nelder-Mead simplex to enter the
//! basin, refined by BFGS on central finite-difference gradients with
//! projected backtracking line searches. Objectives may return infinity
//! outside their implicit domain; such points are treated as arbitrarily bad.

/// Componentwise box constraints.
#[derive(Debug, Clone)]
pub struct Bounds(pub Vec<(f64, f64)>);

impl Bounds {
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.0) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.0)
            .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    pub fn width(&self, i: usize) -> f64 {
        self.0[i].1 - self.0[i].0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
}

/// Nelder-Mead with the standard reflection/expansion/contraction/shrink
/// coefficients (1, 2, 1/2, 1/2). Vertices are projected into the box.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    scale: &[f64],
    bounds: &Bounds,
    max_iter: usize,
    ftol: f64,
) -> SimplexResult {
    let d = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    bounds.clamp(&mut start);
    simplex.push(start.clone());
    for i in 0..d {
        let mut v = start.clone();
        v[i] += scale[i];
        bounds.clamp(&mut v);
        if (v[i] - start[i]).abs() < 1e-12 * scale[i].abs().max(1e-300) {
            v[i] = start[i] - scale[i];
            bounds.clamp(&mut v);
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        // Order best..worst.
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[d];
        let second_worst = order[d - 1];

        let spread = values[worst] - values[best];
        if spread.abs() <= ftol * (values[best].abs() + 1e-12) {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; d];
        for (k, v) in simplex.iter().enumerate() {
            if k == worst {
                continue;
            }
            for i in 0..d {
                centroid[i] += v[i] / d as f64;
            }
        }

        let point = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..d)
                .map(|i| centroid[i] + t * (centroid[i] - simplex[worst][i]))
                .collect();
            bounds.clamp(&mut p);
            p
        };

        let reflected = point(1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = point(2.0);
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
            let contracted = if fr < values[worst] {
                point(0.5)
            } else {
                point(-0.5)
            };
            let fc = f(&contracted);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[best].clone();
                for k in 0..=d {
                    if k == best {
                        continue;
                    }
                    for i in 0..d {
                        simplex[k][i] = 0.5 * (simplex[k][i] + anchor[i]);
                    }
                    values[k] = f(&simplex[k]);
                }
            }
        }
    }

    let mut best = 0;
    for k in 1..=d {
        if values[k] < values[best] {
            best = k;
        }
    }
    SimplexResult {
        x: simplex.swap_remove(best),
        f: values[best],
        iterations,
    }
}

pub struct QuasiNewtonResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
}

fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut work = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let mut h = f64::EPSILON.powf(1.0 / 3.0) * x[i].abs().max(1.0);
        // Retreat from implicit domain walls where the objective is infinite.
        for _ in 0..4 {
            work[i] = x[i] + h;
            let fp = f(&work);
            work[i] = x[i] - h;
            let fm = f(&work);
            work[i] = x[i];
            if fp.is_finite() && fm.is_finite() {
                grad[i] = (fp - fm) / (2.0 * h);
                break;
            }
            h *= 0.1;
            grad[i] = 0.0;
        }
    }
    grad
}

/// BFGS with inverse-Hessian updates and an Armijo backtracking line search,
/// iterates projected into the box. Stops on the gradient norm, a vanishing
/// step, or the iteration cap.
pub fn bfgs(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    bounds: &Bounds,
    max_iter: usize,
    gtol: f64,
) -> QuasiNewtonResult {
    let d = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut fx = f(&x);
    let mut grad = fd_gradient(f, &x);
    // Inverse Hessian approximation, row-major.
    let mut h_inv: Vec<f64> = (0..d * d)
        .map(|k| if k % (d + 1) == 0 { 1.0 } else { 0.0 })
        .collect();
    let mut iterations = 0;

    for _ in 0..max_iter {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= gtol {
            break;
        }
        iterations += 1;

        let mut dir = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                dir[i] -= h_inv[i * d + j] * grad[j];
            }
        }
        let descent: f64 = dir.iter().zip(&grad).map(|(p, g)| p * g).sum();
        if !descent.is_finite() || descent >= 0.0 {
            // Reset to steepest descent.
            for k in 0..d * d {
                h_inv[k] = if k % (d + 1) == 0 { 1.0 } else { 0.0 };
            }
            for i in 0..d {
                dir[i] = -grad[i];
            }
        }

        // Armijo backtracking with projection.
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        for _ in 0..40 {
            for i in 0..d {
                x_new[i] = x[i] + alpha * dir[i];
            }
            bounds.clamp(&mut x_new);
            f_new = f(&x_new);
            let slope: f64 = grad
                .iter()
                .zip(x_new.iter().zip(&x))
                .map(|(g, (xn, xo))| g * (xn - xo))
                .sum();
            if f_new.is_finite() && f_new <= fx + 1e-4 * slope {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }

        let step: Vec<f64> = x_new.iter().zip(&x).map(|(n, o)| n - o).collect();
        let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        let grad_new = fd_gradient(f, &x_new);
        let yk: Vec<f64> = grad_new.iter().zip(&grad).map(|(n, o)| n - o).collect();
        let sy: f64 = step.iter().zip(&yk).map(|(s, y)| s * y).sum();
        let s_norm = step_norm;
        let y_norm = yk.iter().map(|y| y * y).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            // h_inv <- (I - s y'/sy) h_inv (I - y s'/sy) + s s'/sy
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; d];
            for i in 0..d {
                for j in 0..d {
                    hy[i] += h_inv[i * d + j] * yk[j];
                }
            }
            let yhy: f64 = yk.iter().zip(&hy).map(|(y, h)| y * h).sum();
            for i in 0..d {
                for j in 0..d {
                    h_inv[i * d + j] += -rho * (step[i] * hy[j] + hy[i] * step[j])
                        + rho * rho * yhy * step[i] * step[j]
                        + rho * step[i] * step[j];
                }
            }
        }

        x = x_new;
        fx = f_new;
        grad = grad_new;

        let x_scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if step_norm <= 1e-9 * x_scale {
            break;
        }
    }

    QuasiNewtonResult {
        x,
        f: fx,
        grad,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rosenbrock(x: &[f64]) -> f64 {
        let a = 1.0 - x[0];
        let b = x[1] - x[0] * x[0];
        a * a + 100.0 * b * b
    }

    #[test]
    fn simplex_plus_bfgs_minimizes_rosenbrock() {
        let bounds = Bounds(vec![(-5.0, 5.0), (-5.0, 5.0)]);
        let mut f = |x: &[f64]| rosenbrock(x);
        let nm = nelder_mead(&mut f, &[-1.2, 1.0], &[0.2, 0.2], &bounds, 400, 1e-12);
        let qn = bfgs(&mut f, &nm.x, &bounds, 200, 1e-9);
        assert_abs_diff_eq!(qn.x[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(qn.x[1], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn bounds_are_respected() {
        let bounds = Bounds(vec![(0.5, 2.0)]);
        let mut f = |x: &[f64]| x[0] * x[0];
        let nm = nelder_mead(&mut f, &[1.5], &[0.3], &bounds, 200, 1e-12);
        let qn = bfgs(&mut f, &nm.x, &bounds, 100, 1e-10);
        assert_abs_diff_eq!(qn.x[0], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn infinite_objective_regions_are_avoided() {
        let bounds = Bounds(vec![(-4.0, 4.0)]);
        let mut f = |x: &[f64]| {
            if x[0] < 1.0 {
                f64::INFINITY
            } else {
                (x[0] - 3.0) * (x[0] - 3.0)
            }
        };
        let nm = nelder_mead(&mut f, &[2.0], &[0.5], &bounds, 200, 1e-12);
        let qn = bfgs(&mut f, &nm.x, &bounds, 100, 1e-10);
        assert_abs_diff_eq!(qn.x[0], 3.0, epsilon = 1e-6);
    }
}
