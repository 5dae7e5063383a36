//! Nelder-Mead simplex search on the unit cube.

/// Stopping rules and restart policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Converged when every vertex lies within this distance of the best one.
    pub tolerance: f64,
    pub initial_step: f64,
    /// Restarts from the best point, each with the step halved.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evaluations: 2000,
            tolerance: 1e-6,
            initial_step: 0.1,
            restarts: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimize `f` over `[0, 1]^n`; points outside are projected onto the cube.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best_x = x0.to_vec();
    clamp_unit(&mut best_x);
    let mut best_v = eval(&best_x, &mut evals);
    if n == 0 {
        return NelderMeadResult {
            x: best_x,
            value: best_v,
            evaluations: evals,
            converged: true,
        };
    }
    let mut step = opts.initial_step;
    let mut converged = false;
    for _round in 0..=opts.restarts {
        if evals >= opts.max_evaluations {
            break;
        }
        // Simplex around the current best; steps point inward at the faces.
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_v)];
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += if x[i] + step <= 1.0 { step } else { -step };
            clamp_unit(&mut x);
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        converged = false;
        while evals < opts.max_evaluations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if diameter < opts.tolerance {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / n as f64;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                let mut x: Vec<f64> = centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect();
                clamp_unit(&mut x);
                x
            };
            let xr = along(1.0);
            let vr = eval(&xr, &mut evals);
            if vr < simplex[0].1 {
                let xe = along(2.0);
                let ve = eval(&xe, &mut evals);
                simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
                continue;
            }
            if vr < simplex[n - 1].1 {
                simplex[n] = (xr, vr);
                continue;
            }
            let (xc, vc) = if vr < worst.1 {
                let x = along(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if vc < worst.1.min(vr) {
                simplex[n] = (xc, vc);
                continue;
            }
            // Shrink toward the best vertex.
            let b = simplex[0].0.clone();
            for item in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = item.0.iter().zip(&b).map(|(x, b)| b + 0.5 * (x - b)).collect();
                let v = eval(&x, &mut evals);
                *item = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_v {
            best_x = simplex[0].0.clone();
            best_v = simplex[0].1;
        }
        step *= 0.5;
    }
    NelderMeadResult {
        x: best_x,
        value: best_v,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_minimum() {
        let target = [0.3, 0.7, 0.55];
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let r = minimize(f, &[0.5, 0.5, 0.5], &NelderMeadOptions::default());
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] + 1.0).powi(2) + (x[1] - 2.0).powi(2);
        let r = minimize(f, &[0.5, 0.5], &NelderMeadOptions::default());
        assert!(r.x[0].abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn fixed_point_stays_put() {
        let f = |x: &[f64]| (x[0] - 0.25).powi(2) + (x[1] - 0.75).powi(2);
        let r = minimize(f, &[0.25, 0.75], &NelderMeadOptions::default());
        assert!((r.x[0] - 0.25).abs() < 1e-6 && (r.x[1] - 0.75).abs() < 1e-6);
    }

    #[test]
    fn evaluation_cap_reports_unconverged() {
        let opts = NelderMeadOptions {
            max_evaluations: 10,
            ..NelderMeadOptions::default()
        };
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.123).powi(2)).sum::<f64>();
        let r = minimize(f, &[0.9; 6], &opts);
        assert!(!r.converged);
        assert!(r.evaluations < 10 + 6 + 3);
    }
}
