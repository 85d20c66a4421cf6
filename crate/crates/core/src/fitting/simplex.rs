//! Nelder–Mead simplex search on an unconstrained space.

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop when every vertex is within this distance of the best one.
    pub xtol: f64,
    /// Or when the objective spread is below `ftol_rel·|f_best| + ftol_abs`.
    pub ftol_rel: f64,
    pub ftol_abs: f64,
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 4000,
            xtol: 1e-10,
            ftol_rel: 1e-15,
            ftol_abs: 1e-300,
            initial_step: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

pub(crate) fn minimize(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &SimplexOptions) -> Minimum {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(&f, p)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if diameter <= opts.xtol
            || (spread.is_finite() && spread <= opts.ftol_rel * vals[0].abs() + opts.ftol_abs)
        {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = toward(-1.0);
        let fr = eval(&f, &xr);
        if fr < vals[0] {
            let xe = toward(-2.0);
            let fe = eval(&f, &xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < vals[n] {
            let xc = toward(-0.5);
            let fc = eval(&f, &xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = toward(0.5);
            let fc = eval(&f, &xc);
            (xc, fc, fc < vals[n])
        };
        if accept {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        let best = pts[0].clone();
        for i in 1..=n {
            pts[i] = best
                .iter()
                .zip(&pts[i])
                .map(|(b, p)| b + 0.5 * (p - b))
                .collect();
            vals[i] = eval(&f, &pts[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    Minimum {
        x: pts[best].clone(),
        f: vals[best],
        iterations,
        converged,
    }
}
