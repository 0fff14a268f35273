//! Derivative-free minimization for the small parameter vectors of the MAP
//! update.

/// Nelder–Mead simplex search with standard coefficients
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_iterations: usize,
    /// Stop once `f(worst) - f(best)` falls below this.
    pub f_tolerance: f64,
    /// Stop once the simplex collapses below this extent in every coordinate.
    pub x_tolerance: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_iterations: 500,
            f_tolerance: 1e-8,
            x_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimizes `f` from an axis-aligned simplex at `x0` with per-coordinate
    /// `steps`. Non-finite objective values are treated as `+inf`.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], steps: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dim = x0.len();
        assert_eq!(dim, steps.len());
        let mut eval = |x: &[f64]| {
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        simplex.push(x0.to_vec());
        for (i, step) in steps.iter().enumerate() {
            let mut v = x0.to_vec();
            v[i] += step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[dim] - values[0];
            let extent = (0..dim)
                .map(|c| {
                    let (lo, hi) = simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v[c]), hi.max(v[c]))
                    });
                    hi - lo
                })
                .fold(0.0f64, f64::max);
            if values[0].is_finite() && (spread < self.f_tolerance || extent < self.x_tolerance) {
                converged = true;
                break;
            }
            iterations += 1;

            let centroid: Vec<f64> = (0..dim)
                .map(|c| simplex[..dim].iter().map(|v| v[c]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[dim])
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let reflected = along(1.0);
            let fr = eval(&reflected);
            if fr < values[0] {
                let expanded = along(2.0);
                let fe = eval(&expanded);
                if fe < fr {
                    simplex[dim] = expanded;
                    values[dim] = fe;
                } else {
                    simplex[dim] = reflected;
                    values[dim] = fr;
                }
                continue;
            }
            if fr < values[dim - 1] {
                simplex[dim] = reflected;
                values[dim] = fr;
                continue;
            }
            if fr < values[dim] {
                let outside = along(0.5);
                let fo = eval(&outside);
                if fo <= fr {
                    simplex[dim] = outside;
                    values[dim] = fo;
                    continue;
                }
            } else {
                let inside = along(-0.5);
                let fi = eval(&inside);
                if fi < values[dim] {
                    simplex[dim] = inside;
                    values[dim] = fi;
                    continue;
                }
            }
            let best = simplex[0].clone();
            for k in 1..=dim {
                for c in 0..dim {
                    simplex[k][c] = best[c] + 0.5 * (simplex[k][c] - best[c]);
                }
                values[k] = eval(&simplex[k]);
            }
        }

        let best = (0..=dim)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap_or(0);
        Minimum {
            x: simplex[best].clone(),
            value: values[best],
            iterations,
            converged,
        }
    }
}
