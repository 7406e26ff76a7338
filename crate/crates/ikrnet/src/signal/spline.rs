//! Natural cubic spline on a uniform grid.

/// Natural cubic spline interpolant of uniformly spaced samples.
///
/// Knots sit at `t_i = i * h`. Evaluation outside `[0, (n-1) h]` clamps to
/// the boundary knots; there is no extrapolation.
pub struct UniformCubicSpline {
    values: Vec<f64>,
    /// Second derivatives at the knots (zero at both ends).
    second_derivs: Vec<f64>,
    step: f64,
}

impl UniformCubicSpline {
    /// Fits the spline; requires at least 4 samples and a positive step.
    pub fn fit(values: &[f64], step: f64) -> Option<Self> {
        let n = values.len();
        if n < 4 || !(step > 0.0) {
            return None;
        }
        // Tridiagonal system for interior second derivatives:
        //   m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h^2
        // with natural boundary conditions m[0] = m[n-1] = 0.
        let interior = n - 2;
        let mut diag = vec![4.0; interior];
        let mut rhs = vec![0.0; interior];
        for i in 0..interior {
            rhs[i] = 6.0 * (values[i] - 2.0 * values[i + 1] + values[i + 2]) / (step * step);
        }
        // Thomas algorithm; sub/super diagonals are all 1.
        for i in 1..interior {
            let w = 1.0 / diag[i - 1];
            diag[i] -= w;
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        if interior > 0 {
            m[interior] = rhs[interior - 1] / diag[interior - 1];
            for i in (0..interior - 1).rev() {
                m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
            }
        }
        Some(UniformCubicSpline { values: values.to_vec(), second_derivs: m, step })
    }

    /// Evaluates the spline at time `t` (seconds from the first knot).
    pub fn evaluate(&self, t: f64) -> f64 {
        let n = self.values.len();
        let t_max = (n - 1) as f64 * self.step;
        let t = t.clamp(0.0, t_max);
        let mut i = (t / self.step).floor() as usize;
        if i >= n - 1 {
            i = n - 2;
        }
        let h = self.step;
        let a = ((i + 1) as f64 * h - t) / h;
        let b = (t - i as f64 * h) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second_derivs[i], self.second_derivs[i + 1]);
        a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
    }
}
