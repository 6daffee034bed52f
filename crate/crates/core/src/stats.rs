//! Small statistical helpers shared by the estimators.

/// Weighted ratio estimator `sum a / sum b` over draws.
#[derive(Clone, Debug, Default)]
pub(crate) struct Ratio {
    pub draws: u64,
    pub items: u64,
    b: f64,
    b2: f64,
    a: Vec<f64>,
    a2: Vec<f64>,
    ab: Vec<f64>,
}

impl Ratio {
    pub fn new(width: usize) -> Self {
        Ratio {
            a: vec![0.0; width],
            a2: vec![0.0; width],
            ab: vec![0.0; width],
            ..Default::default()
        }
    }

    pub fn push(&mut self, a: &[f64], b: f64, items: u64) {
        if b == 0.0 {
            return;
        }
        self.draws += 1;
        self.items += items;
        self.b += b;
        self.b2 += b * b;
        for (i, &x) in a.iter().enumerate() {
            self.a[i] += x;
            self.a2[i] += x * x;
            self.ab[i] += x * b;
        }
    }

    pub fn merge(&mut self, o: Ratio) {
        self.draws += o.draws;
        self.items += o.items;
        self.b += o.b;
        self.b2 += o.b2;
        for i in 0..self.a.len() {
            self.a[i] += o.a[i];
            self.a2[i] += o.a2[i];
            self.ab[i] += o.ab[i];
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.a[i] / self.b
    }

    pub fn std_error(&self, i: usize) -> f64 {
        let r = self.value(i);
        let v = self.a2[i] - 2.0 * r * self.ab[i] + r * r * self.b2;
        v.max(0.0).sqrt() / self.b
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unweighted_ratio_is_binomial() {
        let mut r = Ratio::new(1);
        for i in 0..100 {
            r.push(&[if i < 30 { 1.0 } else { 0.0 }], 1.0, 1);
        }
        assert!((r.value(0) - 0.3).abs() < 1e-15);
        assert!((r.std_error(0) - (0.3f64 * 0.7 / 100.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (m, c) = linear_fit(&x, &y).unwrap();
        assert!((m - 2.0).abs() < 1e-12 && (c + 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }
}
