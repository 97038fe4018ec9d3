use serde::{Deserialize, Serialize};

use crate::netlist::Scale;

/// Per-feature standardization, optionally after a log10 transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub log10: Vec<bool>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(n: usize) -> Self {
        Self { log10: vec![false; n], mean: vec![0.0; n], std: vec![1.0; n] }
    }

    /// Fits on `rows`; constant columns get unit scale.
    pub fn fit(rows: &[Vec<f64>], scales: &[Scale]) -> Self {
        let n = scales.len();
        let log10: Vec<bool> = scales.iter().map(|s| *s == Scale::Log).collect();
        let mut out = Self { log10, mean: vec![0.0; n], std: vec![1.0; n] };
        if rows.is_empty() {
            return out;
        }
        let t: Vec<Vec<f64>> = rows.iter().map(|r| out.transform(r)).collect();
        let m = t.len() as f64;
        for j in 0..n {
            let mean = t.iter().map(|r| r[j]).sum::<f64>() / m;
            let var = t.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / m;
            out.mean[j] = mean;
            out.std[j] = if var.sqrt() > 1e-12 * mean.abs().max(1.0) { var.sqrt() } else { 1.0 };
        }
        out
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.log10).map(|(&v, &l)| if l { v.log10() } else { v }).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.transform(x).iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .zip(&self.log10)
            .map(|((v, (m, s)), &l)| {
                let t = v * s + m;
                if l {
                    10f64.powf(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_centres_and_scales() {
        let rows = vec![vec![1.0, 1e-9], vec![3.0, 1e-7]];
        let n = Standardizer::fit(&rows, &[Scale::Linear, Scale::Log]);
        assert_eq!(n.mean, [2.0, -8.0]);
        assert_eq!(n.std, [1.0, 1.0]);
        assert_eq!(n.apply(&rows[0]), [-1.0, -1.0]);
    }

    #[test]
    fn constant_column_gets_unit_scale() {
        let n = Standardizer::fit(&[vec![5.0], vec![5.0]], &[Scale::Linear]);
        assert_eq!(n.std, [1.0]);
        assert_eq!(n.apply(&[5.0]), [0.0]);
    }
}
