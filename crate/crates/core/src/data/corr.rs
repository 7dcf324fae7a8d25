use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pearson correlation matrix with labelled rows and columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl CorrMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.entries[i][j])
    }
}

pub fn pearson_corr<S: AsRef<str>>(columns: &[(S, Vec<f64>)]) -> Result<CorrMatrix> {
    if columns.len() < 2 {
        return Err(Error::invalid("correlation needs at least two columns"));
    }
    let n = columns[0].1.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let mut centered = Vec::with_capacity(columns.len());
    for (name, values) in columns {
        if values.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("column `{}`", name.as_ref())));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
        let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVariance(name.as_ref().to_string()));
        }
        centered.push((dev, norm));
    }

    let k = columns.len();
    let mut entries = vec![vec![0.0; k]; k];
    for i in 0..k {
        entries[i][i] = 1.0;
        for j in i + 1..k {
            let (di, ni) = &centered[i];
            let (dj, nj) = &centered[j];
            let dot: f64 = di.iter().zip(dj).map(|(a, b)| a * b).sum();
            let r = (dot / (ni * nj)).clamp(-1.0, 1.0);
            entries[i][j] = r;
            entries[j][i] = r;
        }
    }
    Ok(CorrMatrix {
        labels: columns.iter().map(|(l, _)| l.as_ref().to_string()).collect(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_linear_relations() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin() * 3.0 + i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        let c = pearson_corr(&[("x", x), ("y", y), ("z", z)]).unwrap();
        assert!((c.get("x", "y").unwrap() - 1.0).abs() < 1e-12);
        assert!((c.get("x", "z").unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_noise_is_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let z: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let c = pearson_corr(&[("x", x), ("z", z)]).unwrap();
        assert!(c.entries[0][1].abs() < 0.05);
    }

    #[test]
    fn zero_variance_column_is_named() {
        let err = pearson_corr(&[("a", vec![1.0, 2.0, 3.0]), ("flat", vec![5.0; 3])]).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(name) if name == "flat"));
    }

    proptest! {
        #[test]
        fn symmetric_unit_diagonal(cols in prop::collection::vec(prop::collection::vec(-100f64..100.0, 8), 2..5)) {
            let named: Vec<(String, Vec<f64>)> =
                cols.into_iter().enumerate().map(|(i, c)| (format!("c{i}"), c)).collect();
            prop_assume!(named.iter().all(|(_, c)| c.iter().any(|v| (v - c[0]).abs() > 1e-6)));
            let m = pearson_corr(&named).unwrap();
            for i in 0..m.labels.len() {
                prop_assert_eq!(m.entries[i][i], 1.0);
                for j in 0..m.labels.len() {
                    prop_assert_eq!(m.entries[i][j], m.entries[j][i]);
                    prop_assert!((-1.0..=1.0).contains(&m.entries[i][j]));
                }
            }
        }
    }
}
