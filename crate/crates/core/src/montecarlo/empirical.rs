//! Empirical distributions and Kolmogorov-Smirnov statistics.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::McError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, McError> {
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(McError::InvalidArgument(format!("non-finite sample {x}")));
        }
        samples.sort_by(f64::total_cmp);
        // Normalise -0.0 so that equal values compare and print identically.
        for x in &mut samples {
            if *x == 0.0 {
                *x = 0.0;
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// Sample `i` of the sorted ensemble, for resampling with a uniform index.
    pub fn get(&self, i: usize) -> f64 {
        self.samples[i]
    }

    /// `sup_x |F_n(x) - G_m(x)|`.
    pub fn ks_two_sample(&self, other: &EmpiricalDistribution) -> f64 {
        let (a, b) = (&self.samples, &other.samples);
        if a.is_empty() || b.is_empty() {
            return if a.len() == b.len() { 0.0 } else { 1.0 };
        }
        let (n, m) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0, 0);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            // Step past every copy of x in both samples before comparing.
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / n - j as f64 / m).abs());
        }
        d
    }

    /// `sup_x |F_n(x) - F(x)|` for a reference law given by
    /// `x -> (F(x-), F(x))`, which allows atoms.
    pub fn ks_one_sample(&self, cdf: impl Fn(f64) -> (f64, f64)) -> f64 {
        let n = self.len() as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < self.samples.len() {
            let x = self.samples[i];
            let start = i;
            while i < self.samples.len() && self.samples[i] == x {
                i += 1;
            }
            let (left, right) = cdf(x);
            d = d.max((left - start as f64 / n).abs()).max((right - i as f64 / n).abs());
        }
        d
    }

    pub fn write_csv<W: Write>(&self, out: W, header: &str) -> Result<(), McError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([header])?;
        for x in &self.samples {
            w.write_record([x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a single-column CSV with a header row.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, McError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let mut samples = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != 1 {
                return Err(McError::Parse(format!(
                    "row {}: expected 1 column, found {}",
                    row + 2,
                    rec.len()
                )));
            }
            let v: f64 = rec[0]
                .trim()
                .parse()
                .map_err(|e| McError::Parse(format!("row {}: {e}", row + 2)))?;
            samples.push(v);
        }
        Self::new(samples)
    }
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sorted_and_cdf() {
        let d = dist(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(d.samples(), &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(d.cdf(2.0), 0.75);
        assert_eq!(d.cdf(0.5), 0.0);
        assert!(EmpiricalDistribution::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn two_sample_with_ties() {
        let a = dist(&[0.0, 0.0, 1.0, 2.0]);
        assert_eq!(a.ks_two_sample(&a), 0.0);
        let b = dist(&[0.0, 1.0, 1.0, 2.0]);
        assert!((a.ks_two_sample(&b) - 0.25).abs() < 1e-15);
        let c = dist(&[5.0, 6.0]);
        assert_eq!(a.ks_two_sample(&c), 1.0);
    }

    #[test]
    fn one_sample_with_atom() {
        // Half mass at 0, half uniform on (0, 1).
        let cdf = |x: f64| {
            if x < 0.0 {
                (0.0, 0.0)
            } else if x == 0.0 {
                (0.0, 0.5)
            } else {
                let v = 0.5 + 0.5 * x.min(1.0);
                (v, v)
            }
        };
        let d = dist(&[0.0, 0.0, 0.25, 0.75]);
        // After 0.25 the empirical cdf is 0.75 against 0.625.
        assert!((d.ks_one_sample(cdf) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn critical_value() {
        let c = ks_critical_value(10_000, 10_000, 0.01);
        assert!((c - 0.023_018).abs() < 1e-5, "{c}");
    }

    #[test]
    fn csv_round_trip() {
        let d = dist(&[0.1, 2.5, -0.0, 1e-300]);
        let mut buf = Vec::new();
        d.write_csv(&mut buf, "overshoot").unwrap();
        let back = EmpiricalDistribution::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
        assert!(EmpiricalDistribution::read_csv("x\n1,2\n".as_bytes()).is_err());
        assert!(EmpiricalDistribution::read_csv("x\nfoo\n".as_bytes()).is_err());
    }
}
