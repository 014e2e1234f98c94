//! Logistic shortage/surplus predictor.
//!
//! Standardized features, batch gradient descent with L2 regularization
//! (bias excluded), convergence on gradient norm. Shortage is the positive
//! class; balanced intervals are excluded from fitting.

use std::io::{BufRead, Write};
use std::path::Path;

use super::observe::Standardizer;
use super::table::{MarketTable, RegulationState};
use super::DataError;

#[derive(Debug, Clone, PartialEq)]
pub struct StatePredictor {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub standardizer: Standardizer,
}

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    /// Stop once the max-norm of the gradient falls below this.
    pub gradient_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { learning_rate: 0.5, iterations: 10_000, l2: 1e-4, gradient_tolerance: 1e-6 }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Rows usable for fitting/accuracy: shortage maps to 1, surplus to 0,
/// balanced rows are dropped.
pub fn extract_labeled_rows(table: &MarketTable) -> Vec<(usize, f64)> {
    table
        .regulation_state()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            RegulationState::Shortage => Some((i, 1.0)),
            RegulationState::Surplus => Some((i, 0.0)),
            RegulationState::Balanced => None,
        })
        .collect()
}

/// Mean negative log-likelihood plus L2 penalty for a standardized design
/// matrix. Exposed for the loss-monotonicity checks.
pub fn logistic_loss(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = x.len() as f64;
    let mut nll = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let z: f64 = xi.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        // log(1 + e^z) - y z, computed in the stable branch.
        let log1pe = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        nll += log1pe - yi * z;
    }
    nll / n + 0.5 * l2 * w.iter().map(|c| c * c).sum::<f64>()
}

/// Gradient of [`logistic_loss`] in (weights, bias).
pub fn logistic_gradient(
    x: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let z: f64 = xi.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        let err = sigmoid(z) - yi;
        for (g, a) in gw.iter_mut().zip(xi) {
            *g += err * a;
        }
        gb += err;
    }
    for (g, c) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * c;
    }
    (gw, gb / n)
}

/// Fit the predictor on a table's labeled rows with batch gradient descent.
pub fn fit_state_predictor(
    train: &MarketTable,
    features: &[String],
    cfg: &FitConfig,
) -> Result<StatePredictor, DataError> {
    let labeled = extract_labeled_rows(train);
    if labeled.is_empty() {
        return Err(DataError::DegenerateLabels);
    }
    let positives = labeled.iter().filter(|(_, y)| *y == 1.0).count();
    if positives == 0 || positives == labeled.len() {
        return Err(DataError::DegenerateLabels);
    }

    // Standardize from the labeled training rows only.
    let mut mean = vec![0.0; features.len()];
    let mut m2 = vec![0.0; features.len()];
    let n = labeled.len() as f64;
    for (row, _) in &labeled {
        for (j, name) in features.iter().enumerate() {
            let v = train.feature_value(name, *row)?;
            if !v.is_finite() {
                return Err(DataError::NonFiniteFeature { column: name.clone() });
            }
            mean[j] += v;
            m2[j] += v * v;
        }
    }
    let mut std = vec![0.0; features.len()];
    for j in 0..features.len() {
        mean[j] /= n;
        let var = (m2[j] / n - mean[j] * mean[j]).max(0.0);
        std[j] = var.sqrt();
        if std[j] <= 1e-12 {
            return Err(DataError::DegenerateFeature { column: features[j].clone() });
        }
    }
    let standardizer =
        Standardizer { names: features.to_vec(), mean: mean.clone(), std: std.clone() };

    let mut x = Vec::with_capacity(labeled.len());
    let mut y = Vec::with_capacity(labeled.len());
    for (row, label) in &labeled {
        let mut xi = Vec::with_capacity(features.len());
        for (j, name) in features.iter().enumerate() {
            xi.push((train.feature_value(name, *row)? - mean[j]) / std[j]);
        }
        x.push(xi);
        y.push(*label);
    }

    let mut w = vec![0.0; features.len()];
    let mut b = 0.0;
    for _ in 0..cfg.iterations {
        let (gw, gb) = logistic_gradient(&x, &y, &w, b, cfg.l2);
        let gnorm = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gnorm < cfg.gradient_tolerance {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= cfg.learning_rate * gi;
        }
        b -= cfg.learning_rate * gb;
    }

    Ok(StatePredictor { feature_names: features.to_vec(), weights: w, bias: b, standardizer })
}

/// Probability of the Shortage state for a raw (unstandardized) feature
/// vector in predictor order.
pub fn predict_state_prob(p: &StatePredictor, features: &[f64]) -> Result<f64, DataError> {
    if features.len() != p.weights.len() {
        return Err(DataError::DimensionMismatch {
            expected: p.weights.len(),
            actual: features.len(),
        });
    }
    let z: f64 = features
        .iter()
        .zip(p.standardizer.mean.iter().zip(&p.standardizer.std))
        .zip(&p.weights)
        .map(|((x, (m, s)), w)| w * (x - m) / s)
        .sum::<f64>()
        + p.bias;
    Ok(sigmoid(z))
}

impl StatePredictor {
    /// Classification accuracy over a table's labeled rows at the 0.5
    /// threshold. Returns `None` when no labeled rows exist.
    pub fn accuracy(&self, table: &MarketTable) -> Result<Option<f64>, DataError> {
        let labeled = extract_labeled_rows(table);
        if labeled.is_empty() {
            return Ok(None);
        }
        let mut hits = 0usize;
        for (row, y) in &labeled {
            let x: Result<Vec<f64>, DataError> = self
                .feature_names
                .iter()
                .map(|n| table.feature_value(n, *row))
                .collect();
            let prob = predict_state_prob(self, &x?)?;
            let call = if prob >= 0.5 { 1.0 } else { 0.0 };
            if call == *y {
                hits += 1;
            }
        }
        Ok(Some(hits as f64 / labeled.len() as f64))
    }

    /// Flat key-value serialization; values use the shortest decimal form
    /// that parses back to the identical f64.
    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let mut out = String::new();
        out.push_str("format state-predictor v1\n");
        out.push_str(&format!("bias {}\n", self.bias));
        for (j, name) in self.feature_names.iter().enumerate() {
            out.push_str(&format!(
                "feature {} weight {} mean {} std {}\n",
                name, self.weights[j], self.standardizer.mean[j], self.standardizer.std[j]
            ));
        }
        let mut f = std::fs::File::create(path).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        f.write_all(out.as_bytes()).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let file = std::fs::File::open(path).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let reader = std::io::BufReader::new(file);
        let malformed = |reason: &str| DataError::MalformedPredictorFile { reason: reason.into() };
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| malformed("empty file"))?
            .map_err(|e| malformed(&e.to_string()))?;
        if header.trim() != "format state-predictor v1" {
            return Err(malformed("unknown header"));
        }
        let mut bias = None;
        let mut names = Vec::new();
        let mut weights = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for line in lines {
            let line = line.map_err(|e| malformed(&e.to_string()))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [] => {}
                ["bias", v] => {
                    bias = Some(v.parse::<f64>().map_err(|_| malformed("bad bias"))?);
                }
                ["feature", name, "weight", w, "mean", m, "std", s] => {
                    names.push(name.to_string());
                    weights.push(w.parse().map_err(|_| malformed("bad weight"))?);
                    mean.push(m.parse().map_err(|_| malformed("bad mean"))?);
                    std.push(s.parse().map_err(|_| malformed("bad std"))?);
                }
                _ => return Err(malformed(&format!("unrecognized line `{line}`"))),
            }
        }
        Ok(Self {
            feature_names: names.clone(),
            weights,
            bias: bias.ok_or_else(|| malformed("missing bias"))?,
            standardizer: Standardizer { names, mean, std },
        })
    }
}
