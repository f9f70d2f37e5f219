//! Dataset loading, validation, binarization, and the synthetic benchmark
//! generators with planted solutions.
//!
//! A dataset row is `(x, y, z)`: `n` Boolean attributes, `d` real features,
//! and one real target. CSV files carry a fixed header `x_1..x_n,y_1..y_d,z`.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::terms::Dnf;

/// In-memory dataset of `n_rows` examples with `n_bool` Boolean attributes,
/// `n_feat` real features and a real target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Boolean attributes, row-major, length `n_rows * n_bool`.
    x: Vec<bool>,
    /// Real features, row-major, length `n_rows * n_feat`.
    y: Vec<f64>,
    /// Targets, length `n_rows`.
    z: Vec<f64>,
    n_bool: usize,
    n_feat: usize,
    n_rows: usize,
}

impl Dataset {
    pub fn new(x: Vec<bool>, y: Vec<f64>, z: Vec<f64>, n_bool: usize, n_feat: usize) -> Result<Self> {
        let n_rows = z.len();
        if n_rows == 0 || n_bool == 0 || n_feat == 0 {
            return Err(Error::Validation {
                row: 0,
                msg: "dataset must have at least one row, one Boolean attribute, and one feature".into(),
            });
        }
        if x.len() != n_rows * n_bool || y.len() != n_rows * n_feat {
            return Err(Error::Validation {
                row: 0,
                msg: format!(
                    "shape mismatch: {} rows, {} Boolean values, {} feature values",
                    n_rows,
                    x.len(),
                    y.len()
                ),
            });
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Validation {
                    row: i / n_feat + 1,
                    msg: "non-finite feature value".into(),
                });
            }
        }
        for (i, v) in z.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Validation { row: i + 1, msg: "non-finite target value".into() });
            }
        }
        Ok(Self { x, y, z, n_bool, n_feat, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of Boolean attributes.
    pub fn n_bool(&self) -> usize {
        self.n_bool
    }

    /// Number of real features.
    pub fn n_feat(&self) -> usize {
        self.n_feat
    }

    pub fn x(&self, row: usize, attr: usize) -> bool {
        self.x[row * self.n_bool + attr]
    }

    pub fn x_row(&self, row: usize) -> &[bool] {
        &self.x[row * self.n_bool..(row + 1) * self.n_bool]
    }

    pub fn y_row(&self, row: usize) -> &[f64] {
        &self.y[row * self.n_feat..(row + 1) * self.n_feat]
    }

    pub fn z(&self, row: usize) -> f64 {
        self.z[row]
    }

    /// Largest l2 norm among feature rows.
    pub fn max_feature_norm(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.y_row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Appends one Boolean column per threshold, each true iff
    /// `y[column] <= threshold`. Existing columns are untouched.
    pub fn binarize(&self, column: usize, thresholds: &[f64]) -> Result<Dataset> {
        if column >= self.n_feat {
            return Err(Error::Parameter(format!(
                "feature column {column} out of range (d = {})",
                self.n_feat
            )));
        }
        for pair in thresholds.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(Error::Parameter("thresholds must be strictly increasing".into()));
            }
        }
        if thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::Parameter("thresholds must be finite".into()));
        }
        let n_new = self.n_bool + thresholds.len();
        let mut x = Vec::with_capacity(self.n_rows * n_new);
        for i in 0..self.n_rows {
            x.extend_from_slice(self.x_row(i));
            let v = self.y_row(i)[column];
            x.extend(thresholds.iter().map(|t| v <= *t));
        }
        Dataset::new(x, self.y.clone(), self.z.clone(), n_new, self.n_feat)
    }

    /// Writes the dataset in the canonical CSV form.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.n_bool)
            .map(|j| format!("x_{j}"))
            .chain((1..=self.n_feat).map(|j| format!("y_{j}")))
            .chain(std::iter::once("z".to_string()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.n_rows {
            for j in 0..self.n_bool {
                let _ = write!(out, "{},", if self.x(i, j) { 1 } else { 0 });
            }
            for v in self.y_row(i) {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", self.z(i));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Reads the header of a canonical CSV file and returns `(n, d)`.
pub fn infer_csv_dims(path: &Path) -> Result<(usize, usize)> {
    let content = std::fs::read_to_string(path)?;
    let header = content
        .lines()
        .next()
        .ok_or_else(|| Error::Parse { row: 0, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let n = cols.iter().take_while(|c| c.starts_with("x_")).count();
    let d = cols.iter().skip(n).take_while(|c| c.starts_with("y_")).count();
    if n == 0 || d == 0 || cols.len() != n + d + 1 || cols[n + d] != "z" {
        return Err(Error::Parse {
            row: 0,
            msg: "header must be x_1..x_n,y_1..y_d,z".into(),
        });
    }
    Ok((n, d))
}

/// Loads a dataset from CSV, validating the header and every value.
///
/// Row indices in errors are 1-based over the data rows (the header is row 0).
pub fn load_csv(path: &Path, n: usize, d: usize) -> Result<Dataset> {
    let content = std::fs::read_to_string(path)?;
    let mut lines = content.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse { row: 0, msg: "empty file".into() })?;
    let expected: Vec<String> = (1..=n)
        .map(|j| format!("x_{j}"))
        .chain((1..=d).map(|j| format!("y_{j}")))
        .chain(std::iter::once("z".to_string()))
        .collect();
    let got: Vec<&str> = header.split(',').map(str::trim).collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Parse {
            row: 0,
            msg: format!("header mismatch: expected {}", expected.join(",")),
        });
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut row = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        row += 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != n + d + 1 {
            return Err(Error::Parse {
                row,
                msg: format!("expected {} fields, found {}", n + d + 1, fields.len()),
            });
        }
        for f in &fields[..n] {
            match *f {
                "0" => x.push(false),
                "1" => x.push(true),
                other => {
                    return Err(Error::Validation {
                        row,
                        msg: format!("Boolean attribute value {other:?} not in {{0,1}}"),
                    })
                }
            }
        }
        for f in &fields[n..n + d] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                row,
                msg: format!("bad feature value {f:?}"),
            })?;
            y.push(v);
        }
        let v: f64 = fields[n + d].parse().map_err(|_| Error::Parse {
            row,
            msg: format!("bad target value {:?}", fields[n + d]),
        })?;
        z.push(v);
    }
    if row == 0 {
        return Err(Error::Parse { row: 0, msg: "no data rows".into() });
    }
    Dataset::new(x, y, z, n, d)
}

/// Ground truth attached to a generated benchmark dataset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlantedSpec {
    pub w_star: Vec<f64>,
    pub dnf_star: Dnf,
    pub mu: f64,
    pub noise_sigma: f64,
}

impl PlantedSpec {
    /// Row indices of the planted segment (rows satisfying the planted DNF).
    pub fn planted_rows(&self, data: &Dataset) -> Vec<usize> {
        (0..data.n_rows())
            .filter(|&i| self.dnf_star.satisfies(data.x_row(i)))
            .collect()
    }
}

const TRUTH_TABLE_MAX_BITS: usize = 20;

/// Splits all 2^n assignments into (satisfying, falsifying) lists.
fn assignment_pools(dnf: &Dnf, n: usize) -> Result<(Vec<u32>, Vec<u32>)> {
    if n > TRUTH_TABLE_MAX_BITS {
        return Err(Error::Generation(format!(
            "generator supports at most {TRUTH_TABLE_MAX_BITS} Boolean attributes"
        )));
    }
    let mut sat = Vec::new();
    let mut unsat = Vec::new();
    let mut row = vec![false; n];
    for bits in 0u32..(1u32 << n) {
        for (j, r) in row.iter_mut().enumerate() {
            *r = (bits >> j) & 1 == 1;
        }
        if dnf.satisfies(&row) {
            sat.push(bits);
        } else {
            unsat.push(bits);
        }
    }
    Ok((sat, unsat))
}

fn unpack_bits(bits: u32, n: usize, out: &mut Vec<bool>) {
    for j in 0..n {
        out.push((bits >> j) & 1 == 1);
    }
}

fn shuffle_rows(x: &mut Vec<bool>, y: &mut Vec<f64>, z: &mut [f64], n: usize, d: usize, rng: &mut ChaCha8Rng) {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.shuffle(rng);
    let old_x = x.clone();
    let old_y = y.clone();
    let old_z = z.to_vec();
    for (new_i, &old_i) in order.iter().enumerate() {
        x[new_i * n..(new_i + 1) * n].copy_from_slice(&old_x[old_i * n..(old_i + 1) * n]);
        y[new_i * d..(new_i + 1) * d].copy_from_slice(&old_y[old_i * d..(old_i + 1) * d]);
        z[new_i] = old_z[old_i];
    }
}

/// Benchmark family: a planted line on `d = 1` features hidden under uniform
/// background noise. Exactly `round(mu * n_points)` rows satisfy `dnf_star`
/// and follow `z = w_star * y + noise`; the rest have uniform `z`.
pub fn synth_line_uniform(
    n: usize,
    dnf_star: &Dnf,
    mu: f64,
    n_points: usize,
    w_star: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<(Dataset, PlantedSpec)> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::Parameter("mu must be in (0, 1]".into()));
    }
    if noise_sigma < 0.0 {
        return Err(Error::Parameter("noise_sigma must be >= 0".into()));
    }
    dnf_star.check_attrs(n)?;
    let (sat, unsat) = assignment_pools(dnf_star, n)?;
    if sat.is_empty() {
        return Err(Error::Generation("planted DNF is unsatisfiable".into()));
    }
    let n_good = (mu * n_points as f64).round() as usize;
    let n_bad = n_points - n_good.min(n_points);
    if n_bad > 0 && unsat.is_empty() {
        return Err(Error::Generation(
            "planted DNF is a tautology; no row can fall outside it".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut x = Vec::with_capacity(n_points * n);
    let mut y = Vec::with_capacity(n_points);
    let mut z = Vec::with_capacity(n_points);
    for _ in 0..n_good {
        let bits = sat[rng.random_range(0..sat.len())];
        unpack_bits(bits, n, &mut x);
        let yi = rng.random_range(-100.0..100.0);
        let eps = if noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        y.push(yi);
        z.push(w_star * yi + eps);
    }
    for _ in 0..n_bad {
        let bits = unsat[rng.random_range(0..unsat.len())];
        unpack_bits(bits, n, &mut x);
        y.push(rng.random_range(-100.0..100.0));
        z.push(rng.random_range(-100.0..100.0));
    }
    shuffle_rows(&mut x, &mut y, &mut z, n, 1, &mut rng);

    let data = Dataset::new(x, y, z, n, 1)?;
    let spec = PlantedSpec {
        w_star: vec![w_star],
        dnf_star: dnf_star.clone(),
        mu,
        noise_sigma,
    };
    Ok((data, spec))
}

/// Benchmark family: `z = sin(y) + noise` on `y` uniform in `[-pi, pi]`.
///
/// Features are `[y, 1]` (the constant coordinate carries the intercept) and
/// the Boolean attributes are `y >= -pi/2`, `y >= 0`, `y >= pi/2`.
pub fn synth_sine(n_points: usize, noise_sigma: f64, seed: u64) -> Result<Dataset> {
    if n_points == 0 {
        return Err(Error::Parameter("n_points must be >= 1".into()));
    }
    if noise_sigma < 0.0 {
        return Err(Error::Parameter("noise_sigma must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let pi = std::f64::consts::PI;
    let cuts = [-pi / 2.0, 0.0, pi / 2.0];
    let mut x = Vec::with_capacity(n_points * 3);
    let mut y = Vec::with_capacity(n_points * 2);
    let mut z = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let yi = rng.random_range(-pi..pi);
        let eps = if noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        x.extend(cuts.iter().map(|c| yi >= *c));
        y.push(yi);
        y.push(1.0);
        z.push(yi.sin() + eps);
    }
    Dataset::new(x, y, z, 3, 2)
}

/// Benchmark family: higher-dimensional planted instance. `w_star` is drawn
/// uniformly from `[-10, 10]^d` and the condition is a random 4-term 2-DNF;
/// good rows get `z = <y, w_star> + noise` with noise variance 100, bad rows
/// get uniform `z` in `[-10, 10]`. All features are uniform in `[-1, 1]`.
pub fn synth_scale_up(
    n: usize,
    d: usize,
    n_points: usize,
    mu: f64,
    seed: u64,
) -> Result<(Dataset, PlantedSpec)> {
    if n < 2 || d == 0 || n_points == 0 {
        return Err(Error::Parameter("need n >= 2, d >= 1, n_points >= 1".into()));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::Parameter("mu must be in (0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_star: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();

    let n_good = (mu * n_points as f64).round() as usize;
    let n_bad = n_points - n_good.min(n_points);
    // Resample the condition until both row pools are non-empty.
    let mut chosen = None;
    for _ in 0..1000 {
        let dnf = crate::terms::sample_random_dnf(n, 2, 4, &mut rng);
        let (sat, unsat) = assignment_pools(&dnf, n)?;
        if sat.is_empty() || (n_bad > 0 && unsat.is_empty()) {
            continue;
        }
        chosen = Some((dnf, sat, unsat));
        break;
    }
    let (dnf_star, sat, unsat) =
        chosen.ok_or_else(|| Error::Generation("no satisfiable non-trivial DNF found in 1000 draws".into()))?;

    let sigma = 10.0; // noise variance 100
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let mut x = Vec::with_capacity(n_points * n);
    let mut y = Vec::with_capacity(n_points * d);
    let mut z = Vec::with_capacity(n_points);
    for _ in 0..n_good {
        let bits = sat[rng.random_range(0..sat.len())];
        unpack_bits(bits, n, &mut x);
        let start = y.len();
        for _ in 0..d {
            y.push(rng.random_range(-1.0..1.0));
        }
        let dot: f64 = y[start..].iter().zip(&w_star).map(|(a, b)| a * b).sum();
        z.push(dot + noise.sample(&mut rng));
    }
    for _ in 0..n_bad {
        let bits = unsat[rng.random_range(0..unsat.len())];
        unpack_bits(bits, n, &mut x);
        for _ in 0..d {
            y.push(rng.random_range(-1.0..1.0));
        }
        z.push(rng.random_range(-10.0..10.0));
    }
    shuffle_rows(&mut x, &mut y, &mut z, n, d, &mut rng);

    let data = Dataset::new(x, y, z, n, d)?;
    let spec = PlantedSpec { w_star, dnf_star, mu, noise_sigma: sigma };
    Ok((data, spec))
}
