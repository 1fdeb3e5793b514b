//! Synthetic classification data, CSV ingestion, splitting, and feature
//! standardization.
//!
//! The generator places one Gaussian cluster per class at a distinct scaled
//! hypercube vertex inside the informative subspace, pads the remaining
//! dimensions with noise, and mixes everything through a seeded random
//! rotation. CSV ingestion allows substituting any externally generated
//! dataset.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DataPoint;
use crate::rng::{stream, StreamDomain};

/// An immutable labeled dataset with consistent feature/class counts.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    num_features: usize,
    num_classes: usize,
    points: Vec<DataPoint>,
    pub name: String,
}

impl LabeledDataset {
    pub fn new(num_features: usize, num_classes: usize, points: Vec<DataPoint>, name: impl Into<String>) -> Result<LabeledDataset> {
        for p in &points {
            if p.num_features() != num_features || p.num_classes() != num_classes {
                return Err(Error::Data("inconsistent datapoint shapes".into()));
            }
        }
        Ok(LabeledDataset { num_features, num_classes, points, name: name.into() })
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for p in &self.points {
            counts[p.class()] += 1;
        }
        counts
    }
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub points: usize,
    pub features: usize,
    pub informative: usize,
    pub classes: usize,
    pub class_sep: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            points: 500,
            features: 10,
            informative: 5,
            classes: 2,
            class_sep: 1.5,
            label_noise: 0.01,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.informative > self.features || self.informative == 0 {
            return Err(Error::invalid("informative must lie in 1..=features"));
        }
        if self.classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::invalid("label_noise must lie in [0, 0.5)"));
        }
        if self.classes > 1 << self.informative {
            return Err(Error::invalid("more classes than hypercube vertices"));
        }
        Ok(())
    }
}

/// Deterministic synthetic dataset per the spec above.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = stream(spec.seed, StreamDomain::Dataset, 0, 0);

    // distinct hypercube vertices, one per class, components +-class_sep
    let mut vertex_ids: Vec<u64> = (0..1u64 << spec.informative).collect();
    vertex_ids.shuffle(&mut rng);
    let centers: Vec<Vec<f64>> = vertex_ids[..spec.classes]
        .iter()
        .map(|&v| {
            (0..spec.informative)
                .map(|i| if v >> i & 1 == 1 { spec.class_sep } else { -spec.class_sep })
                .collect()
        })
        .collect();

    let rotation = random_rotation(spec.features, &mut rng);

    let mut points = Vec::with_capacity(spec.points);
    for i in 0..spec.points {
        let class = i % spec.classes; // balanced up to rounding
        let mut raw: Vec<f64> = Vec::with_capacity(spec.features);
        for d in 0..spec.features {
            let noise: f64 = rng.sample(StandardNormal);
            let center = if d < spec.informative { centers[class][d] } else { 0.0 };
            raw.push(center + noise);
        }
        let mixed: Vec<f64> = (0..spec.features)
            .map(|r| (0..spec.features).map(|c| rotation[(r, c)] * raw[c]).sum())
            .collect();
        let label = if rng.gen::<f64>() < spec.label_noise {
            // flip to a uniformly random other class
            let other = (class + 1 + rng.gen_range(0..spec.classes - 1)) % spec.classes;
            other
        } else {
            class
        };
        points.push(DataPoint::from_class(mixed, label, spec.classes)?);
    }
    LabeledDataset::new(
        spec.features,
        spec.classes,
        points,
        format!("synthetic-{}x{}-seed{}", spec.points, spec.features, spec.seed),
    )
}

/// Random orthogonal matrix from the QR decomposition of a Gaussian matrix.
fn random_rotation(d: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // fix the sign convention so the factorization is unique
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Class-stratified seeded split into (train, test).
pub fn split(dataset: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(0.0 < train_fraction && train_fraction < 1.0) {
        return Err(Error::invalid("train_fraction must lie in (0, 1)"));
    }
    let total_train = (dataset.len() as f64 * train_fraction).round() as usize;
    if total_train == 0 || total_train == dataset.len() {
        return Err(Error::invalid("split produces an empty side"));
    }
    let mut rng = stream(seed, StreamDomain::Shuffle, 0, 0);

    // indices per class, shuffled, then prefix-split per class
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_classes()];
    for (i, p) in dataset.points().iter().enumerate() {
        by_class[p.class()].push(i);
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for indices in &mut by_class {
        indices.shuffle(&mut rng);
        let k = (indices.len() as f64 * train_fraction).round() as usize;
        train_idx.extend_from_slice(&indices[..k]);
        test_idx.extend_from_slice(&indices[k..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |idx: &[usize], tag: &str| {
        LabeledDataset::new(
            dataset.num_features(),
            dataset.num_classes(),
            idx.iter().map(|&i| dataset.points()[i].clone()).collect(),
            format!("{}-{tag}", dataset.name),
        )
    };
    Ok((pick(&train_idx, "train")?, pick(&test_idx, "test")?))
}

/// Per-feature affine map fitted on the training set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizeTransform {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Features left unscaled because they were constant on train.
    pub constant_features: Vec<usize>,
}

impl StandardizeTransform {
    pub fn apply(&self, dataset: &LabeledDataset) -> Result<LabeledDataset> {
        let points = dataset
            .points()
            .iter()
            .map(|p| {
                let feats = p
                    .features()
                    .iter()
                    .enumerate()
                    .map(|(d, &a)| (a - self.mean[d]) / self.scale[d])
                    .collect();
                DataPoint::new(feats, p.label().to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(dataset.num_features(), dataset.num_classes(), points, dataset.name.clone())
    }
}

/// Fit mean-0 variance-1 scaling on train, apply the same map to test.
pub fn standardize(
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<(LabeledDataset, LabeledDataset, StandardizeTransform)> {
    if train.is_empty() {
        return Err(Error::Data("cannot standardize an empty training set".into()));
    }
    let d = train.num_features();
    let t = train.len() as f64;
    let mut mean = vec![0.0; d];
    for p in train.points() {
        for (m, &a) in mean.iter_mut().zip(p.features()) {
            *m += a;
        }
    }
    for m in &mut mean {
        *m /= t;
    }
    let mut var = vec![0.0; d];
    for p in train.points() {
        for (v, (&a, &m)) in var.iter_mut().zip(p.features().iter().zip(&mean)) {
            *v += (a - m) * (a - m);
        }
    }
    let mut scale = vec![0.0; d];
    let mut constant = Vec::new();
    for (i, v) in var.iter().enumerate() {
        let std = (v / t).sqrt();
        if std == 0.0 {
            constant.push(i);
            mean[i] = 0.0;
            scale[i] = 1.0;
        } else {
            scale[i] = std;
        }
    }
    let transform = StandardizeTransform { mean, scale, constant_features: constant };
    Ok((transform.apply(train)?, transform.apply(test)?, transform))
}

/// Write a dataset as CSV: header `f1..fD,label`, label written as the
/// class index.
pub fn write_csv(dataset: &LabeledDataset, path: &Path, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = (1..=dataset.num_features()).map(|i| format!("f{i}")).collect();
    header.push(label_column.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for p in dataset.points() {
        // Rust's default float formatting is shortest-round-trip, so the
        // file reloads to bit-identical features
        let mut row: Vec<String> = p.features().iter().map(|a| format!("{a}")).collect();
        row.push(p.class().to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

/// Load a numeric CSV with a header; all non-label columns become features
/// in header order, labels are one-hot encoded from the distinct label
/// values sorted ascending.
pub fn load_csv(path: &Path, label_column: &str) -> Result<LabeledDataset> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(Error::Data("empty file".into()));
    }
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Data(format!("label column '{label_column}' not found")))?;

    let mut rows: Vec<(Vec<f64>, String)> = Vec::new();
    for (row_no, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let mut feats = Vec::with_capacity(headers.len() - 1);
        let mut label = String::new();
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                label = cell.to_string();
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::Data(format!(
                        "non-numeric cell '{}' at row {}, column '{}'",
                        cell,
                        row_no + 2,
                        headers.get(col).unwrap_or("?")
                    ))
                })?;
                feats.push(v);
            }
        }
        rows.push((feats, label));
    }
    if rows.is_empty() {
        return Err(Error::Data("csv has a header but no data rows".into()));
    }

    let mut classes: BTreeMap<String, usize> = BTreeMap::new();
    let mut sorted: Vec<String> = rows.iter().map(|(_, l)| l.clone()).collect();
    sorted.sort_by(|a, b| match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap(),
        _ => a.cmp(b),
    });
    sorted.dedup();
    for (i, l) in sorted.iter().enumerate() {
        classes.insert(l.clone(), i);
    }
    let k = classes.len();
    if k < 2 {
        return Err(Error::Data("dataset has fewer than two distinct labels".into()));
    }

    let d = headers.len() - 1;
    let points = rows
        .into_iter()
        .map(|(feats, label)| DataPoint::from_class(feats, classes[&label], k))
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(d, k, points, path.display().to_string())
}
