//! Seeded synthetic datasets: Gaussian blobs, two moons, and mixed-type
//! tabular tables with a given size, column mix and class balance.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::seed::{derive_seed, rng_from_seed, SeededRng};
use crate::data::{ColumnValues, RawColumn, RawDataset};

/// Shape of a tabular dataset: rows, column mix and minority share.
#[derive(Debug, Clone, PartialEq)]
pub struct TableProfile {
    pub name: &'static str,
    pub rows: usize,
    pub numeric: usize,
    pub categorical: usize,
    pub minority_fraction: f64,
}

const fn profile(
    name: &'static str,
    rows: usize,
    numeric: usize,
    categorical: usize,
    minority_pct: f64,
) -> TableProfile {
    TableProfile {
        name,
        rows,
        numeric,
        categorical,
        minority_fraction: minority_pct / 100.0,
    }
}

/// Shapes of the eight policy-training datasets (australian ... wdbc).
pub const POLICY_CORPUS_PROFILES: [TableProfile; 8] = [
    profile("australian", 690, 6, 8, 44.49),
    profile("breast-cancer", 272, 0, 9, 29.78),
    profile("diabetes", 768, 8, 0, 34.90),
    profile("german", 1000, 7, 13, 30.00),
    profile("heart", 293, 13, 0, 36.18),
    profile("ionosphere", 350, 33, 0, 35.71),
    profile("mushroom", 8124, 0, 21, 48.20),
    profile("wdbc", 569, 30, 0, 37.26),
];

/// Shapes of the smaller evaluation datasets.
pub const SMALL_EVALUATION_PROFILES: [TableProfile; 6] = [
    profile("climate-simulation-crashes", 540, 20, 0, 8.52),
    profile("orange-fraud", 1680, 16, 0, 36.25),
    profile("qsar-biodegradation", 1052, 41, 0, 33.65),
    profile("seismic-bumps", 2578, 14, 4, 6.59),
    profile("statlog-german-credit", 1000, 7, 13, 30.00),
    profile("thoracic-surgery", 470, 3, 13, 14.89),
];

fn normal() -> Normal<f64> {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn numeric_column(name: String, v: Vec<f64>) -> RawColumn {
    RawColumn {
        name,
        values: ColumnValues::Numeric(v),
    }
}

fn class_sizes(n: usize) -> (usize, usize) {
    (n - n / 2, n / 2)
}

/// Two isotropic Gaussian classes whose means are `separation` apart.
/// Class 0 gets `ceil(n/2)` rows, listed first.
pub fn gaussian_blobs(name: &str, n: usize, dims: usize, separation: f64, seed: u64) -> RawDataset {
    let mut rng = rng_from_seed(seed);
    let nd = normal();
    let (n0, _) = class_sizes(n);
    let shift = separation / (dims as f64).sqrt();
    let mut cols = vec![Vec::with_capacity(n); dims];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = u8::from(i >= n0);
        for col in cols.iter_mut() {
            col.push(nd.sample(&mut rng) + f64::from(y) * shift);
        }
        labels.push(y);
    }
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(j, v)| numeric_column(format!("x{j}"), v))
        .collect();
    RawDataset::new(name, columns, labels, ["0".into(), "1".into()]).expect("valid blobs")
}

/// Two interleaved half circles with Gaussian noise, plus `extra_dims` pure-noise columns.
pub fn two_moons(name: &str, n: usize, noise: f64, extra_dims: usize, seed: u64) -> RawDataset {
    let mut rng = rng_from_seed(seed);
    let nd = normal();
    let (n0, _) = class_sizes(n);
    let mut cols = vec![Vec::with_capacity(n); 2 + extra_dims];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = u8::from(i >= n0);
        let t = rng.gen_range(0.0..std::f64::consts::PI);
        let (x0, x1) = if y == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        cols[0].push(x0 + noise * nd.sample(&mut rng));
        cols[1].push(x1 + noise * nd.sample(&mut rng));
        for col in cols.iter_mut().skip(2) {
            col.push(nd.sample(&mut rng));
        }
        labels.push(y);
    }
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(j, v)| numeric_column(format!("x{j}"), v))
        .collect();
    RawDataset::new(name, columns, labels, ["0".into(), "1".into()]).expect("valid moons")
}

/// A mixed-type table drawn from a latent mixture model.
///
/// Each class is a mixture of a few latent Gaussian clusters in a small
/// latent space; numeric columns are noisy random projections of the latent
/// point, categorical columns are noisy functions of the cluster id and of
/// one latent coordinate. About 3 % of labels are flipped.
pub fn tabular(profile: &TableProfile, seed: u64) -> RawDataset {
    let mut rng = rng_from_seed(seed);
    let nd = normal();
    let latent = 4usize;
    let clusters_per_class = 3usize;
    let centers: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|_| {
            (0..clusters_per_class)
                .map(|_| (0..latent).map(|_| 1.6 * nd.sample(&mut rng)).collect())
                .collect()
        })
        .collect();
    let projections: Vec<Vec<f64>> = (0..profile.numeric)
        .map(|_| (0..latent).map(|_| nd.sample(&mut rng)).collect())
        .collect();
    let scales: Vec<f64> = (0..profile.numeric)
        .map(|_| 10f64.powf(rng.gen_range(-1.0..2.0)))
        .collect();
    let arities: Vec<usize> = (0..profile.categorical).map(|_| rng.gen_range(2..6)).collect();
    let cat_axis: Vec<usize> = (0..profile.categorical).map(|_| rng.gen_range(0..latent)).collect();

    let n_minority = ((profile.rows as f64 * profile.minority_fraction).round() as usize)
        .clamp(10, profile.rows - 10);
    let mut numeric = vec![Vec::with_capacity(profile.rows); profile.numeric];
    let mut categorical = vec![Vec::with_capacity(profile.rows); profile.categorical];
    let mut labels = Vec::with_capacity(profile.rows);
    for i in 0..profile.rows {
        let y = u8::from(i < n_minority);
        let k = rng.gen_range(0..clusters_per_class);
        let z: Vec<f64> = centers[y as usize][k]
            .iter()
            .map(|c| c + nd.sample(&mut rng))
            .collect();
        for (j, col) in numeric.iter_mut().enumerate() {
            let v: f64 = projections[j].iter().zip(&z).map(|(p, zz)| p * zz).sum();
            col.push(scales[j] * (v + 0.5 * nd.sample(&mut rng)));
        }
        for (j, col) in categorical.iter_mut().enumerate() {
            let a = arities[j];
            let level = if rng.gen_bool(0.7) {
                (k + usize::from(z[cat_axis[j]] > 0.0) * 2 + j) % a
            } else {
                rng.gen_range(0..a)
            };
            col.push(format!("c{level}"));
        }
        let flip = rng.gen_bool(0.03);
        labels.push(if flip { 1 - y } else { y });
    }
    // both classes must survive label noise
    if labels.iter().all(|&y| y == labels[0]) {
        labels[0] = 1 - labels[0];
    }
    let mut columns: Vec<RawColumn> = numeric
        .into_iter()
        .enumerate()
        .map(|(j, v)| numeric_column(format!("num{j}"), v))
        .collect();
    columns.extend(categorical.into_iter().enumerate().map(|(j, v)| RawColumn {
        name: format!("cat{j}"),
        values: ColumnValues::Categorical(v),
    }));
    shuffle_rows(
        RawDataset::new(profile.name, columns, labels, ["0".into(), "1".into()])
            .expect("valid table"),
        &mut rng,
    )
}

fn shuffle_rows(d: RawDataset, rng: &mut SeededRng) -> RawDataset {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..d.n_rows()).collect();
    order.shuffle(rng);
    let columns = d
        .columns
        .into_iter()
        .map(|c| RawColumn {
            name: c.name,
            values: match c.values {
                ColumnValues::Numeric(v) => ColumnValues::Numeric(order.iter().map(|&i| v[i]).collect()),
                ColumnValues::Categorical(v) => {
                    ColumnValues::Categorical(order.iter().map(|&i| v[i].clone()).collect())
                }
            },
        })
        .collect();
    let labels = order.iter().map(|&i| d.labels[i]).collect();
    RawDataset {
        name: d.name,
        columns,
        labels,
        class_names: d.class_names,
    }
}

/// `tabular` with a seed tied to the profile name.
pub fn tabular_for(profile: &TableProfile, master_seed: u64) -> RawDataset {
    tabular(profile, derive_seed(master_seed, &[crate::data::seed::name_tag(profile.name)]))
}
