//! Dataset directory format.
//!
//! A dataset directory holds `manifest.json`, `labels.csv` (one 1-based
//! integer per line) and per-feature value files `feature_<j>.bin` of
//! little-endian 64-bit floats in sample-major then row-major grid order.
//! For one-dimensional features a `feature_<j>.csv` with one
//! comma-separated sample per line is accepted on load.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcdata::{FunctionalDataset, FunctionalSample, GridSpec};

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    n_samples: usize,
    k: usize,
    features: Vec<ManifestFeature>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFeature {
    dims: usize,
    sizes: Vec<usize>,
    domain: Vec<[f64; 2]>,
}

/// Write a dataset directory; save followed by [`load_dataset`] reproduces
/// the data bit-exactly.
pub fn save_dataset(dataset: &FunctionalDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        n_samples: dataset.len(),
        k: dataset.k(),
        features: dataset
            .feature_grids()
            .iter()
            .map(|g| ManifestFeature {
                dims: g.dims(),
                sizes: g.sizes().to_vec(),
                domain: g.domain().to_vec(),
            })
            .collect(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;

    let mut labels = String::new();
    for &y in dataset.labels() {
        labels.push_str(&y.to_string());
        labels.push('\n');
    }
    fs::write(dir.join("labels.csv"), labels)?;

    for j in 0..dataset.n_features() {
        let file = fs::File::create(dir.join(format!("feature_{}.bin", j + 1)))?;
        let mut w = BufWriter::new(file);
        for sample in dataset.samples() {
            for &v in &sample.features[j] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// Load a dataset directory, normalizing feature domains to `[0,1]^d`.
pub fn load_dataset(dir: &Path) -> Result<FunctionalDataset> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path)
            .map_err(|e| Error::Load(format!("missing manifest {}: {e}", manifest_path.display())))?,
    )
    .map_err(|e| Error::Load(format!("bad manifest: {e}")))?;

    let grids: Vec<GridSpec> = manifest
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if f.sizes.len() != f.dims {
                return Err(Error::Load(format!(
                    "feature {}: dims {} but {} sizes",
                    j + 1,
                    f.dims,
                    f.sizes.len()
                )));
            }
            // Rescale arbitrary boxes to the unit box.
            GridSpec::new(f.sizes.clone(), f.domain.clone()).map(|g| g.normalized())
        })
        .collect::<Result<_>>()?;

    let labels = read_labels(&dir.join("labels.csv"), manifest.n_samples, manifest.k)?;

    let mut per_feature: Vec<Vec<Vec<f64>>> = Vec::with_capacity(grids.len());
    for (j, grid) in grids.iter().enumerate() {
        per_feature.push(read_feature(dir, j, grid, manifest.n_samples)?);
    }

    let samples: Vec<FunctionalSample> = (0..manifest.n_samples)
        .map(|i| {
            FunctionalSample::new(per_feature.iter_mut().map(|f| std::mem::take(&mut f[i])).collect())
        })
        .collect();

    FunctionalDataset::new(samples, labels, grids, manifest.k)
        .map_err(|e| Error::Load(format!("invalid dataset: {e}")))
}

fn read_labels(path: &Path, n: usize, k: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Load(format!("missing labels {}: {e}", path.display())))?;
    let labels: Vec<usize> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<usize>()
                .map_err(|e| Error::Load(format!("bad label line {l:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if labels.len() != n {
        return Err(Error::Load(format!(
            "manifest declares {n} samples but labels.csv has {}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y < 1 || y > k) {
        return Err(Error::Load(format!("label {bad} outside the declared range 1..={k}")));
    }
    Ok(labels)
}

fn read_feature(dir: &Path, j: usize, grid: &GridSpec, n: usize) -> Result<Vec<Vec<f64>>> {
    let bin_path = dir.join(format!("feature_{}.bin", j + 1));
    let csv_path = dir.join(format!("feature_{}.csv", j + 1));
    let values: Vec<f64> = if bin_path.exists() {
        let mut bytes = Vec::new();
        fs::File::open(&bin_path)?.read_to_end(&mut bytes)?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Load(format!(
                "feature {}: file length {} is not a multiple of 8",
                j + 1,
                bytes.len()
            )));
        }
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else if csv_path.exists() && grid.dims() == 1 {
        let text = fs::read_to_string(&csv_path)?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .flat_map(|l| l.split(','))
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Load(format!("feature {}: bad value {v:?}: {e}", j + 1)))
            })
            .collect::<Result<_>>()?
    } else {
        return Err(Error::Load(format!(
            "feature {}: neither {} nor a 1D csv alternative found",
            j + 1,
            bin_path.display()
        )));
    };

    let expected = n * grid.len();
    if values.len() != expected {
        return Err(Error::Load(format!(
            "feature {}: expected {expected} values ({} samples x {} grid points), found {}",
            j + 1,
            n,
            grid.len(),
            values.len()
        )));
    }
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Load(format!(
            "feature {}: non-finite value at flat index {bad}",
            j + 1
        )));
    }
    Ok(values.chunks_exact(grid.len()).map(|c| c.to_vec()).collect())
}
