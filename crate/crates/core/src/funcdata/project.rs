//! Quadrature projection of grid-sampled observations onto a basis.
//!
//! Scores are z_{j,l} = <X_j, phi_{j,l}> approximated by tensor-product
//! trapezoid rule on the observation grid.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::funcdata::{BasisSpec, FunctionalDataset, FunctionalSample, GridSpec};

/// Tensor-product trapezoid weights for the normalized grid, row-major.
pub(crate) fn quadrature_weights(grid: &GridSpec) -> Vec<f64> {
    let mut weights = vec![1.0f64; grid.len()];
    let d = grid.dims();
    let mut stride = grid.len();
    for axis in 0..d {
        let m = grid.sizes()[axis];
        let h = 1.0 / (m - 1) as f64;
        stride /= m;
        for (g, w) in weights.iter_mut().enumerate() {
            let i = (g / stride) % m;
            let axis_w = if i == 0 || i == m - 1 { 0.5 * h } else { h };
            *w *= axis_w;
        }
    }
    weights
}

/// Rows are basis elements evaluated over the flattened grid with the
/// quadrature weights folded in, so projection is a single mat-vec.
pub(crate) fn projection_matrix(spec: &BasisSpec, feature: usize, grid: &GridSpec) -> Result<Array2<f64>> {
    let fb = spec.feature(feature);
    if fb.dims != grid.dims() {
        return Err(Error::Shape(format!(
            "feature {}: basis has {} dims, grid has {}",
            feature + 1,
            fb.dims,
            grid.dims()
        )));
    }
    if !grid.is_unit_domain() {
        return Err(Error::Domain("projection requires a normalized [0,1]^d grid".into()));
    }
    let weights = quadrature_weights(grid);
    let mut mat = Array2::zeros((fb.truncation, grid.len()));
    for l in 0..fb.truncation {
        for g in 0..grid.len() {
            let point = grid.point(g);
            mat[[l, g]] = spec.eval(feature, l, &point)? * weights[g];
        }
    }
    Ok(mat)
}

/// Project one sample: scores concatenated feature by feature (length q_1).
pub fn project(sample: &FunctionalSample, spec: &BasisSpec, grids: &[GridSpec]) -> Result<Vec<f64>> {
    if sample.features.len() != spec.n_features() || grids.len() != spec.n_features() {
        return Err(Error::Shape(format!(
            "sample has {} features, spec {} and grids {}",
            sample.features.len(),
            spec.n_features(),
            grids.len()
        )));
    }
    let mut scores = Vec::with_capacity(spec.total_truncation());
    for j in 0..spec.n_features() {
        let mat = projection_matrix(spec, j, &grids[j])?;
        let x = &sample.features[j];
        if x.len() != grids[j].len() {
            return Err(Error::Shape(format!(
                "feature {}: sample has {} values, grid {}",
                j + 1,
                x.len(),
                grids[j].len()
            )));
        }
        for l in 0..mat.nrows() {
            let row = mat.row(l);
            scores.push(row.iter().zip(x).map(|(a, b)| a * b).sum());
        }
    }
    Ok(scores)
}

/// Project every sample of a dataset into an `n x q_1` score matrix.
///
/// Projection matrices are built once per feature and reused across samples.
pub fn project_dataset(dataset: &FunctionalDataset, spec: &BasisSpec) -> Result<Array2<f64>> {
    project_samples(dataset, spec, &(0..dataset.len()).collect::<Vec<_>>())
}

/// Project only the listed sample indices (rows follow the index order).
pub fn project_samples(
    dataset: &FunctionalDataset,
    spec: &BasisSpec,
    indices: &[usize],
) -> Result<Array2<f64>> {
    let grids = dataset.feature_grids();
    if spec.n_features() != grids.len() {
        return Err(Error::Shape(format!(
            "spec has {} features, dataset {}",
            spec.n_features(),
            grids.len()
        )));
    }
    let q1 = spec.total_truncation();
    let mut scores = Array2::zeros((indices.len(), q1));
    let mut offset = 0usize;
    for j in 0..spec.n_features() {
        let mat = projection_matrix(spec, j, &grids[j])?;
        let q = mat.nrows();
        for (row, &i) in indices.iter().enumerate() {
            let x = &dataset.sample(i).features[j];
            for l in 0..q {
                scores[[row, offset + l]] = mat.row(l).iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
        offset += q;
    }
    Ok(scores)
}

/// Quadrature Gram matrix `<phi_a, phi_b>` of one feature's basis on its
/// grid; identity up to quadrature error when the basis is orthonormal.
pub fn gram_matrix(spec: &BasisSpec, feature: usize, grid: &GridSpec) -> Result<Array2<f64>> {
    let fb = spec.feature(feature);
    let q = fb.truncation;
    let weighted = projection_matrix(spec, feature, grid)?;
    let weights = quadrature_weights(grid);
    let mut gram = Array2::zeros((q, q));
    for a in 0..q {
        for b in 0..q {
            // weighted already carries one factor of the weights; divide it
            // back out of one side.
            gram[[a, b]] = weighted
                .row(a)
                .iter()
                .zip(weighted.row(b).iter())
                .zip(&weights)
                .map(|((x, y), w)| x * y / w)
                .sum();
        }
    }
    Ok(gram)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_2d(m: usize) -> GridSpec {
        GridSpec::unit(vec![m, m]).unwrap()
    }

    fn sample_on_grid<F: Fn(&[f64]) -> f64>(grid: &GridSpec, f: F) -> Vec<f64> {
        (0..grid.len()).map(|g| f(&grid.point(g))).collect()
    }

    #[test]
    fn weights_sum_to_volume() {
        let grid = GridSpec::unit(vec![7, 5, 4]).unwrap();
        let sum: f64 = quadrature_weights(&grid).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bilinear_integrand_exact() {
        // integral of s*t over the unit square is 1/4; trapezoid is exact
        // for integrands linear per axis.
        let grid = grid_2d(30);
        let spec = BasisSpec::cosine(&[(2, 1)]).unwrap();
        let sample = FunctionalSample::new(vec![sample_on_grid(&grid, |p| p[0] * p[1])]);
        let z = project(&sample, &spec, &[grid]).unwrap();
        assert!((z[0] - 0.25).abs() < 1e-12, "got {}", z[0]);
    }

    #[test]
    fn basis_element_projects_to_one() {
        let grid = grid_2d(30);
        let spec = BasisSpec::cosine(&[(2, 6)]).unwrap();
        for l in 0..6 {
            let vals = sample_on_grid(&grid, |p| spec.eval(0, l, p).unwrap());
            let sample = FunctionalSample::new(vec![vals]);
            let z = project(&sample, &spec, &[grid.clone()]).unwrap();
            assert!((z[l] - 1.0).abs() < 1e-6, "element {l}: {}", z[l]);
        }
    }

    #[test]
    fn gram_close_to_identity_1d() {
        let grid = GridSpec::unit(vec![200]).unwrap();
        let spec = BasisSpec::cosine(&[(1, 5)]).unwrap();
        let gram = gram_matrix(&spec, 0, &grid).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (gram[[a, b]] - want).abs() < 1e-6,
                    "gram[{a},{b}] = {}",
                    gram[[a, b]]
                );
            }
        }
    }

    #[test]
    fn refined_grid_agreement() {
        // Smooth integrand: coarse 30x30 quadrature vs 600x600 oracle.
        let spec = BasisSpec::cosine(&[(2, 6)]).unwrap();
        let f = |p: &[f64]| (1.5 * p[0]).sin() + p[1] * p[1] + 0.3 * (p[0] * p[1]).cos();
        let coarse = grid_2d(30);
        let fine = grid_2d(600);
        let zc = project(
            &FunctionalSample::new(vec![sample_on_grid(&coarse, f)]),
            &spec,
            &[coarse],
        )
        .unwrap();
        let zf = project(
            &FunctionalSample::new(vec![sample_on_grid(&fine, f)]),
            &spec,
            &[fine],
        )
        .unwrap();
        for l in 0..6 {
            assert!((zc[l] - zf[l]).abs() < 1e-3, "l={l}: {} vs {}", zc[l], zf[l]);
        }
    }

    #[test]
    fn projection_is_linear() {
        let grid = grid_2d(12);
        let spec = BasisSpec::cosine(&[(2, 4)]).unwrap();
        let x1 = sample_on_grid(&grid, |p| p[0].sin() + p[1]);
        let x2 = sample_on_grid(&grid, |p| p[0] * p[0] - 0.5 * p[1]);
        let (a, b) = (2.25, -0.75);
        let combo: Vec<f64> = x1.iter().zip(&x2).map(|(u, v)| a * u + b * v).collect();
        let z1 = project(&FunctionalSample::new(vec![x1]), &spec, &[grid.clone()]).unwrap();
        let z2 = project(&FunctionalSample::new(vec![x2]), &spec, &[grid.clone()]).unwrap();
        let zc = project(&FunctionalSample::new(vec![combo]), &spec, &[grid]).unwrap();
        for l in 0..4 {
            let want = a * z1[l] + b * z2[l];
            assert!((zc[l] - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn grid_mismatch_is_error() {
        let grid = grid_2d(10);
        let spec = BasisSpec::cosine(&[(2, 3)]).unwrap();
        let sample = FunctionalSample::new(vec![vec![0.0; 99]]);
        assert!(project(&sample, &spec, &[grid]).is_err());
    }
}
