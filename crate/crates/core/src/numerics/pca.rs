use super::function::{FunctionBody, FunctionValue};
use super::standardize::feature_stats;
use super::svd::thin_svd;
use super::{Dataset, Matrix, NumericsError};

/// Learned PCA coder.
#[derive(Debug, Clone)]
pub struct PcaFit {
    pub project: FunctionValue,
    pub backproject: FunctionValue,
    /// Fraction of total variance carried by each kept component.
    pub explained_variance_ratio: Vec<f64>,
    /// All singular values of the centered data, descending.
    pub singular_values: Vec<f64>,
}

/// Principal directions from a thin SVD of the centered data.
///
/// Directions are ordered by descending singular value and each is signed so
/// that its largest-magnitude loading is positive (first such index on
/// ties).
pub fn fit_pca(data: &Dataset, n_components: usize) -> Result<PcaFit, NumericsError> {
    let (n, p) = (data.n_samples(), data.n_features());
    let max = n.saturating_sub(1).min(p);
    if n_components == 0 || n_components > max {
        return Err(NumericsError::InvalidComponents {
            found: n_components,
            max,
        });
    }

    let (mean, _) = feature_stats(data);
    let centered = Matrix::from_fn(n, p, |i, j| data.matrix()[(i, j)] - mean[j]);

    // Run the SVD on whichever orientation is tall.
    let (sigma, directions) = if p <= n {
        let svd = thin_svd(&centered);
        (svd.sigma, svd.v)
    } else {
        let svd = thin_svd(&centered.transpose());
        (svd.sigma, svd.u)
    };

    let tol = sigma[0] * (n.max(p) as f64) * f64::EPSILON * 16.0;
    let rank = sigma.iter().filter(|&&s| s > tol).count();
    if rank < n_components {
        return Err(NumericsError::RankDeficient {
            rank,
            requested: n_components,
        });
    }

    let mut components = Matrix::zeros(n_components, p);
    for k in 0..n_components {
        let mut dir = directions.column(k);
        let lead = dir
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > dir[best].abs() { i } else { best });
        if dir[lead] < 0.0 {
            dir.iter_mut().for_each(|v| *v = -*v);
        }
        components.row_mut(k).copy_from_slice(&dir);
    }

    let total: f64 = sigma.iter().map(|s| s * s).sum();
    let explained_variance_ratio = sigma[..n_components].iter().map(|s| s * s / total).collect();

    let tag = data.tag.clone();
    let project = FunctionValue::new(FunctionBody::PcaProject {
        components: components.clone(),
        center: mean.clone(),
    })?
    .with_types(tag.clone(), None);
    let backproject = FunctionValue::new(FunctionBody::PcaBackproject {
        components,
        center: mean,
    })?
    .with_types(None, tag);

    Ok(PcaFit {
        project,
        backproject,
        explained_variance_ratio,
        singular_values: sigma,
    })
}
