//! Projection of d-dimensional embeddings into the 2D visual frame.

pub mod pca;
pub mod tsne;

use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pca::pca_project;
pub use tsne::{gaussian_affinities, tsne_project, tsne_run, Affinities, TsneConfig, TsneRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

impl FromStr for ProjectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(ProjectionMethod::Pca),
            "tsne" | "t-sne" => Ok(ProjectionMethod::Tsne),
            other => Err(Error::validation(format!("unsupported method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub method: ProjectionMethod,
    pub tsne: TsneConfig,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig { method: ProjectionMethod::Tsne, tsne: TsneConfig::default() }
    }
}

impl ProjectionConfig {
    pub fn fingerprint(&self) -> String {
        match self.method {
            ProjectionMethod::Pca => "pca".to_string(),
            ProjectionMethod::Tsne => self.tsne.fingerprint(),
        }
    }
}

/// N x 2 coordinates plus the method fingerprint that produced them.
#[derive(Debug, Clone)]
pub struct Projection2D {
    pub coords: Array2<f64>,
    pub fingerprint: String,
}

/// Dispatches to the configured projection backend.
pub fn project(x: ArrayView2<'_, f64>, cfg: &ProjectionConfig) -> Result<Projection2D> {
    match cfg.method {
        ProjectionMethod::Pca => pca_project(x),
        ProjectionMethod::Tsne => tsne_project(x, &cfg.tsne),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unknown_method_name_is_rejected() {
        let err = "umap".parse::<ProjectionMethod>().unwrap_err();
        assert!(err.to_string().contains("unsupported method"));
        assert_eq!("pca".parse::<ProjectionMethod>().unwrap(), ProjectionMethod::Pca);
    }

    #[test]
    fn pca_dispatch_matches_direct_call() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = Array2::<f64>::zeros((20, 4));
        x.mapv_inplace(|_| rng.random());
        let cfg = ProjectionConfig { method: ProjectionMethod::Pca, ..Default::default() };
        let a = project(x.view(), &cfg).unwrap();
        let b = pca_project(x.view()).unwrap();
        assert_eq!(a.coords, b.coords);
    }

    #[test]
    fn tsne_dispatch_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut x = Array2::<f64>::zeros((24, 4));
        x.mapv_inplace(|_| rng.random());
        let cfg = ProjectionConfig {
            method: ProjectionMethod::Tsne,
            tsne: TsneConfig { iterations: 300, perplexity: 5.0, ..TsneConfig::default() },
        };
        let a = project(x.view(), &cfg).unwrap();
        let b = project(x.view(), &cfg).unwrap();
        for (p, q) in a.coords.iter().zip(b.coords.iter()) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
    }
}
