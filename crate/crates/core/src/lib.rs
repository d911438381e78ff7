//! Uncertainty quantification for spectral bi-clustering of corrupted data.
//!
//! A reference data set is clustered by the sign of the Fiedler vector of
//! its normalized graph Laplacian. Corrupted copies of the set (perturbed,
//! thinned, regenerated, or enlarged) are clustered the same way, and each
//! sample's eigenvector is extended as a function onto the reference points
//! so that clusterings of sets with different cardinalities can be compared
//! point by point. After sign gauging, the random clusterings are
//! summarized by Monte Carlo estimates of
//!
//! - the coverage function (per-point membership probability),
//! - the expected misclustering rate,
//! - the Vorob'ev expectation (Kovyazin mean),
//! - the oriented-distance-function expectation,
//! - the spectral expectation (sign of the mean extended eigenfunction).
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`kernel`] | Gaussian similarity, MST bandwidth, normalized Laplacian |
//! | [`spectral`] | Fiedler pair, bi-clustering, out-of-sample extension, gauging |
//! | [`corruption`] | Reproducible deletion, regeneration and noise |
//! | [`estimators`] | Monte Carlo accumulation and set-valued expectations |
//! | [`datasets`] | Synthetic generators, CSV loading, PCA |
//! | [`experiment`] | Config-driven runs and CSV/JSON reports |
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory.

pub mod corruption;
pub mod data;
pub mod datasets;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod kernel;
pub mod spectral;

pub use data::DataSet;
pub use error::{Error, Result};

#[cfg(test)]
#[macro_export]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} vs {} (tol {})", a, b, $tol);
    }};
}
