//! Haar wavelet transforms on ranked binary dendrograms, p-adic encodings of
//! their branch structure, hierarchical clustering and ultrametric checks.

pub mod error;
pub mod fixtures;
pub mod generate;
pub mod haar;
pub mod hcluster;
pub mod padic;
pub mod pway;
pub mod tree;
pub mod ultrametric;

pub use error::{Error, Result};
pub use haar::{Mode, ThresholdRule, WaveletDecomposition, Weighting};
pub use hcluster::{agglomerate, Dissimilarity, Linkage};
pub use padic::{BranchMatrix, IntPoly, PAdicCode, PValue};
pub use pway::{PWayTree, ScalingFilter};
pub use tree::{Dendrogram, NodeRef, SwapMask};
pub use ultrametric::{Height, UltrametricMatrix, Verdict, Witness};
