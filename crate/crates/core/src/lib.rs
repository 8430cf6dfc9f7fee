//! Hyperbolic-cross approximation on the cube through torus-to-cube
//! transformations and rank-1 lattice FFTs.

pub mod dft;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod freqset;
pub mod lattice;
pub mod oracle;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
pub use exec::Exec;
pub use freqset::{hyperbolic_cross, FrequencySet, MultiIndex};
pub use lattice::{find_reconstructing_lattice, is_reconstructing, Rank1Lattice, SearchStrategy};
pub use spectral::{CoefficientVector, LatticeFft, SampleVector};
pub use transform::{CubeFunction, ProductTransform, TransformSpec, WeightSpec};
