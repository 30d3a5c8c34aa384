//! Torus discretization: grids, transforms, differential operators, the
//! Leray projection, quadrature norms, random fields and snapshots.

mod fft;
mod field;
mod grid;
mod norms;
mod operator;
mod random;
mod snapshot;

pub use field::{
    divergence, gradient, second_gradient, sym_gradient, GridSamples, Resolution, SymTensorField,
    VectorField,
};
pub use grid::TorusGrid;
pub use norms::{inner_product, lp_norm, sup_norm};
pub use operator::{sym_pairs, sym_weights, SpectralOperator};
pub use random::{random_band_limited, random_solenoidal, scalar_white_noise};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};

pub(crate) use fft::{analyze_real, synthesize_real};
