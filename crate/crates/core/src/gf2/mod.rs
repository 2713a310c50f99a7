//! Bit-packed linear algebra over GF(2).

mod basis;
mod bitvec;
mod matrix;
mod random;

pub use basis::{ColumnBasis, WordBasis};
pub use bitvec::BitVec;
pub use matrix::{BitMatrix, PrefixDims, DEFAULT_KRON_CAP};
pub use random::{sample_nonsingular, sample_nonsingular_counted};
