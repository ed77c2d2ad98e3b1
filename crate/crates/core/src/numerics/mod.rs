//! Dense linear algebra, rearrangements and seeded random streams.

mod combinations;
mod io;
mod linalg;
mod matrix;
mod rng;

pub use combinations::{binomial, Combinations};
pub use io::{
    format_complex, format_matrix, parse_complex, parse_matrix, read_matrix_file,
    write_matrix_file,
};
pub use linalg::{
    extreme_eigenvalues, extreme_eigenvalues_hermitian, hermitian_eigenvalues, kernel_basis,
    least_squares, sorted_abs_desc, symmetric_eigenvalues,
};
pub use matrix::{axpy, dot, norm1, norm2, norm_inf, ComplexMatrix, DenseMatrix, RealMatrix};
pub use rng::{stream_id, RngStream};
