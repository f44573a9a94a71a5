//! Numerical building blocks: quadrature, optimization, polynomials and
//! FFT convolution.

pub mod conv;
pub mod optim;
pub mod poly;
pub mod quadrature;
