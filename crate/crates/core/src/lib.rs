//! Reconstruction of analytic germs from one-variable slices over complete
//! normed fields.

pub mod field;
pub mod cantor;
pub mod poly;
pub mod interp;
pub mod germ;
pub mod zeros;
