//! G2 structures on the 7-dimensional space: the standard 3-form, metric
//! recovery, type decompositions of 2- and 3-forms, and the `⊙` map.

mod decompose;
mod odot;
mod structure;

pub use decompose::{decompose2, decompose3, Decomposition2, Decomposition3};
pub use odot::{
    antisymmetric_basis, derivation, infinitesimal_action, metric_dual, odot, odot_inverse,
    odot_local, symmetric_basis, SymTensor,
};
pub use structure::{
    bilinear_form, g2_orientation, is_g2_form, metric_from_phi, phi0, t_matrix, two_eigenspaces,
    G2Structure,
};
