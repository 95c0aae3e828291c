//! Unfolding induction for systems of isometries on compact forests.

pub mod cone;
pub mod forest;
pub mod induction;
pub mod io;
pub mod scalar;
pub mod system;
