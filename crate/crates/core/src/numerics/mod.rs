//! Numerical building blocks shared by the physics modules.

pub mod linalg;
pub mod mc;
pub mod quad;
pub mod series;
