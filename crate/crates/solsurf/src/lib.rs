//! Surfaces in three-space from integrable systems.
//!
//! Frames of zero-curvature (Lax) pairs give Sym-type immersions, Bäcklund
//! transformations produce sine-Gordon solutions, and the generalized
//! Weierstrass representation induces surfaces of prescribed mean curvature.
//! Each construction comes with residual checks against the classical
//! surface theory in [`geometry`].

pub mod backlund;
pub mod frames;
pub mod geometry;
pub mod numerics;
pub mod soliton;
pub mod weierstrass;
