//! Design-to-fabrication toolkit for 3D wirebending.
//!
//! A wireframe graph is checked for fabricability and walked along an
//! Eulerian path. The walk becomes feed / bend / rotate instructions, which
//! can be compensated for bend errors before simulation. Programs reach a
//! machine, real or emulated, over a line protocol.

pub mod errormodel;
pub mod fabcheck;
pub mod fabsim;
pub mod geometry;
pub mod instructions;
pub mod machine;
pub mod wiregraph;
