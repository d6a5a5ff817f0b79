//! Items most modules need in a `no_std` build. Float methods come from the
//! `Float` trait (backed by `libm`) unless std happens to be linked.

pub(crate) use alloc::format;
pub(crate) use alloc::vec;
pub(crate) use alloc::vec::Vec;
pub(crate) use num_traits::Float;
