//! Guide chapters, compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/linear-models.md")]
pub mod linear_models {}

#[doc = include_str!("../../../book/src/surrogate.md")]
pub mod surrogate {}

#[doc = include_str!("../../../book/src/lpv.md")]
pub mod lpv {}

#[doc = include_str!("../../../book/src/optimal-control.md")]
pub mod optimal_control {}

#[doc = include_str!("../../../book/src/co-design.md")]
pub mod co_design {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
