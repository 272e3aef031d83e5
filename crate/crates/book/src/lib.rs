//! Guide chapters compiled as doc-tests, one module per chapter so a failing
//! listing points back to its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/chains.md")]
pub mod chains {}
#[doc = include_str!("../../../book/src/persistence.md")]
pub mod persistence {}
#[doc = include_str!("../../../book/src/phases.md")]
pub mod phases {}
#[doc = include_str!("../../../book/src/delay-networks.md")]
pub mod delay_networks {}
#[doc = include_str!("../../../book/src/grid-place.md")]
pub mod grid_place {}
#[doc = include_str!("../../../book/src/homing.md")]
pub mod homing {}
#[doc = include_str!("../../../book/src/hough.md")]
pub mod hough {}
#[doc = include_str!("../../../book/src/cech.md")]
pub mod cech {}
#[doc = include_str!("../../../book/src/hopf.md")]
pub mod hopf {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
