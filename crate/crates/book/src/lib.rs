//! The guide's chapters, compiled so their code listings run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/typicality.md")]
pub mod typicality {}
#[doc = include_str!("../../../book/src/footprints.md")]
pub mod footprints {}
#[doc = include_str!("../../../book/src/covariance_union.md")]
pub mod covariance_union {}
#[doc = include_str!("../../../book/src/streaming.md")]
pub mod streaming {}
#[doc = include_str!("../../../book/src/offline.md")]
pub mod offline {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
