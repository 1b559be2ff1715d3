// mdbook cannot run the guide's code blocks against workspace crates, so
// each chapter is pulled in as a module doc and rustdoc tests it instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/channel.md")]
pub mod channel {}
#[doc = include_str!("../../../book/src/detectors.md")]
pub mod detectors {}
#[doc = include_str!("../../../book/src/density-evolution.md")]
pub mod density_evolution {}
#[doc = include_str!("../../../book/src/landscape.md")]
pub mod landscape {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
