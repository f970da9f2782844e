// The guide's chapters, compiled so that their snippets run as doc-tests.
// One module per chapter keeps failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/functionals.md")]
pub mod functionals {}
#[doc = include_str!("../../../book/src/local_time.md")]
pub mod local_time {}
#[doc = include_str!("../../../book/src/stationary.md")]
pub mod stationary {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
