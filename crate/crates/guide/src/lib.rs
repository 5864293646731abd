#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod chapter1 {}

#[doc = include_str!("../../../book/src/halfplane.md")]
pub mod chapter2 {}

#[doc = include_str!("../../../book/src/exterior-dtn.md")]
pub mod chapter3 {}

#[doc = include_str!("../../../book/src/coupled.md")]
pub mod chapter4 {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod chapter5 {}
