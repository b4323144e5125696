//! Render front end: markup parsing, custom-component input propagation,
//! and detection of user-input privacy collection points.

pub mod components;
pub mod markup;
pub mod uip;

pub use markup::{parse_markup, MarkupDoc, MarkupNode};
pub use uip::{detect_sources, UipSource};
