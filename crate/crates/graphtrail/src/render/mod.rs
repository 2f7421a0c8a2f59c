pub mod export;
pub mod html;
pub mod svg;

pub use export::*;
pub use html::*;
pub use svg::*;
