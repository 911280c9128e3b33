pub mod bounds;
pub mod concave;
pub mod error;
pub mod ext;
pub mod geometry;
pub mod norms;
pub mod poincare;
pub mod search;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{ConvexDomain, Direction, Point};
