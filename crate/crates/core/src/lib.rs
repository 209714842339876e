//! Young and rough differential inclusions on dyadic grids.

pub mod drivers;
pub mod error;
pub mod forms;
pub mod grid;
pub mod norms;
pub mod path;
mod picard;
pub mod rdi;
pub mod rough;
pub mod selection;
pub mod sets;
pub mod ydi;
pub mod young;

pub use error::{Error, Result};
pub use grid::{DyadicGrid, DyadicTime};
pub use path::Path;
pub use picard::{PicardOptions, PicardReport};
pub use sets::{BuiltinMap, SetValue, SetValuedMap, TimeSetMap};
