//! Compact set values, Hausdorff distance and the selection primitives
//! (nearest point, minimal norm) used by the inclusion solvers.

mod hull;
mod maps;
mod value;

pub use maps::{
    estimate_gamma_norm, estimate_time_gamma_norm, Argument, BuiltinMap, Family, FnMap, FnTimeMap,
    MapMeta, Profile, SetValuedMap, TimeSetMap,
};
pub use value::{SetValue, DEFAULT_HAUSDORFF_RESOLUTION};
