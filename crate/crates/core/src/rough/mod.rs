//! Level-2 rough paths, controlled paths, the rough integral and a Picard
//! solver for rough differential equations.

mod controlled;
mod lift;
mod rde;

pub use controlled::{compose_controlled, rough_integral, ControlledPath, RoughIntegral};
pub use lift::{chen_defect_all_triples, lift_piecewise_linear, regrouping_defect, RoughPath};
pub use rde::{one_form_integral, picard_map, rde_solve, RdeOptions, RdeSolution};

/// `a (x) b` added into `out`, row-major.
pub(crate) fn add_outer(a: &[f64], b: &[f64], out: &mut [f64]) {
    let l = b.len();
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * l + j] += ai * bj;
        }
    }
}
