//! Exact lattice geometry: sites, rational-slope directions, arcs and regions.

mod direction;
mod enumerate;
mod region;

pub use direction::{
    angle_cmp, arcs_disjoint, ccw_cmp, direction_of, Arc, Direction, Site, MAX_WIDEN_LEVEL,
};
pub use enumerate::DirectionEnumerator;
pub use region::{inside_ball, inside_closed_ball, realize_region, window_directions, Rational, Region};
