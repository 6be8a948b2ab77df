//! Space-time planning against reserved paths.

mod conflict;
mod path;
mod reservation;
mod search;

pub use conflict::{all_conflicts, first_conflict, Conflict};
pub use path::Path;
pub use reservation::{Constrained, Occupancy, ReservationTable, SearchConstraints};
pub use search::{
    earliest_arrivals, horizon, plan_constrained, plan_path1, plan_path2, PlanError, PlannedPath,
};
