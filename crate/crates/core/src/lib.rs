pub mod coreset;
pub mod error;
pub mod hash;
pub mod monte_carlo;
pub mod scheduler;
pub mod io;
pub mod planner;
