pub mod lm;
pub mod sched;
pub mod signal;
