//! Shot-level simulation of the hybrid protocol: the 4×4 grid of
//! measurement choices, the data each choice yields, correlator estimates
//! and the sequential signaling check.
//!
//! Shot `i` under master seed `s` draws from ChaCha8 stream `i` of seed `s`,
//! so results do not depend on how shots are split across threads.

mod choice;
mod sim;

pub use choice::{admissible_data, Datum, InvalidChoice, LocalChoice, MeasurementChoice};
pub use sim::{
    analytic_signaling, estimate_f, signaling_test, simulate_shot, simulate_shots,
    write_shot_dump, CorrelatorEstimate, FEstimate, InvalidShotLine, Outcomes, ShotRecord,
    SignalingReport,
};
