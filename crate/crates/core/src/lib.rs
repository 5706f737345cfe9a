//! Quasi-static modeling of underactuated tendon-driven compliant fingers.
//!
//! A finger is a planar serial chain of rigid links joined by flexure joints,
//! each modeled as a revolute joint with a torsional spring. A printed band
//! tendon runs along the flexion side and is anchored on the distal link.
//! Pulling the band with tension `f_in` flexes the finger until the band
//! torques balance the springs.
//!
//! * [`geometry`]: finger dimensions, scaling and forward kinematics.
//! * [`statics`]: band forces, joint load torques and torque residuals.
//! * [`equilibrium`]: equilibrium solver, tension ramps, clamped joints and
//!   tendon excursion.
//! * [`calibration`]: stiffness identification from flexion recordings.
//! * [`hand`]: multi-finger hands sharing one pull loop.
//! * [`cli`]: the command-line front end.

pub mod calibration;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod hand;
pub mod optim;
pub mod statics;

pub use calibration::{
    fit_stiffness, generate_synthetic_dataset, prediction_errors, residual_objective,
    FitOptions, FitResult, FlexionDataset, FlexionSample,
};
pub use equilibrium::{
    force_ramp, solve_equilibrium, solve_with_clamps, tendon_excursion, ClampSet, Equilibrium,
    FlexionTrajectory, SolverOptions,
};
pub use error::{Error, Result};
pub use geometry::{forward_kinematics, lever_vectors, FingerGeometry, JointConfiguration};
pub use hand::{aperture, assemble_hand, solve_hand, HandLayout, HandModel, HandState};
pub use statics::{joint_load_torques, torque_residuals, StiffnessVector};
