//! Learning networked controllers for signal temporal logic tasks under
//! constant network delays.
//!
//! The pipeline: [`stl`] parses and evaluates task formulas, [`plant`] and
//! [`ncs`] simulate the delayed control loop, [`mdp`] keeps the
//! window-plus-history extended state and its reward, [`preprocess`]
//! compresses it into flag features, and [`sac`] learns a policy on top of
//! the small networks in [`neural`]. [`harness`] ties everything into
//! training and evaluation runs.

pub mod mdp;
pub mod harness;
pub mod ncs;
pub mod neural;
pub mod plant;
pub mod preprocess;
pub mod sac;
pub mod stl;

/// The two-region patrol task for the robot: within every 100-step window
/// visit both the upper-right and the lower-right region, for 900 steps.
pub const ROBOT_TASK: &str = "G[0,900](F[0,99](x0>=3.75 && x0<=5 && x1>=3.75 && x1<=5) && F[0,99](x0>=3.75 && x0<=5 && x1>=1.25 && x1<=2.5))";
