//! Constraint-aware control allocation for over-actuated vehicles.
//!
//! An over-actuated vehicle has more control surfaces than moment axes, so
//! a commanded (roll, pitch, yaw) moment maps to infinitely many actuator
//! configurations, and the interesting questions are which moments are
//! reachable at all and how to pick inputs that respect position and rate
//! limits. This crate works the problem in three stages:
//!
//! 1. **Geometry** ([`polytope`], [`allocator::build_ams`]): actuator limits
//!    form a box; its image under the effectiveness matrix is the attainable
//!    moment set, a convex polytope built here by vertex enumeration and a
//!    3-D quickhull, held in both vertex and half-space form.
//! 2. **Clipping** ([`allocator::clip_to_ams`]): an unattainable command is
//!    scaled straight back to the attainable boundary, preserving its
//!    direction, so the downstream optimization is always feasible without
//!    slack variables.
//! 3. **Allocation** ([`allocator::allocate`], [`qp`]): a dense active-set
//!    quadratic program distributes the (clipped) moment across actuators,
//!    with rate limits folded in through an imposed first-order dynamic
//!    `u̇ = A u`.
//!
//! Around that core: reference allocators for comparison ([`baseline`]), a
//! saturating second-order actuator simulator with maneuver replay
//! ([`actuator`], [`maneuver`], [`sim`]), the built-in F-18 case-study
//! dataset ([`f18`]), and plain-text interchange formats ([`io`]).
//!
//! # Quick start
//!
//! ```
//! use control_alloc::allocator::{allocate, AllocMode};
//! use control_alloc::f18;
//! use nalgebra::Vector3;
//!
//! let model = f18::model();
//! // A pitch-up command well inside the attainable set.
//! let result = allocate(&model, &Vector3::new(0.0, 0.05, 0.0), AllocMode::PositionOnly, None)
//!     .unwrap();
//! assert!(!result.clip.was_clipped);
//! assert!((result.tau_achieved - Vector3::new(0.0, 0.05, 0.0)).norm() < 1e-9);
//!
//! // Ten times that demand is unattainable; it comes back scaled, same
//! // direction, with actuators on their limits.
//! let result = allocate(&model, &Vector3::new(0.0, 0.5, 0.0), AllocMode::PositionOnly, None)
//!     .unwrap();
//! assert!(result.clip.was_clipped);
//! assert!(result.clip.scale < 1.0);
//! ```
//!
//! All types are plain data and all operations are pure functions of their
//! inputs; sessions ([`allocator::AllocSession`]) own their warm-start state
//! and are safe to run in parallel with one another.

pub mod actuator;
pub mod allocator;
pub mod baseline;
pub mod error;
pub mod f18;
pub mod io;
pub mod maneuver;
pub mod polytope;
pub mod qp;
pub mod sim;

// The guide chapters double as doctests so their code stays in sync with
// the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(getting_started, "../../../book/src/getting-started.md");
    chapter!(
        attainable_moment_set,
        "../../../book/src/attainable-moment-set.md"
    );
    chapter!(clipping, "../../../book/src/clipping.md");
    chapter!(
        quadratic_programming,
        "../../../book/src/quadratic-programming.md"
    );
    chapter!(rate_constraints, "../../../book/src/rate-constraints.md");
    chapter!(baselines, "../../../book/src/baselines.md");
    chapter!(
        actuator_simulation,
        "../../../book/src/actuator-simulation.md"
    );
    chapter!(file_formats_cli, "../../../book/src/file-formats-cli.md");
}
