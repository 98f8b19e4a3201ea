//! Learning transducer models of sensor and actuator attackers from recorded
//! attack words, and synthesizing supervisors that stay resilient against
//! them.
//!
//! The crate is organised bottom-up:
//!
//! * [`fst`]: transducers over a pair alphabet and their algebra
//!   (composition, inversion, intersection, minimization, equivalence).
//! * [`hankel`]: binary Hankel matrices indexed by a prefix/suffix mask.
//! * [`spectral`]: SVD factorization, change of basis to a natural
//!   decomposition, and reconstruction of the transducer graph.
//! * [`supervisor`]: supervisor synthesis and resilience verification.
//! * [`sim`]: the clocked supervisory control loop and attack sampling.

pub mod error;
pub mod exec;
pub mod fst;
pub mod gen;
pub mod hankel;
pub mod linalg;
pub mod sim;
pub mod spectral;
pub mod supervisor;
pub mod symbol;
pub mod word;

pub use error::{Error, Result, Stage};
pub use exec::Exec;
pub use fst::Fst;
pub use symbol::{Letter, Symbol};
pub use word::{SampleSet, Word};
