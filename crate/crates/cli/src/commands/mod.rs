//! One module per subcommand. Each `run` applies flag overrides onto the
//! loaded config, re-validates, does the work, and records the resolved
//! config in the output directory's manifest.

pub mod augment;
pub mod convert;
pub mod eval;
pub mod report;
pub mod sample;
pub mod stats;
pub mod synth;
