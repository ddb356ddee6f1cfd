//! Instance generators for friction contact, Nash games and random boxed
//! problems, plus the text instance format.

pub mod friction;
pub mod io;
pub mod nep;
pub mod random;

pub use friction::{gen_friction, gen_friction_instance, FrictionInstance, FrictionParams};
pub use io::{format_avi, parse_avi, read_avi, write_avi};
pub use nep::{assemble_nep, gen_nep, gen_nep_data, AgentSet, NepData, NepParams};
pub use random::{gen_boxed_random, Spectrum};
