//! Instance generators: the two tiling constructions and a seeded random
//! fuzzer.

mod random;
mod tiling;

pub use random::{gen_random_instance, DependencyMix, RandomLimits};
pub use tiling::{gen_tiling_corridor, gen_tiling_grid, TilingSpec};
