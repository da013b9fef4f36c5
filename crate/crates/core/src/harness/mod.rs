mod experiment;
mod generate;

pub use experiment::*;
pub use generate::*;
