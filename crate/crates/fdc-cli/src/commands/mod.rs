pub mod eval;
pub mod fit;
pub mod gen;
pub mod grid;
