pub mod builder;
pub mod cache;
pub mod emit;
pub mod fixtures;
pub mod ir;
pub mod llm;
pub mod sim;
pub mod split;
