pub mod artifact;
pub mod backend;
pub mod bench;
pub mod cli;
pub mod corpus;
pub mod debugger;
pub mod exec;
pub mod frontend;
pub mod ir;
pub mod lowering;
pub mod mapgen;
pub mod model;
pub mod optimizer;
pub mod pipeline;
