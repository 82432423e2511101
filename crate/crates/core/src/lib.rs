pub mod cli;
pub mod compose;
pub mod graph;
pub mod io;
pub mod specs;
pub mod verify;
