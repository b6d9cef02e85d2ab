pub mod checkers;
pub mod cli;
pub mod constants;
pub mod descent;
pub mod geometry;
pub mod slopes;
