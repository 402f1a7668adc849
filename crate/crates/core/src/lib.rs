pub mod bt;
pub mod compiler;
pub mod experiments;
pub mod gridworld;
pub mod ltlf;
pub mod mission;
pub mod planners;
pub mod verify;
