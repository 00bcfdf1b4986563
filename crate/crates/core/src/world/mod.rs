//! BuildWorld: a 2-D construction grid with blocks and a gripper.

mod grid;
mod heuristic;
mod shapes;
mod task;

pub use grid::{
    decode_observation, encode_observation, encode_observation_into, step, Action, Block, Cell, GridConfig,
    GridState,
};
pub use heuristic::{heuristic_value, steps_to_go};
pub use shapes::ShapeLibrary;
pub use task::{is_success, reset, reward, transition, Goal, Task, TaskKind, TaskSpec};
