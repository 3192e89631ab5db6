pub mod dataset;
pub mod evaluate;
pub mod report;
pub mod verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// Stopped by the user; partial results were written.
    Interrupted,
}
