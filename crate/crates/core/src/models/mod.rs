//! Teacher and student graphs, complexity accounting, and weight checkpoints.

mod checkpoint;
mod complexity;
mod graph;

pub use checkpoint::{WeightRecord, WeightStore};
pub use complexity::{count_complexity, ComplexityReport, LayerComplexity, MacConvention};
pub use graph::{build_student, build_teacher, ModelGraph, TeacherConfig, TeacherScale, WPD_INPUT};
