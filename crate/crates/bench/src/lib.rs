//! Fixtures shared by the criterion benches.

use npdc_core::{make_problem, BaseFunction, ObjectiveProblem, StructureClass};

/// A k-group elliptic instance, the generator's most expensive class per call.
pub fn elliptic_k_group(dimension: usize, group_size: usize) -> ObjectiveProblem {
    make_problem(StructureClass::KGroup, BaseFunction::Elliptic, dimension, Some(group_size), 1)
        .expect("valid bench instance")
}

pub fn sphere(dimension: usize) -> ObjectiveProblem {
    make_problem(StructureClass::FullySeparable, BaseFunction::Sphere, dimension, None, 1)
        .expect("valid bench instance")
}
