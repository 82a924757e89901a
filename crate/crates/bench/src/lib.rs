//! Fixtures shared by the benchmarks in `benches/`.

use rdsconc::harness::LibrarySystem;
use rdsconc::{DrivingMeasure, EmpiricalMeasure, Matrix, MapDescriptor, Point, StateSpace};

pub fn library(system: LibrarySystem) -> DrivingMeasure {
    system.build().expect("library systems build")
}

/// Two fixed unimodular 3x3 matrices acting on the projective plane.
pub fn projective_pair() -> DrivingMeasure {
    let a = Matrix::from_rows(&[vec![2.0, 0.3, 0.0], vec![0.0, 1.0, 0.4], vec![0.0, 0.0, 0.5]]).unwrap();
    let b = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.3, 0.0, 1.0]]).unwrap();
    DrivingMeasure::uniform(
        StateSpace::projective(3).unwrap(),
        vec![MapDescriptor::projective(a), MapDescriptor::projective(b)],
    )
    .unwrap()
}

/// Equal-weight measure on `values` in `[0, 1]`.
pub fn unit_measure(values: &[f64]) -> EmpiricalMeasure {
    let space = StateSpace::unit_interval();
    EmpiricalMeasure::uniform(space, values.iter().map(|&x| Point::real(x)).collect()).unwrap()
}
