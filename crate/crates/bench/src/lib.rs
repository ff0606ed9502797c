//! Fixtures shared by the benchmarks.

use ifsconj::{IfsDescriptor, Perturbation, ScalarMap};

/// `{0.5x, 0.25x}` and `{0.4x, 0.2x}`, a conjugable pair in `(0, 1)`.
pub fn linear_pair() -> (IfsDescriptor, IfsDescriptor) {
    (
        IfsDescriptor::linear(&[0.5, 0.25]).expect("valid slopes"),
        IfsDescriptor::linear(&[0.4, 0.2]).expect("valid slopes"),
    )
}

/// `0.5x + 0.1 sin x`.
pub fn sine_map() -> ScalarMap {
    ScalarMap::linear_plus(0.5, Perturbation::sine(0.1).expect("valid amplitude"))
}
