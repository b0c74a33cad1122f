//! Fixtures shared by the pipeline benchmarks.

use anisotex_core::synth::synthesize;
use anisotex_core::{FieldSpec, SampledField};

/// One pinned realization of the reference anisotropic field.
pub fn reference_field(n: usize) -> SampledField {
    synthesize(&FieldSpec::new(0.6, 0.4, n, 17).expect("reference spec is admissible")).expect("synthesis")
}
