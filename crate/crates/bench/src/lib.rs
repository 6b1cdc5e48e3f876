//! Empty library target; the package exists for its Criterion benches.
