//! Physical constants (CODATA exact values).

/// Reduced Planck constant [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant [J/K].
pub const KB: f64 = 1.380_649e-23;
