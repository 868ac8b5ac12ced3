//! Dimensionless unit system for massive particles.
//!
//! Velocities are measured in units of the source velocity dispersion `σ_v`,
//! lengths in `ħ/(m σ_v)` and times in `ħ/(m σ_v²)`. In these units
//! `ħ/m = σ_v = 1`, so the action phase of a free particle is simply
//! `½ v² t`. Everything inside the simulation uses this system; the helpers
//! below are for converting physical inputs and outputs at the edges.

/// Conversion between SI and the internal dimensionless system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationUnits {
    /// `ħ/m` in m²/s.
    pub hbar_over_mass: f64,
    /// Source velocity dispersion `σ_v` in m/s.
    pub velocity_dispersion: f64,
}

impl SimulationUnits {
    pub fn new(hbar_over_mass: f64, velocity_dispersion: f64) -> Self {
        assert!(hbar_over_mass > 0.0 && velocity_dispersion > 0.0);
        Self {
            hbar_over_mass,
            velocity_dispersion,
        }
    }

    /// Velocity unit in m/s.
    pub fn velocity_unit(&self) -> f64 {
        self.velocity_dispersion
    }

    /// Length unit `ħ/(m σ_v)` in m.
    pub fn length_unit(&self) -> f64 {
        self.hbar_over_mass / self.velocity_dispersion
    }

    /// Time unit `ħ/(m σ_v²)` in s.
    pub fn time_unit(&self) -> f64 {
        self.hbar_over_mass / (self.velocity_dispersion * self.velocity_dispersion)
    }

    pub fn to_internal_length(&self, meters: f64) -> f64 {
        meters / self.length_unit()
    }

    pub fn to_internal_time(&self, seconds: f64) -> f64 {
        seconds / self.time_unit()
    }

    pub fn to_internal_velocity(&self, meters_per_second: f64) -> f64 {
        meters_per_second / self.velocity_unit()
    }

    pub fn to_si_length(&self, internal: f64) -> f64 {
        internal * self.length_unit()
    }

    pub fn to_si_time(&self, internal: f64) -> f64 {
        internal * self.time_unit()
    }

    pub fn to_si_velocity(&self, internal: f64) -> f64 {
        internal * self.velocity_unit()
    }
}
