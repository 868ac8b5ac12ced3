//! Crank–Nicolson propagator for `i ∂ψ/∂t = −½ ∂²ψ/∂x²` on a uniform grid
//! with `ψ = 0` at both ends.
//!
//! The Laplacian is the compact fourth-order form `M⁻¹D₂` with
//! `M = I + dx²D₂/12`, so each step solves
//! `(M − i dt D₂/4) ψⁿ⁺¹ = (M + i dt D₂/4) ψⁿ`. Both sides stay tridiagonal,
//! `M` commutes with `D₂`, and the step is unitary. The time error is second
//! order and dominates.

use num_complex::Complex64;

use super::{GaussianPacket, ReferenceKind, ReferenceModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CnError {
    #[error("grid needs positive spacing and at least 3 points")]
    Grid,
    #[error("time step must be positive, got {0}")]
    Step(f64),
    #[error("time {time} is not a multiple of dt = {dt}")]
    Schedule { time: f64, dt: f64 },
    #[error("grid not converged at t = {time}: halving dx and dt changed the density by {change:e} (tolerance {tolerance:e})")]
    NotConverged { time: f64, change: f64, tolerance: f64 },
}

/// Uniform grid `x_j = x_min + j·dx`, `j = 0..points`. The end points are the
/// Dirichlet boundaries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub dx: f64,
    pub points: usize,
}

impl Grid {
    /// Grid from `x_min` to `x_max` with spacing as close to `dx` as divides
    /// the span.
    pub fn spanning(x_min: f64, x_max: f64, dx: f64) -> Result<Self, CnError> {
        if !(dx > 0.0 && x_max > x_min) {
            return Err(CnError::Grid);
        }
        let cells = ((x_max - x_min) / dx).round().max(2.0) as usize;
        Ok(Self {
            x_min,
            dx: (x_max - x_min) / cells as f64,
            points: cells + 1,
        })
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.points - 1)
    }

    /// Samples `f` on the grid, forcing the boundary values to zero.
    pub fn sample(&self, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        let mut psi: Vec<Complex64> = (0..self.points).map(|j| f(self.x(j))).collect();
        psi[0] = Complex64::ZERO;
        psi[self.points - 1] = Complex64::ZERO;
        psi
    }

    pub fn norm(&self, psi: &[Complex64]) -> f64 {
        psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dx
    }

    /// Linear interpolation of `psi` at `x`; zero outside the grid.
    pub fn interpolate(&self, psi: &[Complex64], x: f64) -> Complex64 {
        let s = (x - self.x_min) / self.dx;
        if !(s >= 0.0 && s <= (self.points - 1) as f64) {
            return Complex64::ZERO;
        }
        let j = (s.floor() as usize).min(self.points - 2);
        let w = s - j as f64;
        psi[j] * (1.0 - w) + psi[j + 1] * w
    }
}

/// Propagator with the tridiagonal factorization precomputed.
#[derive(Clone, Debug)]
pub struct CrankNicolson {
    grid: Grid,
    dt: f64,
    /// Off-diagonal of the implicit side.
    off: Complex64,
    /// Diagonal and off-diagonal of the explicit side.
    explicit_diag: Complex64,
    explicit_off: Complex64,
    /// Thomas sweep coefficients `c'_j` and inverse pivots for the implicit side.
    c_prime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(grid: Grid, dt: f64) -> Result<Self, CnError> {
        if grid.points < 3 || !(grid.dx > 0.0) {
            return Err(CnError::Grid);
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CnError::Step(dt));
        }
        let rho = dt / (4.0 * grid.dx * grid.dx);
        let (m_diag, m_off) = (10.0 / 12.0, 1.0 / 12.0);
        let diag = Complex64::new(m_diag, 2.0 * rho);
        let off = Complex64::new(m_off, -rho);
        let interior = grid.points - 2;
        let mut c_prime = Vec::with_capacity(interior);
        let mut inv_pivot = Vec::with_capacity(interior);
        let mut prev = Complex64::ZERO;
        for _ in 0..interior {
            let p = (diag - off * prev).inv();
            prev = off * p;
            inv_pivot.push(p);
            c_prime.push(prev);
        }
        Ok(Self {
            grid,
            dt,
            off,
            explicit_diag: Complex64::new(m_diag, -2.0 * rho),
            explicit_off: Complex64::new(m_off, rho),
            c_prime,
            inv_pivot,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `psi` by one step in place.
    pub fn step(&self, psi: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let n = self.grid.points;
        scratch.resize(n, Complex64::ZERO);
        let d = &mut scratch[..n];
        let (c_prime, inv_pivot) = (&self.c_prime[..n - 2], &self.inv_pivot[..n - 2]);
        // explicit product fused with the forward sweep
        let mut prev = Complex64::ZERO;
        for j in 1..n - 1 {
            let explicit = self.explicit_diag * psi[j] + self.explicit_off * (psi[j - 1] + psi[j + 1]);
            prev = (explicit - self.off * prev) * inv_pivot[j - 1];
            d[j] = prev;
        }
        psi[n - 1] = Complex64::ZERO;
        psi[n - 2] = d[n - 2];
        for j in (1..n - 2).rev() {
            psi[j] = d[j] - c_prime[j - 1] * psi[j + 1];
        }
        psi[0] = Complex64::ZERO;
    }

    pub fn evolve(&self, psi: &mut [Complex64], steps: usize) {
        let mut scratch = Vec::with_capacity(self.grid.points);
        for _ in 0..steps {
            self.step(psi, &mut scratch);
        }
    }

    /// States at each of the ascending `times`, starting from `psi0` at `t = 0`.
    pub fn evolve_to(&self, psi0: &[Complex64], times: &[f64]) -> Result<Vec<Vec<Complex64>>, CnError> {
        let mut psi = psi0.to_vec();
        let mut done = 0usize;
        let mut out = Vec::with_capacity(times.len());
        for &time in times {
            let steps = (time / self.dt).round();
            if !(steps >= done as f64) || (steps * self.dt - time).abs() > 1e-9 * time.abs().max(1.0) {
                return Err(CnError::Schedule { time, dt: self.dt });
            }
            self.evolve(&mut psi, steps as usize - done);
            done = steps as usize;
            out.push(psi.clone());
        }
        Ok(out)
    }
}

/// One-shot propagation of `initial` (boundary entries are treated as zero).
pub fn crank_nicolson_evolve(initial: &[Complex64], dt: f64, dx: f64, steps: usize) -> Result<Vec<Complex64>, CnError> {
    let grid = Grid {
        x_min: 0.0,
        dx,
        points: initial.len(),
    };
    let cn = CrankNicolson::new(grid, dt)?;
    let mut psi = initial.to_vec();
    psi[0] = Complex64::ZERO;
    psi[grid.points - 1] = Complex64::ZERO;
    cn.evolve(&mut psi, steps);
    Ok(psi)
}

/// Grid and tolerance for the numerical wall solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CnOptions {
    /// Length of the half-line domain kept in front of the wall.
    pub length: f64,
    pub dx: f64,
    pub dt: f64,
    /// Largest density change allowed when `dx` and `dt` are halved.
    /// The halved grid is the one kept, so its own error is about a third of
    /// the measured change.
    pub tolerance: f64,
}

impl Default for CnOptions {
    fn default() -> Self {
        Self {
            length: 100.0,
            dx: 0.02,
            dt: 0.001,
            tolerance: 1e-3,
        }
    }
}

/// Packet in front of a hard wall, propagated numerically. The wall is the
/// right boundary of the grid.
#[derive(Clone, Debug)]
pub struct NumericWall {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// Per-time density change between the base grid and this halved one.
    pub convergence: Vec<f64>,
}

impl NumericWall {
    /// Propagates `packet` to each of `times` on the grid of `options` and on
    /// one with `dx` and `dt` halved, and keeps the finer solution if the two
    /// agree.
    pub fn solve(packet: &GaussianPacket, wall_x: f64, times: &[f64], options: &CnOptions) -> Result<Self, CnError> {
        let coarse = Self::propagate(packet, wall_x, times, options.dx, options.dt, options.length)?;
        let fine = Self::propagate(
            packet,
            wall_x,
            times,
            options.dx / 2.0,
            options.dt / 2.0,
            options.length,
        )?;
        let mut convergence = Vec::with_capacity(times.len());
        for (s, &time) in times.iter().enumerate() {
            let change = (0..coarse.grid.points)
                .map(|j| (coarse.states[s][j].norm_sqr() - fine.states[s][2 * j].norm_sqr()).abs())
                .fold(0.0, f64::max);
            if change > options.tolerance {
                return Err(CnError::NotConverged {
                    time,
                    change,
                    tolerance: options.tolerance,
                });
            }
            convergence.push(change);
        }
        Ok(Self { convergence, ..fine })
    }

    /// Propagation without the convergence check.
    pub fn propagate(
        packet: &GaussianPacket,
        wall_x: f64,
        times: &[f64],
        dx: f64,
        dt: f64,
        length: f64,
    ) -> Result<Self, CnError> {
        let grid = Grid::spanning(wall_x - length, wall_x, dx)?;
        let cn = CrankNicolson::new(grid, dt)?;
        let psi0 = grid.sample(|x| packet.psi(x, 0.0));
        let states = cn.evolve_to(&psi0, times)?;
        Ok(Self {
            grid,
            times: times.to_vec(),
            states,
            convergence: Vec::new(),
        })
    }

    fn state_at(&self, t: f64) -> Option<&[Complex64]> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|i| self.states[i].as_slice())
    }
}

impl ReferenceModel for NumericWall {
    fn kind(&self) -> ReferenceKind {
        ReferenceKind::NumericWall
    }

    /// Interpolated amplitude; NaN at times that were not propagated.
    fn amplitudes(&self, x: f64, t: f64) -> Vec<Complex64> {
        match self.state_at(t) {
            Some(psi) => vec![self.grid.interpolate(psi, x)],
            None => vec![Complex64::new(f64::NAN, f64::NAN)],
        }
    }
}
