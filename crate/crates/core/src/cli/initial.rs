//! Initial states, interpolated at the interior nodes and L²-normalized.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::config::InitialKind;
use super::io::read_state;
use crate::discretization::{FeSpace, FieldVector};
use crate::energy::Physics;
use crate::Error;

pub fn vortex(omega: f64, x: f64, y: f64) -> Complex64 {
    let g = (-(x * x + y * y) / 2.0).exp();
    Complex64::new(x, y) * (omega / PI.sqrt() * g)
}

pub fn mixed(omega: f64, x: f64, y: f64) -> Complex64 {
    let g = (-(x * x + y * y) / 2.0).exp();
    vortex(omega, x, y) + (1.0 - omega) / PI.sqrt() * g
}

pub fn initial_state(kind: &InitialKind, physics: &Physics, space: &FeSpace) -> crate::Result<FieldVector> {
    let omega = physics.omega;
    let raw = match kind {
        InitialKind::Vortex => space.interpolate(|x, y| vortex(omega, x, y)),
        InitialKind::ConjVortex => space.interpolate(|x, y| vortex(omega, x, y).conj()),
        InitialKind::Mixed => space.interpolate(|x, y| mixed(omega, x, y)),
        InitialKind::File(path) => {
            let state = read_state(path)?;
            let mesh = space.mesh();
            if state.n != mesh.subdivisions() || state.half_width != mesh.half_width() {
                return Err(Error::StateFormat(format!(
                    "{}: state is for n={} L={}, run uses n={} L={}",
                    path.display(),
                    state.n,
                    state.half_width,
                    mesh.subdivisions(),
                    mesh.half_width()
                )));
            }
            state.u
        }
    };
    space.normalize(&raw)
}
