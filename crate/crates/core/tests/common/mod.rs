#![allow(dead_code)]

use peh_core::{ElectricalAnalog, Excitation, PehSystem};

pub const ACCEL: f64 = 4.9;

pub fn strong_with(rp: f64) -> PehSystem {
    PehSystem::from_electrical(ElectricalAnalog { r: 24.93e3, l: 1.61e3, c: 5.03e-9 }, 2.35e-3, 22.33e-9)
        .unwrap()
        .with_leakage(rp)
        .unwrap()
        .with_excitation(Excitation::BaseAcceleration(ACCEL))
        .unwrap()
}

pub fn weak_with(rp: f64) -> PehSystem {
    PehSystem::from_electrical(ElectricalAnalog { r: 345.47e3, l: 31.18e3, c: 0.27e-9 }, 0.37e-3, 45.7e-9)
        .unwrap()
        .with_leakage(rp)
        .unwrap()
        .with_excitation(Excitation::BaseAcceleration(ACCEL))
        .unwrap()
}

pub fn strong() -> PehSystem {
    strong_with(2174.61e3)
}

pub fn weak() -> PehSystem {
    weak_with(1533.47e3)
}
