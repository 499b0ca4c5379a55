//! Shared fixtures for the benchmark suite.

use qkdsecval_core::{ComponentChain, SystemParams};

/// The system from the repository's example configuration.
pub fn example_params() -> SystemParams {
    SystemParams {
        mu0: 4.0,
        modulation_index: 0.05,
        interaction_order: 2,
        beta: 0.05,
        eta_line: 0.5,
        eta_bob: 0.27,
        rep_rate_hz: 1.0e8,
        wavelength_m: 1.55e-6,
        sift_factor: 0.5,
    }
}

/// The transmitter component chain fixture.
pub fn alice_chain() -> ComponentChain {
    let text = include_str!("../../../fixtures/alice_scw.json");
    serde_json::from_str(text).expect("fixture parses")
}
