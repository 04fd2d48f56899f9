//! Shared fixtures for the benchmarks.

use coexist_core::model::{LinkBudget, OperatingPoint, SystemConfig};

/// Reference calibration: 0.032 effective packet size, both users at 1 W
/// and 8.9 km.
pub fn reference() -> (SystemConfig, OperatingPoint) {
    let cfg = SystemConfig {
        mc_packet_size: 0.032,
        ..SystemConfig::table1()
    };
    let b = LinkBudget::new(1.0, 8900.0, 4.0, 1.0).expect("valid budget");
    let op = OperatingPoint::new(b, b, 2.866e-15).expect("valid point");
    (cfg, op)
}
