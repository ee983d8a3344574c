//! The shipped demo problems, read from the `demos/` configs so the files
//! and the library never drift apart.

use crate::config::{parse_config, ProblemConfig};
use crate::problem::Problem;

pub const INTERVAL: &str = include_str!("../../../demos/demo_interval.cfg");
pub const RADIAL: &str = include_str!("../../../demos/demo_radial.cfg");
pub const CUBIC: &str = include_str!("../../../demos/demo_cubic.cfg");
pub const YAMABE: &str = include_str!("../../../demos/demo_yamabe.cfg");

pub const ALL: [(&str, &str); 4] = [("interval", INTERVAL), ("radial", RADIAL), ("cubic", CUBIC), ("yamabe", YAMABE)];

pub fn config(text: &str) -> ProblemConfig {
    parse_config(text).expect("shipped demo configs parse")
}

/// a ≡ 1, f ≡ −(2.5π)² on the unit interval.
pub fn interval() -> Problem {
    config(INTERVAL).problem
}

/// a ≡ 1, f ≡ −30 on the unit disk.
pub fn radial() -> Problem {
    config(RADIAL).problem
}

/// g(ξ) = −(2.5π)²ξ + ξ³ on the unit interval.
pub fn cubic() -> Problem {
    config(CUBIC).problem
}

/// a ≡ 8, f ≡ −300 on the unit 3-ball.
pub fn yamabe() -> Problem {
    config(YAMABE).problem
}
