use serde::{Deserialize, Serialize};

/// The three numerical layers used by certificates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Membership and projection accuracy, scaled by `1 + ‖x‖`.
    pub geometric: f64,
    /// Slack added to Hausdorff and pinning bounds.
    pub certificate: f64,
    /// Slack on the separation `dist(q_h, E) ≥ ε`.
    pub separation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            geometric: 1e-9,
            certificate: 1e-8,
            separation: 1e-6,
        }
    }
}
