//! Defaultable-equity model: the stock jumps to zero at a default intensity
//! that the market (`λ`) and the buyer (`λ~`) assess differently.

pub mod american;
pub mod mc;
pub mod pricing;
pub mod spec;
pub mod timing;

pub use american::{american_exercise, american_purchase, AmericanPurchase, AmericanPut};
pub use mc::{mc_price, McEstimate, McMode, SwitchPolicy};
pub use pricing::{closed_form_drift, closed_form_price, drift_g, price_surface, price_surface_with_stats};
pub use spec::{DefaultableModel, Discretization, IntensityKind, IntensitySpec, Numerics, PayoffSpec, Side};
pub use timing::{analyze, solve_delay_premium, solve_min_cost, ObstacleSolution, TimingAnalysis, TimingPoint};
