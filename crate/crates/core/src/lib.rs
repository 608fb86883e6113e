pub mod analytic;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerology;
pub mod report;
pub mod scenario;
pub mod sim;
