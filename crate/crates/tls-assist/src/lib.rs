//! Traffic-light and traffic-sign assistance layer: multi-view frame
//! assembly, temporally validated light recognition, sign prioritization,
//! driver-facing message generation, a line-delimited JSON wire format, a
//! synthetic scenario simulator and a closed-loop scoring harness.

pub mod assembly;
pub mod config;
pub mod harness;
pub mod io;
pub mod message;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod tlr;
pub mod tsr;
pub mod types;

pub use config::RunConfig;
pub use harness::{run_benchmark, run_route, BenchRequest, BenchmarkReport, RouteReport};
pub use io::{FrameRecord, NoticeRecord};
pub use pipeline::Pipeline;
pub use sim::{generate_scenario, Scenario, TrackClass};
