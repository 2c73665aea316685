pub mod queue;
pub mod server;

pub use queue::{Decision, Progress, ReviewItem, ReviewQueue};
pub use server::{router, serve, ReviewState};
