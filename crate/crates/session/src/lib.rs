//! Live sessions over a websocket, plus the command-line front end.
//!
//! A [`session::Session`] owns one physics loop. [`server::router`] exposes
//! it at `/session`; message shapes live in [`protocol`].

pub mod cli;
pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{Action, ClientCommand, ServerMessage, StateFrame};
pub use session::{Session, SessionOptions};
