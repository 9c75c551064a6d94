//! A small line-oriented control protocol between a RAN and a slicing xApp.
//!
//! Every message is one line of JSON with a `type` discriminator:
//!
//! ```text
//! {"type":"subscribe","period_ms":100}
//! {"type":"kpm_report","round":7,"records":[...],"slice_digest":"9ae1..."}
//! {"type":"slice_command","round":7,"allocation":{"grants":[...],"pooled":false}}
//! {"type":"ack","round":7}
//! {"type":"bye"}
//! ```
//!
//! A command answers the report with the same round number and is applied
//! only to that round; anything arriving later is dropped and the RAN keeps
//! its previous allocation.

mod endpoint;
mod error;
mod frame;
mod message;
mod transport;

pub use endpoint::{
    run_ran_endpoint, run_xapp_endpoint, RanEndpointConfig, RanSummary, RoundOutcome,
    XappEndpointConfig, XappSummary, DEFAULT_DEADLINE, MAX_DEADLINE,
};
pub use error::{DecodeError, E2Error};
pub use frame::{FrameDecoder, MAX_LINE};
pub use message::{decode, encode, slice_digest, E2Message, VARIANTS};
pub use transport::{inproc_pair, InProcTransport, Received, Transport, UnixTransport};
