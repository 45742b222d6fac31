//! Tamper-evidence gateway for relational data.

pub mod eval;
pub mod fixtures;
pub mod harness;
pub mod fingerprint;
pub mod ledger;
pub mod rewrite;
pub mod sql;
pub mod storage;
pub mod types;
pub mod verifier;

pub use types::{DataType, Decimal, Row, Value};
pub use fingerprint::{Fingerprint, RowId};
pub use ledger::{Ledger, LedgerError, PeerId, SimulatedLedger};
pub use storage::Database;
pub use verifier::{Gateway, GatewayError, Outcome, Response, TamperAlert, VerificationReport};
