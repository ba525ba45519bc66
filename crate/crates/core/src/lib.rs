//! Simulation of multi-party quantum summation over `d`-level qudits, the
//! inverse-QFT attack a malicious state preparer can mount against it, and
//! the state-checking countermeasure.
//!
//! * [`qudit`]: exact dense state vectors, Fourier and shift gates, projective
//!   measurement.
//! * [`protocol`]: the original summation protocol.
//! * [`adversary`]: the inverse-QFT attack and an intercept-resend eavesdropper.
//! * [`verification`]: the modified protocol with checking states.
//! * [`harness`]: seeded multi-trial scenarios and JSON reports.

pub mod adversary;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod qudit;
pub mod stats;
pub mod verification;

pub use adversary::{fake_particle, recover_secret_digit, EveModel, IqftAttackPlan, SumPolicy};
pub use error::{Error, Result};
pub use harness::{run_scenario, write_report, ReportDocument, Scenario, ScenarioConfig};
pub use protocol::{
    compute_sum, AnnouncementLog, DecoyRecord, ProtocolConfig, RoundState, SecretString,
};
pub use qudit::{Basis, MeasurementOutcome, QuditRegister};
pub use verification::{CheckAssignment, CheckOutcome, P1Strategy};
