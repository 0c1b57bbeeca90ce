//! Deterministic, seedable simulator for packet quantum network protocols.
//!
//! The crate is organized in layers that mirror the artifact's architecture:
//!
//! * [`qsim`] — exact statevector engine for small mixed-dimension registers
//!   (qubits and qutrits), with gates, computational and Bell measurements,
//!   and diagnostic density queries.
//! * [`primitives`] — protocol-level quantum building blocks: EPR creation,
//!   teleportation, entanglement swapping, correction composition, check
//!   unitaries, the (2,3)-threshold secret-sharing code, and the five-qubit
//!   code used for entanglement distribution.
//! * [`packet`] — bit-exact construction, serialization and parsing of the
//!   classical qUDP/qTCP packets, including the one's-complement checksum.
//! * [`netsim`] — the discrete-event world: topology, links with loss and
//!   Pauli noise, per-link EPR pools with expiry, routing, and the trace log.
//! * [`stack`] — the four-layer protocol logic for both network models:
//!   qUDP sender/receiver, router actions, the qTCP connection machine, and
//!   entanglement distribution.
//! * [`scenario`] / [`runner`] — scenario files, seeded execution, reports
//!   and verdicts.

pub mod netsim;
pub mod packet;
pub mod primitives;
pub mod qsim;
pub mod runner;
pub mod scenario;
pub mod stack;
