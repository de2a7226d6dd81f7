//! Reliable byte streams (Reno) and unreliable datagrams.

pub mod datagram;
pub mod reassembly;
pub mod reno;

pub use datagram::{fragment, fragment_count, wire_bytes, Datagram, OversizeDatagram, MAX_PAYLOAD, OVERHEAD};
pub use reassembly::{Payload, Reassembly};
pub use reno::{Aborted, CcState, RenoConfig, RenoSender, Segment, SenderStats};

/// Size of a pure acknowledgement on the wire.
pub const ACK_BYTES: u32 = OVERHEAD;

/// Receiving half of a stream: reassembles data and produces cumulative acks.
#[derive(Debug, Clone, Default)]
pub struct StreamReceiver {
    reassembly: Reassembly<()>,
    delivered: u64,
}

impl StreamReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accepts a segment; returns the cumulative ack to send back.
    pub fn on_segment(&mut self, seq: u64, len: u32) -> u64 {
        for (_, l, ()) in self.reassembly.receive(seq, len as u64, ()) {
            self.delivered += l;
        }
        self.reassembly.next_expected()
    }

    /// Bytes handed to the application so far, always a stream prefix.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }
}
