use serde::Serialize;

/// Per-packet encapsulation overhead in bytes (RTP/UDP/IP/Ethernet for
/// datagrams, TCP/IP/Ethernet for stream segments).
pub const OVERHEAD: u32 = 66;
/// Largest payload carried by one 1500-byte IP packet with this overhead.
pub const MAX_PAYLOAD: u32 = 1434;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("datagram payload of {0} bytes exceeds {MAX_PAYLOAD}")]
pub struct OversizeDatagram(pub u32);

/// An unreliable datagram; `payload` of zero is allowed for signalling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Datagram {
    pub payload: u32,
}

impl Datagram {
    pub fn new(payload: u32) -> Result<Self, OversizeDatagram> {
        if payload > MAX_PAYLOAD {
            return Err(OversizeDatagram(payload));
        }
        Ok(Datagram { payload })
    }

    pub fn wire_size(&self) -> u32 {
        self.payload + OVERHEAD
    }
}

/// Splits `bytes` into full-size fragments followed by one remainder.
/// A zero-byte message still occupies one empty fragment.
pub fn fragment(bytes: u64) -> impl Iterator<Item = Datagram> {
    let full = bytes / MAX_PAYLOAD as u64;
    let rest = (bytes % MAX_PAYLOAD as u64) as u32;
    let tail = if rest > 0 || bytes == 0 { Some(Datagram { payload: rest }) } else { None };
    (0..full).map(|_| Datagram { payload: MAX_PAYLOAD }).chain(tail)
}

pub fn fragment_count(bytes: u64) -> u32 {
    bytes.div_ceil(MAX_PAYLOAD as u64).max(1) as u32
}

/// Bytes on the wire for a message of `bytes` after fragmentation.
pub fn wire_bytes(bytes: u64) -> u64 {
    bytes + fragment_count(bytes) as u64 * OVERHEAD as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_frame_is_one_datagram() {
        let f: Vec<_> = fragment(1000).collect();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].wire_size(), 1066);
    }

    #[test]
    fn large_frame_fragments() {
        let f: Vec<_> = fragment(30_000).collect();
        assert_eq!(f.len(), 21);
        assert!(f[..20].iter().all(|d| d.payload == 1434));
        assert_eq!(f[20].payload, 1320);
        assert_eq!(fragment_count(30_000), 21);
        assert_eq!(wire_bytes(30_000), 30_000 + 21 * 66);
    }

    #[test]
    fn exact_multiple_has_no_empty_tail() {
        assert_eq!(fragment(2868).count(), 2);
        assert_eq!(fragment(0).count(), 1);
    }

    #[test]
    fn oversize_rejected() {
        assert!(Datagram::new(1434).is_ok());
        assert_eq!(Datagram::new(1435), Err(OversizeDatagram(1435)));
    }
}
