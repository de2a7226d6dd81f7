use std::collections::BTreeMap;

/// In-order delivery of byte ranges that may arrive late, twice or not at all.
///
/// Ranges are `[seq, seq + len)` over the stream's byte offsets. `data`
/// travels with a range and is handed back once its range becomes
/// contiguous with everything delivered before it. A range that partly
/// overlaps delivered bytes is trimmed with [`Payload::split_off_front`].
#[derive(Debug, Clone)]
pub struct Reassembly<D> {
    next: u64,
    pending: BTreeMap<u64, (u64, D)>,
}

pub trait Payload: Sized {
    /// Drops the first `n` bytes.
    fn split_off_front(self, n: u64) -> Self;
}

impl Payload for () {
    fn split_off_front(self, _: u64) -> Self {}
}

impl Payload for Vec<u8> {
    fn split_off_front(mut self, n: u64) -> Self {
        self.drain(..n as usize);
        self
    }
}

impl<D: Payload> Default for Reassembly<D> {
    fn default() -> Self {
        Self::new()
    }
}

impl<D: Payload> Reassembly<D> {
    pub fn new() -> Self {
        Reassembly { next: 0, pending: BTreeMap::new() }
    }

    /// Next byte offset expected; this is the cumulative acknowledgement.
    pub fn next_expected(&self) -> u64 {
        self.next
    }

    pub fn buffered_ranges(&self) -> usize {
        self.pending.len()
    }

    /// Accepts one range and returns everything that became deliverable,
    /// in stream order, as `(offset, len, data)`.
    pub fn receive(&mut self, seq: u64, len: u64, data: D) -> Vec<(u64, u64, D)> {
        let mut out = Vec::new();
        let end = seq + len;
        if end <= self.next || len == 0 {
            return out;
        }
        if seq > self.next {
            // keep the longest copy of an out-of-order range
            match self.pending.get(&seq) {
                Some((l, _)) if *l >= len => {}
                _ => {
                    self.pending.insert(seq, (len, data));
                }
            }
            return out;
        }
        let trim = self.next - seq;
        out.push((self.next, len - trim, data.split_off_front(trim)));
        self.next = end;
        while let Some(entry) = self.pending.first_entry() {
            let s = *entry.key();
            if s > self.next {
                break;
            }
            let (l, d) = entry.remove();
            if s + l <= self.next {
                continue;
            }
            let trim = self.next - s;
            out.push((self.next, l - trim, d.split_off_front(trim)));
            self.next = s + l;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn in_order_passes_through() {
        let mut r = Reassembly::<()>::new();
        assert_eq!(r.receive(0, 10, ()).len(), 1);
        assert_eq!(r.receive(10, 5, ()).len(), 1);
        assert_eq!(r.next_expected(), 15);
    }

    #[test]
    fn hole_is_filled_later() {
        let mut r = Reassembly::<()>::new();
        assert!(r.receive(10, 10, ()).is_empty());
        assert!(r.receive(20, 10, ()).is_empty());
        let d = r.receive(0, 10, ());
        assert_eq!(d.iter().map(|x| x.1).sum::<u64>(), 30);
        assert_eq!(r.next_expected(), 30);
        assert_eq!(r.buffered_ranges(), 0);
    }

    #[test]
    fn duplicates_are_ignored() {
        let mut r = Reassembly::<()>::new();
        r.receive(0, 10, ());
        assert!(r.receive(0, 10, ()).is_empty());
        assert!(r.receive(3, 4, ()).is_empty());
    }

    proptest! {
        /// Arbitrary segmentation, loss with retransmission, duplication and
        /// reordering never corrupt the delivered byte sequence.
        #[test]
        fn delivered_bytes_equal_sent_bytes(
            stream in proptest::collection::vec(any::<u8>(), 1..4000),
            cuts in proptest::collection::vec(1usize..600, 1..40),
            order_seed in any::<u64>(),
        ) {
            let mut segs = Vec::new();
            let mut at = 0usize;
            let mut i = 0;
            while at < stream.len() {
                let l = cuts[i % cuts.len()].min(stream.len() - at);
                segs.push((at, l));
                at += l;
                i += 1;
            }
            // every segment sent once or twice, plus re-segmented copies, in shuffled order
            let mut wire: Vec<(usize, usize)> = segs.clone();
            let mut x = order_seed | 1;
            let mut rnd = || { x ^= x << 13; x ^= x >> 7; x ^= x << 17; x };
            for &(s, l) in &segs {
                if rnd() % 3 == 0 { wire.push((s, l)); }
                if l > 1 && rnd() % 4 == 0 {
                    let cut = 1 + (rnd() as usize % (l - 1));
                    wire.push((s + cut, l - cut));
                }
            }
            for k in (1..wire.len()).rev() {
                let j = rnd() as usize % (k + 1);
                wire.swap(k, j);
            }
            let mut r = Reassembly::<Vec<u8>>::new();
            let mut got = Vec::new();
            for (s, l) in wire {
                for (off, len, d) in r.receive(s as u64, l as u64, stream[s..s + l].to_vec()) {
                    prop_assert_eq!(off as usize, got.len());
                    prop_assert_eq!(len as usize, d.len());
                    got.extend(d);
                }
            }
            prop_assert_eq!(got, stream);
        }
    }
}
