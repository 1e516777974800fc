use serde::{Deserialize, Serialize};

use super::{invalid, CommsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBuffer {
    pub capacity_bytes: f64,
    #[serde(default)]
    pub fill_bytes: f64,
}

impl Default for DataBuffer {
    fn default() -> Self {
        Self { capacity_bytes: 1.0e9, fill_bytes: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestReport {
    pub stored: f64,
    pub dropped: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrainReport {
    pub drained: f64,
}

impl DataBuffer {
    pub fn validate(&self) -> Result<(), CommsError> {
        if !(self.capacity_bytes > 0.0) {
            return Err(invalid("buffer capacity", "must be positive"));
        }
        if !(0.0..=self.capacity_bytes).contains(&self.fill_bytes) {
            return Err(invalid("buffer fill", "must lie in [0, capacity]"));
        }
        Ok(())
    }

    pub fn fraction(&self) -> f64 {
        self.fill_bytes / self.capacity_bytes
    }

    /// Stores up to the free space; the rest is dropped.
    pub fn ingest(&mut self, bytes: f64) -> IngestReport {
        let bytes = bytes.max(0.0);
        let stored = bytes.min(self.capacity_bytes - self.fill_bytes);
        self.fill_bytes += stored;
        IngestReport { stored, dropped: bytes - stored }
    }

    /// `fill' = max(0, fill − R_eff · duration / 8)`.
    pub fn downlink_session(&mut self, rate_bps: f64, duration_s: f64) -> DrainReport {
        let drained = (rate_bps.max(0.0) * duration_s.max(0.0) / 8.0).min(self.fill_bytes);
        self.fill_bytes -= drained;
        DrainReport { drained }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn drain_examples() {
        let mut b = DataBuffer::default();
        assert_eq!(b.downlink_session(8.0e5, 10.0).drained, 0.0);
        b.fill_bytes = 1.0e6;
        let r = b.downlink_session(8.0e5, 10.0);
        assert_eq!(r.drained, 1.0e6);
        assert_eq!(b.fill_bytes, 0.0);
    }

    #[test]
    fn overflow_is_reported() {
        let mut b = DataBuffer { capacity_bytes: 100.0, fill_bytes: 90.0 };
        let r = b.ingest(25.0);
        assert_eq!((r.stored, r.dropped), (10.0, 15.0));
        assert_eq!(b.fill_bytes, 100.0);
    }

    proptest! {
        #[test]
        fn fill_stays_bounded(ops in proptest::collection::vec((0.0..5.0e8f64, 0.0..1.0e7f64, 0.0..100.0f64), 1..40)) {
            let mut b = DataBuffer::default();
            for (inc, rate, dur) in ops {
                let before = b.fill_bytes;
                let r = b.ingest(inc);
                prop_assert!(r.dropped >= 0.0);
                let d = b.downlink_session(rate, dur);
                prop_assert!(d.drained <= before + r.stored);
                prop_assert!((0.0..=b.capacity_bytes).contains(&b.fill_bytes));
            }
        }
    }
}
