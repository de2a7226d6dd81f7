use super::time::SimTime;

/// Decides whether a record started at a given time counts towards measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WarmupGate {
    pub warmup_end: SimTime,
    pub enabled: bool,
}

impl WarmupGate {
    pub fn new(warmup_end: SimTime) -> Self {
        WarmupGate { warmup_end, enabled: true }
    }

    pub fn disabled() -> Self {
        WarmupGate { warmup_end: SimTime::ZERO, enabled: false }
    }

    pub fn admits(&self, start: SimTime) -> bool {
        !self.enabled || start >= self.warmup_end
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_inclusive() {
        let g = WarmupGate::new(SimTime::from_secs_f64(60.0));
        assert!(!g.admits(SimTime::from_secs_f64(59.999)));
        assert!(g.admits(SimTime::from_secs_f64(60.0)));
        assert!(WarmupGate::disabled().admits(SimTime::ZERO));
    }
}
