use std::sync::atomic::{AtomicU64, Ordering};

/// Sink for floating-point operation counts.
///
/// Kernels report the scalar multiplies and adds they execute. The default
/// [`NoTally`] compiles to nothing; [`FlopCounter`] accumulates.
pub trait Tally: Sync {
    fn add(&self, flops: u64);
}

/// Discards counts.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTally;

impl Tally for NoTally {
    #[inline(always)]
    fn add(&self, _flops: u64) {}
}

/// Per-invocation flop counter.
#[derive(Debug, Default)]
pub struct FlopCounter {
    count: AtomicU64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

impl Tally for FlopCounter {
    #[inline]
    fn add(&self, flops: u64) {
        self.count.fetch_add(flops, Ordering::Relaxed);
    }
}
