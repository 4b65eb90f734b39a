//! FIFO memory channel served at a fixed number of bytes per cycle.

/// Result of one request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    /// Fractional cycle at which the channel starts serving the request.
    pub start: f64,
    /// Fractional cycle at which the last byte leaves the channel.
    pub finish: f64,
    /// First whole cycle at which the data may be used (includes latency).
    pub ready: u64,
}

/// Requests are served in call order. Every cycle serves at most
/// `budget` bytes; the channel checks this on each request and records the
/// largest per-cycle amount it served.
///
/// Time is kept in integer ticks: a cycle is `floor(budget * 2^32)` ticks
/// and a byte is `2^32` ticks, so per-cycle accounting is exact and the
/// effective budget is below the nominal one by less than `2^-32` bytes.
#[derive(Debug, Clone)]
pub struct MemoryChannel {
    budget: f64,
    latency: u64,
    /// Ticks per cycle.
    cycle_ticks: u128,
    free_at: u128,
    bytes: u64,
    requests: u64,
    cycle: Option<u128>,
    served: u128,
    peak: u128,
}

const BYTE_TICKS: u128 = 1 << 32;

impl MemoryChannel {
    pub fn new(budget: f64, latency: u64) -> Self {
        assert!(budget > 0.0 && budget.is_finite(), "budget must be positive");
        let cycle_ticks = (budget * BYTE_TICKS as f64).floor() as u128;
        assert!(cycle_ticks > 0, "budget {budget} is below the channel resolution");
        MemoryChannel {
            budget,
            latency,
            cycle_ticks,
            free_at: 0,
            bytes: 0,
            requests: 0,
            cycle: None,
            served: 0,
            peak: 0,
        }
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn requests(&self) -> u64 {
        self.requests
    }

    /// Largest number of bytes served within a single cycle.
    pub fn peak_bytes_per_cycle(&self) -> f64 {
        self.peak as f64 / BYTE_TICKS as f64
    }

    /// Cycle after which the channel has nothing left to serve.
    pub fn busy_until(&self) -> f64 {
        self.cycles(self.free_at)
    }

    /// First whole cycle at which the channel is idle.
    pub fn idle_from(&self) -> u64 {
        self.free_at.div_ceil(self.cycle_ticks) as u64
    }

    fn cycles(&self, ticks: u128) -> f64 {
        ticks as f64 / self.cycle_ticks as f64
    }

    pub fn request(&mut self, at: u64, bytes: u64) -> Transfer {
        if bytes == 0 {
            return Transfer { start: at as f64, finish: at as f64, ready: at };
        }
        let start = self.free_at.max(at as u128 * self.cycle_ticks);
        let finish = start + bytes as u128 * BYTE_TICKS;
        self.serve(start, finish);
        self.free_at = finish;
        self.bytes += bytes;
        self.requests += 1;
        Transfer {
            start: self.cycles(start),
            finish: self.cycles(finish),
            ready: finish.div_ceil(self.cycle_ticks) as u64 + self.latency,
        }
    }

    fn serve(&mut self, start: u128, finish: u128) {
        let c = self.cycle_ticks;
        let first = start / c;
        let last = (finish - 1) / c;
        if first == last {
            self.add(first, finish - start);
            return;
        }
        self.add(first, (first + 1) * c - start);
        if last > first + 1 {
            // cycles strictly between are served at exactly the budget
            self.add(last - 1, c);
        }
        self.add(last, finish - last * c);
    }

    fn add(&mut self, cycle: u128, ticks: u128) {
        match self.cycle {
            Some(c) if c == cycle => self.served += ticks,
            Some(c) => {
                assert!(cycle > c, "memory channel served out of order ({cycle} after {c})");
                self.cycle = Some(cycle);
                self.served = ticks;
            }
            None => {
                self.cycle = Some(cycle);
                self.served = ticks;
            }
        }
        self.peak = self.peak.max(self.served);
        assert!(
            self.served <= self.cycle_ticks,
            "served {} bytes in cycle {cycle}, budget {}",
            self.served as f64 / BYTE_TICKS as f64,
            self.budget
        );
    }
}

/// Time to move `bytes` through an otherwise idle channel, used by the
/// serial baseline.
pub fn isolated_cycles(bytes: u64, budget: f64, latency: u64) -> f64 {
    if bytes == 0 {
        0.0
    } else {
        latency as f64 + bytes as f64 / budget
    }
}
