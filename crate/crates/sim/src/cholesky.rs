use reapkit_core::cholesky::{Factorizer, LFactor, SymbolicPattern};
use reapkit_core::rir::{cholesky_columns, data_bundle_bytes, RirStream, HEADER_BYTES};
use reapkit_core::CscMatrix;

use crate::config::{Kernel, SimConfig};
use crate::error::{Result, SimError};
use crate::memory::{isolated_cycles, MemoryChannel};
use crate::report::{build_report, SimReport, StageTally, Totals};

const LOAD: usize = 0;
const DOT: usize = 1;
const DIVSQRT: usize = 2;
const STAGES: [&str; 3] = ["load", "dot", "divsqrt"];

pub struct CholeskyOutcome {
    pub report: SimReport,
    /// The factor computed alongside the simulation.
    pub l: LFactor,
}

/// Bytes to fetch a row of `L` holding `len` entries.
fn l_row_bytes(len: usize) -> u64 {
    if len == 0 {
        0
    } else {
        data_bundle_bytes(len) as u64
    }
}

/// Counts cycles a pipelined unit has work in flight.
#[derive(Default, Clone, Copy)]
struct Occupancy {
    until: u64,
    busy: u64,
}

impl Occupancy {
    fn add(&mut self, start: u64, end: u64) {
        let from = start.max(self.until);
        if end > from {
            self.busy += end - from;
            self.until = end;
        }
    }
}

/// Simulates the factorization of `a` column by column. Every column is a
/// barrier; within a column each pipeline takes every `P`-th row of the
/// pattern, recomputes the diagonal itself, and then runs one dot product
/// and one division per row it owns.
pub fn simulate_cholesky(
    stream: &RirStream,
    a: &CscMatrix,
    pattern: &SymbolicPattern,
    config: &SimConfig,
) -> Result<CholeskyOutcome> {
    config.validate()?;
    if stream.capacity() > config.cam_size {
        return Err(SimError::ScheduleMismatch(format!(
            "bundle capacity {} exceeds CAM size {}",
            stream.capacity(),
            config.cam_size
        )));
    }
    let columns = cholesky_columns(stream)?;
    if columns.len() != pattern.n() {
        return Err(SimError::ScheduleMismatch(format!(
            "stream has {} columns, pattern has {}",
            columns.len(),
            pattern.n()
        )));
    }
    let pn = config.pipelines;
    let costs = config.costs;
    let mult = config.multipliers_per_pe as u64;
    let dot_cycles = |m: usize| (m as u64).div_ceil(mult).max(1) + costs.mul_latency;
    let serial_dot = |m: usize| (m as u64).max(1) + costs.mul_latency;
    let (rb, wb) = (config.read_budget(), config.write_budget());

    let mut rd = MemoryChannel::new(rb, costs.mem_latency);
    let mut wr = MemoryChannel::new(wb, costs.mem_latency);
    let mut tally = StageTally::new(&STAGES, pn);
    let mut divsqrt_busy = vec![0u64; pn];
    let mut f = Factorizer::new(a, pattern)?;

    rd.request(0, HEADER_BYTES as u64);
    let stream_bytes = |k: usize| (columns[k].ra_bytes + columns[k].meta_bytes) as u64;
    let mut pending = if columns.is_empty() { None } else { Some(rd.request(0, stream_bytes(0)).ready) };

    let mut t = 0u64;
    let mut flops = 0u64;
    let mut partials = 0u64;
    let mut multiplies = 0u64;
    let mut redundant = 0u64;
    let mut idle_pipeline_cycles = 0u64;
    let mut serial = 0.0f64;
    let mut group_cycles = Vec::with_capacity(columns.len());
    let mut group_elements = Vec::with_capacity(columns.len());

    for (k, col) in columns.iter().enumerate() {
        let start = t;
        let stream_ready = pending.take().expect("column stream requested ahead");
        if k + 1 < columns.len() {
            pending = Some(rd.request(start, stream_bytes(k + 1)).ready);
        }
        let work = f.step()?;
        let named: Vec<usize> = col.triples.iter().map(|t| t.row as usize).collect();
        if named.len() != work.dots.len() || named.iter().zip(&work.dots).any(|(r, d)| *r != d.row) {
            return Err(SimError::ScheduleMismatch(format!("column {k}: triples do not match the pattern")));
        }
        flops += work.flops();
        let matched: u64 = work.dots.iter().map(|d| d.matched as u64).sum();
        partials += matched;

        // row k of L goes to every pipeline once; each owned row is fetched
        // by its pipeline
        let rowk = rd.request(start, l_row_bytes(work.diag_row_len)).ready;
        let row_ready: Vec<u64> = work
            .dots
            .iter()
            .enumerate()
            .map(|(i, d)| if i == 0 { rowk } else { rd.request(start, l_row_bytes(d.row_len)).ready })
            .collect();
        let base = stream_ready.max(rowk).max(start);
        let active = work.dots.len().min(pn);
        let diag = dot_cycles(work.dots[0].matched);
        let mut writes: Vec<(u64, usize, u64)> = Vec::with_capacity(work.dots.len());
        let mut col_end = start;
        for p in 0..active {
            tally.stall(LOAD, p, base - start);
            let mut occ = Occupancy::default();
            let mut dot_free = base + diag;
            tally.busy(DOT, p, diag);
            multiplies += work.dots[0].matched as u64;
            if p > 0 {
                redundant += work.dots[0].matched as u64;
            }
            let sqrt_done = dot_free + costs.sqrt_latency;
            occ.add(dot_free, sqrt_done);
            if p == 0 {
                writes.push((sqrt_done, p, config.element_bytes as u64));
            }
            let mut p_end = sqrt_done;
            let mut div_next = sqrt_done;
            for i in (p..work.dots.len()).step_by(pn).filter(|&i| i > 0) {
                let d = work.dots[i];
                let begin = dot_free.max(row_ready[i]);
                tally.stall(LOAD, p, begin - dot_free);
                let dc = dot_cycles(d.matched);
                tally.busy(DOT, p, dc);
                multiplies += d.matched as u64;
                dot_free = begin + dc;
                let issue = dot_free.max(div_next);
                div_next = issue + 1;
                let done = issue + costs.div_latency;
                occ.add(issue, done);
                writes.push((done, p, config.element_bytes as u64));
                p_end = p_end.max(done);
            }
            divsqrt_busy[p] += occ.busy;
            col_end = col_end.max(p_end);
        }
        writes.sort_unstable();
        for (done, _, bytes) in writes {
            col_end = col_end.max(wr.request(done, bytes).ready);
        }
        idle_pipeline_cycles += (pn - active) as u64 * (col_end - start);
        group_cycles.push(col_end - start);
        group_elements.push(col.ra.len() + col.triples.len());
        t = col_end;

        serial += isolated_cycles(stream_bytes(k), rb, costs.mem_latency);
        serial += isolated_cycles(l_row_bytes(work.diag_row_len), rb, costs.mem_latency);
        serial += (serial_dot(work.dots[0].matched) + costs.sqrt_latency) as f64;
        for d in &work.dots[1..] {
            serial += isolated_cycles(l_row_bytes(d.row_len), rb, costs.mem_latency);
            serial += (serial_dot(d.matched) + costs.div_latency) as f64;
        }
        serial += work.dots.len() as f64 * isolated_cycles(config.element_bytes as u64, wb, costs.mem_latency);
    }
    let total = t.max(rd.idle_from());
    if let Some(last) = group_cycles.last_mut() {
        *last += total - t;
    } else {
        group_cycles.push(total);
        group_elements.push(0);
    }
    for (p, b) in divsqrt_busy.into_iter().enumerate() {
        tally.busy(DIVSQRT, p, b);
    }
    let l = f.finish();
    let pipeline_idle_fraction =
        if total == 0 { 0.0 } else { idle_pipeline_cycles as f64 / (pn as f64 * total as f64) };
    let totals = Totals {
        kernel: Kernel::Cholesky,
        groups: columns.len() as u64,
        total_cycles: total,
        serial_cycles: serial.ceil() as u64,
        flops,
        partials,
        multiplies,
        redundant_multiplies: redundant,
        explicit_zeros: 0,
        output_nnz: l.nnz() as u64,
        bytes_read: rd.bytes(),
        bytes_written: wr.bytes(),
        peak_read: rd.peak_bytes_per_cycle(),
        peak_write: wr.peak_bytes_per_cycle(),
        pipeline_idle_fraction,
        group_cycles,
        group_elements,
    };
    let report = build_report(config, totals, tally.finish(total))?;
    Ok(CholeskyOutcome { report, l })
}
