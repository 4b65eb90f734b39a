use std::collections::{BTreeMap, HashMap};

use reapkit_core::rir::{data_bundle_bytes, SpgemmGroup, SpgemmSchedule, HEADER_BYTES};
use reapkit_core::spgemm::{assemble, execute_group, SpgemmStats};
use reapkit_core::CsrMatrix;

use crate::config::{Kernel, SimConfig};
use crate::error::{Result, SimError};
use crate::memory::{isolated_cycles, MemoryChannel};
use crate::report::{build_report, SimReport, StageTally, Totals};

const LOAD: usize = 0;
const MATCH: usize = 1;
const MULTIPLY: usize = 2;
const SORT: usize = 3;
const MERGE: usize = 4;
const STAGES: [&str; 5] = ["load", "match", "multiply", "sort", "merge"];

pub struct SpgemmOutcome {
    pub report: SimReport,
    /// The product computed by the simulated pipelines.
    pub c: CsrMatrix,
    pub stats: SpgemmStats,
}

/// Ready times of one group's reads.
struct GroupReads {
    /// Per pipeline, per `A` bundle.
    a: Vec<Vec<u64>>,
    b: HashMap<usize, u64>,
}

fn issue_reads(mem: &mut MemoryChannel, group: &SpgemmGroup, at: u64) -> GroupReads {
    let a = group
        .a_rows
        .iter()
        .map(|row| row.bundles.iter().map(|b| mem.request(at, b.wire_bytes() as u64).ready).collect())
        .collect();
    let b = group
        .b_rows
        .iter()
        .filter(|r| !r.bundles.is_empty())
        .map(|r| (r.row, mem.request(at, r.wire_bytes() as u64).ready))
        .collect();
    GroupReads { a, b }
}

/// Bytes of a result row written back as bundles.
fn row_bytes(nnz: usize, capacity: usize) -> u64 {
    if nnz == 0 {
        return 0;
    }
    let full = nnz / capacity;
    let rest = nnz % capacity;
    let mut b = full * data_bundle_bytes(capacity);
    if rest > 0 {
        b += data_bundle_bytes(rest);
    }
    b as u64
}

/// Merge cycles for `p` partials. Beyond the sort capacity the sorted runs
/// spill and are merged in `ceil(log2(runs))` extra passes.
fn merge_cycles(p: u64, config: &SimConfig) -> u64 {
    let base = p * config.costs.merge;
    let cap = config.sort_capacity as u64;
    if p <= cap {
        return base;
    }
    let runs = p.div_ceil(cap);
    let passes = 64 - (runs - 1).leading_zeros() as u64;
    base * (1 + passes)
}

/// Simulates the schedule. The product is computed by the functional
/// engine group by group, in the order the pipelines would produce it.
pub fn simulate_spgemm(schedule: &SpgemmSchedule, config: &SimConfig) -> Result<SpgemmOutcome> {
    config.validate()?;
    if schedule.pipelines != config.pipelines {
        return Err(SimError::ScheduleMismatch(format!(
            "schedule built for {} pipelines, configuration has {}",
            schedule.pipelines, config.pipelines
        )));
    }
    if schedule.capacity > config.cam_size {
        return Err(SimError::ScheduleMismatch(format!(
            "bundle capacity {} exceeds CAM size {}",
            schedule.capacity, config.cam_size
        )));
    }
    let pn = config.pipelines;
    let costs = config.costs;
    let mut rd = MemoryChannel::new(config.read_budget(), costs.mem_latency);
    let mut wr = MemoryChannel::new(config.write_budget(), costs.mem_latency);
    let mut tally = StageTally::new(&STAGES, pn);
    let mut stats = SpgemmStats::default();
    let mut results = Vec::new();
    let mut group_cycles = Vec::with_capacity(schedule.groups.len());
    let mut group_elements = Vec::with_capacity(schedule.groups.len());
    let mut active_cycles = 0u64;
    let mut multiplies = 0u64;
    let mut last_write = 0u64;

    rd.request(0, HEADER_BYTES as u64);
    // the input controller streams the whole schedule in order from cycle 0
    let all_reads: Vec<GroupReads> = schedule.groups.iter().map(|g| issue_reads(&mut rd, g, 0)).collect();
    let mut t = 0u64;
    for (group, reads) in schedule.groups.iter().zip(all_reads) {
        let start = t;
        let rows = execute_group(group, config.cam_size)?;
        let rounds = group.a_rows.iter().map(|r| r.bundles.len()).max().unwrap_or(0);
        let b_nnz: HashMap<usize, u64> =
            group.b_rows.iter().map(|r| (r.row, r.nnz() as u64)).collect();

        let mut cur = start;
        let mut row_round_end = vec![start; group.a_rows.len()];
        let mut last_insert = vec![start; group.a_rows.len()];
        let mut timed_partials = vec![0u64; group.a_rows.len()];
        for j in 0..rounds {
            let round_start = cur;
            let mut bstart = round_start;
            let active: Vec<usize> =
                (0..group.a_rows.len()).filter(|&p| group.a_rows[p].bundles.len() > j).collect();
            let mut needed: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &p in &active {
                let bundle = &group.a_rows[p].bundles[j];
                let ready = reads.a[p][j].max(round_start);
                tally.stall(LOAD, p, ready - round_start);
                let load = bundle.len() as u64 * costs.cam_load;
                tally.busy(LOAD, p, load);
                bstart = bstart.max(ready + load);
                for &(k, _) in &bundle.elements {
                    let k = k as usize;
                    if b_nnz.get(&k).copied().unwrap_or(0) > 0 {
                        needed.entry(k).or_default().push(p);
                    }
                }
            }
            cur = bstart;
            for (r, hitters) in needed {
                let ready = reads.b[&r];
                if ready > cur {
                    for &p in &active {
                        tally.stall(MATCH, p, ready - cur);
                    }
                    cur = ready;
                }
                for &p in &active {
                    tally.busy(MATCH, p, costs.cam_lookup);
                }
                cur += costs.cam_lookup;
                let m = b_nnz[&r];
                for &p in &hitters {
                    tally.busy(MATCH, p, m);
                    tally.busy(MULTIPLY, p, m);
                    tally.busy(SORT, p, m * costs.sort_insert);
                    timed_partials[p] += m;
                    last_insert[p] = last_insert[p].max(cur + m + costs.mul_latency + costs.sort_insert);
                }
                cur += m;
            }
            for &p in &active {
                row_round_end[p] = cur;
            }
        }

        let mut writes = Vec::with_capacity(rows.len());
        for (p, row) in rows.iter().enumerate() {
            debug_assert_eq!(row.row, group.a_rows[p].row);
            if timed_partials[p] != row.partials() as u64 {
                return Err(SimError::ScheduleMismatch(format!(
                    "row {}: pipeline issued {} multiplies, engine produced {}",
                    row.row,
                    timed_partials[p],
                    row.partials()
                )));
            }
            let merge_start = row_round_end[p].max(last_insert[p]);
            let mc = merge_cycles(timed_partials[p], config);
            tally.busy(MERGE, p, mc);
            writes.push((merge_start + mc, p, row_bytes(row.merged.len(), schedule.capacity)));
            multiplies += timed_partials[p];
            stats.add_row(row);
        }
        writes.sort_unstable();
        let mut end = cur;
        let drain = (config.buffer_depth * config.element_bytes) as f64 / wr.budget();
        for (done, p, bytes) in writes {
            let tr = wr.request(done, bytes);
            last_write = last_write.max(tr.ready);
            let release = ((tr.finish - drain).ceil().max(0.0) as u64).max(done);
            tally.stall(MERGE, p, release - done);
            active_cycles += release - start;
            end = end.max(release);
        }
        group_cycles.push(end - start);
        group_elements.push(group.elements());
        results.extend(rows);
        t = end;
    }
    let total = t.max(last_write).max(rd.idle_from());
    if let Some(last) = group_cycles.last_mut() {
        *last += total - t;
    } else {
        group_cycles.push(total);
        group_elements.push(0);
    }
    let busy_sum: u64 = tally.busy_of(MULTIPLY).iter().sum();
    debug_assert_eq!(busy_sum, multiplies);

    let serial = serial_cycles(schedule, config, &results);
    let c = assemble(schedule.a_shape.0, schedule.b_shape.1, results);
    let pipeline_idle_fraction =
        if total == 0 { 0.0 } else { 1.0 - active_cycles as f64 / (pn as f64 * total as f64) };
    let totals = Totals {
        kernel: Kernel::Spgemm,
        groups: schedule.groups.len() as u64,
        total_cycles: total,
        serial_cycles: serial,
        flops: stats.flops(),
        partials: stats.partials,
        multiplies,
        redundant_multiplies: 0,
        explicit_zeros: stats.explicit_zeros,
        output_nnz: c.nnz() as u64,
        bytes_read: rd.bytes(),
        bytes_written: wr.bytes(),
        peak_read: rd.peak_bytes_per_cycle(),
        peak_write: wr.peak_bytes_per_cycle(),
        pipeline_idle_fraction,
        group_cycles,
        group_elements,
    };
    let report = build_report(config, totals, tally.finish(total))?;
    Ok(SpgemmOutcome { report, c, stats })
}

/// One element at a time with every stage cost and memory access exposed:
/// each `A` row and each referenced `B` row is fetched on its own, with no
/// splitting, broadcast or overlap.
fn serial_cycles(
    schedule: &SpgemmSchedule,
    config: &SimConfig,
    results: &[reapkit_core::spgemm::RowResult],
) -> u64 {
    let c = config.costs;
    let (rb, wb) = (config.read_budget(), config.write_budget());
    let merged: HashMap<usize, usize> = results.iter().map(|r| (r.row, r.merged.len())).collect();
    let mut cycles = 0.0f64;
    for g in &schedule.groups {
        for a in &g.a_rows {
            let nnz = a.nnz();
            cycles += isolated_cycles(data_bundle_bytes(nnz) as u64, rb, c.mem_latency);
            cycles += (nnz as u64 * c.cam_load) as f64;
            let mut partials = 0u64;
            for b in &a.bundles {
                for &(k, _) in &b.elements {
                    let m = g.b_row(k as usize).map_or(0, |r| r.nnz());
                    if m > 0 {
                        cycles += isolated_cycles(data_bundle_bytes(m) as u64, rb, c.mem_latency);
                    }
                    cycles += c.cam_lookup as f64;
                    cycles += (m as u64 * (c.mul_latency + c.sort_insert)) as f64;
                    partials += m as u64;
                }
            }
            cycles += (partials * c.merge) as f64;
            let out = merged.get(&a.row).copied().unwrap_or(0);
            if out > 0 {
                cycles += isolated_cycles(data_bundle_bytes(out) as u64, wb, c.mem_latency);
            }
        }
    }
    cycles.ceil() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use reapkit_core::matrix::random_sparse;
    use reapkit_core::rir::build_spgemm_schedule;
    use reapkit_core::spgemm::spgemm_with_stats;

    fn run(a: &CsrMatrix, cfg: &SimConfig) -> SpgemmOutcome {
        let s = build_spgemm_schedule(a, a, cfg.pipelines, cfg.bundle_capacity).unwrap();
        simulate_spgemm(&s, cfg).unwrap()
    }

    #[test]
    fn merge_spill_cost() {
        let cfg = SimConfig::default();
        assert_eq!(merge_cycles(64, &cfg), 64);
        assert_eq!(merge_cycles(65, &cfg), 65 * 2);
        assert_eq!(merge_cycles(64 * 4, &cfg), 256 * 3);
    }

    #[test]
    fn row_bytes_split() {
        assert_eq!(row_bytes(0, 32), 0);
        assert_eq!(row_bytes(1, 32), 16);
        assert_eq!(row_bytes(33, 32), (8 * 32 + 8) + 16);
    }

    #[test]
    fn identity_matches_hand_model() {
        let n = 1000;
        let cfg = SimConfig { pipelines: 1, ..SimConfig::default() };
        let out = run(&CsrMatrix::identity(n), &cfg);
        assert_eq!(out.report.partials, n as u64);
        let c = cfg.costs;
        // one cycle each to load, look up and stream, then the multiplier
        // and sort latencies and one merge cycle per row
        let per_row = c.cam_load + c.cam_lookup + 1 + c.mul_latency + c.sort_insert + c.merge;
        let analytic = (n as u64 * per_row) as f64;
        let got = out.report.total_cycles as f64;
        assert!((got - analytic).abs() <= 0.1 * analytic, "{got} vs {analytic}");
    }

    #[test]
    fn product_and_counts_match_engine() {
        let a = random_sparse(120, 120, 0.05, 4).unwrap();
        for p in [1, 4, 32] {
            let cfg = SimConfig { pipelines: p, bundle_capacity: 4, ..SimConfig::default() };
            let out = run(&a, &cfg);
            let (c, s) = spgemm_with_stats(&a, &a, 4).unwrap();
            assert!(out.c.bitwise_eq(&c));
            assert_eq!(out.report.multiplies, s.partials);
            assert_eq!(out.report.stage("multiply").unwrap().busy_total(), s.partials);
            assert_eq!(out.report.flops, s.flops());
            for st in &out.report.stages {
                for i in 0..p {
                    assert_eq!(st.busy[i] + st.idle[i] + st.stalled[i], out.report.total_cycles);
                }
            }
            assert!(out.report.peak_read_bytes_per_cycle <= out.report.read_budget_bytes_per_cycle + 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let a = random_sparse(80, 80, 0.1, 5).unwrap();
        let cfg = SimConfig { pipelines: 8, ..SimConfig::default() };
        assert_eq!(run(&a, &cfg).report, run(&a, &cfg).report);
    }

    #[test]
    fn halving_bandwidth_never_helps() {
        let a = random_sparse(150, 150, 0.03, 6).unwrap();
        let mut prev = 0;
        for bw in [64.0, 32.0, 16.0, 8.0, 4.0, 2.0, 1.0, 0.5] {
            let cfg = SimConfig { pipelines: 8, read_bw_gbps: bw, write_bw_gbps: bw, ..SimConfig::default() };
            let t = run(&a, &cfg).report.total_cycles;
            assert!(t >= prev, "bw {bw}: {t} < {prev}");
            prev = t;
        }
    }

    #[test]
    fn rejects_mismatched_schedule() {
        let a = CsrMatrix::identity(4);
        let s = build_spgemm_schedule(&a, &a, 2, 32).unwrap();
        assert!(matches!(simulate_spgemm(&s, &SimConfig::default()), Err(SimError::ScheduleMismatch(_))));
        let s = build_spgemm_schedule(&a, &a, 32, 64).unwrap();
        assert!(simulate_spgemm(&s, &SimConfig::default()).is_err());
    }

    #[test]
    fn empty_matrix() {
        let a = CsrMatrix::zeros(5, 5);
        let out = run(&a, &SimConfig::default());
        assert_eq!(out.report.partials, 0);
        assert_eq!(out.c.nnz(), 0);
    }
}
