use crate::error::{Result, SimError};
use crate::report::SimReport;

/// Total time when host preparation of group `i + 1` overlaps accelerator
/// work on group `i`; only the first preparation is exposed.
pub fn model_overlap(prep: &[f64], fpga: &[f64]) -> Result<f64> {
    if prep.is_empty() || fpga.is_empty() {
        return Err(SimError::EmptyInput("overlap input"));
    }
    if prep.len() != fpga.len() {
        return Err(SimError::InvalidConfig(format!(
            "{} preparation times for {} accelerator times",
            prep.len(),
            fpga.len()
        )));
    }
    let mut total = prep[0];
    for i in 1..prep.len() {
        total += prep[i].max(fpga[i - 1]);
    }
    Ok(total + fpga[fpga.len() - 1])
}

/// `(cpu %, fpga %)` of the non-overlapped accounting.
pub fn prep_compute_split(report: &SimReport) -> Result<(f64, f64)> {
    split(report.cpu_prep_seconds, report.fpga_seconds)
}

pub(crate) fn split(prep: f64, fpga: f64) -> Result<(f64, f64)> {
    let total = prep + fpga;
    if !(total > 0.0) {
        return Err(SimError::ZeroTotal);
    }
    let cpu = 100.0 * prep / total;
    Ok((cpu, 100.0 - cpu))
}
