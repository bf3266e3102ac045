//! Monte-Carlo experiment drivers.
//!
//! Every driver derives per-trial random streams from a base seed and the
//! trial coordinates, evaluates trials in parallel, and aggregates results in
//! index order. Outputs are therefore bit-identical for any thread count.

mod comparison;
mod gamma;
mod smearing;

pub use comparison::{
    comparison_maps, run_mitigation_comparison, ComparisonConfig, ComparisonMaps, ComparisonRecord,
    ComparisonReport, ComparisonSummary,
};
pub use gamma::{run_gamma_study, GammaCell, GammaStudyConfig, StudyTable};
pub use smearing::{run_smearing_study, SmearingRow, SmearingStudyConfig, SmearingTable};

/// Formats a float for CSV output (shortest round-trip representation).
pub(crate) fn fmt(v: f64) -> String {
    v.to_string()
}

/// Median of a sample; NaN for an empty slice.
pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    crate::subspace::median_noise_power(values)
}

/// Population mean and variance.
pub(crate) fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub(crate) fn write_rows<W: std::io::Write>(
    out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()
}
