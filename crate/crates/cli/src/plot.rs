//! CSV plot data with `#` header comments.

use std::path::Path;

use shrinklab_core::curves::CurveShrinker;
use shrinklab_core::linalg::EigenResult;
use shrinklab_core::Result;

use crate::report::write_atomic;

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn to_csv(comments: &[String], header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut buf = Vec::new();
    for c in comments {
        buf.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// Columns `k, mu, multiplicity`; the multiplicity is that of the cluster containing `k`.
pub fn spectrum_csv(subject: &str, spec: &EigenResult) -> Vec<u8> {
    let rows = (0..spec.values.len()).map(|k| {
        let mult = spec.cluster_of(k).map_or(1, |c| c.multiplicity);
        vec![k.to_string(), fmt(spec.values[k]), mult.to_string()]
    });
    to_csv(
        &[
            format!("drift Laplacian spectrum of {subject}"),
            "k: index; mu: drift Laplacian eigenvalue (L u + mu u = 0); multiplicity: size of the cluster holding k".into(),
        ],
        &["k", "mu", "multiplicity"],
        rows,
    )
}

/// Columns `s, x, y, theta, k`.
pub fn curve_csv(curve: &CurveShrinker) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    Ok(buf)
}

#[derive(Debug, Clone)]
pub struct RefinementRow {
    pub resolution: usize,
    /// Longest mesh edge.
    pub h: f64,
    pub mu1: f64,
    pub error: f64,
    /// `log(e_prev / e) / log(h_prev / h)`; absent on the first row.
    pub slope: Option<f64>,
}

/// Columns `h, mu1, error, slope`.
pub fn refinement_csv(subject: &str, exact: f64, rows: &[RefinementRow]) -> Vec<u8> {
    let body = rows.iter().map(|r| {
        vec![
            fmt(r.h),
            fmt(r.mu1),
            fmt(r.error),
            r.slope.map_or(String::new(), fmt),
        ]
    });
    to_csv(
        &[
            format!("refinement study of mu_1 on {subject}, exact value {exact}"),
            format!(
                "resolutions {}",
                rows.iter().map(|r| r.resolution.to_string()).collect::<Vec<_>>().join(" ")
            ),
            "h: longest edge; mu1: first nonzero eigenvalue; error: |mu1 - exact|; slope: observed order".into(),
        ],
        &["h", "mu1", "error", "slope"],
        body,
    )
}

pub fn write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    write_atomic(path, bytes)
}
