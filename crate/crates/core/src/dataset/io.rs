use std::fmt::Write as _;

use super::{Dataset, DatasetError, DatasetHeader, Row, SCHEMA};

fn param_width(h: &DatasetHeader) -> usize {
    h.topologies.iter().map(|t| t.params.len()).max().unwrap_or(0)
}

/// Line 1: JSON header. Line 2: column names. Then one row per line;
/// `params` columns are padded with `NaN` to the widest topology.
pub fn write_dataset(ds: &Dataset) -> String {
    let h = &ds.header;
    let width = param_width(h);
    let mut out = serde_json::to_string(h).expect("header serializes");
    out.push('\n');
    out.push_str("topology");
    for name in h.feature_names.iter().chain(&h.target_names) {
        out.push(',');
        out.push_str(name);
    }
    for k in 0..width {
        let _ = write!(out, ",p{k}");
    }
    out.push('\n');
    for r in &ds.rows {
        let _ = write!(out, "{}", r.topology);
        for v in r.features.iter().chain(&r.targets) {
            let _ = write!(out, ",{v:e}");
        }
        for k in 0..width {
            let _ = write!(out, ",{:e}", r.params.get(k).copied().unwrap_or(f64::NAN));
        }
        out.push('\n');
    }
    out
}

pub fn read_dataset(text: &str) -> Result<Dataset, DatasetError> {
    let bad = |line: usize, reason: String| DatasetError::Format { line, reason };
    let mut lines = text.lines();
    let header: DatasetHeader = serde_json::from_str(lines.next().ok_or_else(|| bad(1, "empty file".into()))?)
        .map_err(|e| bad(1, e.to_string()))?;
    if header.schema != SCHEMA {
        return Err(bad(1, format!("unsupported schema `{}`", header.schema)));
    }
    if header.feature_names.len() != header.feature_scales.len() {
        return Err(bad(1, "feature names and scales differ in length".into()));
    }
    let width = param_width(&header);
    let (nf, nt) = (header.feature_names.len(), header.target_names.len());
    let columns = lines.next().ok_or_else(|| bad(2, "missing column line".into()))?;
    if columns.split(',').count() != 1 + nf + nt + width {
        return Err(bad(2, "column count does not match header".into()));
    }

    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let no = i + 3;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 1 + nf + nt + width {
            return Err(bad(no, format!("expected {} cells, found {}", 1 + nf + nt + width, cells.len())));
        }
        let topology: usize = cells[0].parse().map_err(|_| bad(no, format!("bad topology index `{}`", cells[0])))?;
        let topo =
            header.topologies.get(topology).ok_or_else(|| bad(no, format!("topology {topology} out of range")))?;
        let nums = cells[1..]
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| bad(no, format!("bad number `{c}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let n_params = if width == 0 { 0 } else { topo.params.len() };
        rows.push(Row {
            topology,
            features: nums[..nf].to_vec(),
            targets: nums[nf..nf + nt].to_vec(),
            params: nums[nf + nt..nf + nt + n_params].to_vec(),
        });
    }
    Ok(Dataset { header, rows })
}
