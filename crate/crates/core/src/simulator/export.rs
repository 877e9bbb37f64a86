//! CSV export. Floats use Rust's shortest round-trip formatting.

use std::io::Write;

use crate::error::Result;

use super::SimulationTrace;

/// Header `t,x1..xd,uc1..ucm,uuc1..uucp`, one row per sample.
pub fn write_trace_csv<W: Write>(trace: &SimulationTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (d, m, p) = match (trace.states.first(), trace.uc_values.first(), trace.uuc_values.first()) {
        (Some(x), Some(uc), Some(uuc)) => (x.dim(), uc.dim(), uuc.dim()),
        _ => {
            w.write_record(["t"])?;
            w.flush()?;
            return Ok(());
        }
    };
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=d).map(|i| format!("x{i}")))
        .chain((1..=m).map(|i| format!("uc{i}")))
        .chain((1..=p).map(|i| format!("uuc{i}")))
        .collect();
    w.write_record(&header)?;
    for k in 0..trace.times.len() {
        let row: Vec<String> = std::iter::once(trace.times[k])
            .chain(trace.states[k].iter().copied())
            .chain(trace.uc_values[k].iter().copied())
            .chain(trace.uuc_values[k].iter().copied())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Header `n,t_n,err,bound`.
pub fn write_nodes_csv<W: Write>(trace: &SimulationTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "t_n", "err", "bound"])?;
    for node in &trace.node_errors {
        w.write_record([
            node.n.to_string(),
            node.t_n.to_string(),
            node.err.to_string(),
            node.bound.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
