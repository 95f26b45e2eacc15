//! Line-oriented trace files.
//!
//! CSV columns, one row per frame:
//!
//! | column | meaning |
//! |---|---|
//! | `frame_index` | frame number `t`, from 0 |
//! | `true_backlog` | devices transmitting in the frame |
//! | `idle`, `success`, `collision` | observed RAO counts |
//! | `carryover` | devices retransmitting in the next frame |
//! | `dropped` | devices that exhausted their attempt budget |
//! | `arrivals` | new packets that joined the frame |
//!
//! The JSON-lines form carries the same fields, one object per line.
//! Prediction records use the columns `frame_index, true_backlog, predicted,
//! abs_error`, where `frame_index` is the predicted frame.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::predictor::PredictionRecord;
use crate::sim::{FrameObservation, FrameTrace};

/// Flat form of [`FrameTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub frame_index: u64,
    pub true_backlog: u32,
    pub idle: u32,
    pub success: u32,
    pub collision: u32,
    pub carryover: u32,
    pub dropped: u32,
    pub arrivals: u32,
}

impl From<&FrameTrace> for TraceRow {
    fn from(t: &FrameTrace) -> Self {
        Self {
            frame_index: t.frame_index,
            true_backlog: t.true_backlog,
            idle: t.observation.idle_count,
            success: t.observation.success_count,
            collision: t.observation.collision_count,
            carryover: t.carryover_count,
            dropped: t.dropped_count,
            arrivals: t.arrivals,
        }
    }
}

impl From<TraceRow> for FrameTrace {
    fn from(r: TraceRow) -> Self {
        Self {
            frame_index: r.frame_index,
            true_backlog: r.true_backlog,
            observation: FrameObservation::new(r.idle, r.success, r.collision),
            carryover_count: r.carryover,
            dropped_count: r.dropped,
            arrivals: r.arrivals,
        }
    }
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[FrameTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in trace {
        w.serialize(TraceRow::from(t))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<Vec<FrameTrace>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<TraceRow>().map(|row| Ok(row?.into())).collect()
}

pub fn write_trace_jsonl<W: Write>(mut out: W, trace: &[FrameTrace]) -> Result<()> {
    for t in trace {
        serde_json::to_writer(&mut out, &TraceRow::from(t))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace_jsonl<R: BufRead>(input: R) -> Result<Vec<FrameTrace>> {
    let mut v = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            v.push(serde_json::from_str::<TraceRow>(&line)?.into());
        }
    }
    Ok(v)
}

pub fn write_records_csv<W: Write>(out: W, records: &[PredictionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<PredictionRecord>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_episode, SimConfig};
    use crate::traffic::TrafficConfig;

    #[test]
    fn csv_and_jsonl_round_trip() {
        let trace = run_episode(&SimConfig::default(), &TrafficConfig::default(), 50).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frame_index,true_backlog,idle,success,collision,carryover,dropped,arrivals\n"));
        assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), trace);
        let mut buf = Vec::new();
        write_trace_jsonl(&mut buf, &trace).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 50);
        assert_eq!(read_trace_jsonl(buf.as_slice()).unwrap(), trace);
    }

    #[test]
    fn records_round_trip() {
        let recs = vec![PredictionRecord { frame_index: 1, true_backlog: 4, predicted: 6, abs_error: 2 }];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &recs).unwrap();
        assert!(buf.starts_with(b"frame_index,true_backlog,predicted,abs_error\n"));
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), recs);
    }
}
