//! Metrics file: one comma-separated line per iteration under a single header.
//!
//! Reals use the shortest representation that parses back to the same `f64`,
//! so records round-trip exactly. Optional fields are left empty.
//! `batch_avg_is` lists `R'` for every stored batch, newest first, separated
//! by `;`.

use std::io::Write;

use crate::error::{Error, Result};

pub const METRICS_SCHEMA_VERSION: u32 = 1;

const COLUMNS: [&str; 17] = [
    "iteration",
    "global_step",
    "episodes",
    "mean_return_100",
    "mean_return_all",
    "step_size",
    "clip",
    "batch_drop",
    "stored_batches",
    "active_batches",
    "minibatch",
    "updates",
    "iteration_updates",
    "avg_is",
    "surrogate",
    "value_loss",
    "batch_avg_is",
];

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub global_step: u64,
    pub episodes: u64,
    pub mean_return_100: Option<f64>,
    pub mean_return_all: Option<f64>,
    pub step_size: f64,
    pub clip: f64,
    pub batch_drop: f64,
    pub stored_batches: usize,
    pub active_batches: usize,
    pub minibatch: usize,
    /// Cumulative update count.
    pub updates: u64,
    pub iteration_updates: u64,
    pub avg_is: f64,
    /// Mean surrogate over the iteration's updates.
    pub surrogate: f64,
    pub value_loss: f64,
    /// `R'_{i,l}` indexed by lag.
    pub batch_avg_is: Vec<f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl IterationRecord {
    pub fn header() -> String {
        COLUMNS.join(",")
    }

    pub fn to_csv_line(&self) -> String {
        let r_prime: Vec<String> = self.batch_avg_is.iter().map(|r| r.to_string()).collect();
        [
            self.iteration.to_string(),
            self.global_step.to_string(),
            self.episodes.to_string(),
            opt(self.mean_return_100),
            opt(self.mean_return_all),
            self.step_size.to_string(),
            self.clip.to_string(),
            self.batch_drop.to_string(),
            self.stored_batches.to_string(),
            self.active_batches.to_string(),
            self.minibatch.to_string(),
            self.updates.to_string(),
            self.iteration_updates.to_string(),
            self.avg_is.to_string(),
            self.surrogate.to_string(),
            self.value_loss.to_string(),
            r_prime.join(";"),
        ]
        .join(",")
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(Error::Record(format!(
                "expected {} fields, found {}",
                COLUMNS.len(),
                fields.len()
            )));
        }
        fn num<T: std::str::FromStr>(fields: &[&str], i: usize) -> Result<T> {
            fields[i]
                .parse()
                .map_err(|_| Error::Record(format!("bad {}: {:?}", COLUMNS[i], fields[i])))
        }
        let optional = |i: usize| -> Result<Option<f64>> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                num(&fields, i).map(Some)
            }
        };
        let r_prime = if fields[16].is_empty() {
            Vec::new()
        } else {
            fields[16]
                .split(';')
                .map(|x| {
                    x.parse()
                        .map_err(|_| Error::Record(format!("bad batch_avg_is entry {x:?}")))
                })
                .collect::<Result<_>>()?
        };
        Ok(Self {
            iteration: num(&fields, 0)?,
            global_step: num(&fields, 1)?,
            episodes: num(&fields, 2)?,
            mean_return_100: optional(3)?,
            mean_return_all: optional(4)?,
            step_size: num(&fields, 5)?,
            clip: num(&fields, 6)?,
            batch_drop: num(&fields, 7)?,
            stored_batches: num(&fields, 8)?,
            active_batches: num(&fields, 9)?,
            minibatch: num(&fields, 10)?,
            updates: num(&fields, 11)?,
            iteration_updates: num(&fields, 12)?,
            avg_is: num(&fields, 13)?,
            surrogate: num(&fields, 14)?,
            value_loss: num(&fields, 15)?,
            batch_avg_is: r_prime,
        })
    }

    /// Parses a whole metrics file, header included.
    pub fn parse_file(text: &str) -> Result<Vec<Self>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == Self::header() => {}
            other => return Err(Error::Record(format!("unexpected header {other:?}"))),
        }
        lines.map(Self::parse_csv_line).collect()
    }
}

/// Writes the header before the first record and flushes after each one.
pub struct MetricsWriter<W: Write> {
    sink: W,
    wrote_header: bool,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(sink: W) -> Self {
        Self {
            sink,
            wrote_header: false,
        }
    }

    pub fn emit(&mut self, record: &IterationRecord) -> Result<()> {
        if !self.wrote_header {
            writeln!(self.sink, "{}", IterationRecord::header())?;
            self.wrote_header = true;
        }
        writeln!(self.sink, "{}", record.to_csv_line())?;
        self.sink.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}
