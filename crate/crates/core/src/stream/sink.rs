use std::io::{self, BufWriter, Write};

use crate::detector::AlertRecord;

/// Destination for alert records.
pub trait AlertSink {
    fn emit(&mut self, alert: &AlertRecord) -> io::Result<()>;

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Writes one JSON object per line.
pub struct JsonLinesSink<W: Write> {
    out: BufWriter<W>,
}

impl<W: Write> JsonLinesSink<W> {
    pub fn new(out: W) -> Self {
        JsonLinesSink {
            out: BufWriter::new(out),
        }
    }

    pub fn into_inner(self) -> io::Result<W> {
        self.out.into_inner().map_err(|e| e.into_error())
    }
}

impl<W: Write> AlertSink for JsonLinesSink<W> {
    fn emit(&mut self, alert: &AlertRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, alert)?;
        self.out.write_all(b"\n")
    }

    fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

impl AlertSink for Vec<AlertRecord> {
    fn emit(&mut self, alert: &AlertRecord) -> io::Result<()> {
        self.push(alert.clone());
        Ok(())
    }
}

/// Discards alerts.
pub struct NullSink;

impl AlertSink for NullSink {
    fn emit(&mut self, _alert: &AlertRecord) -> io::Result<()> {
        Ok(())
    }
}
