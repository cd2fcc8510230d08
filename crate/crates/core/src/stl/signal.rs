use std::io;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite discrete-time multi-channel signal. Every channel has the same
/// number of samples and there is at least one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    channels: IndexMap<String, Vec<f64>>,
    len: usize,
}

impl Signal {
    pub fn new<I, S>(channels: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut map = IndexMap::new();
        let mut len = None;
        for (name, values) in channels {
            let name = name.into();
            match len {
                None => len = Some(values.len()),
                Some(n) if n != values.len() => {
                    return Err(Error::Signal(format!(
                        "channel '{name}' has {} samples, expected {n}",
                        values.len()
                    )))
                }
                _ => {}
            }
            if map.insert(name.clone(), values).is_some() {
                return Err(Error::Signal(format!("duplicate channel '{name}'")));
            }
        }
        match len {
            Some(len) if len > 0 => Ok(Self { channels: map, len }),
            Some(_) => Err(Error::Signal("signal has no samples".into())),
            None => Err(Error::Signal("signal has no channels".into())),
        }
    }

    /// Single-channel signal.
    pub fn single(name: &str, values: Vec<f64>) -> Result<Self> {
        Self::new([(name, values)])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false for a constructed signal; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }

    pub fn channel_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        self.channels.get_mut(name).map(Vec::as_mut_slice)
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for (col, field) in record.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| {
                    Error::Signal(format!("row {}: '{field}' is not a number", row + 1))
                })?;
                columns[col].push(value);
            }
        }
        Self::new(names.into_iter().zip(columns))
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.channels.keys())?;
        for t in 0..self.len {
            wtr.write_record(self.channels.values().map(|v| v[t].to_string()))?;
        }
        wtr.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(Signal::new([("a", vec![1.0, 2.0]), ("b", vec![1.0])]).is_err());
        assert!(Signal::single("a", vec![]).is_err());
        assert!(Signal::new(Vec::<(String, Vec<f64>)>::new()).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_order() {
        let s = Signal::new([("y", vec![0.25, -1.5]), ("x", vec![3.0, 1e-9])]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("y,x\n"));
        let back = Signal::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_rejects_non_numeric() {
        let err = Signal::read_csv("x\n0.5\nabc\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }
}
