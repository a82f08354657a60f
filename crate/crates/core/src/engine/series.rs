use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub name: String,
    pub unit: String,
}

/// Sampled channels on a common time axis. Samples are uniform at the output
/// step, except that each event instant appears twice: the state just
/// before the event, then just after.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    channels: Vec<Channel>,
    index: BTreeMap<String, usize>,
    t: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(channels: Vec<Channel>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, c) in channels.iter().enumerate() {
            if index.insert(c.name.clone(), k).is_some() {
                return Err(Error::config(format!("duplicate channel name '{}'", c.name)));
            }
        }
        let columns = channels.iter().map(|_| Vec::new()).collect();
        Ok(TimeSeries { channels, index, t: Vec::new(), columns })
    }

    pub fn push(&mut self, t: f64, row: &[f64]) {
        assert_eq!(row.len(), self.channels.len(), "row width");
        self.t.push(t);
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn time(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.index.get(name).map(|&k| self.columns[k].as_slice())
    }

    pub fn column_at(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.columns.iter().map(move |c| c[i])
    }

    /// Values of `name` at samples whose time lies in `[t0, t1]`.
    pub fn window(&self, name: &str, t0: f64, t1: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let col = self.column(name)?;
        Some(
            self.t
                .iter()
                .zip(col)
                .filter(|(t, _)| **t >= t0 - 1e-12 && **t <= t1 + 1e-12)
                .map(|(t, v)| (*t, *v))
                .unzip(),
        )
    }
}
