//! Counting, de-duplicating evaluation cache around a black-box oracle.
//!
//! Evaluation takes `&mut self`, so a cache is used by one caller at a time;
//! share it across threads behind a `Mutex` to keep the "oracle called at
//! most once per distinct point" guarantee.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DVector;

use crate::{Error, NumericSettings, Result};

type Oracle<'a> = Box<dyn Fn(&DVector<f64>) -> std::result::Result<f64, String> + 'a>;

/// One request seen by the cache.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub point: DVector<f64>,
    pub value: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, Copy)]
struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Memoizing wrapper around a scalar function.
///
/// Two points coincide when `|x - y| <= tol * (1 + max(|x|, |y|))`. Lookups
/// go through an ordered index on the first coordinate, so only points in a
/// narrow slab are compared in full.
pub struct EvaluationCache<'a> {
    oracle: Oracle<'a>,
    tol: f64,
    points: Vec<DVector<f64>>,
    values: Vec<f64>,
    index: BTreeMap<Key, Vec<usize>>,
    total_requests: usize,
    trace: Option<Vec<TraceEntry>>,
}

impl<'a> EvaluationCache<'a> {
    pub fn new(f: impl Fn(&DVector<f64>) -> f64 + 'a) -> Self {
        Self::fallible(move |x| Ok(f(x)))
    }

    /// Oracle that may reject points outside its domain.
    pub fn fallible(f: impl Fn(&DVector<f64>) -> std::result::Result<f64, String> + 'a) -> Self {
        Self {
            oracle: Box::new(f),
            tol: NumericSettings::DEFAULT.dedup_tol,
            points: Vec::new(),
            values: Vec::new(),
            index: BTreeMap::new(),
            total_requests: 0,
            trace: None,
        }
    }

    pub fn with_settings(mut self, settings: &NumericSettings) -> Self {
        self.tol = settings.dedup_tol;
        self
    }

    /// Start recording every request.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn distinct_count(&self) -> usize {
        self.points.len()
    }

    pub fn total_requests(&self) -> usize {
        self.total_requests
    }

    /// Cached `(point, value)` pairs in first-seen order.
    pub fn entries(&self) -> impl Iterator<Item = (&DVector<f64>, f64)> {
        self.points.iter().zip(self.values.iter().copied())
    }

    fn lookup(&self, x: &DVector<f64>) -> Option<usize> {
        let scale = 1.0 + x.norm();
        let window = 2.0 * self.tol * scale;
        let first = x.get(0).copied().unwrap_or(0.0);
        self.index
            .range(Key(first - window)..=Key(first + window))
            .flat_map(|(_, ids)| ids.iter().copied())
            .find(|&id| {
                let y = &self.points[id];
                (x - y).norm() <= self.tol * (1.0 + x.norm().max(y.norm()))
            })
    }

    pub fn evaluate(&mut self, x: &DVector<f64>) -> Result<f64> {
        self.evaluate_indexed(x).map(|(_, v)| v)
    }

    /// Value at `x` together with the id of the distinct point it resolved to.
    pub fn evaluate_indexed(&mut self, x: &DVector<f64>) -> Result<(usize, f64)> {
        self.total_requests += 1;
        if let Some(id) = self.lookup(x) {
            let value = self.values[id];
            if let Some(trace) = self.trace.as_mut() {
                trace.push(TraceEntry {
                    point: x.clone(),
                    value,
                    hit: true,
                });
            }
            return Ok((id, value));
        }
        let tagged = |reason: String| Error::Oracle {
            point: x.iter().copied().collect(),
            reason,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(tagged("non-finite point".into()));
        }
        let value = (self.oracle)(x).map_err(tagged)?;
        if !value.is_finite() {
            return Err(tagged(format!("non-finite value {value}")));
        }
        let id = self.points.len();
        self.points.push(x.clone());
        self.values.push(value);
        self.index
            .entry(Key(x.get(0).copied().unwrap_or(0.0)))
            .or_default()
            .push(id);
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEntry {
                point: x.clone(),
                value,
                hit: false,
            });
        }
        Ok((id, value))
    }

    /// Trace as CSV with header `x1,...,xn,value,status`; status is `hit` or `miss`.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let dim = self.trace().first().map_or(0, |e| e.point.len());
        let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        header.push("value".into());
        header.push("status".into());
        w.write_record(&header)?;
        for e in self.trace() {
            let mut row: Vec<String> = e.point.iter().map(|v| v.to_string()).collect();
            row.push(e.value.to_string());
            row.push(if e.hit { "hit" } else { "miss" }.into());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl std::fmt::Debug for EvaluationCache<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvaluationCache")
            .field("distinct", &self.points.len())
            .field("requests", &self.total_requests)
            .finish()
    }
}
