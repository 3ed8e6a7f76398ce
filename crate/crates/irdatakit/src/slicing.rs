//! Range selection over document collections, resolved to seeks.
//!
//! Precomputing document representations is embarrassingly parallel, so
//! workers are assigned ranges of the collection. A [`DocsView`] describes
//! such a range: slicing and partitioning are pure arithmetic over
//! `(start, stop, step)` bounds, and iteration reads only the selected
//! positions from a positionally-addressable source — skipped documents
//! are never decoded.
//!
//! Bounds mostly follow Python slicing: negative indices count from the
//! end, omitted bounds span the collection, and a positive step selects
//! every step-th document. Fractional bounds extend the notation:
//! `[:1/3]` is the first third of the collection, computed exactly from
//! the rational (no float rounding). Negative steps are not supported —
//! reverse iteration would defeat sequential-read layouts.

use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::record::Record;
use crate::Error;

#[derive(Debug, Error)]
pub enum SliceError {
    #[error("invalid slice: {0}")]
    InvalidSlice(String),
}

fn invalid(msg: impl Into<String>) -> SliceError {
    SliceError::InvalidSlice(msg.into())
}

/// One slice bound: a signed index or an exact fraction of the collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Index(i64),
    /// `numerator / denominator`, restricted to [0, 1].
    Fraction(u64, u64),
}

impl Bound {
    fn validate(&self) -> Result<(), SliceError> {
        match *self {
            Bound::Index(_) => Ok(()),
            Bound::Fraction(num, den) => {
                if den == 0 {
                    Err(invalid("fraction denominator is zero"))
                } else if num > den {
                    Err(invalid(format!("fraction {num}/{den} is outside [0, 1]")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Absolute position in `[0, n]`: negative indices add `n` then clamp,
    /// fractions map to `floor(f·n)`.
    fn resolve(&self, n: u64) -> u64 {
        match *self {
            Bound::Index(i) => {
                let pos = if i < 0 { i as i128 + n as i128 } else { i as i128 };
                pos.clamp(0, n as i128) as u64
            }
            Bound::Fraction(num, den) => ((num as u128 * n as u128) / den as u128) as u64,
        }
    }
}

/// A parsed slice expression `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceExpr {
    pub start: Option<Bound>,
    pub stop: Option<Bound>,
    pub step: u64,
}

impl SliceExpr {
    pub fn new(start: Option<Bound>, stop: Option<Bound>, step: u64) -> Result<SliceExpr, SliceError> {
        if step < 1 {
            return Err(invalid("step must be at least 1"));
        }
        if let Some(b) = start {
            b.validate()?;
        }
        if let Some(b) = stop {
            b.validate()?;
        }
        Ok(SliceExpr { start, stop, step })
    }

    /// The full range `[:]`.
    pub fn all() -> SliceExpr {
        SliceExpr {
            start: None,
            stop: None,
            step: 1,
        }
    }
}

impl FromStr for SliceExpr {
    type Err = SliceError;

    /// Parses `start:stop[:step]`; each part may be empty, an integer
    /// (negatives allowed), or a fraction like `1/3`.
    fn from_str(s: &str) -> Result<SliceExpr, SliceError> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(invalid(format!("`{s}` is not of the form start:stop[:step]")));
        }
        let bound = |part: &str| -> Result<Option<Bound>, SliceError> {
            if part.is_empty() {
                return Ok(None);
            }
            if let Some((num, den)) = part.split_once('/') {
                let num = num
                    .parse::<u64>()
                    .map_err(|_| invalid(format!("bad fraction numerator `{num}`")))?;
                let den = den
                    .parse::<u64>()
                    .map_err(|_| invalid(format!("bad fraction denominator `{den}`")))?;
                return Ok(Some(Bound::Fraction(num, den)));
            }
            part.parse::<i64>()
                .map(|i| Some(Bound::Index(i)))
                .map_err(|_| invalid(format!("bad slice bound `{part}`")))
        };
        let start = bound(parts[0])?;
        let stop = bound(parts[1])?;
        let step = match parts.get(2) {
            None | Some(&"") => 1,
            Some(raw) => raw
                .parse::<i64>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| invalid(format!("step `{raw}` must be a positive integer")))? as u64,
        };
        SliceExpr::new(start, stop, step)
    }
}

/// Resolves a slice expression against a collection of `n` items into
/// absolute `(start, stop, step)` with `start ≤ stop ≤ n`.
pub fn resolve_bounds(expr: &SliceExpr, n: u64) -> Result<(u64, u64, u64), SliceError> {
    if expr.step < 1 {
        return Err(invalid("step must be at least 1"));
    }
    if let Some(b) = expr.start {
        b.validate()?;
    }
    if let Some(b) = expr.stop {
        b.validate()?;
    }
    let start = expr.start.map_or(0, |b| b.resolve(n));
    let stop = expr.stop.map_or(n, |b| b.resolve(n));
    Ok((start, stop.max(start), expr.step))
}

/// Positionally-addressable document source. Position `i` is the i-th
/// record of the collection's canonical iteration order.
pub trait SeekableDocs: Send + Sync {
    fn len(&self) -> Result<u64, Error>;
    fn read_position(&self, position: u64) -> Result<Record, Error>;
}

/// An in-memory source, mainly for small collections and tests.
pub struct MaterializedDocs(pub Vec<Record>);

impl SeekableDocs for MaterializedDocs {
    fn len(&self) -> Result<u64, Error> {
        Ok(self.0.len() as u64)
    }

    fn read_position(&self, position: u64) -> Result<Record, Error> {
        Ok(self.0[position as usize].clone())
    }
}

/// A bounded, steppable view over a seekable source. Views are cheap
/// values until iterated; iteration consumes the view, so a partially
/// consumed view can never be sliced again.
pub struct DocsView {
    source: Arc<dyn SeekableDocs>,
    start: u64,
    stop: u64,
    step: u64,
}

impl DocsView {
    /// The whole collection, in canonical order.
    pub fn over(source: Arc<dyn SeekableDocs>) -> Result<DocsView, Error> {
        let n = source.len()?;
        Ok(DocsView {
            source,
            start: 0,
            stop: n,
            step: 1,
        })
    }

    /// Number of positions this view selects.
    pub fn len(&self) -> u64 {
        if self.stop <= self.start {
            0
        } else {
            (self.stop - self.start).div_ceil(self.step)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Resolved absolute bounds `(start, stop, step)`.
    pub fn bounds(&self) -> (u64, u64, u64) {
        (self.start, self.stop, self.step)
    }

    /// Slices relative to this view, composing bounds arithmetically.
    pub fn slice(&self, expr: &SliceExpr) -> Result<DocsView, SliceError> {
        let (rel_start, rel_stop, rel_step) = resolve_bounds(expr, self.len())?;
        let start = self.start + rel_start.saturating_mul(self.step);
        let stop = self
            .start
            .saturating_add(rel_stop.saturating_mul(self.step))
            .min(self.stop);
        Ok(DocsView {
            source: self.source.clone(),
            start: start.min(stop),
            stop,
            step: self.step.saturating_mul(rel_step),
        })
    }

    /// Contiguous near-equal share for one of `workers` workers: worker `i`
    /// gets positions `[⌊i·n/w⌋, ⌊(i+1)·n/w⌋)` of this view. The shares are
    /// pairwise disjoint and jointly cover the view.
    pub fn partition(&self, workers: u64, worker_index: u64) -> Result<DocsView, SliceError> {
        if workers < 1 {
            return Err(invalid("worker count must be at least 1"));
        }
        if worker_index >= workers {
            return Err(invalid(format!(
                "worker index {worker_index} out of range for {workers} workers"
            )));
        }
        let n = self.len() as u128;
        let lo = (worker_index as u128 * n / workers as u128) as u64;
        let hi = ((worker_index as u128 + 1) * n / workers as u128) as u64;
        let start = self.start + lo.saturating_mul(self.step);
        let stop = self
            .start
            .saturating_add(hi.saturating_mul(self.step))
            .min(self.stop);
        Ok(DocsView {
            source: self.source.clone(),
            start: start.min(stop),
            stop,
            step: self.step,
        })
    }
}

impl IntoIterator for DocsView {
    type Item = Result<Record, Error>;
    type IntoIter = DocsViewIter;

    fn into_iter(self) -> DocsViewIter {
        DocsViewIter {
            source: self.source,
            next: self.start,
            stop: self.stop,
            step: self.step,
        }
    }
}

pub struct DocsViewIter {
    source: Arc<dyn SeekableDocs>,
    next: u64,
    stop: u64,
    step: u64,
}

impl Iterator for DocsViewIter {
    type Item = Result<Record, Error>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.stop {
            return None;
        }
        let record = self.source.read_position(self.next);
        self.next = self.next.saturating_add(self.step);
        Some(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{Schema, Value};

    fn corpus(n: usize) -> Arc<MaterializedDocs> {
        let schema = Arc::new(Schema::generic_docs());
        Arc::new(MaterializedDocs(
            (0..n)
                .map(|i| {
                    Record::new(
                        schema.clone(),
                        vec![Value::Id(format!("d{i}")), Value::Text(format!("text {i}"))],
                    )
                    .unwrap()
                })
                .collect(),
        ))
    }

    fn ids(view: DocsView) -> Vec<String> {
        view.into_iter()
            .map(|r| r.unwrap().first_id().unwrap().to_string())
            .collect()
    }

    fn expr(s: &str) -> SliceExpr {
        s.parse().unwrap()
    }

    #[test]
    fn resolve_examples() {
        assert_eq!(resolve_bounds(&expr("3::5"), 12).unwrap(), (3, 12, 5));
        assert_eq!(resolve_bounds(&SliceExpr::all(), 7).unwrap(), (0, 7, 1));
        assert_eq!(resolve_bounds(&expr(":1/3"), 10).unwrap(), (0, 3, 1));
        assert_eq!(resolve_bounds(&expr("-10:"), 7).unwrap(), (0, 7, 1));
        assert_eq!(resolve_bounds(&expr("5:2"), 10).unwrap(), (5, 5, 1));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!("".parse::<SliceExpr>().is_err());
        assert!("5".parse::<SliceExpr>().is_err());
        assert!("1:2:0".parse::<SliceExpr>().is_err());
        assert!("1:2:-1".parse::<SliceExpr>().is_err());
        assert!("2/1:".parse::<SliceExpr>().is_err());
        assert!("1/0:".parse::<SliceExpr>().is_err());
        assert!("a:b".parse::<SliceExpr>().is_err());
    }

    #[test]
    fn step_view_selects_every_fifth() {
        let view = DocsView::over(corpus(12)).unwrap();
        let sliced = view.slice(&expr("3::5")).unwrap();
        assert_eq!(ids(sliced), ["d3", "d8"]);
    }

    #[test]
    fn range_matches_literals() {
        let view = DocsView::over(corpus(1000)).unwrap();
        assert_eq!(ids(view.slice(&expr(":10")).unwrap()).len(), 10);
        let last10 = ids(view.slice(&expr("-10:")).unwrap());
        assert_eq!(last10.first().map(String::as_str), Some("d990"));
        let mid = ids(view.slice(&expr("100:110")).unwrap());
        assert_eq!(mid.first().map(String::as_str), Some("d100"));
        assert_eq!(mid.len(), 10);
        let third = view.slice(&expr(":1/3")).unwrap();
        assert_eq!(third.len(), 333);
    }

    #[test]
    fn composition_law() {
        let n = 50;
        let view = DocsView::over(corpus(n)).unwrap();
        let a = view.slice(&expr(":40")).unwrap().slice(&expr("10:")).unwrap();
        let b = DocsView::over(corpus(n)).unwrap().slice(&expr("10:40")).unwrap();
        assert_eq!(ids(a), ids(b));
    }

    #[test]
    fn double_slice_matches_materialized_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let n = 1000usize;
        let source = corpus(n);
        let all: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        let rand_bound = |rng: &mut rand_chacha::ChaCha8Rng| -> Option<Bound> {
            match rng.gen_range(0..4) {
                0 => None,
                1 => Some(Bound::Index(rng.gen_range(-1200..1200))),
                2 => {
                    let den = rng.gen_range(1..20);
                    Some(Bound::Fraction(rng.gen_range(0..=den), den))
                }
                _ => Some(Bound::Index(rng.gen_range(0..1000))),
            }
        };
        for _ in 0..200 {
            let e1 = SliceExpr::new(rand_bound(&mut rng), rand_bound(&mut rng), rng.gen_range(1..7))
                .unwrap();
            let e2 = SliceExpr::new(rand_bound(&mut rng), rand_bound(&mut rng), rng.gen_range(1..7))
                .unwrap();
            let got = ids(DocsView::over(source.clone())
                .unwrap()
                .slice(&e1)
                .unwrap()
                .slice(&e2)
                .unwrap());

            // Oracle: materialize, then apply index arithmetic twice.
            let apply = |items: &[String], e: &SliceExpr| -> Vec<String> {
                let (s, t, p) = resolve_bounds(e, items.len() as u64).unwrap();
                let mut out = Vec::new();
                let mut i = s;
                while i < t {
                    out.push(items[i as usize].clone());
                    i += p;
                }
                out
            };
            let expect = apply(&apply(&all, &e1), &e2);
            assert_eq!(got, expect, "exprs {e1:?} then {e2:?}");
        }
    }

    #[test]
    fn partition_sizes_and_coverage() {
        let view = DocsView::over(corpus(10)).unwrap();
        let sizes: Vec<u64> = (0..3)
            .map(|i| view.partition(3, i).unwrap().len())
            .collect();
        assert_eq!(sizes, [3, 3, 4]);

        let identity = view.partition(1, 0).unwrap();
        assert_eq!(identity.len(), 10);
        assert!(view.partition(3, 3).is_err());
    }

    #[test]
    fn partitions_cover_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let n = rng.gen_range(0..2000);
            let workers = rng.gen_range(1..17);
            let source = corpus(n);
            let view = DocsView::over(source.clone()).unwrap();
            let mut joined = Vec::new();
            for i in 0..workers {
                joined.extend(ids(view.partition(workers, i).unwrap()));
            }
            let full: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
            assert_eq!(joined, full, "n={n} workers={workers}");
        }
    }

    #[test]
    fn fraction_agrees_with_integer_on_even_n() {
        let view = DocsView::over(corpus(100)).unwrap();
        assert_eq!(
            ids(view.slice(&expr(":1/2")).unwrap()),
            ids(view.slice(&expr(":50")).unwrap())
        );
    }
}
