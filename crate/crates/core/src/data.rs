//! Price ingestion, return aggregation and descriptive statistics.

use std::io::Read;

use chrono::{DateTime, FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Returns with timestamps and a day label per observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub timestamps: Vec<DateTime<FixedOffset>>,
    pub returns: Vec<f64>,
    /// Day index of each return; nondecreasing.
    pub day: Vec<usize>,
    /// Free-form frequency label, e.g. `"15min"`.
    pub frequency: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Number of returns in each day, in order.
    pub fn day_counts(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for (i, d) in self.day.iter().enumerate() {
            if i > 0 && *d == self.day[i - 1] {
                *out.last_mut().expect("nonempty") += 1;
            } else {
                out.push(1);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Multiplier applied to log-returns.
    pub scale: f64,
    /// Start times of trading days. When absent, days follow the calendar date of
    /// each timestamp in its own offset.
    pub day_starts: Option<Vec<DateTime<FixedOffset>>>,
    pub frequency: String,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            scale: 100.0,
            day_starts: None,
            frequency: String::new(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    timestamp: String,
    price: f64,
}

/// Reads `timestamp,price` CSV (RFC 3339 timestamps) and returns
/// `scale * ln(P_t / P_{t-1})`, each stamped with the later time.
pub fn ingest_prices<R: Read>(reader: R, cfg: &IngestConfig) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "timestamp" || &headers[1] != "price" {
        return Err(Error::Parse {
            line: 1,
            msg: "expected header `timestamp,price`".into(),
        });
    }
    let mut times = Vec::new();
    let mut prices = Vec::new();
    for (i, rec) in rdr.deserialize::<PriceRow>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let ts = DateTime::parse_from_rfc3339(&row.timestamp).map_err(|e| Error::Parse {
            line,
            msg: format!("timestamp `{}`: {e}", row.timestamp),
        })?;
        if !(row.price > 0.0) || !row.price.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("nonpositive price {}", row.price),
            });
        }
        if let Some(prev) = times.last() {
            if ts <= *prev {
                return Err(Error::Parse {
                    line,
                    msg: "timestamps must be strictly increasing".into(),
                });
            }
        }
        times.push(ts);
        prices.push(row.price);
    }
    if prices.len() < 2 {
        return Err(Error::InsufficientData("need at least two prices".into()));
    }
    let returns: Vec<f64> = prices.windows(2).map(|w| cfg.scale * (w[1] / w[0]).ln()).collect();
    let timestamps = times[1..].to_vec();
    let day = assign_days(&timestamps, cfg.day_starts.as_deref());
    Ok(Dataset {
        timestamps,
        returns,
        day,
        frequency: cfg.frequency.clone(),
    })
}

fn assign_days(times: &[DateTime<FixedOffset>], starts: Option<&[DateTime<FixedOffset>]>) -> Vec<usize> {
    match starts {
        Some(b) => times.iter().map(|t| b.partition_point(|s| s <= t)).collect(),
        None => {
            let mut out = Vec::with_capacity(times.len());
            let mut last: Option<NaiveDate> = None;
            let mut idx = 0usize;
            for t in times {
                let d = t.date_naive();
                if let Some(prev) = last {
                    if d != prev {
                        idx += 1;
                    }
                }
                last = Some(d);
                out.push(idx);
            }
            out
        }
    }
}

/// Treatment of a trailing block shorter than the block size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partial {
    #[default]
    Drop,
    Keep,
}

/// Sums consecutive blocks of `block` returns. Each block takes the timestamp
/// and day of its last element, so blocks straddling a day boundary count toward
/// the later day.
pub fn aggregate_returns(ds: &Dataset, block: usize, partial: Partial) -> Result<Dataset> {
    if block == 0 {
        return Err(Error::InvalidParameter("block size must be >= 1".into()));
    }
    let mut out = Dataset {
        timestamps: Vec::new(),
        returns: Vec::new(),
        day: Vec::new(),
        frequency: ds.frequency.clone(),
    };
    for chunk_start in (0..ds.len()).step_by(block) {
        let end = (chunk_start + block).min(ds.len());
        if end - chunk_start < block && partial == Partial::Drop {
            break;
        }
        out.returns.push(ds.returns[chunk_start..end].iter().sum());
        out.timestamps.push(ds.timestamps[end - 1]);
        out.day.push(ds.day[end - 1]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub sd: f64,
    /// `m3 / m2^{3/2}`; `None` for a constant series.
    pub skewness: Option<f64>,
    /// Raw (non-excess) kurtosis `m4 / m2^2`; `None` for a constant series.
    pub kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn descriptive_stats(x: &[f64]) -> Result<Descriptive> {
    let n = x.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!("{n} observations; need >= 4")));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let nonconstant = m2 > 0.0;
    Ok(Descriptive {
        n,
        mean,
        sd,
        skewness: nonconstant.then(|| m3 / m2.powf(1.5)),
        kurtosis: nonconstant.then(|| m4 / (m2 * m2)),
        min: x.iter().copied().fold(f64::INFINITY, f64::min),
        max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Reads a one-column CSV (header optional) of returns.
pub fn read_series<R: Read>(reader: R, column: Option<&str>) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut col = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 1;
        if i == 0 {
            let first = rec.get(0).unwrap_or("");
            if first.parse::<f64>().is_err() {
                if let Some(name) = column {
                    col = rec.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                        line,
                        msg: format!("column `{name}` not found"),
                    })?;
                } else if let Some(pos) = rec.iter().position(|h| h == "r" || h == "return" || h == "x") {
                    col = pos;
                }
                continue;
            }
        }
        let field = rec.get(col).ok_or_else(|| Error::Parse {
            line,
            msg: format!("missing column {}", col + 1),
        })?;
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("not a number: `{field}`"),
        })?;
        out.push(v);
    }
    Ok(out)
}
