//! CSV file formats.
//!
//! Every file starts with a metadata comment `# dims=<d> domain=<r1,...,rd>`
//! followed by format-specific keys. Floats are written with the shortest
//! representation that round-trips exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{HistError, Result};
use crate::haar::PaddedDomain;
use crate::histcore::domain::join;
use crate::histcore::{
    AttributeDomain, Bucket, BucketHistogram, FrequencyTensor, Interval, QueryFeedbackRecord, RangeQuery,
    WaveletSketch,
};

struct Parsed<'a> {
    path: &'a Path,
    meta: BTreeMap<String, String>,
    rows: Vec<(usize, Vec<&'a str>)>,
}

impl<'a> Parsed<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> HistError {
        HistError::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| self.err(1, format!("missing metadata key {key:?}")))
    }

    fn list(&self, key: &str) -> Result<Vec<usize>> {
        self.meta(key)?
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| self.err(1, format!("bad {key} entry {v:?}"))))
            .collect()
    }

    fn domain(&self) -> Result<AttributeDomain> {
        let dims: usize = self
            .meta("dims")?
            .parse()
            .map_err(|_| self.err(1, "bad dims"))?;
        let ranges = self.list("domain")?;
        if ranges.len() != dims {
            return Err(self.err(1, format!("dims={dims} but domain has {} entries", ranges.len())));
        }
        AttributeDomain::new(ranges).map_err(|e| self.err(1, e.to_string()))
    }

    fn int(&self, line: usize, s: &str) -> Result<usize> {
        s.parse().map_err(|_| self.err(line, format!("{s:?} is not a non-negative integer")))
    }

    fn float(&self, line: usize, s: &str) -> Result<f64> {
        s.parse().map_err(|_| self.err(line, format!("{s:?} is not a number")))
    }

    fn check_width(&self, line: usize, fields: &[&str], width: usize) -> Result<()> {
        if fields.len() != width {
            return Err(self.err(line, format!("expected {width} columns, found {}", fields.len())));
        }
        Ok(())
    }

    fn bounds(&self, line: usize, fields: &[&str]) -> Result<Vec<Interval>> {
        fields
            .chunks(2)
            .map(|p| Ok(Interval::new(self.int(line, p[0])?, self.int(line, p[1])?)))
            .collect()
    }
}

fn parse<'a>(path: &'a Path, text: &'a str) -> Result<Parsed<'a>> {
    let mut meta = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if meta.is_none() && rows.is_empty() {
                let mut m = BTreeMap::new();
                for kv in rest.split_whitespace() {
                    if let Some((k, v)) = kv.split_once('=') {
                        m.insert(k.to_string(), v.to_string());
                    }
                }
                meta = Some(m);
            }
            continue;
        }
        rows.push((i + 1, line.split(',').map(str::trim).collect()));
    }
    let meta = meta.ok_or_else(|| HistError::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "missing metadata line".into(),
    })?;
    Ok(Parsed { path, meta, rows })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HistError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HistError::io(path, e))
}

fn header(domain: &AttributeDomain) -> String {
    format!("# dims={} domain={}", domain.dims(), join(domain.ranges()))
}

fn push_bounds(out: &mut String, bounds: &[Interval]) {
    for iv in bounds {
        let _ = write!(out, "{},{},", iv.lo, iv.hi);
    }
}

pub fn histogram_to_string(h: &BucketHistogram) -> String {
    let mut out = header(h.domain());
    out.push('\n');
    for b in h.buckets() {
        push_bounds(&mut out, &b.bounds);
        let _ = writeln!(out, "{}", b.count);
    }
    out
}

pub fn write_histogram(path: &Path, h: &BucketHistogram) -> Result<()> {
    write_text(path, &histogram_to_string(h))
}

pub fn read_histogram(path: &Path) -> Result<BucketHistogram> {
    let text = read_text(path)?;
    let p = parse(path, &text)?;
    let domain = p.domain()?;
    let d = domain.dims();
    let buckets = p
        .rows
        .iter()
        .map(|(line, f)| {
            p.check_width(*line, f, 2 * d + 1)?;
            Ok(Bucket::new(p.bounds(*line, &f[..2 * d])?, p.float(*line, f[2 * d])?))
        })
        .collect::<Result<Vec<_>>>()?;
    BucketHistogram::new(domain, buckets).map_err(|e| p.err(1, e.to_string()))
}

pub fn sketch_to_string(s: &WaveletSketch) -> String {
    let dom = s.domain();
    let mut out = format!("{} padded={}\n", header(dom.original()), join(dom.padded()));
    for (j, v) in s.entries() {
        let _ = writeln!(out, "{j},{v}");
    }
    out
}

pub fn write_sketch(path: &Path, s: &WaveletSketch) -> Result<()> {
    write_text(path, &sketch_to_string(s))
}

pub fn read_sketch(path: &Path) -> Result<WaveletSketch> {
    let text = read_text(path)?;
    let p = parse(path, &text)?;
    let domain = p.domain()?;
    let padded = PaddedDomain::with_padding(domain, p.list("padded")?).map_err(|e| p.err(1, e.to_string()))?;
    let entries = p
        .rows
        .iter()
        .map(|(line, f)| {
            p.check_width(*line, f, 2)?;
            Ok((p.int(*line, f[0])?, p.float(*line, f[1])?))
        })
        .collect::<Result<Vec<_>>>()?;
    WaveletSketch::new(padded, entries).map_err(|e| p.err(1, e.to_string()))
}

pub fn dataset_to_string(freq: &FrequencyTensor) -> String {
    let domain = freq.domain();
    let mut out = format!("{} total={}\n", header(domain), freq.total());
    let strides = domain.strides();
    for (flat, &c) in freq.counts().iter().enumerate() {
        if c == 0 {
            continue;
        }
        let mut rem = flat;
        for st in &strides {
            let _ = write!(out, "{},", rem / st + 1);
            rem %= st;
        }
        let _ = writeln!(out, "{c}");
    }
    out
}

pub fn write_dataset(path: &Path, freq: &FrequencyTensor) -> Result<()> {
    write_text(path, &dataset_to_string(freq))
}

pub fn read_dataset(path: &Path) -> Result<FrequencyTensor> {
    let text = read_text(path)?;
    let p = parse(path, &text)?;
    let domain = p.domain()?;
    let d = domain.dims();
    let mut freq = FrequencyTensor::zeros(domain.clone())?;
    let strides = domain.strides();
    for (line, f) in &p.rows {
        p.check_width(*line, f, d + 1)?;
        let mut flat = 0;
        for (col, (s, &r)) in f[..d].iter().zip(domain.ranges()).enumerate() {
            let v = p.int(*line, s)?;
            if v < 1 || v > r {
                return Err(HistError::OutOfRange {
                    path: path.to_path_buf(),
                    line: *line,
                    column: col + 1,
                    value: v as i64,
                    max: r,
                });
            }
            flat += (v - 1) * strides[col];
        }
        let count: u64 = f[d]
            .parse()
            .map_err(|_| p.err(*line, format!("{:?} is not a count", f[d])))?;
        freq.add_at_flat(flat, count);
    }
    if let Ok(total) = p.meta("total") {
        let total: u64 = total.parse().map_err(|_| p.err(1, "bad total"))?;
        if total != freq.total() {
            return Err(p.err(1, format!("total={total} but rows sum to {}", freq.total())));
        }
    }
    Ok(freq)
}

pub fn qfrs_to_string(domain: &AttributeDomain, qfrs: &[QueryFeedbackRecord]) -> String {
    let mut out = header(domain);
    out.push('\n');
    for r in qfrs {
        push_bounds(&mut out, r.query.bounds());
        let _ = writeln!(out, "{}", r.cardinality);
    }
    out
}

pub fn write_qfrs(path: &Path, domain: &AttributeDomain, qfrs: &[QueryFeedbackRecord]) -> Result<()> {
    write_text(path, &qfrs_to_string(domain, qfrs))
}

fn parse_query(p: &Parsed<'_>, domain: &AttributeDomain, line: usize, f: &[&str]) -> Result<RangeQuery> {
    let q = RangeQuery::new(p.bounds(line, f)?).map_err(|e| p.err(line, e.to_string()))?;
    q.check_within(domain).map_err(|e| p.err(line, e.to_string()))?;
    Ok(q)
}

pub fn read_qfrs(path: &Path) -> Result<(AttributeDomain, Vec<QueryFeedbackRecord>)> {
    let text = read_text(path)?;
    let p = parse(path, &text)?;
    let domain = p.domain()?;
    let d = domain.dims();
    let qfrs = p
        .rows
        .iter()
        .map(|(line, f)| {
            p.check_width(*line, f, 2 * d + 1)?;
            let q = parse_query(&p, &domain, *line, &f[..2 * d])?;
            QueryFeedbackRecord::new(q, p.float(*line, f[2 * d])?).map_err(|e| p.err(*line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((domain, qfrs))
}

pub fn queries_to_string(domain: &AttributeDomain, queries: &[RangeQuery]) -> String {
    let mut out = header(domain);
    out.push('\n');
    for q in queries {
        push_bounds(&mut out, q.bounds());
        out.pop();
        out.push('\n');
    }
    out
}

pub fn write_queries(path: &Path, domain: &AttributeDomain, queries: &[RangeQuery]) -> Result<()> {
    write_text(path, &queries_to_string(domain, queries))
}

pub fn read_queries(path: &Path) -> Result<(AttributeDomain, Vec<RangeQuery>)> {
    let text = read_text(path)?;
    let p = parse(path, &text)?;
    let domain = p.domain()?;
    let d = domain.dims();
    let queries = p
        .rows
        .iter()
        .map(|(line, f)| {
            p.check_width(*line, f, 2 * d)?;
            parse_query(&p, &domain, *line, f)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((domain, queries))
}
