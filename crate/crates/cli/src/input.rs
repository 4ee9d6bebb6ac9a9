//! CSV ingestion. Comma separated, '.' decimals; a header is assumed when the
//! first field of the first row is not a number.

use std::fs::File;
use std::path::Path;

use crate::CliError;

struct Table {
    header: Option<Vec<String>>,
    /// `(line number, fields)`
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let file = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut header = None;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<String> = rec.iter().map(str::to_owned).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if header.is_none() && rows.is_empty() && fields[0].parse::<f64>().is_err() {
            header = Some(fields.iter().map(|f| f.to_ascii_lowercase()).collect());
            continue;
        }
        rows.push((line, fields));
    }
    Ok(Table { header, rows })
}

fn parse(path: &Path, line: u64, field: Option<&String>) -> Result<f64, CliError> {
    let field = field.ok_or_else(|| CliError::input(format!("{}:{line}: missing column", path.display())))?;
    let v: f64 = field
        .parse()
        .map_err(|_| CliError::input(format!("{}:{line}: cannot parse {field:?} as a number", path.display())))?;
    if !v.is_finite() {
        return Err(CliError::input(format!("{}:{line}: non-finite value {field:?}", path.display())));
    }
    Ok(v)
}

fn column(header: &Option<Vec<String>>, names: &[&str]) -> Option<usize> {
    header.as_ref()?.iter().position(|h| names.contains(&h.as_str()))
}

/// Fluorescence values in time order.
pub fn read_trace(path: &Path) -> Result<Vec<f64>, CliError> {
    let table = read_table(path)?;
    if table.rows.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", path.display())));
    }
    let width = table.rows[0].1.len();
    let value_col = column(&table.header, &["fluorescence", "f", "y"]).unwrap_or(width - 1);
    let time_col = column(&table.header, &["time", "t"]).or((width >= 2 && value_col != 0).then_some(0));
    let mut out = Vec::with_capacity(table.rows.len());
    let mut last_time = f64::NEG_INFINITY;
    for (line, fields) in &table.rows {
        if let Some(tc) = time_col {
            let t = parse(path, *line, fields.get(tc))?;
            if t <= last_time {
                return Err(CliError::input(format!("{}:{line}: time {t} does not increase", path.display())));
            }
            last_time = t;
        }
        out.push(parse(path, *line, fields.get(value_col))?);
    }
    Ok(out)
}

/// Spike times in samples, with p-values when a second column is present.
pub struct SpikeTable {
    pub times: Vec<usize>,
    pub pvalues: Option<Vec<f64>>,
}

pub fn read_spikes(path: &Path) -> Result<SpikeTable, CliError> {
    // an empty spike file is an empty train
    let table = read_table(path)?;
    let width = table.rows.first().map_or(0, |r| r.1.len());
    let time_col = column(&table.header, &["time", "tau", "t"]).unwrap_or(0);
    let p_col = match &table.header {
        Some(_) => column(&table.header, &["p_value", "pvalue", "p_selective", "p"]),
        None => (width >= 2).then_some(1),
    };
    let mut times = Vec::with_capacity(table.rows.len());
    let mut pvalues = p_col.map(|_| Vec::with_capacity(table.rows.len()));
    for (line, fields) in &table.rows {
        let t = parse(path, *line, fields.get(time_col))?;
        if t < 0.0 || t.fract() != 0.0 {
            return Err(CliError::input(format!("{}:{line}: spike time {t} is not a sample index", path.display())));
        }
        times.push(t as usize);
        if let (Some(pc), Some(ps)) = (p_col, pvalues.as_mut()) {
            ps.push(parse(path, *line, fields.get(pc))?);
        }
    }
    Ok(SpikeTable { times, pvalues })
}

/// `a,b,c` or `start:stop:step` (inclusive of stop up to rounding).
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::input(format!("cannot parse grid {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let out = if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    } else {
        s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?
    };
    if out.is_empty() || out.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(out)
}

/// One value, a comma list, or an integer range `a..b` (inclusive).
pub fn parse_sigmas(s: &str) -> Result<Vec<f64>, CliError> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| CliError::input(format!("bad sigma range {s:?}")))?;
        let b: u32 = b.trim().parse().map_err(|_| CliError::input(format!("bad sigma range {s:?}")))?;
        if a == 0 || b < a {
            return Err(CliError::input(format!("bad sigma range {s:?}")));
        }
        return Ok((a..=b).map(f64::from).collect());
    }
    parse_grid(s)
}
