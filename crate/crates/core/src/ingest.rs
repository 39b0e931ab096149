//! Turning CSV files into categorical tables.
//!
//! Columns with at most 256 distinct values are relabeled in order of first
//! appearance. Numeric columns with more distinct values are cut into four
//! quartile bins. Anything else is dropped.

use std::collections::HashMap;
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Alphabet, Table, MAX_TABLE_ALPHABET};
use crate::rng::Rng;

/// Symbol given to empty cells of a quartile-binned column.
pub const MISSING_SYMBOL: u8 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    pub shuffle: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Relabel,
    Quartile,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnReport {
    pub name: String,
    pub kept: bool,
    pub kind: ColumnKind,
    /// Symbol count used by this column.
    pub symbols: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<Vec<String>>,
    /// Lower quartile, median, upper quartile.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut_points: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    pub cols: usize,
    pub alphabet: u32,
    pub columns: Vec<ColumnReport>,
}

impl IngestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Type-7 quantile (linear interpolation between order statistics).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bin against the three cut points; a value equal to a cut goes low.
pub fn quartile_bin(x: f64, cuts: &[f64; 3]) -> u8 {
    cuts.iter().position(|&c| x <= c).unwrap_or(3) as u8
}

fn parse_numeric(column: &[&str]) -> Option<Vec<Option<f64>>> {
    column
        .iter()
        .map(|s| {
            let t = s.trim();
            if t.is_empty() {
                Some(None)
            } else {
                t.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
            }
        })
        .collect()
}

fn encode_column(name: &str, column: &[&str]) -> (Option<Vec<u8>>, ColumnReport) {
    let mut dict: HashMap<&str, u8> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut relabeled = Vec::with_capacity(column.len());
    for &cell in column {
        if let Some(&s) = dict.get(cell) {
            relabeled.push(s);
            continue;
        }
        if order.len() == MAX_TABLE_ALPHABET as usize {
            relabeled.clear();
            break;
        }
        let s = order.len() as u8;
        dict.insert(cell, s);
        order.push(cell.to_string());
        relabeled.push(s);
    }
    if relabeled.len() == column.len() {
        let report = ColumnReport {
            name: name.to_string(),
            kept: true,
            kind: ColumnKind::Relabel,
            symbols: order.len(),
            dictionary: Some(order),
            cut_points: None,
        };
        return (Some(relabeled), report);
    }

    if let Some(values) = parse_numeric(column) {
        let mut present: Vec<f64> = values.iter().flatten().copied().collect();
        present.sort_by(f64::total_cmp);
        let cuts = [0.25, 0.5, 0.75].map(|p| quantile_type7(&present, p));
        let missing = values.iter().any(Option::is_none);
        let symbols = values.iter().map(|v| v.map_or(MISSING_SYMBOL, |x| quartile_bin(x, &cuts))).collect();
        let report = ColumnReport {
            name: name.to_string(),
            kept: true,
            kind: ColumnKind::Quartile,
            symbols: if missing { 5 } else { 4 },
            dictionary: None,
            cut_points: Some(cuts),
        };
        return (Some(symbols), report);
    }

    let report = ColumnReport {
        name: name.to_string(),
        kept: false,
        kind: ColumnKind::Dropped,
        symbols: 0,
        dictionary: None,
        cut_points: None,
    };
    (None, report)
}

/// Preprocess an in-memory string table. `rows` excludes the header.
pub fn preprocess(header: &[String], rows: &[Vec<String>], options: IngestOptions) -> Result<(Table, IngestReport)> {
    if rows.is_empty() || header.is_empty() {
        return Err(Error::Ingestion("empty table".into()));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != header.len()) {
        return Err(Error::Ingestion(format!(
            "row {} has {} fields, header has {}",
            i + 1,
            rows[i].len(),
            header.len()
        )));
    }

    let mut kept: Vec<Vec<u8>> = Vec::new();
    let mut columns = Vec::with_capacity(header.len());
    for (j, name) in header.iter().enumerate() {
        let column: Vec<&str> = rows.iter().map(|r| r[j].as_str()).collect();
        let (symbols, report) = encode_column(name, &column);
        if let Some(s) = symbols {
            kept.push(s);
        }
        columns.push(report);
    }
    if kept.is_empty() {
        return Err(Error::Ingestion("every column was dropped".into()));
    }

    let m = rows.len();
    let n = kept.len();
    let size = columns.iter().map(|c| c.symbols).max().unwrap_or(0).max(2) as u32;
    let mut order: Vec<usize> = (0..m).collect();
    if options.shuffle {
        Rng::new(options.seed).shuffle(&mut order);
    }
    let cells = order.iter().flat_map(|&i| kept.iter().map(move |c| c[i])).collect();
    let table = Table::new(m, n, Alphabet::new(size)?, cells)?;
    Ok((table, IngestReport { rows: m, cols: n, alphabet: size, columns }))
}

/// Read a CSV with a header row and preprocess it.
pub fn preprocess_csv<R: Read>(reader: R, options: IngestOptions) -> Result<(Table, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Ingestion(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()
        .map_err(|e| Error::Ingestion(e.to_string()))?;
    preprocess(&header, &rows, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn relabel_in_first_occurrence_order() {
        let rows: Vec<Vec<String>> = ["a", "b", "a"].iter().map(|s| strings(&[s])).collect();
        let (t, rep) = preprocess(&strings(&["c"]), &rows, IngestOptions::default()).unwrap();
        assert_eq!(t.cells(), &[0, 1, 0]);
        assert_eq!(rep.columns[0].dictionary.as_deref(), Some(&strings(&["a", "b"])[..]));
        assert_eq!(t.alphabet().size(), 2);
    }

    #[test]
    fn quartiles_of_one_to_thousand() {
        let rows: Vec<Vec<String>> = (1..=1000).map(|v| vec![v.to_string()]).collect();
        let (t, rep) = preprocess(&strings(&["x"]), &rows, IngestOptions::default()).unwrap();
        assert_eq!(rep.columns[0].kind, ColumnKind::Quartile);
        assert_eq!(rep.columns[0].cut_points, Some([250.75, 500.5, 750.25]));
        assert_eq!((t.get(0, 0), t.get(499, 0), t.get(500, 0), t.get(999, 0)), (0, 1, 2, 3));
        assert_eq!(t.alphabet().size(), 4);
    }

    #[test]
    fn wide_text_column_is_dropped() {
        let rows: Vec<Vec<String>> = (0..300).map(|v| vec![format!("w{v}"), (v % 3).to_string()]).collect();
        let (t, rep) = preprocess(&strings(&["text", "k"]), &rows, IngestOptions::default()).unwrap();
        assert!(!rep.columns[0].kept);
        assert_eq!(rep.columns[0].kind, ColumnKind::Dropped);
        assert_eq!(t.cols(), 1);
        assert!(rep.to_json().contains("\"dropped\""));
    }

    #[test]
    fn missing_numeric_cells() {
        let mut rows: Vec<Vec<String>> = (0..400).map(|v| vec![format!("{}.5", v)]).collect();
        rows[7][0].clear();
        let (t, rep) = preprocess(&strings(&["x"]), &rows, IngestOptions::default()).unwrap();
        assert_eq!(t.get(7, 0), MISSING_SYMBOL);
        assert_eq!(rep.columns[0].symbols, 5);
        assert_eq!(t.alphabet().size(), 5);
    }

    #[test]
    fn errors() {
        let h = strings(&["a", "b"]);
        assert!(matches!(preprocess(&h, &[], IngestOptions::default()), Err(Error::Ingestion(_))));
        let ragged = vec![strings(&["1", "2"]), strings(&["1"])];
        assert!(matches!(preprocess(&h, &ragged, IngestOptions::default()), Err(Error::Ingestion(_))));
        assert!(preprocess_csv("a,b\n1,2\n3\n".as_bytes(), IngestOptions::default()).is_err());
    }

    #[test]
    fn shuffle_permutes_rows() {
        let csv: String = std::iter::once("a,b\n".to_string())
            .chain((0..50).map(|i| format!("{},{}\n", i % 7, i % 3)))
            .collect();
        let (plain, _) = preprocess_csv(csv.as_bytes(), IngestOptions::default()).unwrap();
        let opts = IngestOptions { shuffle: true, seed: 9 };
        let (shuffled, _) = preprocess_csv(csv.as_bytes(), opts).unwrap();
        let (again, _) = preprocess_csv(csv.as_bytes(), opts).unwrap();
        assert_eq!(shuffled, again);
        assert_ne!(shuffled, plain);
        let mut a: Vec<&[u8]> = (0..50).map(|i| plain.row(i)).collect();
        let mut b: Vec<&[u8]> = (0..50).map(|i| shuffled.row(i)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
