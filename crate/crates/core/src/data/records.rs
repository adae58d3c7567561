//! Competition-schema CSV ingestion and writing.
//!
//! * train: `id,date,store_nbr,item_nbr,unit_sales,onpromotion`
//! * items: `item_nbr,family,class,perishable`
//! * test:  `id,date,store_nbr,item_nbr,onpromotion`
//! * submission: `id,unit_sales`
//!
//! Booleans accept `True`/`False`/`1`/`0` (case-insensitive) or an empty
//! field, which reads as absent.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAIN_HEADER: [&str; 6] = ["id", "date", "store_nbr", "item_nbr", "unit_sales", "onpromotion"];
pub const TEST_HEADER: [&str; 5] = ["id", "date", "store_nbr", "item_nbr", "onpromotion"];
pub const ITEMS_HEADER: [&str; 4] = ["item_nbr", "family", "class", "perishable"];
pub const SUBMISSION_HEADER: [&str; 2] = ["id", "unit_sales"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: u64,
    pub date: NaiveDate,
    pub store_id: u32,
    pub item_id: u64,
    pub unit_sales: f64,
    pub on_promotion: Option<bool>,
}

/// A test-period row: the known future promotion state, no sales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub id: u64,
    pub date: NaiveDate,
    pub store_id: u32,
    pub item_id: u64,
    pub on_promotion: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub item_id: u64,
    pub family: String,
    pub class: u32,
    pub perishable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRow {
    pub id: u64,
    pub unit_sales: f64,
}

/// Perishability lookup; unknown items are non-perishable.
#[derive(Debug, Clone, Default)]
pub struct ItemTable {
    perishable: HashMap<u64, bool>,
}

impl ItemTable {
    pub fn new(items: &[ItemMeta]) -> Self {
        Self {
            perishable: items.iter().map(|m| (m.item_id, m.perishable)).collect(),
        }
    }

    pub fn is_perishable(&self, item_id: u64) -> bool {
        self.perishable.get(&item_id).copied().unwrap_or(false)
    }
}

struct Columns<'a> {
    path: &'a str,
    index: Vec<usize>,
}

impl<'a> Columns<'a> {
    fn resolve(path: &'a str, headers: &csv::StringRecord, wanted: &[&str]) -> Result<Self> {
        let mut index = Vec::with_capacity(wanted.len());
        for name in wanted {
            match headers.iter().position(|h| h.trim() == *name) {
                Some(i) => index.push(i),
                None => {
                    return Err(Error::Schema {
                        path: path.to_string(),
                        message: format!("missing column `{name}`"),
                    })
                }
            }
        }
        Ok(Self { path, index })
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, col: usize) -> Result<&'r str> {
        rec.get(self.index[col]).map(str::trim).ok_or_else(|| self.err(rec, "missing field"))
    }

    fn err(&self, rec: &csv::StringRecord, message: impl Into<String>) -> Error {
        Error::Ingestion {
            path: self.path.to_string(),
            line: rec.position().map_or(0, |p| p.line()),
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, rec: &csv::StringRecord, col: usize, what: &str) -> Result<T> {
        let raw = self.field(rec, col)?;
        raw.parse()
            .map_err(|_| self.err(rec, format!("cannot parse {what} from `{raw}`")))
    }

    fn date(&self, rec: &csv::StringRecord, col: usize) -> Result<NaiveDate> {
        let raw = self.field(rec, col)?;
        NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|_| self.err(rec, format!("invalid date `{raw}`")))
    }

    fn flag(&self, rec: &csv::StringRecord, col: usize) -> Result<Option<bool>> {
        let raw = self.field(rec, col)?;
        parse_flag(raw).ok_or_else(|| self.err(rec, format!("invalid boolean `{raw}`")))
    }
}

fn parse_flag(raw: &str) -> Option<Option<bool>> {
    match raw.to_ascii_lowercase().as_str() {
        "" => Some(None),
        "true" | "1" => Some(Some(true)),
        "false" | "0" => Some(Some(false)),
        _ => None,
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(reader(file))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(r)
}

fn for_each_row<R: Read>(
    mut rdr: csv::Reader<R>,
    path: &str,
    header: &[&str],
    mut f: impl FnMut(&Columns, &csv::StringRecord) -> Result<()>,
) -> Result<()> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema {
            path: path.to_string(),
            message: e.to_string(),
        })?
        .clone();
    let cols = Columns::resolve(path, &headers, header)?;
    let mut rec = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(true) => f(&cols, &rec)?,
            Ok(false) => return Ok(()),
            Err(e) => {
                return Err(Error::Ingestion {
                    path: path.to_string(),
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                })
            }
        }
    }
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    parse_records(open(path)?, &path.display().to_string())
}

pub(crate) fn parse_records<R: Read>(rdr: csv::Reader<R>, path: &str) -> Result<Vec<RawRecord>> {
    let mut out = Vec::new();
    for_each_row(rdr, path, &TRAIN_HEADER, |c, rec| {
        out.push(RawRecord {
            id: c.parse(rec, 0, "id")?,
            date: c.date(rec, 1)?,
            store_id: c.parse(rec, 2, "store_nbr")?,
            item_id: c.parse(rec, 3, "item_nbr")?,
            unit_sales: {
                let v: f64 = c.parse(rec, 4, "unit_sales")?;
                if !v.is_finite() {
                    return Err(c.err(rec, "non-finite unit_sales"));
                }
                v
            },
            on_promotion: c.flag(rec, 5)?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_test_records(path: impl AsRef<Path>) -> Result<Vec<TestRecord>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for_each_row(open(path)?, &path.display().to_string(), &TEST_HEADER, |c, rec| {
        out.push(TestRecord {
            id: c.parse(rec, 0, "id")?,
            date: c.date(rec, 1)?,
            store_id: c.parse(rec, 2, "store_nbr")?,
            item_id: c.parse(rec, 3, "item_nbr")?,
            on_promotion: c.flag(rec, 4)?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_items(path: impl AsRef<Path>) -> Result<Vec<ItemMeta>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for_each_row(open(path)?, &path.display().to_string(), &ITEMS_HEADER, |c, rec| {
        let perishable = match c.field(rec, 3)? {
            "1" => true,
            "0" => false,
            other => return Err(c.err(rec, format!("perishable must be 0 or 1, got `{other}`"))),
        };
        out.push(ItemMeta {
            item_id: c.parse(rec, 0, "item_nbr")?,
            family: c.field(rec, 1)?.to_string(),
            class: c.parse(rec, 2, "class")?,
            perishable,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_submission(path: impl AsRef<Path>) -> Result<Vec<SubmissionRow>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for_each_row(open(path)?, &path.display().to_string(), &SUBMISSION_HEADER, |c, rec| {
        let unit_sales: f64 = c.parse(rec, 1, "unit_sales")?;
        if !unit_sales.is_finite() {
            return Err(c.err(rec, "non-finite unit_sales"));
        }
        out.push(SubmissionRow {
            id: c.parse(rec, 0, "id")?,
            unit_sales,
        });
        Ok(())
    })?;
    Ok(out)
}

fn fmt_flag(flag: Option<bool>) -> &'static str {
    match flag {
        None => "",
        Some(true) => "True",
        Some(false) => "False",
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, w: &mut BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_records(path: impl AsRef<Path>, records: &[RawRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", TRAIN_HEADER.join(",")).map_err(io)?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.id,
            r.date.format("%Y-%m-%d"),
            r.store_id,
            r.item_id,
            r.unit_sales,
            fmt_flag(r.on_promotion)
        )
        .map_err(io)?;
    }
    finish(path, &mut w)
}

pub fn write_test_records(path: impl AsRef<Path>, records: &[TestRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", TEST_HEADER.join(",")).map_err(io)?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.id,
            r.date.format("%Y-%m-%d"),
            r.store_id,
            r.item_id,
            fmt_flag(r.on_promotion)
        )
        .map_err(io)?;
    }
    finish(path, &mut w)
}

pub fn write_items(path: impl AsRef<Path>, items: &[ItemMeta]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", ITEMS_HEADER.join(",")).map_err(io)?;
    for m in items {
        writeln!(
            w,
            "{},{},{},{}",
            m.item_id,
            m.family,
            m.class,
            u8::from(m.perishable)
        )
        .map_err(io)?;
    }
    finish(path, &mut w)
}

/// Writes `id,unit_sales` with six decimals; negative and NaN values are
/// written as zero.
pub fn write_submission(path: impl AsRef<Path>, rows: &[SubmissionRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", SUBMISSION_HEADER.join(",")).map_err(io)?;
    for r in rows {
        let v = if r.unit_sales > 0.0 { r.unit_sales } else { 0.0 };
        writeln!(w, "{},{v:.6}", r.id).map_err(io)?;
    }
    finish(path, &mut w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<RawRecord>> {
        parse_records(reader(text.as_bytes()), "train.csv")
    }

    #[test]
    fn parses_a_competition_line() {
        let recs = parse("id,date,store_nbr,item_nbr,unit_sales,onpromotion\n1,2017-08-01,1,103665,7.0,True\n")
            .unwrap();
        assert_eq!(
            recs,
            vec![RawRecord {
                id: 1,
                date: NaiveDate::from_ymd_opt(2017, 8, 1).unwrap(),
                store_id: 1,
                item_id: 103665,
                unit_sales: 7.0,
                on_promotion: Some(true),
            }]
        );
    }

    #[test]
    fn empty_body_and_missing_promo() {
        assert!(parse("id,date,store_nbr,item_nbr,unit_sales,onpromotion\n").unwrap().is_empty());
        let recs = parse("id,date,store_nbr,item_nbr,unit_sales,onpromotion\n5,2017-01-02,3,9,-2,\n").unwrap();
        assert_eq!(recs[0].on_promotion, None);
        assert_eq!(recs[0].unit_sales, -2.0);
    }

    #[test]
    fn malformed_date_names_the_line() {
        let err = parse(
            "id,date,store_nbr,item_nbr,unit_sales,onpromotion\n1,2017-08-01,1,1,1,0\n2,2017-13-01,1,1,1,0\n",
        )
        .unwrap_err();
        match err {
            Error::Ingestion { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("2017-13-01"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = parse("id,date,store_nbr,item_nbr,onpromotion\n").unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
    }

    #[test]
    fn flag_spellings() {
        assert_eq!(parse_flag("True"), Some(Some(true)));
        assert_eq!(parse_flag("0"), Some(Some(false)));
        assert_eq!(parse_flag(""), Some(None));
        assert_eq!(parse_flag("yes"), None);
    }
}
