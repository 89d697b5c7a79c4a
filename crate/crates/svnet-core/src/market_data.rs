//! Ingest, filter and index daily trading records.
//!
//! Trading days are mapped to a contiguous 0-based index taken from the
//! sorted set of distinct dates present in the trades file, so weekends and
//! holidays never create gaps. Duplicate `(investor, day)` rows are summed,
//! rows with zero volume on both sides are dropped, and every investor
//! carries an activity window used later to intersect trading histories.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Prob;

/// 0-based contiguous trading-day index.
pub type Day = u32;

/// Investor category from the central register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    /// Non-financial corporations.
    C,
    /// Financial and insurance corporations.
    FI,
    /// General governmental organizations.
    G,
    /// Non-profit institutions.
    NP,
    /// Households.
    H,
    /// Foreign organizations.
    FO,
    /// Fallback for investors missing from the metadata file.
    Other,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::C,
        Category::FI,
        Category::G,
        Category::NP,
        Category::H,
        Category::FO,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::C => "C",
            Category::FI => "FI",
            Category::G => "G",
            Category::NP => "NP",
            Category::H => "H",
            Category::FO => "FO",
            Category::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        match s {
            "C" => Some(Category::C),
            "FI" => Some(Category::FI),
            "G" => Some(Category::G),
            "NP" => Some(Category::NP),
            "H" => Some(Category::H),
            "FO" => Some(Category::FO),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One aggregated investor-day volume observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TradingRecord {
    /// Index into the dataset's investor table.
    pub investor: u32,
    pub day: Day,
    pub volume_bought: u64,
    pub volume_sold: u64,
}

/// Inclusive activity window of one investor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityWindow {
    pub first_day: Day,
    pub last_day: Day,
}

impl ActivityWindow {
    pub fn len(&self) -> u32 {
        self.last_day - self.first_day + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, day: Day) -> bool {
        (self.first_day..=self.last_day).contains(&day)
    }

    /// Intersection with another window, if non-empty.
    pub fn intersect(&self, other: &ActivityWindow) -> Option<ActivityWindow> {
        let first_day = self.first_day.max(other.first_day);
        let last_day = self.last_day.min(other.last_day);
        (first_day <= last_day).then_some(ActivityWindow {
            first_day,
            last_day,
        })
    }
}

/// How per-investor activity windows are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// The whole observation calendar (default).
    #[default]
    FullCalendar,
    /// From the first to the last trade of the investor.
    TradeSpan,
    /// Taken from the windows file supplied at load time.
    Provided,
}

impl fmt::Display for WindowPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowPolicy::FullCalendar => "full_calendar",
            WindowPolicy::TradeSpan => "trade_span",
            WindowPolicy::Provided => "provided",
        })
    }
}

/// Row accounting from ingest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows_read: u64,
    /// Rows with zero bought and zero sold volume.
    pub rows_dropped_zero: u64,
    /// Duplicate `(investor, day)` rows merged into an earlier one.
    pub rows_aggregated: u64,
}

/// Immutable, indexed view of a trading history.
#[derive(Debug, Clone)]
pub struct Dataset {
    ids: Vec<String>,
    categories: Vec<Category>,
    windows: Vec<ActivityWindow>,
    provided: Vec<Option<ActivityWindow>>,
    records: Vec<TradingRecord>,
    rec_ranges: Vec<Range<usize>>,
    calendar: Vec<NaiveDate>,
}

impl Dataset {
    /// Core constructor over day-indexed rows. Aggregates duplicates, drops
    /// zero-zero rows, defaults windows to the full calendar.
    pub(crate) fn from_day_rows(
        rows: Vec<(String, Day, u64, u64)>,
        calendar: Vec<NaiveDate>,
        meta: &BTreeMap<String, Category>,
        provided: &BTreeMap<String, (Day, Day)>,
    ) -> Result<(Dataset, IngestReport)> {
        let calendar_len = calendar.len() as u32;
        let mut report = IngestReport {
            rows_read: rows.len() as u64,
            ..IngestReport::default()
        };

        let mut kept: Vec<(String, Day, u64, u64)> = Vec::with_capacity(rows.len());
        for (id, day, vb, vs) in rows {
            if day >= calendar_len {
                return Err(Error::Range(format!(
                    "day index {day} outside calendar of length {calendar_len}"
                )));
            }
            if vb == 0 && vs == 0 {
                report.rows_dropped_zero += 1;
                continue;
            }
            kept.push((id, day, vb, vs));
        }

        let mut ids: Vec<String> = kept.iter().map(|r| r.0.clone()).collect();
        ids.sort_unstable();
        ids.dedup();

        let index_of = |id: &str| ids.binary_search_by(|x| x.as_str().cmp(id)).unwrap() as u32;

        let mut records: Vec<TradingRecord> = kept
            .into_iter()
            .map(|(id, day, vb, vs)| TradingRecord {
                investor: index_of(&id),
                day,
                volume_bought: vb,
                volume_sold: vs,
            })
            .collect();
        records.sort_unstable_by_key(|r| (r.investor, r.day));

        let mut merged: Vec<TradingRecord> = Vec::with_capacity(records.len());
        for rec in records {
            match merged.last_mut() {
                Some(last) if last.investor == rec.investor && last.day == rec.day => {
                    last.volume_bought = last
                        .volume_bought
                        .checked_add(rec.volume_bought)
                        .ok_or_else(|| Error::Range("bought volume overflow".into()))?;
                    last.volume_sold = last
                        .volume_sold
                        .checked_add(rec.volume_sold)
                        .ok_or_else(|| Error::Range("sold volume overflow".into()))?;
                    report.rows_aggregated += 1;
                }
                _ => merged.push(rec),
            }
        }

        let rec_ranges = record_ranges(&merged, ids.len());
        let categories = ids
            .iter()
            .map(|id| meta.get(id).copied().unwrap_or(Category::Other))
            .collect();
        let provided: Vec<Option<ActivityWindow>> = ids
            .iter()
            .map(|id| {
                provided.get(id).map(|&(first_day, last_day)| ActivityWindow {
                    first_day,
                    last_day,
                })
            })
            .collect();
        let windows = vec![
            ActivityWindow {
                first_day: 0,
                last_day: calendar_len.saturating_sub(1),
            };
            ids.len()
        ];

        Ok((
            Dataset {
                ids,
                categories,
                windows,
                provided,
                records: merged,
                rec_ranges,
                calendar,
            },
            report,
        ))
    }

    pub fn n_investors(&self) -> usize {
        self.ids.len()
    }

    pub fn calendar_length(&self) -> u32 {
        self.calendar.len() as u32
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn date_of(&self, day: Day) -> NaiveDate {
        self.calendar[day as usize]
    }

    pub fn day_of(&self, date: NaiveDate) -> Option<Day> {
        self.calendar.binary_search(&date).ok().map(|i| i as Day)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, investor: u32) -> &str {
        &self.ids[investor as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.ids
            .binary_search_by(|x| x.as_str().cmp(id))
            .ok()
            .map(|i| i as u32)
    }

    pub fn category(&self, investor: u32) -> Category {
        self.categories[investor as usize]
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn window(&self, investor: u32) -> ActivityWindow {
        self.windows[investor as usize]
    }

    pub fn windows(&self) -> &[ActivityWindow] {
        &self.windows
    }

    pub fn records(&self) -> &[TradingRecord] {
        &self.records
    }

    pub fn records_of(&self, investor: u32) -> &[TradingRecord] {
        &self.records[self.rec_ranges[investor as usize].clone()]
    }

    /// Number of distinct trading days of an investor.
    pub fn distinct_day_count(&self, investor: u32) -> u32 {
        self.rec_ranges[investor as usize].len() as u32
    }

    /// The same dataset with windows recomputed under `policy`.
    ///
    /// Under `Provided`, every investor must have a windows-file entry and
    /// the window must contain all of the investor's trades.
    pub fn with_window_policy(&self, policy: WindowPolicy) -> Result<Dataset> {
        let mut ds = self.clone();
        for ix in 0..self.n_investors() as u32 {
            ds.windows[ix as usize] = self.window_under(ix, policy)?;
        }
        if policy == WindowPolicy::Provided {
            for rec in &ds.records {
                let w = ds.windows[rec.investor as usize];
                if !w.contains(rec.day) {
                    return Err(Error::Range(format!(
                        "provided window [{}, {}] for investor {} does not cover its trade on day {}",
                        w.first_day,
                        w.last_day,
                        ds.id(rec.investor),
                        rec.day
                    )));
                }
            }
        }
        Ok(ds)
    }

    fn window_under(&self, investor: u32, policy: WindowPolicy) -> Result<ActivityWindow> {
        match policy {
            WindowPolicy::FullCalendar => Ok(ActivityWindow {
                first_day: 0,
                last_day: self.calendar_length() - 1,
            }),
            WindowPolicy::TradeSpan => {
                let recs = self.records_of(investor);
                Ok(ActivityWindow {
                    first_day: recs.first().expect("every investor has records").day,
                    last_day: recs.last().expect("every investor has records").day,
                })
            }
            WindowPolicy::Provided => self.provided[investor as usize]
                .ok_or_else(|| Error::MissingWindow(self.id(investor).to_string())),
        }
    }

    /// Restriction to the investors flagged in `keep` (indexed like `ids`).
    fn subset(&self, keep: &[bool]) -> Dataset {
        let mut ids = Vec::new();
        let mut categories = Vec::new();
        let mut windows = Vec::new();
        let mut provided = Vec::new();
        let mut remap: Vec<Option<u32>> = vec![None; self.ids.len()];
        for (ix, &k) in keep.iter().enumerate() {
            if k {
                remap[ix] = Some(ids.len() as u32);
                ids.push(self.ids[ix].clone());
                categories.push(self.categories[ix]);
                windows.push(self.windows[ix]);
                provided.push(self.provided[ix]);
            }
        }
        let records: Vec<TradingRecord> = self
            .records
            .iter()
            .filter_map(|r| {
                remap[r.investor as usize].map(|investor| TradingRecord { investor, ..*r })
            })
            .collect();
        let rec_ranges = record_ranges(&records, ids.len());
        Dataset {
            ids,
            categories,
            windows,
            provided,
            records,
            rec_ranges,
            calendar: self.calendar.clone(),
        }
    }

    /// Restriction to the named investors (ids absent from the dataset are an error).
    pub fn subset_by_ids(&self, ids: &[&str]) -> Result<Dataset> {
        let mut keep = vec![false; self.ids.len()];
        for id in ids {
            let ix = self
                .index_of(id)
                .ok_or_else(|| Error::UnknownInvestor((*id).to_string()))?;
            keep[ix as usize] = true;
        }
        Ok(self.subset(&keep))
    }

    /// Dump the records in the trades CSV format.
    pub fn write_trades_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "investor_id,date,volume_bought,volume_sold").unwrap();
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{}",
                self.id(r.investor),
                self.date_of(r.day).format("%Y-%m-%d"),
                r.volume_bought,
                r.volume_sold
            )
            .unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Dump investor categories in the meta CSV format.
    pub fn write_meta_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "investor_id,category").unwrap();
        for (id, cat) in self.ids.iter().zip(&self.categories) {
            writeln!(out, "{},{}", id, cat).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Dump current activity windows in the windows CSV format.
    pub fn write_windows_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "investor_id,first_date,last_date").unwrap();
        for (id, w) in self.ids.iter().zip(&self.windows) {
            writeln!(
                out,
                "{},{},{}",
                id,
                self.date_of(w.first_day).format("%Y-%m-%d"),
                self.date_of(w.last_day).format("%Y-%m-%d")
            )
            .unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn record_ranges(records: &[TradingRecord], n_investors: usize) -> Vec<Range<usize>> {
    let mut ranges = vec![0..0; n_investors];
    let mut start = 0usize;
    for ix in 0..n_investors as u32 {
        let end = records[start..]
            .iter()
            .position(|r| r.investor != ix)
            .map(|off| start + off)
            .unwrap_or(records.len());
        ranges[ix as usize] = start..end;
        start = end;
    }
    ranges
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("invalid ISO-8601 date {s:?}"),
    })
}

fn parse_volume(path: &Path, line: u64, field: &str, s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let msg = if s.parse::<i64>().map(|v| v < 0).unwrap_or(false) {
        format!("negative {field} {s:?}")
    } else {
        format!("non-numeric {field} {s:?}")
    };
    Err(Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    })
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("{other:?}"),
            },
        })
}

fn check_header(
    path: &Path,
    rdr: &mut csv::Reader<std::fs::File>,
    expected: &[&str],
) -> Result<()> {
    let headers = rdr.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: e.to_string(),
    })?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

fn row_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn field<'a>(
    path: &Path,
    record: &'a csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<&'a str> {
    record.get(idx).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: row_line(record),
        msg: format!("missing {name} column"),
    })
}

/// Load a trading history from CSV files.
///
/// Returns the dataset (windows defaulted to the full calendar; switch with
/// [`Dataset::with_window_policy`]) together with row-drop/merge counts.
pub fn load_trades(
    trades_path: &Path,
    meta_path: Option<&Path>,
    windows_path: Option<&Path>,
) -> Result<(Dataset, IngestReport)> {
    let mut rdr = open_csv(trades_path)?;
    check_header(
        trades_path,
        &mut rdr,
        &["investor_id", "date", "volume_bought", "volume_sold"],
    )?;

    let mut raw: Vec<(String, NaiveDate, u64, u64)> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            path: trades_path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = row_line(&row);
        let id = field(trades_path, &row, 0, "investor_id")?.to_string();
        let date = parse_date(trades_path, line, field(trades_path, &row, 1, "date")?)?;
        let vb = parse_volume(
            trades_path,
            line,
            "volume_bought",
            field(trades_path, &row, 2, "volume_bought")?,
        )?;
        let vs = parse_volume(
            trades_path,
            line,
            "volume_sold",
            field(trades_path, &row, 3, "volume_sold")?,
        )?;
        raw.push((id, date, vb, vs));
    }

    let mut calendar: Vec<NaiveDate> = raw.iter().map(|r| r.1).collect();
    calendar.sort_unstable();
    calendar.dedup();

    let day_of = |date: NaiveDate| calendar.binary_search(&date).unwrap() as Day;
    let rows: Vec<(String, Day, u64, u64)> = raw
        .into_iter()
        .map(|(id, date, vb, vs)| (id, day_of(date), vb, vs))
        .collect();

    let meta = match meta_path {
        Some(p) => load_meta(p)?,
        None => BTreeMap::new(),
    };
    let provided = match windows_path {
        Some(p) => load_windows(p, &calendar)?,
        None => BTreeMap::new(),
    };

    Dataset::from_day_rows(rows, calendar, &meta, &provided)
}

fn load_meta(path: &Path) -> Result<BTreeMap<String, Category>> {
    let mut rdr = open_csv(path)?;
    check_header(path, &mut rdr, &["investor_id", "category"])?;
    let mut meta = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = row_line(&row);
        let id = field(path, &row, 0, "investor_id")?.to_string();
        let cat_str = field(path, &row, 1, "category")?;
        let cat = Category::parse(cat_str).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("unknown category {cat_str:?} (expected C, FI, G, NP, H or FO)"),
        })?;
        if meta.insert(id.clone(), cat).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("duplicate metadata row for investor {id}"),
            });
        }
    }
    Ok(meta)
}

fn load_windows(path: &Path, calendar: &[NaiveDate]) -> Result<BTreeMap<String, (Day, Day)>> {
    let mut rdr = open_csv(path)?;
    check_header(path, &mut rdr, &["investor_id", "first_date", "last_date"])?;
    let mut windows = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = row_line(&row);
        let id = field(path, &row, 0, "investor_id")?.to_string();
        let first = parse_date(path, line, field(path, &row, 1, "first_date")?)?;
        let last = parse_date(path, line, field(path, &row, 2, "last_date")?)?;
        let lookup = |date: NaiveDate| -> Result<Day> {
            calendar
                .binary_search(&date)
                .map(|i| i as Day)
                .map_err(|_| {
                    Error::Range(format!(
                        "{}:{line}: window date {date} is not a trading day of the calendar",
                        path.display()
                    ))
                })
        };
        let first_day = lookup(first)?;
        let last_day = lookup(last)?;
        if first_day > last_day {
            return Err(Error::Range(format!(
                "{}:{line}: window for {id} has first_date after last_date",
                path.display()
            )));
        }
        if windows.insert(id.clone(), (first_day, last_day)).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("duplicate window row for investor {id}"),
            });
        }
    }
    Ok(windows)
}

/// Retain exactly the investors with at least `min_active_days` distinct
/// trading days.
pub fn filter_active(ds: &Dataset, min_active_days: u32) -> Result<Dataset> {
    if min_active_days == 0 {
        return Err(Error::Config("min_active_days must be at least 1".into()));
    }
    let keep: Vec<bool> = (0..ds.n_investors() as u32)
        .map(|ix| ds.distinct_day_count(ix) >= min_active_days)
        .collect();
    Ok(ds.subset(&keep))
}

/// Activity window of one investor under an explicit policy.
pub fn activity_window(
    ds: &Dataset,
    investor_id: &str,
    policy: WindowPolicy,
) -> Result<ActivityWindow> {
    let ix = ds
        .index_of(investor_id)
        .ok_or_else(|| Error::UnknownInvestor(investor_id.to_string()))?;
    ds.window_under(ix, policy)
}

/// Empirical CCDF of per-investor transaction-day counts.
///
/// One point per distinct observed count `N`, paired with the fraction of
/// investors whose count is at least `N`.
pub fn activity_ccdf(ds: &Dataset) -> Result<Vec<(u32, Prob)>> {
    if ds.n_investors() == 0 {
        return Err(Error::EmptyInput("dataset has no investors".into()));
    }
    let mut counts: Vec<u32> = (0..ds.n_investors() as u32)
        .map(|ix| ds.distinct_day_count(ix))
        .collect();
    counts.sort_unstable();
    let n = counts.len() as Prob;
    let mut points = Vec::new();
    let mut i = 0;
    while i < counts.len() {
        let value = counts[i];
        // every investor from position i onward has count >= value
        points.push((value, (counts.len() - i) as Prob / n));
        while i < counts.len() && counts[i] == value {
            i += 1;
        }
    }
    Ok(points)
}
