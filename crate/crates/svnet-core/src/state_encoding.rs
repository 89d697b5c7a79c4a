//! Categorical trading states from daily volumes.
//!
//! A day with volume is classified by the ratio
//! `r = (vb - vs) / (vb + vs)`: primarily buying above the threshold,
//! primarily selling below its negation, buying-and-selling in between.
//! The comparison is carried out in exact integer arithmetic
//! (`vb - vs` against `±theta * (vb + vs)`, cross-multiplied), so threshold
//! boundaries never suffer floating-point artifacts.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::market_data::{ActivityWindow, Dataset, Day};

/// Trading state of one investor on one day. Inactive days have no state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TradeState {
    /// Primarily buying.
    Buy,
    /// Primarily selling.
    Sell,
    /// Buying and selling comparable amounts within the day.
    BuySell,
}

impl TradeState {
    pub const ALL: [TradeState; 3] = [TradeState::Buy, TradeState::Sell, TradeState::BuySell];

    /// Position in the canonical state order (b, s, bs).
    pub fn index(self) -> usize {
        match self {
            TradeState::Buy => 0,
            TradeState::Sell => 1,
            TradeState::BuySell => 2,
        }
    }

    pub fn from_index(i: usize) -> TradeState {
        Self::ALL[i]
    }

    pub fn code(self) -> &'static str {
        match self {
            TradeState::Buy => "b",
            TradeState::Sell => "s",
            TradeState::BuySell => "bs",
        }
    }
}

impl fmt::Display for TradeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TradeState {
    type Err = Error;

    fn from_str(s: &str) -> Result<TradeState> {
        match s {
            "b" => Ok(TradeState::Buy),
            "s" => Ok(TradeState::Sell),
            "bs" => Ok(TradeState::BuySell),
            _ => Err(Error::Domain(format!(
                "unknown trading state {s:?} (expected b, s or bs)"
            ))),
        }
    }
}

/// Classification threshold, an exact rational in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Theta {
    num: u64,
    den: u64,
}

impl Theta {
    pub fn new(num: u64, den: u64) -> Result<Theta> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::Config(format!(
                "theta must lie strictly between 0 and 1, got {num}/{den}"
            )));
        }
        let g = gcd(num, den);
        Ok(Theta {
            num: num / g,
            den: den / g,
        })
    }

    /// Parse a plain decimal such as `0.01`.
    pub fn parse(s: &str) -> Result<Theta> {
        let s = s.trim();
        let bad = |msg: &str| Error::Config(format!("theta {s:?}: {msg}"));
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad("not a decimal number"));
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad("not a plain decimal number"));
        }
        if frac_part.len() > 18 {
            return Err(bad("more than 18 decimal digits"));
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad("integer part overflows"))?
        };
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad("fraction overflows"))?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| bad("value overflows"))?;
        Theta::new(num, den)
    }

    /// Exact conversion from an `f64` via its shortest decimal form.
    pub fn from_f64(x: f64) -> Result<Theta> {
        Theta::parse(&format!("{x}"))
    }

    /// Approximate value, for display and manifests only.
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Classify a day from its bought/sold volumes; `None` for inactive days.
///
/// Ties `|r| = theta` classify as buying-and-selling (closed inequalities).
/// The buying-and-selling branch additionally requires both volumes to be
/// positive, which for a valid theta below 1 is always the case there.
pub fn encode_day(vb: u64, vs: u64, theta: Theta) -> Option<TradeState> {
    let total = vb as u128 + vs as u128;
    if total == 0 {
        return None;
    }
    let diff = vb as i128 - vs as i128;
    let lhs = diff * theta.den as i128;
    let rhs = (theta.num as u128 * total) as i128;
    if lhs > rhs {
        Some(TradeState::Buy)
    } else if lhs < -rhs {
        Some(TradeState::Sell)
    } else if vb > 0 && vs > 0 {
        Some(TradeState::BuySell)
    } else {
        None
    }
}

/// Sparse investor-by-day state assignment.
#[derive(Debug, Clone)]
pub struct StateMatrix {
    theta: Theta,
    calendar_length: u32,
    /// Per investor: the days spent in each state, sorted ascending.
    days: Vec<[Vec<Day>; 3]>,
    n_entries: usize,
}

impl StateMatrix {
    pub fn theta(&self) -> Theta {
        self.theta
    }

    pub fn n_investors(&self) -> usize {
        self.days.len()
    }

    pub fn calendar_length(&self) -> u32 {
        self.calendar_length
    }

    pub fn n_entries(&self) -> usize {
        self.n_entries
    }

    /// Days the investor spent in `state`, ascending.
    pub fn days_in_state(&self, investor: u32, state: TradeState) -> &[Day] {
        &self.days[investor as usize][state.index()]
    }

    pub fn state_of(&self, investor: u32, day: Day) -> Option<TradeState> {
        if investor as usize >= self.days.len() {
            return None;
        }
        TradeState::ALL
            .into_iter()
            .find(|&s| self.days[investor as usize][s.index()].binary_search(&day).is_ok())
    }

    /// All entries of one investor as (day, state), sorted by day.
    pub fn entries_of(&self, investor: u32) -> Vec<(Day, TradeState)> {
        let mut entries: Vec<(Day, TradeState)> = TradeState::ALL
            .into_iter()
            .flat_map(|s| {
                self.days[investor as usize][s.index()]
                    .iter()
                    .map(move |&d| (d, s))
            })
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        entries
    }

    /// Number of days with any state.
    pub fn active_day_count(&self, investor: u32) -> u32 {
        self.days[investor as usize]
            .iter()
            .map(|v| v.len() as u32)
            .sum()
    }

    /// Counts of (B, S, BS) days inside the window, inclusive.
    pub fn state_counts(&self, investor: u32, window: ActivityWindow) -> (u32, u32, u32) {
        if investor as usize >= self.days.len() {
            return (0, 0, 0);
        }
        let count = |state: TradeState| self.count_in(investor, state, window);
        (
            count(TradeState::Buy),
            count(TradeState::Sell),
            count(TradeState::BuySell),
        )
    }

    pub(crate) fn count_in(&self, investor: u32, state: TradeState, window: ActivityWindow) -> u32 {
        let days = &self.days[investor as usize][state.index()];
        let lo = days.partition_point(|&d| d < window.first_day);
        let hi = days.partition_point(|&d| d <= window.last_day);
        (hi - lo) as u32
    }

    /// Dump as CSV `investor_id,date,state`, ordered by (investor, day).
    pub fn write_csv(&self, ds: &Dataset, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "investor_id,date,state").unwrap();
        for ix in 0..self.n_investors() as u32 {
            for (day, state) in self.entries_of(ix) {
                writeln!(
                    out,
                    "{},{},{}",
                    ds.id(ix),
                    ds.date_of(day).format("%Y-%m-%d"),
                    state
                )
                .unwrap();
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Encode every record of the dataset.
pub fn build_state_matrix(ds: &Dataset, theta: Theta) -> StateMatrix {
    let mut days: Vec<[Vec<Day>; 3]> = vec![Default::default(); ds.n_investors()];
    let mut n_entries = 0usize;
    for rec in ds.records() {
        if let Some(state) = encode_day(rec.volume_bought, rec.volume_sold, theta) {
            days[rec.investor as usize][state.index()].push(rec.day);
            n_entries += 1;
        }
    }
    // records are sorted by (investor, day), so each list is already sorted
    StateMatrix {
        theta,
        calendar_length: ds.calendar_length(),
        days,
        n_entries,
    }
}

/// Counts of (B, S, BS) days of `investor` inside `window`.
pub fn state_counts(m: &StateMatrix, investor: u32, window: ActivityWindow) -> (u32, u32, u32) {
    m.state_counts(investor, window)
}
