//! Date-expression extraction.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

use super::types::{TimePoint, MAX_YEAR, MIN_YEAR};

const MONTH: &str = r"(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sept?(?:ember)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)";

static DAY_MONTH_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)\b(\d{{1,2}})(?:st|nd|rd|th)?\s+{MONTH}\.?,?\s+(\d{{4}})\b")).unwrap());
static MONTH_DAY_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)\b{MONTH}\.?\s+(\d{{1,2}})(?:st|nd|rd|th)?,?\s+(\d{{4}})\b")).unwrap());
static MONTH_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?i)\b{MONTH}\.?,?\s+(\d{{4}})\b")).unwrap());
static BARE_YEAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d{4})\b").unwrap());

/// A date expression located in text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateMatch {
    pub span: Range<usize>,
    pub point: TimePoint,
}

fn month_number(name: &str) -> u32 {
    let prefix: String = name.chars().take(3).collect::<String>().to_lowercase();
    match prefix.as_str() {
        "jan" => 1,
        "feb" => 2,
        "mar" => 3,
        "apr" => 4,
        "may" => 5,
        "jun" => 6,
        "jul" => 7,
        "aug" => 8,
        "sep" => 9,
        "oct" => 10,
        "nov" => 11,
        "dec" => 12,
        _ => unreachable!("regex only admits month names"),
    }
}

fn year_in_range(s: &str) -> Option<i32> {
    s.parse().ok().filter(|y| (MIN_YEAR..=MAX_YEAR).contains(y))
}

/// Every date expression in `text`, left to right, non-overlapping.
///
/// More specific patterns win: day-month-year and month-day-year, then
/// month-year, then bare four-digit years in 1000–2100. Ranges such as
/// "from 1951 to 1952" or "1878–1972" yield both endpoints as separate matches.
pub fn find_dates(text: &str) -> Vec<DateMatch> {
    let mut found: Vec<DateMatch> = Vec::new();
    let overlaps =
        |found: &[DateMatch], r: &Range<usize>| found.iter().any(|m| m.span.start < r.end && r.start < m.span.end);

    for caps in DAY_MONTH_YEAR.captures_iter(text) {
        let span = caps.get(0).unwrap().range();
        let (Some(year), Ok(day)) = (year_in_range(&caps[3]), caps[1].parse::<u32>()) else {
            continue;
        };
        if let Ok(point) = TimePoint::ymd(year, month_number(&caps[2]), day) {
            if !overlaps(&found, &span) {
                found.push(DateMatch { span, point });
            }
        }
    }
    for caps in MONTH_DAY_YEAR.captures_iter(text) {
        let span = caps.get(0).unwrap().range();
        let (Some(year), Ok(day)) = (year_in_range(&caps[3]), caps[2].parse::<u32>()) else {
            continue;
        };
        if let Ok(point) = TimePoint::ymd(year, month_number(&caps[1]), day) {
            if !overlaps(&found, &span) {
                found.push(DateMatch { span, point });
            }
        }
    }
    for caps in MONTH_YEAR.captures_iter(text) {
        let span = caps.get(0).unwrap().range();
        let Some(year) = year_in_range(&caps[2]) else { continue };
        if let Ok(point) = TimePoint::month(year, month_number(&caps[1])) {
            if !overlaps(&found, &span) {
                found.push(DateMatch { span, point });
            }
        }
    }
    for caps in BARE_YEAR.captures_iter(text) {
        let span = caps.get(0).unwrap().range();
        let Some(year) = year_in_range(&caps[1]) else { continue };
        if !overlaps(&found, &span) {
            found.push(DateMatch { span, point: TimePoint::year(year).expect("range checked") });
        }
    }
    found.sort_by_key(|m| m.span.start);
    found
}

/// Distinct time points mentioned in `text`, in order of first mention.
pub fn parse_timepoints(text: &str) -> Vec<TimePoint> {
    let mut out: Vec<TimePoint> = Vec::new();
    for m in find_dates(text) {
        if !out.contains(&m.point) {
            out.push(m.point);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y(year: i32) -> TimePoint {
        TimePoint::year(year).unwrap()
    }

    #[test]
    fn month_day_year() {
        assert_eq!(parse_timepoints("premiered on January 9, 2018"), vec![TimePoint::ymd(2018, 1, 9).unwrap()]);
    }

    #[test]
    fn no_dates() {
        assert!(parse_timepoints("no dates here").is_empty());
        assert!(parse_timepoints("").is_empty());
    }

    #[test]
    fn year_list() {
        let pts = parse_timepoints("Basketball (8): 1948, 1949, 1951, 1958, 1978, 1996, 1998, 2012");
        assert_eq!(pts, [1948, 1949, 1951, 1958, 1978, 1996, 1998, 2012].map(y).to_vec());
    }

    #[test]
    fn formats_and_granularity() {
        assert_eq!(parse_timepoints("as of 6 May 2021"), vec![TimePoint::ymd(2021, 5, 6).unwrap()]);
        assert_eq!(parse_timepoints("On 13 November 1966, Flight 533"), vec![TimePoint::ymd(1966, 11, 13).unwrap()]);
        assert_eq!(parse_timepoints("as of Oct 1905?"), vec![TimePoint::month(1905, 10).unwrap()]);
        assert_eq!(parse_timepoints("in dec. 1951"), vec![TimePoint::month(1951, 12).unwrap()]);
        assert_eq!(parse_timepoints("since May 7, 1948?"), vec![TimePoint::ymd(1948, 5, 7).unwrap()]);
        assert_eq!(parse_timepoints("on the 21st July 2007"), vec![TimePoint::ymd(2007, 7, 21).unwrap()]);
    }

    #[test]
    fn ranges_emit_both_endpoints() {
        assert_eq!(parse_timepoints("from 1951 to 1952"), vec![y(1951), y(1952)]);
        assert_eq!(parse_timepoints("Pichon-Landry (1878–1972)"), vec![y(1878), y(1972)]);
        assert_eq!(parse_timepoints("2012-2013"), vec![y(2012), y(2013)]);
        assert_eq!(
            parse_timepoints("between Jul 1842 and Nov 1842"),
            vec![TimePoint::month(1842, 7).unwrap(), TimePoint::month(1842, 11).unwrap()]
        );
    }

    #[test]
    fn quantities_are_not_years() {
        assert!(parse_timepoints("a $2.6 million contract, 33.1 million chunks, 10000 fans, 0999").is_empty());
        assert!(parse_timepoints("in the 2000s and 1,000 times").is_empty());
        assert!(parse_timepoints("population 3500").is_empty());
    }

    #[test]
    fn invalid_day_falls_back_to_month() {
        assert_eq!(parse_timepoints("31 February 2019"), vec![TimePoint::month(2019, 2).unwrap()]);
    }

    #[test]
    fn duplicates_removed() {
        assert_eq!(parse_timepoints("in 2009 and again in 2009, then 2018"), vec![y(2009), y(2018)]);
    }

    #[test]
    fn spans_cover_text() {
        let text = "On August 10, 2012, Howard was traded";
        let m = &find_dates(text)[0];
        assert_eq!(&text[m.span.clone()], "August 10, 2012");
    }
}
