use std::fmt;

use super::normalize_key;

/// A calendar date at year, month or day precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CalendarDate {
    pub year: i32,
    pub month: Option<u8>,
    pub day: Option<u8>,
}

impl CalendarDate {
    pub fn ymd(year: i32, month: u8, day: u8) -> Self {
        CalendarDate { year, month: Some(month), day: Some(day) }
    }

    pub fn year(year: i32) -> Self {
        CalendarDate { year, month: None, day: None }
    }

    /// Dates agree when every component populated on both sides is equal,
    /// so a bare year is the same date as any day in that year. Not
    /// transitive.
    pub fn same_date(&self, other: &CalendarDate) -> bool {
        fn agree(a: Option<u8>, b: Option<u8>) -> bool {
            match (a, b) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            }
        }
        self.year == other.year && agree(self.month, other.month) && agree(self.day, other.day)
    }
}

impl fmt::Display for CalendarDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
        }
        if let Some(d) = self.day {
            write!(f, "-{d:02}")?;
        }
        Ok(())
    }
}

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

fn digits(s: &str, min: usize, max: usize) -> Option<u32> {
    if (min..=max).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

fn month_number(s: &str) -> Option<u8> {
    MONTHS.iter().position(|m| *m == s).map(|i| i as u8 + 1)
}

fn checked(year: u32, month: u32, day: u32) -> Option<CalendarDate> {
    let (year, month, day) = (year as i32, u8::try_from(month).ok()?, u8::try_from(day).ok()?);
    if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
        return None;
    }
    Some(CalendarDate::ymd(year, month, day))
}

fn parse_iso(text: &str) -> Option<CalendarDate> {
    let mut parts = text.split('-');
    let (y, m, d) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    checked(digits(y, 4, 4)?, digits(m, 2, 2)?, digits(d, 2, 2)?)
}

/// Recognizes `YYYY-MM-DD`, `D Month YYYY`, `Month D, YYYY` and a bare
/// four-digit year in 1000..=2999. Month names are English and
/// case-insensitive; punctuation other than the ISO hyphens is ignored.
pub fn parse_date(text: &str) -> Option<CalendarDate> {
    let text = text.trim();
    if let Some(date) = parse_iso(text) {
        return Some(date);
    }
    let key = normalize_key(text);
    let tokens: Vec<&str> = key.split(' ').collect();
    match tokens.as_slice() {
        [y] => {
            let y = digits(y, 4, 4)?;
            (1000..=2999).contains(&y).then(|| CalendarDate::year(y as i32))
        }
        [a, b, y] => {
            let y = digits(y, 4, 4)?;
            if let (Some(d), Some(m)) = (digits(a, 1, 2), month_number(b)) {
                checked(y, m.into(), d)
            } else if let (Some(m), Some(d)) = (month_number(a), digits(b, 1, 2)) {
                checked(y, m.into(), d)
            } else {
                None
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let d = CalendarDate::ymd(1994, 5, 23);
        assert_eq!(parse_date("1994-05-23"), Some(d));
        assert_eq!(parse_date("23 May 1994"), Some(d));
        assert_eq!(parse_date("May 23, 1994"), Some(d));
        assert_eq!(parse_date("may 23 1994"), Some(d));
        assert_eq!(parse_date("  1994 "), Some(CalendarDate::year(1994)));
        assert_eq!(parse_date("Pulp Fiction"), None);
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(parse_date("0999"), None);
        assert_eq!(parse_date("3000"), None);
        assert_eq!(parse_date("1994-13-01"), None);
        assert_eq!(parse_date("31 April 1994"), None);
        assert_eq!(parse_date("29 February 1900"), None);
        assert_eq!(parse_date("29 February 2000"), Some(CalendarDate::ymd(2000, 2, 29)));
        assert_eq!(parse_date("1994-5-23"), None);
        assert_eq!(parse_date("19940523"), None);
        assert_eq!(parse_date("23 Mai 1994"), None);
        assert_eq!(parse_date("May 1994"), None);
        assert_eq!(parse_date(""), None);
    }

    #[test]
    fn equality_rules() {
        let day = CalendarDate::ymd(1994, 5, 23);
        assert!(day.same_date(&CalendarDate::year(1994)));
        assert!(CalendarDate::year(1994).same_date(&day));
        assert!(!day.same_date(&CalendarDate::ymd(1994, 5, 24)));
        assert!(!day.same_date(&CalendarDate::year(1995)));
        assert_eq!(day.to_string(), "1994-05-23");
    }
}
