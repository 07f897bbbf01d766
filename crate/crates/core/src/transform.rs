//! Value manipulation functions applied to normalized QID values before they
//! become signature tokens.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transform {
    Identity,
    /// Year of a `yyyy-mm-dd` date.
    YearOf,
    /// Street address without leading house-number tokens.
    StreetName,
    /// First `k` characters.
    Prefix(usize),
    /// Final whitespace-delimited token.
    LastToken,
}

impl Transform {
    /// Applies the transform to a normalized, non-absent value. `None` means
    /// the transform does not apply to this value.
    pub fn apply(&self, value: &str) -> Option<String> {
        let out = match self {
            Transform::Identity => Some(value.to_string()),
            Transform::YearOf => year_of(value).map(str::to_string),
            Transform::StreetName => street_name(value),
            Transform::Prefix(k) => Some(value.chars().take(*k).collect()),
            Transform::LastToken => value.split_whitespace().last().map(str::to_string),
        };
        out.filter(|s| !s.is_empty())
    }
}

fn year_of(value: &str) -> Option<&str> {
    let bytes = value.as_bytes();
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return None;
    }
    let digits = |r: std::ops::Range<usize>| bytes[r].iter().all(u8::is_ascii_digit);
    if !(digits(0..4) && digits(5..7) && digits(8..10)) {
        return None;
    }
    let month: u32 = value[5..7].parse().ok()?;
    let day: u32 = value[8..10].parse().ok()?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return None;
    }
    Some(&value[0..4])
}

/// House numbers: `43`, `43a`, `1st`, `12-14`.
fn is_house_number(token: &str) -> bool {
    let mut chars = token.chars().peekable();
    if !chars.peek().is_some_and(|c| c.is_ascii_digit()) {
        return false;
    }
    token
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '/')
}

fn street_name(value: &str) -> Option<String> {
    let rest: Vec<&str> = value
        .split_whitespace()
        .skip_while(|t| is_house_number(t))
        .collect();
    if rest.is_empty() {
        None
    } else {
        Some(rest.join(" "))
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Identity => f.write_str("identity"),
            Transform::YearOf => f.write_str("yearOf"),
            Transform::StreetName => f.write_str("streetName"),
            Transform::Prefix(k) => write!(f, "prefix({k})"),
            Transform::LastToken => f.write_str("lastToken"),
        }
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "identity" => return Ok(Transform::Identity),
            "yearOf" => return Ok(Transform::YearOf),
            "streetName" => return Ok(Transform::StreetName),
            "lastToken" => return Ok(Transform::LastToken),
            _ => {}
        }
        s.strip_prefix("prefix(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|k| k.trim().parse::<usize>().ok())
            .filter(|&k| k > 0)
            .map(Transform::Prefix)
            .ok_or_else(|| Error::UnknownTransform(s.to_string()))
    }
}
