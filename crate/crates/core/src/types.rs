//! Column types and typed values shared by every layer of the gateway.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rust_decimal::{Decimal as RawDecimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

/// Number of fractional digits kept by decimal arithmetic.
pub const DECIMAL_SCALE: u32 = 10;

/// Declared type of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataType {
    Integer,
    Decimal,
    Text,
    Date,
}

impl DataType {
    pub fn parse(name: &str) -> Option<DataType> {
        match name.to_ascii_lowercase().as_str() {
            "integer" | "int" | "bigint" => Some(DataType::Integer),
            "decimal" | "numeric" => Some(DataType::Decimal),
            "text" => Some(DataType::Text),
            "date" => Some(DataType::Date),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DataType::Integer => "INTEGER",
            DataType::Decimal => "DECIMAL",
            DataType::Text => "TEXT",
            DataType::Date => "DATE",
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Error raised when text cannot be read as a decimal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal literal {0:?}")]
pub struct DecimalParseError(pub String);

/// A decimal number held in normalized form.
///
/// Normalized means: no leading `+`, no redundant leading zeros, no trailing
/// fractional zeros, no trailing `.`, and no negative zero. Two decimals are
/// equal exactly when their canonical strings are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decimal(RawDecimal);

impl Decimal {
    pub const ZERO: Decimal = Decimal(RawDecimal::ZERO);

    pub fn from_raw(raw: RawDecimal) -> Decimal {
        if raw.is_zero() {
            return Decimal::ZERO;
        }
        Decimal(raw.normalize())
    }

    /// Round to the arithmetic scale, half-to-even, then normalize.
    pub fn rounded(raw: RawDecimal) -> Decimal {
        Decimal::from_raw(raw.round_dp_with_strategy(DECIMAL_SCALE, RoundingStrategy::MidpointNearestEven))
    }

    pub fn from_i64(v: i64) -> Decimal {
        Decimal::from_raw(RawDecimal::from(v))
    }

    pub fn raw(self) -> RawDecimal {
        self.0
    }

    /// The value as an integer when it has no fractional part.
    pub fn to_i64_exact(self) -> Option<i64> {
        if self.0.fract().is_zero() {
            i64::try_from(self.0.trunc()).ok()
        } else {
            None
        }
    }
}

impl FromStr for Decimal {
    type Err = DecimalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DecimalParseError(s.to_string());
        let body = s.strip_prefix(['-', '+']).unwrap_or(s);
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !digits_ok(int_part) || !digits_ok(frac_part) || (int_part.is_empty() && frac_part.is_empty()) {
            return Err(err());
        }
        let mut canonical = String::with_capacity(s.len() + 1);
        if s.starts_with('-') {
            canonical.push('-');
        }
        canonical.push_str(if int_part.is_empty() { "0" } else { int_part });
        if !frac_part.is_empty() {
            canonical.push('.');
            canonical.push_str(frac_part);
        }
        let raw = RawDecimal::from_str_exact(&canonical).map_err(|_| err())?;
        Ok(Decimal::from_raw(raw))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single typed attribute value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Null,
    Integer(i64),
    Decimal(Decimal),
    Text(String),
    /// ISO `YYYY-MM-DD`, compared as text.
    Date(String),
}

pub type Row = Vec<Value>;

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    pub fn decimal(s: &str) -> Value {
        Value::Decimal(s.parse().expect("valid decimal literal"))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "NULL",
            Value::Integer(_) => "INTEGER",
            Value::Decimal(_) => "DECIMAL",
            Value::Text(_) => "TEXT",
            Value::Date(_) => "DATE",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Integer(_) | Value::Decimal(_) => 1,
            Value::Text(_) | Value::Date(_) => 2,
        }
    }

    fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) | Value::Date(s) => Some(s),
            _ => None,
        }
    }

    /// Comparison under SQL rules: `None` when either side is NULL or the
    /// types are not comparable.
    pub fn sql_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => None,
            (Value::Integer(a), Value::Integer(b)) => Some(a.cmp(b)),
            (Value::Integer(a), Value::Decimal(b)) => Some(RawDecimal::from(*a).cmp(&b.raw())),
            (Value::Decimal(a), Value::Integer(b)) => Some(a.raw().cmp(&RawDecimal::from(*b))),
            (Value::Decimal(a), Value::Decimal(b)) => Some(a.cmp(b)),
            _ => match (self.as_str(), other.as_str()) {
                (Some(a), Some(b)) => Some(a.cmp(b)),
                _ => None,
            },
        }
    }

    /// Whether the two values belong to comparable type classes.
    pub fn comparable_with(&self, other: &Value) -> bool {
        self.is_null() || other.is_null() || self.rank() == other.rank()
    }
}

/// Total order used for primary-key ordering and sorting. NULL sorts first,
/// numbers before strings.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.rank().cmp(&other.rank()) {
            Ordering::Equal => {}
            o => return o,
        }
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Text(a), Value::Date(b)) | (Value::Date(a), Value::Text(b)) => {
                a.cmp(b).then(self.type_name().cmp(other.type_name()))
            }
            _ => self
                .sql_cmp(other)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.type_name().cmp(other.type_name())),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Integer(v) => write!(f, "{v}"),
            Value::Decimal(d) => write!(f, "{d}"),
            Value::Text(s) | Value::Date(s) => f.write_str(s),
        }
    }
}

/// Checks that `s` is a calendar date written as `YYYY-MM-DD`.
pub fn is_iso_date(s: &str) -> bool {
    s.len() == 10 && chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_normalization() {
        let cases = [
            ("022.500", "22.5"),
            ("-0", "0"),
            ("-0.000", "0"),
            ("+5", "5"),
            ("5.", "5"),
            (".25", "0.25"),
            ("-001.10", "-1.1"),
            ("100", "100"),
        ];
        for (input, expected) in cases {
            assert_eq!(input.parse::<Decimal>().unwrap().to_string(), expected, "{input}");
        }
    }

    #[test]
    fn decimal_rejects_garbage() {
        for bad in ["", ".", "1e5", "abc", "1.2.3", "--1", " 1"] {
            assert!(bad.parse::<Decimal>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn rounding_is_half_even() {
        let r = |s: &str| Decimal::rounded(RawDecimal::from_str_exact(s).unwrap()).to_string();
        assert_eq!(r("0.00000000005"), "0");
        assert_eq!(r("0.00000000015"), "0.0000000002");
        assert_eq!(r("0.00000000025"), "0.0000000002");
    }

    #[test]
    fn sql_cmp_rules() {
        assert_eq!(Value::Integer(2).sql_cmp(&Value::decimal("1.5")), Some(Ordering::Greater));
        assert_eq!(Value::Null.sql_cmp(&Value::Null), None);
        assert_eq!(
            Value::Date("1995-01-01".into()).sql_cmp(&Value::text("1996-01-01")),
            Some(Ordering::Less)
        );
        assert_eq!(Value::Integer(1).sql_cmp(&Value::text("1")), None);
    }

    #[test]
    fn iso_dates() {
        assert!(is_iso_date("1995-03-09"));
        assert!(!is_iso_date("1995-02-30"));
        assert!(!is_iso_date("1995-3-9"));
    }
}
