//! Domain types shared by every stage of the pipeline.
//!
//! Addresses and hashes are stored as raw bytes. Their textual form is always
//! the lowercase `0x`-prefixed hex string, so byte equality and normalized-text
//! equality coincide.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ValidationError;

fn decode_hex<const N: usize>(raw: &str, kind: &'static str) -> Result<[u8; N], ValidationError> {
    let digits = raw
        .strip_prefix("0x")
        .or_else(|| raw.strip_prefix("0X"))
        .unwrap_or(raw);
    let expected = 2 + 2 * N;
    if digits.len() != 2 * N {
        return Err(ValidationError::Length {
            kind,
            input: raw.to_string(),
            expected,
            actual: digits.len() + 2,
        });
    }
    if let Some(ch) = digits.chars().find(|c| !c.is_ascii_hexdigit()) {
        return Err(ValidationError::NonHex {
            kind,
            input: raw.to_string(),
            ch,
        });
    }
    let mut out = [0u8; N];
    // Length and alphabet are checked above, so decoding cannot fail.
    hex::decode_to_slice(digits, &mut out).expect("validated hex");
    Ok(out)
}

macro_rules! hex_id {
    ($name:ident, $len:expr, $kind:expr) => {
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name([u8; $len]);

        impl $name {
            pub const TEXT_LEN: usize = 2 + 2 * $len;

            pub fn parse(raw: &str) -> Result<Self, ValidationError> {
                decode_hex::<$len>(raw.trim(), $kind).map(Self)
            }

            pub const fn from_bytes(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                let mut s = String::with_capacity(Self::TEXT_LEN);
                s.push_str("0x");
                s.push_str(&hex::encode(self.0));
                s
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("0x")?;
                for b in &self.0 {
                    write!(f, "{b:02x}")?;
                }
                Ok(())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self)
            }
        }

        impl FromStr for $name {
            type Err = ValidationError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::parse(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
                Self::parse(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

hex_id!(Address, 20, "address");
hex_id!(TxHash, 32, "transaction hash");

impl Address {
    /// The final seven characters of the normalized address, as used in
    /// ranking tables.
    pub fn short(&self) -> String {
        let full = self.to_hex();
        full[full.len() - 7..].to_string()
    }
}

/// Canonical lowercase form of an account identifier. The `0x` prefix is
/// optional on input and letter case is ignored (checksums are not checked).
pub fn normalize_address(raw: &str) -> Result<Address, ValidationError> {
    Address::parse(raw)
}

pub fn shorten_address(addr: &Address) -> String {
    addr.short()
}

/// One external transaction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub hash: TxHash,
    pub block_number: u64,
    /// Unix seconds, UTC.
    pub timestamp: i64,
    pub from: Address,
    /// `None` for contract creation.
    pub to: Option<Address>,
    /// `None` when the source carried no status field.
    pub success: Option<bool>,
}

impl Transaction {
    pub fn new(
        hash: TxHash,
        block_number: u64,
        timestamp: i64,
        from: Address,
        to: Option<Address>,
        success: Option<bool>,
    ) -> Result<Self, String> {
        if block_number == 0 {
            return Err("blockNumber must be strictly positive".into());
        }
        if timestamp <= 0 {
            return Err("timestamp must be strictly positive".into());
        }
        Ok(Self {
            hash,
            block_number,
            timestamp,
            from,
            to,
            success,
        })
    }

    pub fn datetime(&self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.timestamp, 0).unwrap_or_default()
    }

    pub fn utc_date(&self) -> NaiveDate {
        self.datetime().date_naive()
    }

    /// Sender plus recipient when present. Self-transfers yield the same
    /// address twice.
    pub fn participants(&self) -> impl Iterator<Item = Address> {
        std::iter::once(self.from).chain(self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagKind {
    Contract,
    User,
    Unknown,
}

impl TagKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TagKind::Contract => "contract",
            TagKind::User => "user",
            TagKind::Unknown => "unknown",
        }
    }
}

impl FromStr for TagKind {
    type Err = ValidationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "contract" => Ok(TagKind::Contract),
            "user" => Ok(TagKind::User),
            "unknown" | "" => Ok(TagKind::Unknown),
            other => Err(ValidationError::TagKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tag {
    pub address: Address,
    pub label: String,
    pub kind: TagKind,
}

impl Tag {
    pub fn new(
        address: Address,
        label: impl Into<String>,
        kind: TagKind,
    ) -> Result<Self, ValidationError> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(ValidationError::EmptyLabel(address.to_hex()));
        }
        Ok(Self {
            address,
            label,
            kind,
        })
    }
}
