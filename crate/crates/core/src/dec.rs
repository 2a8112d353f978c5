//! Serde helpers writing integers as decimal strings and reading either
//! strings or plain JSON numbers.

use std::fmt::Display;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
where
    T: FromStr + TryFrom<u64>,
    T::Err: Display,
    D: Deserializer<'de>,
{
    d.deserialize_any(DecVisitor::<T>(std::marker::PhantomData))
}

struct DecVisitor<T>(std::marker::PhantomData<T>);

impl<T> Visitor<'_> for DecVisitor<T>
where
    T: FromStr + TryFrom<u64>,
    T::Err: Display,
{
    type Value = T;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a non-negative integer or a decimal string")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<T, E> {
        T::try_from(v).map_err(|_| E::custom(format!("{v} out of range")))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<T, E> {
        u64::try_from(v).map_err(|_| E::custom(format!("{v} is negative"))).and_then(|u| self.visit_u64(u))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<T, E> {
        v.trim().parse::<T>().map_err(|e| E::custom(format!("{v:?}: {e}")))
    }
}

/// An integer that reads from and writes to a decimal string.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dec<T>(pub T);

impl<T: Display> Serialize for Dec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de, T> Deserialize<'de> for Dec<T>
where
    T: FromStr + TryFrom<u64>,
    T::Err: Display,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        deserialize(d).map(Dec)
    }
}

impl<T> From<T> for Dec<T> {
    fn from(v: T) -> Self {
        Dec(v)
    }
}
