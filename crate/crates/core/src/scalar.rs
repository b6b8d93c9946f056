//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
/// Real scalar used for wavelengths, sine-space coordinates and magnitudes: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every literal used in this crate fits in `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count or grid index.
    #[inline]
    fn from_index(i: i64) -> Self {
        Self::from_i64(i).expect("index representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Magnitude ratio to decibels, `20 log10(num / den)`.
#[inline]
pub fn ratio_db<T: Scalar>(num: T, den: T) -> T {
    T::lit(20.0) * (num / den).log10()
}

/// Serde helper for values that may be `+inf` (an unbounded PSLR).
///
/// JSON has no infinity literal, so non-finite values are written as the strings
/// `"inf"`, `"-inf"` or `"nan"`.
pub mod serde_float {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::Scalar;

    pub fn serialize<T: Scalar, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        let v = value.as_f64();
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let v = match Repr::deserialize(d)? {
            Repr::Num(v) => v,
            Repr::Text(t) => match t.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                "nan" => f64::NAN,
                other => return Err(D::Error::custom(format!("expected number, got {other:?}"))),
            },
        };
        T::from_f64(v).ok_or_else(|| D::Error::custom("value out of range"))
    }

    /// Same encoding for optional values.
    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        use super::super::Scalar;

        pub fn serialize<T: Scalar, S: Serializer>(value: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<Option<T>, D::Error> {
            #[derive(Deserialize)]
            struct Wrap<T: Scalar>(#[serde(with = "super")] T);
            Ok(Option::<Wrap<T>>::deserialize(d)?.map(|w| w.0))
        }
    }
}
