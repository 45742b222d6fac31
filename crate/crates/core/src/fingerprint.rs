//! RowID and tuple fingerprints over SHA-256.
//!
//! `RowId = H(pk1 0x1F pk2 ... 0x1F table)`,
//! `Fingerprint = H(hex(RowId) 0x1F c1 0x1F c2 ...)` over the non-NULL columns.

use sha2::{Digest, Sha256};

use crate::types::Value;

pub const SEPARATOR: u8 = 0x1f;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FingerprintError {
    #[error("primary key is empty")]
    EmptyPrimaryKey,
    #[error("primary key value {0} is NULL")]
    NullPrimaryKey(usize),
    #[error("invalid digest hex {0:?}")]
    BadHex(String),
}

macro_rules! digest_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name([u8; 32]);

        impl $name {
            pub fn from_bytes(bytes: [u8; 32]) -> $name {
                $name(bytes)
            }

            pub fn as_bytes(&self) -> &[u8; 32] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl ::std::fmt::Debug for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                write!(f, "{}({})", stringify!($name), &self.to_hex()[..12])
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::fingerprint::FingerprintError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                // only the canonical lowercase rendering is accepted
                if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
                    return Err($crate::fingerprint::FingerprintError::BadHex(s.to_string()));
                }
                let mut out = [0u8; 32];
                hex::decode_to_slice(s, &mut out).map_err(|_| $crate::fingerprint::FingerprintError::BadHex(s.to_string()))?;
                Ok($name(out))
            }
        }

        impl ::serde::Serialize for $name {
            fn serialize<S: ::serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }
    };
}
pub(crate) use digest_newtype;

digest_newtype!(
    /// Ledger key of a tuple: hash of its primary key and table name.
    RowId
);
digest_newtype!(
    /// Hash of a tuple's RowID and non-NULL column values.
    Fingerprint
);

/// Canonical bytes of a non-NULL value. NULL serializes to nothing; callers skip it.
pub fn serialize_value(v: &Value) -> Vec<u8> {
    match v {
        Value::Null => Vec::new(),
        Value::Integer(i) => i.to_string().into_bytes(),
        Value::Decimal(d) => d.to_string().into_bytes(),
        Value::Text(s) | Value::Date(s) => s.as_bytes().to_vec(),
    }
}

pub fn row_id(pk_values: &[Value], table: &str) -> Result<RowId, FingerprintError> {
    if pk_values.is_empty() {
        return Err(FingerprintError::EmptyPrimaryKey);
    }
    let mut h = Sha256::new();
    for (i, v) in pk_values.iter().enumerate() {
        if v.is_null() {
            return Err(FingerprintError::NullPrimaryKey(i));
        }
        h.update(serialize_value(v));
        h.update([SEPARATOR]);
    }
    h.update(table.to_lowercase().as_bytes());
    Ok(RowId(h.finalize().into()))
}

pub fn fingerprint(rid: &RowId, values: &[Value]) -> Fingerprint {
    let mut h = Sha256::new();
    h.update(rid.to_hex().as_bytes());
    for v in values.iter().filter(|v| !v.is_null()) {
        h.update([SEPARATOR]);
        h.update(serialize_value(v));
    }
    Fingerprint(h.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Golden digests computed with coreutils `sha256sum` over printf-built inputs.
    const RID_1234_T1: &str = "66ad75ab1bc42cb64f5bca6fa6f828f06fe2649682d69c2aa171719449c52ed9";
    const RID_1234_T2: &str = "e48471cdb15887af7a5991bc1ca6b8b6d4e824df18038bc2ab33ab6a641197c4";
    const RID_REGION_0: &str = "fa9de4212042946cae2b4829803cb67414ed79b65fb828c101bb94dafa6af92a";
    const FP_REGION_0: &str = "33e3a6030d3589f408695a3b0a1c70d243d5ca76b868af588df67b829139a122";
    const RID_T_5: &str = "c6d029b88aa42025ecc46cd35cc9f0787cf1afefd18f08d7a2132b7e19b391c4";
    const FP_T_5_WITH_NULL: &str = "f3bedb091619067944715215085ecb809d1c9bcb4a5645857e199737a12cb902";
    const RID_PS_COMPOSITE: &str = "334e6067ea3f559735ea51795999dad149da445132015bd444641b9fc4aab57d";
    const FP_PS_COMPOSITE: &str = "b7ae2240a15bd9a192e39fe5b41ecab1fc95ab24ce95d84c6bc70878f776117c";

    fn int(i: i64) -> Value {
        Value::Integer(i)
    }

    #[test]
    fn value_serialization() {
        assert_eq!(serialize_value(&int(-7)), b"-7");
        assert_eq!(serialize_value(&Value::decimal("022.500")), b"22.5");
        assert_eq!(serialize_value(&Value::text("asia")), b"asia");
        assert_eq!(serialize_value(&Value::Date("1995-03-09".into())), b"1995-03-09");
    }

    #[test]
    fn row_id_golden() {
        assert_eq!(row_id(&[int(1234)], "t1").unwrap().to_hex(), RID_1234_T1);
        assert_eq!(row_id(&[int(1234)], "T1").unwrap().to_hex(), RID_1234_T1);
        assert_eq!(row_id(&[int(1234)], "t2").unwrap().to_hex(), RID_1234_T2);
        assert_ne!(row_id(&[int(1234)], "t1").unwrap(), row_id(&[int(1234)], "t2").unwrap());
        assert_eq!(row_id(&[int(7), int(-3)], "ps").unwrap().to_hex(), RID_PS_COMPOSITE);
    }

    #[test]
    fn row_id_rejects_null_or_empty_key() {
        assert_eq!(row_id(&[], "t"), Err(FingerprintError::EmptyPrimaryKey));
        assert_eq!(row_id(&[int(1), Value::Null], "t"), Err(FingerprintError::NullPrimaryKey(1)));
    }

    #[test]
    fn fingerprint_golden() {
        let rid = row_id(&[int(0)], "region").unwrap();
        assert_eq!(rid.to_hex(), RID_REGION_0);
        let row = vec![int(0), Value::text("AFRICA"), Value::text("lar deposits. blithely final packages cajole")];
        assert_eq!(fingerprint(&rid, &row).to_hex(), FP_REGION_0);

        let rid = row_id(&[int(5)], "t").unwrap();
        assert_eq!(rid.to_hex(), RID_T_5);
        assert_eq!(fingerprint(&rid, &[int(5), Value::Null, Value::text("x")]).to_hex(), FP_T_5_WITH_NULL);

        let rid = row_id(&[int(7), int(-3)], "ps").unwrap();
        let row = vec![int(7), int(-3), Value::decimal("022.500"), Value::Date("1995-03-09".into())];
        assert_eq!(fingerprint(&rid, &row).to_hex(), FP_PS_COMPOSITE);
    }

    #[test]
    fn null_columns_add_nothing() {
        let rid = row_id(&[int(5)], "t").unwrap();
        assert_eq!(fingerprint(&rid, &[int(5), Value::Null, Value::Null]), fingerprint(&rid, &[int(5)]));
    }

    #[test]
    fn hex_round_trip_and_validation() {
        let rid: RowId = RID_1234_T1.parse().unwrap();
        assert_eq!(rid.to_string(), RID_1234_T1);
        assert!(RID_1234_T1.to_uppercase().parse::<RowId>().is_err());
        assert!("abc".parse::<Fingerprint>().is_err());
        assert!(("zz".to_string() + &RID_1234_T1[2..]).parse::<Fingerprint>().is_err());
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        prop_oneof![
            Just(Value::Null),
            any::<i64>().prop_map(Value::Integer),
            (any::<i32>(), 0u32..8).prop_map(|(m, s)| Value::Decimal(crate::types::Decimal::from_raw(
                rust_decimal::Decimal::new(m as i64, s)
            ))),
            "[a-zA-Z0-9 ]{0,12}".prop_map(Value::Text),
        ]
    }

    proptest! {
        #[test]
        fn deterministic(pk in any::<i64>(), rest in prop::collection::vec(arb_value(), 0..6)) {
            let rid = row_id(&[int(pk)], "t").unwrap();
            let mut row = vec![int(pk)];
            row.extend(rest);
            prop_assert_eq!(fingerprint(&rid, &row), fingerprint(&rid, &row.clone()));
        }

        #[test]
        fn hex_parse_inverts_render(bytes in any::<[u8; 32]>()) {
            let f = Fingerprint::from_bytes(bytes);
            prop_assert_eq!(f.to_hex().parse::<Fingerprint>().unwrap(), f);
        }
    }
}
