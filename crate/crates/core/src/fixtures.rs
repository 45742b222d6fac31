//! Deterministic TPC-H-shaped data. Not dbgen output: the shapes and key
//! relationships match, the values are synthetic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal as RawDecimal;

use crate::storage::{Database, StorageError, Tuple};
use crate::types::{Decimal, Row, Value};

pub const TPCH_DDL: &str = "\
CREATE TABLE region (r_regionkey INTEGER, r_name TEXT, r_comment TEXT, PRIMARY KEY (r_regionkey));
CREATE TABLE nation (n_nationkey INTEGER, n_name TEXT, n_regionkey INTEGER, n_comment TEXT, PRIMARY KEY (n_nationkey));
CREATE TABLE supplier (s_suppkey INTEGER, s_name TEXT, s_address TEXT, s_nationkey INTEGER, s_phone TEXT, s_acctbal DECIMAL, s_comment TEXT, PRIMARY KEY (s_suppkey));
CREATE TABLE customer (c_custkey INTEGER, c_name TEXT, c_address TEXT, c_nationkey INTEGER, c_phone TEXT, c_acctbal DECIMAL, c_mktsegment TEXT, c_comment TEXT, PRIMARY KEY (c_custkey));
CREATE TABLE part (p_partkey INTEGER, p_name TEXT, p_mfgr TEXT, p_brand TEXT, p_type TEXT, p_size INTEGER, p_container TEXT, p_retailprice DECIMAL, p_comment TEXT, PRIMARY KEY (p_partkey));
CREATE TABLE partsupp (ps_partkey INTEGER, ps_suppkey INTEGER, ps_availqty INTEGER, ps_supplycost DECIMAL, ps_comment TEXT, PRIMARY KEY (ps_partkey, ps_suppkey));
CREATE TABLE orders (o_orderkey INTEGER, o_custkey INTEGER, o_orderstatus TEXT, o_totalprice DECIMAL, o_orderdate DATE, o_orderpriority TEXT, o_clerk TEXT, o_shippriority INTEGER, o_comment TEXT, PRIMARY KEY (o_orderkey));
CREATE TABLE lineitem (l_orderkey INTEGER, l_partkey INTEGER, l_suppkey INTEGER, l_linenumber INTEGER, l_quantity DECIMAL, l_extendedprice DECIMAL, l_discount DECIMAL, l_tax DECIMAL, l_returnflag TEXT, l_linestatus TEXT, l_shipdate DATE, l_commitdate DATE, l_receiptdate DATE, l_shipinstruct TEXT, l_shipmode TEXT, l_comment TEXT, PRIMARY KEY (l_orderkey, l_linenumber));
";

pub const TABLES: [&str; 8] = ["customer", "lineitem", "nation", "orders", "part", "partsupp", "region", "supplier"];

const REGIONS: [&str; 5] = ["africa", "america", "asia", "europe", "middle east"];
const NATIONS: [(&str, i64); 25] = [
    ("algeria", 0),
    ("argentina", 1),
    ("brazil", 1),
    ("canada", 1),
    ("egypt", 4),
    ("ethiopia", 0),
    ("france", 3),
    ("germany", 3),
    ("india", 2),
    ("indonesia", 2),
    ("iran", 4),
    ("iraq", 4),
    ("japan", 2),
    ("jordan", 4),
    ("kenya", 0),
    ("morocco", 0),
    ("mozambique", 0),
    ("peru", 1),
    ("china", 2),
    ("romania", 3),
    ("saudi arabia", 4),
    ("vietnam", 2),
    ("russia", 3),
    ("united kingdom", 3),
    ("united states", 1),
];
const SEGMENTS: [&str; 5] = ["automobile", "building", "furniture", "machinery", "household"];
const PRIORITIES: [&str; 5] = ["1-urgent", "2-high", "3-medium", "4-not specified", "5-low"];
const SHIPMODES: [&str; 7] = ["reg air", "air", "rail", "ship", "truck", "mail", "fob"];
const INSTRUCT: [&str; 4] = ["deliver in person", "collect cod", "none", "take back return"];
const CONTAINERS: [&str; 8] = ["sm case", "sm box", "med bag", "med box", "lg case", "lg box", "jumbo pkg", "wrap pack"];
const TYPE_A: [&str; 6] = ["standard", "small", "medium", "large", "economy", "promo"];
const TYPE_B: [&str; 5] = ["anodized", "burnished", "plated", "polished", "brushed"];
const TYPE_C: [&str; 5] = ["tin", "nickel", "brass", "steel", "copper"];
const WORDS: [&str; 16] = [
    "furiously", "carefully", "blithely", "slyly", "quickly", "final", "ironic", "even", "pending", "regular",
    "deposits", "requests", "packages", "accounts", "theodolites", "instructions",
];

/// Row counts per table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scale {
    pub customer: usize,
    pub lineitem: usize,
    pub nation: usize,
    pub orders: usize,
    pub part: usize,
    pub partsupp: usize,
    pub region: usize,
    pub supplier: usize,
}

impl Scale {
    pub const SF0_001: Scale = Scale {
        customer: 150,
        lineitem: 6005,
        nation: 25,
        orders: 1500,
        part: 200,
        partsupp: 700,
        region: 5,
        supplier: 10,
    };
    pub const SF0_002: Scale = Scale {
        customer: 300,
        lineitem: 11957,
        nation: 25,
        orders: 3000,
        part: 400,
        partsupp: 1500,
        region: 5,
        supplier: 20,
    };
    pub const SF0_005: Scale = Scale {
        customer: 750,
        lineitem: 30201,
        nation: 25,
        orders: 7500,
        part: 1000,
        partsupp: 3900,
        region: 5,
        supplier: 50,
    };
    pub const SF0_01: Scale = Scale {
        customer: 1500,
        lineitem: 60175,
        nation: 25,
        orders: 15000,
        part: 2000,
        partsupp: 8000,
        region: 5,
        supplier: 100,
    };

    pub fn preset(name: &str) -> Option<Scale> {
        match name {
            "0.001" => Some(Scale::SF0_001),
            "0.002" => Some(Scale::SF0_002),
            "0.005" => Some(Scale::SF0_005),
            "0.01" => Some(Scale::SF0_01),
            _ => None,
        }
    }

    pub fn count(&self, table: &str) -> Option<usize> {
        Some(match table {
            "customer" => self.customer,
            "lineitem" => self.lineitem,
            "nation" => self.nation,
            "orders" => self.orders,
            "part" => self.part,
            "partsupp" => self.partsupp,
            "region" => self.region,
            "supplier" => self.supplier,
            _ => return None,
        })
    }

    pub fn total(&self) -> usize {
        TABLES.iter().map(|t| self.count(t).unwrap()).sum()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("inconsistent scale: {0}")]
    Scale(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

fn int(v: i64) -> Value {
    Value::Integer(v)
}

fn money(cents: i64) -> Value {
    Value::Decimal(Decimal::from_raw(RawDecimal::new(cents, 2)))
}

fn date(day: i64) -> Value {
    let d = chrono::NaiveDate::from_ymd_opt(1992, 1, 1).unwrap() + chrono::Duration::days(day);
    Value::Date(d.format("%Y-%m-%d").to_string())
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs.choose(&mut self.rng).unwrap()
    }

    fn key(&mut self, n: usize) -> Value {
        int(self.rng.gen_range(1..=n as i64))
    }

    fn comment(&mut self) -> Value {
        let n = self.rng.gen_range(3..7);
        let words: Vec<&str> = (0..n).map(|_| self.pick(&WORDS)).collect();
        Value::text(words.join(" "))
    }

    fn phone(&mut self, nation: i64) -> Value {
        let r = &mut self.rng;
        Value::text(format!("{}-{}-{}-{}", nation + 10, r.gen_range(100..1000), r.gen_range(100..1000), r.gen_range(1000..10000)))
    }

    fn address(&mut self) -> Value {
        let len = self.rng.gen_range(10..25);
        Value::text((0..len).map(|_| self.rng.gen_range(b'a'..=b'z') as char).collect::<String>())
    }
}

/// Builds the eight tables at `scale`. The same seed always yields the same rows.
pub fn generate(scale: &Scale, seed: u64) -> Result<Database, FixtureError> {
    let s = scale;
    if s.region == 0 || s.nation == 0 || s.customer == 0 || s.part == 0 || s.supplier == 0 {
        return Err(FixtureError::Scale("region, nation, customer, part and supplier must be non-empty".into()));
    }
    if s.partsupp > s.part * s.supplier {
        return Err(FixtureError::Scale(format!("{} partsupp rows exceed part x supplier", s.partsupp)));
    }
    if s.lineitem < s.orders || s.lineitem > s.orders * 7 {
        return Err(FixtureError::Scale(format!("{} lineitems cannot fill {} orders with 1..=7 lines", s.lineitem, s.orders)));
    }
    let mut db = Database::new();
    db.create_tables(TPCH_DDL)?;
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed) };
    let put = |db: &mut Database, table: &str, row: Row| db.apply_row_insert(Tuple::new(table, row));

    for k in 0..s.region {
        let name = match REGIONS.get(k) {
            Some(n) => n.to_string(),
            None => format!("region {k}"),
        };
        let row = vec![int(k as i64), Value::text(name), g.comment()];
        put(&mut db, "region", row)?;
    }
    for k in 0..s.nation {
        let (name, region) = match NATIONS.get(k) {
            Some(&(n, r)) if (r as usize) < s.region => (n.to_string(), r),
            _ => (format!("nation {k}"), (k % s.region) as i64),
        };
        let row = vec![int(k as i64), Value::text(name), int(region), g.comment()];
        put(&mut db, "nation", row)?;
    }
    for k in 1..=s.supplier as i64 {
        let nation = g.rng.gen_range(0..s.nation as i64);
        let row = vec![
            int(k),
            Value::text(format!("supplier#{k:09}")),
            g.address(),
            int(nation),
            g.phone(nation),
            money(g.rng.gen_range(-99_999..999_999)),
            g.comment(),
        ];
        put(&mut db, "supplier", row)?;
    }
    for k in 1..=s.customer as i64 {
        let nation = g.rng.gen_range(0..s.nation as i64);
        let row = vec![
            int(k),
            Value::text(format!("customer#{k:09}")),
            g.address(),
            int(nation),
            g.phone(nation),
            money(g.rng.gen_range(-99_999..999_999)),
            Value::text(g.pick(&SEGMENTS)),
            g.comment(),
        ];
        put(&mut db, "customer", row)?;
    }
    let mut retail = Vec::with_capacity(s.part);
    for k in 1..=s.part as i64 {
        let m = g.rng.gen_range(1..=5);
        let price = 90_000 + (k / 10) % 20_001 + 100 * (k % 1000);
        retail.push(price);
        let ty = format!("{} {} {}", g.pick(&TYPE_A), g.pick(&TYPE_B), g.pick(&TYPE_C));
        let name: Vec<&str> = (0..3).map(|_| g.pick(&WORDS)).collect();
        let row = vec![
            int(k),
            Value::text(name.join(" ")),
            Value::text(format!("manufacturer#{m}")),
            Value::text(format!("brand#{m}{}", g.rng.gen_range(1..=5))),
            Value::text(ty),
            int(g.rng.gen_range(1..=50)),
            Value::text(g.pick(&CONTAINERS)),
            money(price),
            g.comment(),
        ];
        put(&mut db, "part", row)?;
    }
    // Round r pairs part p with supplier (p + r) mod S, so pairs never repeat.
    for i in 0..s.partsupp {
        let part = (i % s.part) as i64 + 1;
        let round = (i / s.part) as i64;
        let supp = (part + round) % s.supplier as i64 + 1;
        let row = vec![int(part), int(supp), int(g.rng.gen_range(1..10_000)), money(g.rng.gen_range(100..100_000)), g.comment()];
        put(&mut db, "partsupp", row)?;
    }
    // Every order gets one line, the rest are spread over orders with room left.
    let mut lines = vec![1usize; s.orders];
    let mut open: Vec<usize> = (0..s.orders).collect();
    for _ in s.orders..s.lineitem {
        let slot = g.rng.gen_range(0..open.len());
        let o = open[slot];
        lines[o] += 1;
        if lines[o] == 7 {
            open.swap_remove(slot);
        }
    }
    for (o, &n) in lines.iter().enumerate() {
        let okey = o as i64 + 1;
        let odate = g.rng.gen_range(0..2400);
        let mut total = 0;
        for ln in 1..=n as i64 {
            let part = g.rng.gen_range(1..=s.part as i64);
            let qty = g.rng.gen_range(1..=50);
            let extended = retail[part as usize - 1] * qty;
            total += extended;
            let ship = odate + g.rng.gen_range(1..=121);
            let commit = odate + g.rng.gen_range(30..=90);
            let receipt = ship + g.rng.gen_range(1..=30);
            let row = vec![
                int(okey),
                int(part),
                g.key(s.supplier),
                int(ln),
                money(qty * 100),
                money(extended),
                money(g.rng.gen_range(0..=10)),
                money(g.rng.gen_range(0..=8)),
                Value::text(g.pick(&["r", "a", "n"])),
                Value::text(g.pick(&["o", "f"])),
                date(ship),
                date(commit),
                date(receipt),
                Value::text(g.pick(&INSTRUCT)),
                Value::text(g.pick(&SHIPMODES)),
                g.comment(),
            ];
            put(&mut db, "lineitem", row)?;
        }
        let row = vec![
            int(okey),
            g.key(s.customer),
            Value::text(g.pick(&["o", "f", "p"])),
            money(total),
            date(odate),
            Value::text(g.pick(&PRIORITIES)),
            Value::text(format!("clerk#{:09}", g.rng.gen_range(1..=1000))),
            int(0),
            g.comment(),
        ];
        put(&mut db, "orders", row)?;
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scale {
        Scale { customer: 6, lineitem: 30, nation: 25, orders: 10, part: 8, partsupp: 20, region: 5, supplier: 3 }
    }

    #[test]
    fn preset_totals() {
        assert_eq!(Scale::SF0_001.total(), 8595);
        assert_eq!(Scale::SF0_002.total(), 17207);
        assert_eq!(Scale::SF0_005.total(), 43431);
        assert_eq!(Scale::SF0_01.total(), 86805);
    }

    #[test]
    fn exact_counts_and_determinism() {
        let a = generate(&small(), 7).unwrap();
        for t in TABLES {
            assert_eq!(a.row_count(t).unwrap(), small().count(t).unwrap(), "{t}");
        }
        let b = generate(&small(), 7).unwrap();
        let c = generate(&small(), 8).unwrap();
        let rows = |db: &Database| db.rows("lineitem").unwrap().cloned().collect::<Vec<_>>();
        assert_eq!(rows(&a), rows(&b));
        assert_ne!(rows(&a), rows(&c));
    }

    #[test]
    fn foreign_keys_resolve() {
        let db = generate(&small(), 1).unwrap();
        for row in db.rows("lineitem").unwrap() {
            assert!(db.get_row("orders", &row[..1]).unwrap().is_some());
            assert!(db.get_row("part", &row[1..2]).unwrap().is_some());
            assert!(db.get_row("supplier", &row[2..3]).unwrap().is_some());
        }
        for row in db.rows("customer").unwrap() {
            assert!(db.get_row("nation", &row[3..4]).unwrap().is_some());
        }
    }

    #[test]
    fn round_trips_through_csv() {
        let db = generate(&small(), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        db.save_dir(dir.path()).unwrap();
        let back = Database::load_dir(dir.path()).unwrap();
        for t in TABLES {
            assert!(db.rows(t).unwrap().eq(back.rows(t).unwrap()), "{t}");
        }
    }

    #[test]
    fn impossible_scales() {
        let mut s = small();
        s.partsupp = 25;
        assert!(generate(&s, 1).is_err());
        let mut s = small();
        s.lineitem = 71;
        assert!(generate(&s, 1).is_err());
    }
}
