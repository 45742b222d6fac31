use proptest::prelude::*;

use super::*;
use crate::sql::{parse, Query, SelectQuery};

const REGION_DDL: &str =
    "CREATE TABLE region (r_regionkey INTEGER, r_name TEXT, r_comment TEXT, PRIMARY KEY (r_regionkey))";

const REGION_CSV: &str = "r_regionkey,r_name,r_comment
0,AFRICA,lar deposits. blithely final packages cajole
1,AMERICA,hs use ironic even requests
2,ASIA,ges. thinly even pinto beans ca
3,EUROPE,ly final courts cajole furiously final excuse
4,MIDDLE EAST,uickly special accounts cajole carefully blithely close requests
";

fn select(sql: &str) -> SelectQuery {
    match parse(sql).unwrap() {
        Query::Select(s) => s,
        other => panic!("not a select: {other:?}"),
    }
}

fn region_db() -> Database {
    let mut db = Database::new();
    db.create_table(REGION_DDL).unwrap();
    assert_eq!(db.load_csv("region", REGION_CSV.as_bytes(), &CsvOptions::default()).unwrap(), 5);
    db
}

fn int(i: i64) -> Value {
    Value::Integer(i)
}

#[test]
fn create_table_examples() {
    let mut db = Database::new();
    let def = db.create_table(REGION_DDL).unwrap().clone();
    assert_eq!(def.arity(), 3);
    assert_eq!(def.primary_key, vec!["r_regionkey"]);
    assert_eq!(db.create_table(REGION_DDL).unwrap_err(), StorageError::DuplicateTable("region".into()));
    let def = db.create_table("create table t (a integer, b text)").unwrap();
    assert_eq!(def.primary_key, vec!["a", "b"]);
    assert!(matches!(db.create_table("create table u (a blob)"), Err(StorageError::BadType { .. })));
    assert!(matches!(db.create_table("create table v (a integer, a text)"), Err(StorageError::DuplicateColumn { .. })));
}

#[test]
fn ddl_round_trips_through_text() {
    let db = region_db();
    let def = db.table("region").unwrap();
    let mut other = Database::new();
    assert_eq!(other.create_table(&def.to_ddl()).unwrap(), def);
}

#[test]
fn ddl_script_is_all_or_nothing() {
    let mut db = Database::new();
    let err = db.create_tables("create table a (x integer); create table b (y blob);").unwrap_err();
    assert!(matches!(err, StorageError::BadType { .. }));
    assert!(db.catalog().is_empty());
    assert_eq!(db.create_tables("create table a (x integer); create table b (y text);").unwrap(), vec!["a", "b"]);
}

#[test]
fn load_csv_errors() {
    let mut db = region_db();
    let opts = CsvOptions::default();
    db.create_table("create table n (k integer, name text, primary key (k))").unwrap();
    let bad_type = db.load_csv("n", "k,name\nabc,x\n".as_bytes(), &opts).unwrap_err();
    assert!(matches!(bad_type, StorageError::TypeError { .. }), "{bad_type}");
    let dup = db.load_csv("n", "k,name\n1,x\n1,y\n".as_bytes(), &opts).unwrap_err();
    assert!(matches!(dup, StorageError::DuplicatePrimaryKey { .. }));
    let arity = db.load_csv("n", "k,name\n1,x,extra\n".as_bytes(), &opts).unwrap_err();
    assert!(matches!(arity, StorageError::ArityError { line: Some(2), .. }));
    let header = db.load_csv("n", "name,k\nx,1\n".as_bytes(), &opts).unwrap_err();
    assert!(matches!(header, StorageError::HeaderMismatch { .. }));
    assert_eq!(db.row_count("n").unwrap(), 0, "failed loads insert nothing");
    let null_pk = db.load_csv("n", "k,name\n,x\n".as_bytes(), &opts).unwrap_err();
    assert!(matches!(null_pk, StorageError::NullPrimaryKey { .. }));
    let sep = db.load_csv("n", "k,name\n1,a\u{1f}b\n".as_bytes(), &opts).unwrap_err();
    assert!(matches!(sep, StorageError::SeparatorInText { .. }));
}

#[test]
fn csv_null_handling() {
    let mut db = Database::new();
    db.create_table("create table n (k integer, a text, b text, primary key (k))").unwrap();
    db.load_csv("n", "k,a,b\r\n1,,\"\"\r\n".as_bytes(), &CsvOptions::default()).unwrap();
    assert_eq!(db.get_row("n", &[int(1)]).unwrap().unwrap(), &vec![int(1), Value::Null, Value::text("")]);
    let opts = CsvOptions { null_literal: "NULL".into() };
    db.load_csv("n", "k,a,b\n2,NULL,\n".as_bytes(), &opts).unwrap();
    assert_eq!(db.get_row("n", &[int(2)]).unwrap().unwrap(), &vec![int(2), Value::Null, Value::text("")]);
}

#[test]
fn csv_write_read_round_trip() {
    let mut db = Database::new();
    db.create_table("create table n (k integer, a text, d decimal, dt date, primary key (k))").unwrap();
    db.apply_row_insert(Tuple::new("n", vec![int(1), Value::Null, Value::decimal("2.5"), Value::Date("1995-01-01".into())]))
        .unwrap();
    db.apply_row_insert(Tuple::new("n", vec![int(2), Value::text(""), Value::Null, Value::Null])).unwrap();
    db.apply_row_insert(Tuple::new("n", vec![int(3), Value::text("a,\"b\"\nc"), Value::decimal("-0.1"), Value::Null]))
        .unwrap();
    let mut buf = Vec::new();
    db.write_csv("n", &mut buf, &CsvOptions::default()).unwrap();
    let mut copy = Database::new();
    copy.create_table(&db.table("n").unwrap().to_ddl()).unwrap();
    copy.load_csv("n", buf.as_slice(), &CsvOptions::default()).unwrap();
    assert!(db.rows("n").unwrap().eq(copy.rows("n").unwrap()));
}

#[test]
fn select_star_in_key_order() {
    let db = region_db();
    let rs = db.exec_select(&select("select * from region")).unwrap();
    assert_eq!(rs.columns, vec!["r_regionkey", "r_name", "r_comment"]);
    assert_eq!(rs.rows.len(), 5);
    let keys: Vec<Value> = rs.rows.iter().map(|r| r[0].clone()).collect();
    assert_eq!(keys, (0..5).map(int).collect::<Vec<_>>());
}

#[test]
fn always_false_join_is_empty() {
    let db = region_db();
    let rs = db.exec_select(&select("select * from region as a, region as b where 1 = 2")).unwrap();
    assert!(rs.rows.is_empty());
}

fn example_tables() -> Database {
    let mut db = Database::new();
    db.create_tables(
        "create table t1 (x integer, y integer, a integer, primary key (x));
         create table t2 (a integer, s integer, b integer, primary key (a));
         create table t3 (c integer, d integer, b integer, primary key (c));",
    )
    .unwrap();
    db.apply_row_insert(Tuple::new("t1", vec![int(1), int(2), int(7)])).unwrap();
    db.apply_row_insert(Tuple::new("t2", vec![int(7), int(8), int(9)])).unwrap();
    db.apply_row_insert(Tuple::new("t3", vec![int(4), int(5), int(9)])).unwrap();
    db
}

#[test]
fn three_way_join_single_row() {
    let db = example_tables();
    let rs = db.exec_select(&select("select t1.a, t2.b, t3.c from t1, t2, t3 where t1.a = t2.a and t2.b = t3.b")).unwrap();
    assert_eq!(rs.rows, vec![vec![int(7), int(9), int(4)]]);
    let rs = db
        .exec_select(&select(
            "select t1.a, r1.b, t3.c from t1, (select a, b from t2) as r1, t3 where t1.a = r1.a and r1.b = t3.b",
        ))
        .unwrap();
    assert_eq!(rs.columns, vec!["a", "b", "c"]);
    assert_eq!(rs.rows, vec![vec![int(7), int(9), int(4)]]);
}

#[test]
fn name_resolution_errors() {
    let db = example_tables();
    let err = db.exec_select(&select("select a from t1, t2")).unwrap_err();
    assert!(matches!(err, StorageError::Bind(crate::eval::BindError::AmbiguousColumn(_))));
    let err = db.exec_select(&select("select zz from t1")).unwrap_err();
    assert!(matches!(err, StorageError::Bind(crate::eval::BindError::UnknownColumn(_))));
    assert!(matches!(db.exec_select(&select("select * from nope")), Err(StorageError::UnknownTable(_))));
    let err = db.exec_select(&select("select * from t1 where x = 'a'")).unwrap_err();
    assert!(matches!(err, StorageError::Eval(_)));
}

#[test]
fn aggregates_and_like() {
    let db = region_db();
    let rs = db
        .exec_select(&select("select count(*), max(r_regionkey), (sum(r_regionkey) as total) from region where r_name like 'A%'"))
        .unwrap();
    assert_eq!(rs.columns[2], "total");
    assert_eq!(rs.rows, vec![vec![int(3), int(2), int(3)]]);
    let rs = db.exec_select(&select("select r_name from region where r_name not like '%A%'")).unwrap();
    assert_eq!(rs.rows, vec![vec![Value::text("EUROPE")]]);
}

#[test]
fn mutations() {
    let mut db = region_db();
    db.apply_row_insert(Tuple::new("region", vec![int(9), Value::text("X"), Value::Null])).unwrap();
    assert_eq!(db.get_row("region", &[int(9)]).unwrap().unwrap()[1], Value::text("X"));
    let dup = db.apply_row_insert(Tuple::new("region", vec![int(9), Value::text("Y"), Value::Null])).unwrap_err();
    assert!(matches!(dup, StorageError::DuplicatePrimaryKey { .. }));
    let missing = db.apply_row_update("region", &[int(42)], vec![int(42), Value::text("Z"), Value::Null]).unwrap_err();
    assert!(matches!(missing, StorageError::NoSuchRow { .. }));
    db.apply_row_delete("region", &[int(9)]).unwrap();
    assert_eq!(db.row_count("region").unwrap(), 5);
    assert!(matches!(db.apply_row_delete("region", &[int(9)]), Err(StorageError::NoSuchRow { .. })));
}

#[test]
fn raw_backdoor() {
    let mut db = region_db();
    db.raw_mutate("region", &[int(0)], "r_name", Value::text("XXXX")).unwrap();
    assert_eq!(db.get_row("region", &[int(0)]).unwrap().unwrap()[1], Value::text("XXXX"));
    db.raw_delete("region", &[int(1)]).unwrap();
    db.raw_insert(Tuple::new("region", vec![int(77), Value::text("dummy"), Value::Null])).unwrap();
    assert_eq!(db.row_count("region").unwrap(), 5);
    let err = db.raw_mutate("region", &[int(0)], "r_name", int(5)).unwrap_err();
    assert!(matches!(err, StorageError::TypeError { .. }));
}

#[test]
fn coercion_into_declared_types() {
    let mut db = Database::new();
    db.create_table("create table c (k integer, bal decimal, d date, primary key (k))").unwrap();
    db.apply_row_insert(Tuple::new("c", vec![Value::decimal("3"), int(22), Value::text("1995-03-09")])).unwrap();
    assert_eq!(
        db.get_row("c", &[int(3)]).unwrap().unwrap(),
        &vec![int(3), Value::decimal("22"), Value::Date("1995-03-09".into())]
    );
    let err = db.apply_row_insert(Tuple::new("c", vec![Value::decimal("3.5"), int(1), Value::Null])).unwrap_err();
    assert!(matches!(err, StorageError::TypeError { .. }));
    let err = db.apply_row_insert(Tuple::new("c", vec![int(4), int(1), Value::text("March")])).unwrap_err();
    assert!(matches!(err, StorageError::TypeError { .. }));
}

// ---- join oracle ---------------------------------------------------------

#[derive(Debug, Clone)]
enum Operand {
    Col(usize, usize),
    Lit(i64),
}

#[derive(Debug, Clone)]
struct Atom {
    left: Operand,
    op: usize,
    right: Operand,
}

const OPS: [&str; 6] = ["=", "<>", "<", "<=", ">", ">="];

type Table = Vec<(i64, Option<i64>)>;

fn arb_tables() -> impl Strategy<Value = Vec<Table>> {
    prop::collection::vec(
        prop::collection::btree_map(0i64..20, prop::option::of(0i64..5), 0..=8)
            .prop_map(|m| m.into_iter().collect::<Table>()),
        1..=3,
    )
}

fn arb_atoms(n_tables: usize) -> impl Strategy<Value = Vec<Vec<Atom>>> {
    let operand = prop_oneof![
        (0..n_tables, 0usize..2).prop_map(|(t, c)| Operand::Col(t, c)),
        (0i64..6).prop_map(Operand::Lit),
    ];
    let atom = (operand.clone(), 0usize..6, operand).prop_map(|(left, op, right)| Atom { left, op, right });
    // conjunction of disjunctions
    prop::collection::vec(prop::collection::vec(atom, 1..=2), 0..=3)
}

fn operand_sql(o: &Operand) -> String {
    match o {
        Operand::Col(t, 0) => format!("t{t}.k"),
        Operand::Col(t, _) => format!("t{t}.v"),
        Operand::Lit(v) => v.to_string(),
    }
}

fn operand_value(o: &Operand, combo: &[(i64, Option<i64>)]) -> Option<i64> {
    match o {
        Operand::Col(t, 0) => Some(combo[*t].0),
        Operand::Col(t, _) => combo[*t].1,
        Operand::Lit(v) => Some(*v),
    }
}

fn atom_holds(a: &Atom, combo: &[(i64, Option<i64>)]) -> bool {
    let (Some(l), Some(r)) = (operand_value(&a.left, combo), operand_value(&a.right, combo)) else {
        return false;
    };
    match a.op {
        0 => l == r,
        1 => l != r,
        2 => l < r,
        3 => l <= r,
        4 => l > r,
        _ => l >= r,
    }
}

fn cross(tables: &[Table]) -> Vec<Vec<(i64, Option<i64>)>> {
    tables.iter().fold(vec![vec![]], |acc, t| {
        acc.into_iter()
            .flat_map(|prefix| {
                t.iter().map(move |row| {
                    let mut p = prefix.clone();
                    p.push(*row);
                    p
                })
            })
            .collect()
    })
}

fn to_value(v: Option<i64>) -> Value {
    v.map(Value::Integer).unwrap_or(Value::Null)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn join_matches_brute_force(
        (tables, clauses) in arb_tables().prop_flat_map(|t| { let n = t.len(); (Just(t), arb_atoms(n)) })
    ) {
        let mut db = Database::new();
        for (i, t) in tables.iter().enumerate() {
            db.create_table(&format!("create table t{i} (k integer, v integer, primary key (k))")).unwrap();
            for (k, v) in t {
                db.apply_row_insert(Tuple::new(&format!("t{i}"), vec![int(*k), to_value(*v)])).unwrap();
            }
        }
        let from: Vec<String> = (0..tables.len()).map(|i| format!("t{i}")).collect();
        let mut sql = format!("select * from {}", from.join(", "));
        if !clauses.is_empty() {
            let parts: Vec<String> = clauses
                .iter()
                .map(|d| {
                    let atoms: Vec<String> = d
                        .iter()
                        .map(|a| format!("{} {} {}", operand_sql(&a.left), OPS[a.op], operand_sql(&a.right)))
                        .collect();
                    format!("({})", atoms.join(" or "))
                })
                .collect();
            sql.push_str(" where ");
            sql.push_str(&parts.join(" and "));
        }
        let got = db.exec_select(&select(&sql)).unwrap().rows;
        let expected: Vec<Row> = cross(&tables)
            .into_iter()
            .filter(|combo| clauses.iter().all(|d| d.iter().any(|a| atom_holds(a, combo))))
            .map(|combo| combo.iter().flat_map(|(k, v)| [int(*k), to_value(*v)]).collect())
            .collect();
        prop_assert_eq!(got, expected, "{}", sql);
    }

    #[test]
    fn primary_keys_stay_unique(ops in prop::collection::vec((0u8..5, 0i64..6, 0i64..6), 0..40)) {
        let mut db = Database::new();
        db.create_table("create table t (k integer, v integer, primary key (k))").unwrap();
        for (kind, k, v) in ops {
            let _ = match kind {
                0 => db.apply_row_insert(Tuple::new("t", vec![int(k), int(v)])),
                1 => db.apply_row_update("t", &[int(k)], vec![int(v), int(v)]),
                2 => db.apply_row_delete("t", &[int(k)]).map(|_| ()),
                3 => db.raw_mutate("t", &[int(k)], "k", int(v)),
                _ => db.raw_insert(Tuple::new("t", vec![int(k), int(v)])),
            };
            let keys: Vec<Value> = db.rows("t").unwrap().map(|r| r[0].clone()).collect();
            let mut dedup = keys.clone();
            dedup.dedup();
            prop_assert_eq!(&keys, &dedup);
            let sorted = { let mut s = keys.clone(); s.sort(); s };
            prop_assert_eq!(keys, sorted);
        }
    }
}

#[test]
fn directory_snapshot_keeps_null_and_empty_text_apart() {
    let mut db = Database::new();
    db.create_table("CREATE TABLE t (k INTEGER, s TEXT, d DATE, PRIMARY KEY (k))").unwrap();
    db.apply_row_insert(Tuple::new("t", vec![Value::Integer(1), Value::Null, Value::Null])).unwrap();
    db.apply_row_insert(Tuple::new("t", vec![Value::Integer(2), Value::text(""), Value::Date("2020-02-29".into())]))
        .unwrap();
    db.apply_row_insert(Tuple::new("t", vec![Value::Integer(3), Value::text("a,\"b\"\nc"), Value::Null])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    db.save_dir(dir.path()).unwrap();
    let back = Database::load_dir(dir.path()).unwrap();
    assert_eq!(back, db);
    // saving again over an existing snapshot replaces it
    db.apply_row_delete("t", &[Value::Integer(3)]).unwrap();
    db.save_dir(dir.path()).unwrap();
    assert_eq!(Database::load_dir(dir.path()).unwrap().row_count("t").unwrap(), 2);
}
