use proptest::prelude::*;

use super::lexer::{tokenize, Keyword, Token};
use super::*;
use crate::types::Decimal;

const CORPUS: &str = include_str!("../../tests/data/corpus.sql");

const REQUIRED: [&str; 19] = [
    "Q2", "Q3", "Q4", "Q5", "Q6", "Q9", "Q11", "Q18", "Q19", "Q21", "Q22", "Q25", "Q26", "Q32", "Q33", "Q35", "Q40",
    "Q41", "Q43",
];

fn corpus() -> Vec<(String, String)> {
    split_statements(CORPUS).into_iter().map(|(label, sql)| (label.expect("labelled"), sql)).collect()
}

fn select_keywords(sql: &str) -> usize {
    tokenize(sql).unwrap().iter().filter(|t| t.token == Token::Keyword(Keyword::Select)).count()
}

#[test]
fn minimal_select() {
    let q = parse("select * from region").unwrap();
    assert_eq!(
        q,
        Query::Select(SelectQuery {
            projections: vec![ProjectionItem::Star],
            from: vec![FromItem::Base { name: "region".into(), alias: None }],
            selection: None,
        })
    );
}

#[test]
fn derived_table_with_conjunction() {
    let sql = "SELECT t1.a, r1.b, t3.c FROM t1, (SELECT a, b FROM t2) AS r1, t3 WHERE t1.a=r1.a AND r1.b=t3.b";
    let Query::Select(q) = parse(sql).unwrap() else { panic!("not a select") };
    assert_eq!(q.from.len(), 3);
    match &q.from[1] {
        FromItem::Derived { subquery, alias } => {
            assert_eq!(alias, "r1");
            assert_eq!(subquery.projections.len(), 2);
        }
        other => panic!("expected derived table, got {other:?}"),
    }
    assert_eq!(q.selection.as_ref().unwrap().conjuncts().len(), 2);
}

#[test]
fn unsupported_features_are_named() {
    let cases = [
        ("select a from t where a in (select a from u)", "IN"),
        ("select a from t where exists (select a from u)", "EXISTS"),
        ("select a from t where not exists (select a from u)", "EXISTS"),
        ("select a, count(*) from t group by a", "GROUP BY"),
        ("select a from t having a > 1", "HAVING"),
        ("select a from t left outer join u on t.a = u.a", "outer join"),
        ("select a from t where a = any (select a from u)", "ANY"),
        ("select a from t where a not in (1, 2)", "IN"),
        ("select distinct a from t", "DISTINCT"),
    ];
    for (sql, feature) in cases {
        match parse(sql) {
            Err(ParseError::Unsupported { feature: f, .. }) => assert_eq!(f, feature, "{sql}"),
            other => panic!("{sql}: expected Unsupported, got {other:?}"),
        }
    }
}

#[test]
fn subquery_in_where_is_rejected() {
    let err = parse("select a from t where a = (select max(a) from t)").unwrap_err();
    assert!(err.is_unsupported(), "{err}");
}

#[test]
fn aggregate_in_where_is_rejected() {
    assert!(parse("select a from t where sum(a) > 1").unwrap_err().is_unsupported());
}

#[test]
fn syntax_errors_carry_position_and_expectation() {
    let err = parse("select a from").unwrap_err();
    match err {
        ParseError::Syntax { position, expected, found } => {
            assert_eq!(position, 13);
            assert!(expected.iter().any(|e| e.contains("identifier")), "{expected:?}");
            assert_eq!(found, "end of input");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("select from t"), Err(ParseError::Syntax { position: 7, .. })));
}

#[test]
fn one_statement_per_call() {
    assert!(matches!(parse("select * from a; select * from b"), Err(ParseError::MultipleStatements { .. })));
    assert!(parse("select * from a;").is_ok());
}

#[test]
fn duplicate_alias_rejected() {
    assert!(matches!(parse("select * from t as x, u as x"), Err(ParseError::DuplicateAlias { .. })));
    assert!(matches!(parse("select * from t, t"), Err(ParseError::DuplicateAlias { .. })));
    assert!(parse("select * from nation as n1, nation as n2").is_ok());
}

#[test]
fn derived_table_needs_alias() {
    assert!(parse("select * from (select a from t)").is_err());
}

#[test]
fn identifiers_fold_literals_keep_case() {
    let Query::Select(q) = parse("SELECT N_Name FROM Nation WHERE N_Name = 'ASIA'").unwrap() else { panic!() };
    assert_eq!(q.from[0], FromItem::Base { name: "nation".into(), alias: None });
    match q.selection.unwrap() {
        Predicate::Compare { left, right, .. } => {
            assert_eq!(left, Expr::column(None, "n_name"));
            assert_eq!(right, Expr::Literal(Literal::Str("ASIA".into())));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn literal_forms() {
    let Query::Insert(q) = parse("insert into t values (1, 2.50, 'x', date '1995-01-01', null, 99999999999999999999)")
        .unwrap()
    else {
        panic!()
    };
    let InsertSource::Values(rows) = q.source else { panic!() };
    let lits: Vec<Literal> = rows[0]
        .iter()
        .map(|e| match e {
            Expr::Literal(l) => l.clone(),
            other => panic!("{other:?}"),
        })
        .collect();
    assert_eq!(lits[0], Literal::Integer(1));
    assert_eq!(lits[1], Literal::Decimal("2.5".parse::<Decimal>().unwrap()));
    assert_eq!(lits[2], Literal::Str("x".into()));
    assert_eq!(lits[3], Literal::Date("1995-01-01".into()));
    assert_eq!(lits[4], Literal::Null);
    assert!(matches!(lits[5], Literal::Decimal(_)));
    assert!(parse("select * from t where d < date '1995-02-30'").is_err());
}

#[test]
fn parenthesized_predicates_and_expressions() {
    let Query::Select(q) =
        parse("select a from t where (a + 1) * 2 > 3 and (b = 1 or b = 2) and not_a not like 'x%'").unwrap()
    else {
        panic!()
    };
    let conj = q.selection.as_ref().unwrap().conjuncts();
    assert_eq!(conj.len(), 3);
    assert!(matches!(conj[0], Predicate::Compare { op: CompareOp::Gt, .. }));
    assert!(matches!(conj[1], Predicate::Or(..)));
    assert!(matches!(conj[2], Predicate::Like { negated: true, .. }));
}

#[test]
fn parenthesized_projection_alias_form() {
    let Query::Select(q) = parse("select (sum(l_extendedprice * (1 - l_discount)) as revenue) from lineitem").unwrap()
    else {
        panic!()
    };
    match &q.projections[0] {
        ProjectionItem::Expr { expr: Expr::Aggregate { func: AggregateFunc::Sum, .. }, alias } => {
            assert_eq!(alias.as_deref(), Some("revenue"))
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn update_with_scalar_subquery_classifies_as_update() {
    let q = parse("UPDATE T1 SET T1.a = (SELECT a FROM T2 WHERE T2.key=1234) WHERE T1.b = 4567").unwrap();
    assert_eq!(classify(&q), QueryKind::Update);
    assert_eq!(q.kind_tag(), "U(S)");
    let Query::Update(u) = q else { panic!() };
    assert_eq!(u.table, "t1");
    assert_eq!(u.set_clauses[0].column, "a");
    assert!(matches!(u.set_clauses[0].value, SetValue::Subquery(_)));
}

#[test]
fn classify_kinds() {
    assert_eq!(classify(&parse("select * from t").unwrap()), QueryKind::Select);
    assert_eq!(classify(&parse("delete from t where a = 1").unwrap()), QueryKind::Delete);
    assert_eq!(classify(&parse("insert into t (a) select b from u").unwrap()), QueryKind::Insert);
}

#[test]
fn create_table_forms() {
    let ct = parse_create_table(
        "CREATE TABLE region (r_regionkey INTEGER, r_name TEXT, r_comment TEXT, PRIMARY KEY (r_regionkey))",
    )
    .unwrap();
    assert_eq!(ct.name, "region");
    assert_eq!(ct.columns.len(), 3);
    assert_eq!(ct.primary_key, vec!["r_regionkey".to_string()]);
    let ct = parse_create_table("create table t (a int, b decimal(15,2), c date)").unwrap();
    assert!(ct.primary_key.is_empty());
    assert_eq!(ct.columns[1], ("b".to_string(), "decimal".to_string()));
    let script = "create table a (x integer); create table b (y text, primary key (y));";
    assert_eq!(parse_ddl_script(script).unwrap().len(), 2);
}

#[test]
fn required_corpus_queries_parse() {
    let corpus = corpus();
    for name in REQUIRED {
        let (_, sql) = corpus.iter().find(|(l, _)| l == name).expect(name);
        parse(sql).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn whole_corpus_parses() {
    for (name, sql) in corpus() {
        parse(&sql).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn table_two_kind_tags() {
    let corpus = corpus();
    let tag = |n: &str| parse(&corpus.iter().find(|(l, _)| l == n).unwrap().1).unwrap().kind_tag();
    assert_eq!(tag("Q2"), "S");
    assert_eq!(tag("Q11"), "U(S)");
    assert_eq!(tag("Q18"), "I");
    assert_eq!(tag("Q19"), "U");
    assert_eq!(tag("Q26"), "D");
    assert_eq!(tag("Q40"), "S(S)");
}

#[test]
fn corpus_round_trips_and_keeps_nesting() {
    for (name, sql) in corpus() {
        let q = parse(&sql).unwrap();
        let again = parse(&render(&q)).unwrap_or_else(|e| panic!("{name}: {e}\n{}", render(&q)));
        assert_eq!(q, again, "{name}");
        assert_eq!(q.select_count(), select_keywords(&sql), "{name}");
    }
}

fn arb_ident() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c_x", "key", "n_name", "t9"]).prop_map(str::to_string)
}

fn arb_literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        (0i64..1_000_000).prop_map(Literal::Integer),
        (0i64..100_000, 1u32..6).prop_map(|(m, s)| Literal::Decimal(Decimal::from_raw(rust_decimal::Decimal::new(m, s)))),
        "[a-zA-Z' %_]{0,8}".prop_map(Literal::Str),
        Just(Literal::Date("1995-03-09".into())),
        Just(Literal::Null),
    ]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (prop::option::of(arb_ident()), arb_ident()).prop_map(|(q, n)| Expr::column(q.as_deref(), &n)),
        arb_literal().prop_map(Expr::Literal),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop::sample::select(vec![BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div]),
                inner.clone(),
                inner
            )
                .prop_map(|(op, l, r)| Expr::Binary { op, left: Box::new(l), right: Box::new(r) }),
        ]
    })
}

fn arb_predicate() -> impl Strategy<Value = Predicate> {
    let ops = vec![CompareOp::Eq, CompareOp::NotEq, CompareOp::Lt, CompareOp::LtEq, CompareOp::Gt, CompareOp::GtEq];
    let atom = prop_oneof![
        (arb_expr(), prop::sample::select(ops), arb_expr())
            .prop_map(|(left, op, right)| Predicate::Compare { left, op, right }),
        (arb_expr(), arb_expr(), any::<bool>())
            .prop_map(|(expr, pattern, negated)| Predicate::Like { expr, pattern, negated }),
    ];
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Predicate::and(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Predicate::or(l, r)),
        ]
    })
}

proptest! {
    #[test]
    fn rendered_predicates_reparse_identically(p in arb_predicate()) {
        let q = Query::Select(SelectQuery {
            projections: vec![ProjectionItem::Star],
            from: vec![FromItem::Base { name: "t".into(), alias: None }],
            selection: Some(p),
        });
        let text = render(&q);
        let reparsed = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
        prop_assert_eq!(reparsed, q);
    }

    #[test]
    fn rendered_projections_reparse_identically(exprs in prop::collection::vec(arb_expr(), 1..4)) {
        let q = Query::Select(SelectQuery {
            projections: exprs
                .into_iter()
                .enumerate()
                .map(|(i, expr)| ProjectionItem::Expr { expr, alias: Some(format!("o{i}")) })
                .collect(),
            from: vec![FromItem::Base { name: "t".into(), alias: Some("x".into()) }],
            selection: None,
        });
        let text = render(&q);
        let reparsed = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
        prop_assert_eq!(reparsed, q);
    }
}
