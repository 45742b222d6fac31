//! Shared setup for the benchmarks.

use std::sync::Arc;

use verity_core::fixtures::Scale;
use verity_core::ledger::FixedClock;
use verity_core::sql::{parse, Query, SelectQuery};
pub use verity_core::*;

pub const SEED: u64 = 20_190_101;

pub fn principal() -> PeerId {
    PeerId::new("peer0")
}

/// Generated tables at `scale`, not yet on any ledger.
pub fn database(scale: &Scale) -> Database {
    verity_core::fixtures::generate(scale, SEED).expect("preset scales generate")
}

/// A five-peer gateway with every generated row bootstrapped.
pub fn gateway(scale: &Scale) -> Gateway {
    let mut g = Gateway::new(database(scale), SimulatedLedger::seeded(5, SEED, Arc::new(FixedClock(0))));
    g.bootstrap(&principal()).expect("bootstrap on a fresh ledger");
    g
}

/// Selects the first `n` orders by key; keys run from 1 without gaps.
pub fn orders_prefix(n: usize) -> String {
    format!("select * from orders where o_orderkey <= {n}")
}

pub fn select(sql: &str) -> SelectQuery {
    match parse(sql) {
        Ok(Query::Select(s)) => s,
        other => panic!("not a select: {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_sizes_are_exact() {
        let mut g = gateway(&Scale::SF0_001);
        for n in [1, 10, 100] {
            let (_, report) = g.process(&orders_prefix(n), &principal()).unwrap();
            assert_eq!(report.tuples_checked, n);
        }
        assert_eq!(select("select 1 from region").from.len(), 1);
    }
}
