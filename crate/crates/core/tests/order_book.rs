mod common;

use common::{random_stream, NaiveBook};
use evosim::book::OrderBook;
use evosim::types::{Order, OrderType, ReceiptStatus, Side};
use proptest::prelude::*;

fn compare(stream: &[Order], depth: usize) {
    let mut book = OrderBook::new(0);
    let mut naive = NaiveBook::new(0);
    let (mut ta, mut tb) = (Vec::new(), Vec::new());
    for (i, o) in stream.iter().enumerate() {
        let ra = book.submit(o, &mut ta);
        let rb = naive.submit(o, &mut tb);
        assert_eq!(ra, rb, "receipt {i}");
        assert_eq!(ta, tb, "trades after {i}");
        assert_eq!(book.snapshot(depth, o.recv_time), naive.snapshot(depth, o.recv_time), "snapshot after {i}");
    }
    book.validate().unwrap();
    assert_eq!(book.len(), naive.len());
}

#[test]
fn matches_naive_book_on_seeded_streams() {
    for seed in 0..5 {
        compare(&random_stream(seed, 2000), 10);
    }
}

#[test]
fn market_residue_is_discarded() {
    let mut b = OrderBook::new(0);
    let mut t = Vec::new();
    b.submit(&Order::limit(1, 0, Side::Sell, 1001, 3), &mut t);
    let r = b.submit(&Order::market(2, 0, Side::Buy, 5), &mut t);
    assert_eq!((r.filled, r.discarded, r.resting), (3, 2, 0));
    assert!(b.is_empty());
}

fn order_strategy() -> impl Strategy<Value = Vec<(u8, bool, i64, u64, usize)>> {
    prop::collection::vec((0u8..10, any::<bool>(), 990i64..1010, 1u64..20, 0usize..64), 1..300)
}

fn build(raw: &[(u8, bool, i64, u64, usize)]) -> Vec<Order> {
    let mut out = Vec::new();
    for (i, &(k, buy, p, v, pick)) in raw.iter().enumerate() {
        let id = i as u64 + 1;
        let side = if buy { Side::Buy } else { Side::Sell };
        let o = match k {
            0..=5 => Order::limit(id, 0, side, p, v),
            6 => Order::market(id, 0, side, v),
            _ => Order::cancel(id, 0, evosim::types::OrderId((pick % (i + 1)) as u64 + 1)),
        };
        out.push(o.at(i as u64));
    }
    out
}

proptest! {
    #[test]
    fn equivalent_to_naive(raw in order_strategy()) {
        compare(&build(&raw), 5);
    }

    #[test]
    fn volume_is_conserved(raw in order_strategy()) {
        let stream = build(&raw);
        let mut book = OrderBook::new(0);
        let mut trades = Vec::new();
        let mut resting_in = 0u64;
        let mut out = 0u64;
        for o in &stream {
            let before = trades.len();
            let r = book.submit(o, &mut trades);
            let traded: u64 = trades[before..].iter().map(|t| t.volume).sum();
            match o.order_type {
                OrderType::Cancel => {
                    prop_assert!(matches!(r.status, ReceiptStatus::Canceled | ReceiptStatus::CancelNoop));
                    out += r.canceled;
                }
                _ => {
                    prop_assert_eq!(r.filled + r.resting + r.canceled + r.discarded, o.volume);
                    prop_assert_eq!(r.filled, traded);
                    resting_in += r.resting;
                    out += traded;
                }
            }
            let s = book.snapshot(10, o.recv_time);
            prop_assert!(s.check().is_ok());
        }
        prop_assert_eq!(resting_in, out + book.resting_orders().iter().map(|o| o.volume).sum::<u64>());
    }
}
