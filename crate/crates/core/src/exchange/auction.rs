//! Opening call auction: one clearing price that maximizes executed volume.

use crate::book::RestingOrder;
use crate::types::{AssetId, Lots, OrderId, Side, Ticks, TimeNs, TradeRecord};

#[derive(Clone, Debug, PartialEq)]
pub struct AuctionResult {
    pub clearing_price: Ticks,
    pub volume: Lots,
    /// Buy minus sell volume eligible at the clearing price.
    pub imbalance: i64,
    pub trades: Vec<TradeRecord>,
    /// Unfilled remainders, oldest first.
    pub residual: Vec<RestingOrder>,
}

/// Demand and supply at a candidate price.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub price: Ticks,
    pub demand: Lots,
    pub supply: Lots,
}

impl Crossing {
    pub fn executable(&self) -> Lots {
        self.demand.min(self.supply)
    }

    pub fn imbalance(&self) -> i64 {
        self.demand as i64 - self.supply as i64
    }
}

/// Demand/supply curve at every tick between the lowest and highest order price.
pub fn crossing_curve(orders: &[RestingOrder]) -> Vec<Crossing> {
    let mut buys: Vec<(Ticks, Lots)> = Vec::new();
    let mut sells: Vec<(Ticks, Lots)> = Vec::new();
    for o in orders {
        match o.side {
            Side::Buy => buys.push((o.price, o.volume)),
            Side::Sell => sells.push((o.price, o.volume)),
        }
    }
    let (Some(lo), Some(hi)) = (orders.iter().map(|o| o.price).min(), orders.iter().map(|o| o.price).max()) else {
        return Vec::new();
    };
    buys.sort_unstable();
    sells.sort_unstable();
    let mut demand: Lots = buys.iter().map(|b| b.1).sum();
    let mut supply: Lots = 0;
    let (mut bi, mut si) = (0, 0);
    let mut out = Vec::with_capacity((hi - lo + 1) as usize);
    for p in lo..=hi {
        while bi < buys.len() && buys[bi].0 < p {
            demand -= buys[bi].1;
            bi += 1;
        }
        while si < sells.len() && sells[si].0 <= p {
            supply += sells[si].1;
            si += 1;
        }
        out.push(Crossing { price: p, demand, supply });
    }
    out
}

/// Picks the clearing tick: maximum executable volume, then minimum absolute
/// imbalance, then closest to `p_ref`, then the lower tick.
pub fn select_price(curve: &[Crossing], p_ref: Ticks) -> Option<Crossing> {
    let mut best: Option<Crossing> = None;
    for &c in curve {
        if c.executable() == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let key = |x: &Crossing| (std::cmp::Reverse(x.executable()), x.imbalance().unsigned_abs(), (x.price - p_ref).unsigned_abs());
                key(&c) < key(&b)
            }
        };
        if better {
            best = Some(c);
        }
    }
    best
}

/// Clears a batch of limit orders at a single price with price-then-time priority.
pub fn run_call_auction(asset: AssetId, orders: Vec<RestingOrder>, p_ref: Ticks, time: TimeNs) -> AuctionResult {
    let curve = crossing_curve(&orders);
    let Some(pick) = select_price(&curve, p_ref) else {
        let mut residual = orders;
        residual.sort_unstable_by_key(|o| o.arrival);
        return AuctionResult { clearing_price: p_ref, volume: 0, imbalance: 0, trades: Vec::new(), residual };
    };
    let p = pick.price;
    let mut buys: Vec<RestingOrder> = orders.iter().filter(|o| o.side == Side::Buy && o.price >= p).copied().collect();
    let mut sells: Vec<RestingOrder> = orders.iter().filter(|o| o.side == Side::Sell && o.price <= p).copied().collect();
    buys.sort_unstable_by_key(|o| (std::cmp::Reverse(o.price), o.arrival));
    sells.sort_unstable_by_key(|o| (o.price, o.arrival));

    let mut trades = Vec::new();
    let mut remaining = pick.executable();
    let (mut bi, mut si) = (0, 0);
    while remaining > 0 {
        let (b, s) = (&mut buys[bi], &mut sells[si]);
        let q = remaining.min(b.volume).min(s.volume);
        let (aggressor, resting, side) = if b.arrival > s.arrival { (b.id, s.id, Side::Buy) } else { (s.id, b.id, Side::Sell) };
        trades.push(TradeRecord {
            trade_id: trades.len() as u64,
            asset,
            price: p,
            volume: q,
            aggressor_order_id: aggressor,
            resting_order_id: resting,
            aggressor_side: side,
            time,
        });
        b.volume -= q;
        s.volume -= q;
        remaining -= q;
        if b.volume == 0 {
            bi += 1;
        }
        if s.volume == 0 {
            si += 1;
        }
    }

    let mut left: std::collections::HashMap<OrderId, Lots> = std::collections::HashMap::new();
    for o in buys.iter().chain(sells.iter()) {
        left.insert(o.id, o.volume);
    }
    let mut residual: Vec<RestingOrder> = orders
        .into_iter()
        .filter_map(|mut o| {
            if let Some(&v) = left.get(&o.id) {
                o.volume = v;
            }
            (o.volume > 0).then_some(o)
        })
        .collect();
    residual.sort_unstable_by_key(|o| o.arrival);
    AuctionResult { clearing_price: p, volume: pick.executable(), imbalance: pick.imbalance(), trades, residual }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(id: u64, side: Side, price: Ticks, volume: Lots) -> RestingOrder {
        RestingOrder { id: OrderId(id), side, price, volume, arrival: id }
    }

    #[test]
    fn unique_crossing_point() {
        let r = run_call_auction(0, vec![o(1, Side::Buy, 1000, 10), o(2, Side::Sell, 1000, 10)], 990, 0);
        assert_eq!((r.clearing_price, r.volume), (1000, 10));
        assert!(r.residual.is_empty());
    }

    #[test]
    fn nothing_crosses() {
        let r = run_call_auction(0, vec![o(1, Side::Buy, 990, 10), o(2, Side::Sell, 1000, 10)], 995, 0);
        assert_eq!((r.clearing_price, r.volume, r.residual.len()), (995, 0, 2));
    }

    #[test]
    fn residual_does_not_cross() {
        let orders = vec![o(1, Side::Buy, 1002, 5), o(2, Side::Buy, 1000, 5), o(3, Side::Sell, 999, 4), o(4, Side::Sell, 1001, 4)];
        let r = run_call_auction(0, orders, 1000, 0);
        assert_eq!(r.volume, 5);
        assert!(r.trades.iter().all(|t| t.price == r.clearing_price));
        let best_bid = r.residual.iter().filter(|x| x.side == Side::Buy).map(|x| x.price).max();
        let best_ask = r.residual.iter().filter(|x| x.side == Side::Sell).map(|x| x.price).min();
        assert!(best_bid < best_ask);
    }
}
