//! Domain types shared by every layer of the simulator: orders, receipts,
//! trades and the scalar units they are expressed in.
//!
//! Prices are integer ticks, volumes are integer lots and time is integer
//! nanoseconds since the run epoch. Nothing on the matching path uses floats.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Event time in nanoseconds since the per-run epoch.
pub type TimeNs = u64;
/// Price in integer ticks.
pub type Ticks = i64;
/// Volume in integer lots.
pub type Lots = u64;
/// Asset index in `[0, M)`.
pub type AssetId = usize;
/// Agent index inside a population.
pub type AgentId = usize;

pub const NANOS_PER_MILLI: TimeNs = 1_000_000;
pub const NANOS_PER_SEC: TimeNs = 1_000_000_000;
pub const NANOS_PER_DAY: TimeNs = 86_400 * NANOS_PER_SEC;

/// Globally unique order identifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderId(pub u64);

impl OrderId {
    const CALIBRATION_BIT: u64 = 1 << 62;
    const INTERVENTION_BIT: u64 = 1 << 61;

    /// Identifier in the calibration namespace: one counter per asset.
    pub fn calibration(asset: AssetId, n: u64) -> Self {
        OrderId(Self::CALIBRATION_BIT | ((asset as u64) << 40) | (n & ((1 << 40) - 1)))
    }

    pub fn intervention(n: u64) -> Self {
        OrderId(Self::INTERVENTION_BIT | n)
    }

    pub fn is_calibration(self) -> bool {
        self.0 & Self::CALIBRATION_BIT != 0
    }
}

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    /// +1 for buys, -1 for sells.
    pub fn sign(self) -> i64 {
        match self {
            Side::Buy => 1,
            Side::Sell => -1,
        }
    }

    /// True if `a` is a strictly better price than `b` for a resting order on this side.
    pub fn better(self, a: Ticks, b: Ticks) -> bool {
        match self {
            Side::Buy => a > b,
            Side::Sell => a < b,
        }
    }

    /// True if a resting order on this side at `resting` trades with an
    /// incoming opposite-side limit at `limit`.
    pub fn crosses(self, resting: Ticks, limit: Ticks) -> bool {
        match self {
            Side::Buy => resting >= limit,
            Side::Sell => resting <= limit,
        }
    }

    pub fn code(self) -> char {
        match self {
            Side::Buy => 'B',
            Side::Sell => 'S',
        }
    }

    pub fn from_code(c: &str) -> Option<Side> {
        match c {
            "B" | "b" | "buy" | "Buy" => Some(Side::Buy),
            "S" | "s" | "sell" | "Sell" => Some(Side::Sell),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderType {
    Limit,
    Market,
    Cancel,
}

impl OrderType {
    pub fn code(self) -> char {
        match self {
            OrderType::Limit => 'L',
            OrderType::Market => 'M',
            OrderType::Cancel => 'C',
        }
    }

    pub fn from_code(c: &str) -> Option<OrderType> {
        match c {
            "L" | "l" => Some(OrderType::Limit),
            "M" | "m" => Some(OrderType::Market),
            "C" | "c" => Some(OrderType::Cancel),
            _ => None,
        }
    }
}

/// Who submitted an order. Agent type identity rides along so that trace
/// analysis needs no separate identity log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    Agent(AgentId),
    Replay,
    Calibration,
    Intervention,
}

impl Origin {
    pub fn label(self) -> &'static str {
        match self {
            Origin::Agent(_) => "agent",
            Origin::Replay => "replay",
            Origin::Calibration => "calibration",
            Origin::Intervention => "intervention",
        }
    }

    pub fn agent(self) -> Option<AgentId> {
        match self {
            Origin::Agent(id) => Some(id),
            _ => None,
        }
    }
}

/// An exchange message.
///
/// `price` is meaningful only for limit orders and `volume` is zero for
/// cancels. A cancel names the resting order it removes in `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub asset: AssetId,
    pub side: Side,
    pub order_type: OrderType,
    pub price: Ticks,
    pub volume: Lots,
    pub recv_time: TimeNs,
    pub origin: Origin,
    pub target: Option<OrderId>,
}

impl Order {
    pub fn limit(id: u64, asset: AssetId, side: Side, price: Ticks, volume: Lots) -> Self {
        Order {
            id: OrderId(id),
            asset,
            side,
            order_type: OrderType::Limit,
            price,
            volume,
            recv_time: 0,
            origin: Origin::Replay,
            target: None,
        }
    }

    pub fn market(id: u64, asset: AssetId, side: Side, volume: Lots) -> Self {
        Order {
            order_type: OrderType::Market,
            price: 0,
            ..Order::limit(id, asset, side, 0, volume)
        }
    }

    pub fn cancel(id: u64, asset: AssetId, target: OrderId) -> Self {
        Order {
            order_type: OrderType::Cancel,
            price: 0,
            volume: 0,
            target: Some(target),
            ..Order::limit(id, asset, Side::Buy, 0, 0)
        }
    }

    pub fn at(mut self, time: TimeNs) -> Self {
        self.recv_time = time;
        self
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    /// Structural validity independent of exchange state.
    pub fn is_well_formed(&self) -> bool {
        match self.order_type {
            OrderType::Limit => self.price >= 1 && self.volume >= 1,
            OrderType::Market => self.volume >= 1,
            OrderType::Cancel => self.target.is_some(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    OutsideSession,
    PriceBand,
    InsufficientAvailable,
    InsufficientCash,
    Malformed,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::OutsideSession => "OutsideSession",
            RejectReason::PriceBand => "PriceBand",
            RejectReason::InsufficientAvailable => "InsufficientAvailable",
            RejectReason::InsufficientCash => "InsufficientCash",
            RejectReason::Malformed => "Malformed",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReceiptStatus {
    /// Limit or market order processed by continuous matching.
    Processed,
    /// Limit order held for the opening call auction.
    Queued,
    /// Cancel removed resting volume.
    Canceled,
    /// Cancel named an order that is no longer resting.
    CancelNoop,
    /// Resting order removed by end-of-day expiry.
    Expired,
    Rejected(RejectReason),
}

/// Exchange acknowledgement for one message.
///
/// For every order `filled + resting + canceled + discarded` equals the
/// volume it carried at the time of the operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub order_id: OrderId,
    pub target: Option<OrderId>,
    pub status: ReceiptStatus,
    pub filled: Lots,
    pub resting: Lots,
    pub canceled: Lots,
    pub discarded: Lots,
}

impl Receipt {
    pub fn rejected(order: &Order, reason: RejectReason) -> Self {
        Receipt {
            order_id: order.id,
            target: order.target,
            status: ReceiptStatus::Rejected(reason),
            filled: 0,
            resting: 0,
            canceled: 0,
            discarded: 0,
        }
    }
}

/// One execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub trade_id: u64,
    pub asset: AssetId,
    pub price: Ticks,
    pub volume: Lots,
    pub aggressor_order_id: OrderId,
    pub resting_order_id: OrderId,
    pub aggressor_side: Side,
    pub time: TimeNs,
}

impl TradeRecord {
    pub fn buy_order(&self) -> OrderId {
        match self.aggressor_side {
            Side::Buy => self.aggressor_order_id,
            Side::Sell => self.resting_order_id,
        }
    }

    pub fn sell_order(&self) -> OrderId {
        match self.aggressor_side {
            Side::Buy => self.resting_order_id,
            Side::Sell => self.aggressor_order_id,
        }
    }
}

/// Formats event time as `HH:MM:SS.mmm` within its day, prefixed by the day index.
pub fn fmt_time(t: TimeNs) -> String {
    let day = t / NANOS_PER_DAY;
    let rem = t % NANOS_PER_DAY;
    let secs = rem / NANOS_PER_SEC;
    let ms = (rem % NANOS_PER_SEC) / NANOS_PER_MILLI;
    format!("d{}+{:02}:{:02}:{:02}.{:03}", day, secs / 3600, (secs / 60) % 60, secs % 60, ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn namespaces_do_not_overlap() {
        let c = OrderId::calibration(3, 7);
        let i = OrderId::intervention(7);
        assert!(c.is_calibration());
        assert!(!i.is_calibration());
        assert!(!OrderId(7).is_calibration());
        assert_ne!(c, OrderId::calibration(4, 7));
    }

    #[test]
    fn side_price_relations() {
        assert!(Side::Buy.better(1001, 1000));
        assert!(Side::Sell.better(1000, 1001));
        assert!(Side::Sell.crosses(1000, 1000));
        assert!(!Side::Buy.crosses(999, 1000));
    }

    #[test]
    fn time_formatting() {
        let t = NANOS_PER_DAY + 9 * 3600 * NANOS_PER_SEC + 30 * 60 * NANOS_PER_SEC + 3 * NANOS_PER_SEC;
        assert_eq!(fmt_time(t), "d1+09:30:03.000");
    }
}
