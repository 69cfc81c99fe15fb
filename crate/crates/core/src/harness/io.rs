//! Delimited order streams and snapshot files.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::book::LobSnapshot;
use crate::error::{Error, Result};
use crate::types::{Order, OrderId, OrderType, Side};

pub const ORDER_HEADER: &str = "time_ns,asset,side,type,price,volume,order_id,ref_id\n";

/// Appends one replay row for `order`, stamped with its arrival time.
pub fn write_order_row(o: &Order, out: &mut String) {
    let _ = write!(out, "{},{},{},{},{},{},{},", o.recv_time, o.asset, o.side.code(), o.order_type.code(), o.price, o.volume, o.id);
    if let Some(t) = o.target {
        let _ = write!(out, "{t}");
    }
    out.push('\n');
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn is_header(rec: &csv::StringRecord) -> bool {
    rec.get(0).is_some_and(|f| f.parse::<u64>().is_err())
}

/// Parses and validates a replay stream. Timestamps must not decrease, ids
/// must be unique and cancels must name an earlier id.
pub fn parse_orders(text: &str, path: &str) -> Result<Vec<Order>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut last = 0;
    for (i, rec) in reader(text).records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if i == 0 && is_header(&rec) {
            continue;
        }
        let err = |m: String| Error::parse(path, line, m);
        if rec.len() < 7 {
            return Err(err(format!("expected 8 fields, found {}", rec.len())));
        }
        let num = |k: usize, what: &str| rec[k].parse::<u64>().map_err(|_| err(format!("bad {what} `{}`", &rec[k])));
        let time = num(0, "time_ns")?;
        let asset = num(1, "asset")? as usize;
        let side = Side::from_code(&rec[2]).ok_or_else(|| err(format!("bad side `{}`", &rec[2])))?;
        let kind = OrderType::from_code(&rec[3]).ok_or_else(|| err(format!("bad type `{}`", &rec[3])))?;
        let price = rec[4].parse::<i64>().map_err(|_| err(format!("bad price `{}`", &rec[4])))?;
        let volume = num(5, "volume")?;
        let id = num(6, "order_id")?;
        if time < last {
            return Err(err(format!("timestamp {time} is earlier than the previous row ({last})")));
        }
        last = time;
        if OrderId(id).is_calibration() {
            return Err(err(format!("order id {id} lies in the reserved calibration namespace")));
        }
        if !seen.insert(id) {
            return Err(err(format!("duplicate order id {id}")));
        }
        let order = match kind {
            OrderType::Limit => Order::limit(id, asset, side, price, volume),
            OrderType::Market => Order::market(id, asset, side, volume),
            OrderType::Cancel => {
                let f = rec.get(7).unwrap_or("");
                let target = f.parse::<u64>().map_err(|_| err(format!("cancel needs ref_id, found `{f}`")))?;
                if !seen.contains(&target) || target == id {
                    return Err(err(format!("cancel references unknown id {target}")));
                }
                Order::cancel(id, asset, OrderId(target))
            }
        };
        if !order.is_well_formed() {
            return Err(err("limit orders need price >= 1 and every order volume >= 1".into()));
        }
        out.push(order.at(time));
    }
    Ok(out)
}

pub fn read_orders(path: &Path) -> Result<Vec<Order>> {
    let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
    parse_orders(&text, &path.display().to_string())
}

/// Parses rows written by [`LobSnapshot::write_row`], skipping a header.
pub fn parse_snapshots(text: &str, path: &str) -> Result<Vec<LobSnapshot>> {
    let mut out = Vec::new();
    for (i, rec) in reader(text).records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if i == 0 && is_header(&rec) {
            continue;
        }
        let s = LobSnapshot::parse_fields(rec.iter()).map_err(|m| Error::parse(path, i + 1, m))?;
        s.check().map_err(|v| Error::parse(path, i + 1, format!("{v:?}")))?;
        out.push(s);
    }
    Ok(out)
}

pub fn read_snapshots(path: &Path) -> Result<Vec<LobSnapshot>> {
    let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
    parse_snapshots(&text, &path.display().to_string())
}

pub fn write_snapshots(snaps: &[LobSnapshot]) -> String {
    let depth = snaps.first().map_or(1, |s| s.depth());
    let mut out = LobSnapshot::header(depth);
    for s in snaps {
        s.write_row(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_rows_round_trip() {
        let orders = vec![
            Order::limit(1, 0, Side::Buy, 1000, 5).at(10),
            Order::market(2, 1, Side::Sell, 3).at(10),
            Order::cancel(3, 0, OrderId(1)).at(20),
        ];
        let mut text = String::from(ORDER_HEADER);
        for o in &orders {
            write_order_row(o, &mut text);
        }
        assert_eq!(parse_orders(&text, "t").unwrap(), orders);
    }

    #[test]
    fn rejects_out_of_order() {
        let text = "20,0,B,L,1000,1,1,\n10,0,B,L,1000,1,2,\n";
        match parse_orders(text, "s.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn rejects_dangling_cancel_and_duplicates() {
        assert!(parse_orders("0,0,B,C,0,0,2,1\n", "s").is_err());
        assert!(parse_orders("0,0,B,L,10,1,1,\n0,0,B,L,10,1,1,\n", "s").is_err());
        assert!(parse_orders("0,0,X,L,10,1,1,\n", "s").is_err());
    }

    #[test]
    fn snapshots_round_trip() {
        let s = vec![LobSnapshot::from_sides(0, 5, 2, &[(999, 3)], &[(1001, 4), (1002, 1)])];
        assert_eq!(parse_snapshots(&write_snapshots(&s), "r").unwrap(), s);
    }
}
