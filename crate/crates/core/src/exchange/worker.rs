//! Per-asset matching engines and the pool that runs them.
//!
//! The dispatch loop hands out sequenced commands and collects outcomes at
//! synchronization points. Outcomes are returned sorted by sequence number,
//! so the committed result does not depend on how assets map to threads.

use std::sync::mpsc::{self, Receiver, Sender};
use std::thread::JoinHandle;

use super::auction::{run_call_auction, AuctionResult};
use crate::book::{LobSnapshot, OrderBook, RestingOrder};
use crate::calibration::{calibrate_book, CalibrationOutcome, CalibrationParams};
use crate::error::{Error, Result};
use crate::types::{AssetId, Order, OrderType, Receipt, ReceiptStatus, Ticks, TimeNs, TradeRecord};

/// How an accepted order is handled by its asset engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Continuous,
    /// Held for the opening auction.
    Auction,
}

#[derive(Clone, Debug)]
pub enum Command {
    Submit { seq: u64, order: Order, mode: Mode },
    Auction { seq: u64, asset: AssetId, time: TimeNs, p_ref: Ticks },
    /// Removes resting orders; with `keep = Some((lo, hi))` orders priced inside are kept.
    Expire { seq: u64, asset: AssetId, keep: Option<(Ticks, Ticks)> },
    Calibrate { seq: u64, asset: AssetId, time: TimeNs, checkpoint: usize, target: Box<LobSnapshot>, params: CalibrationParams, band: (Ticks, Ticks) },
    Snapshot { seq: u64, asset: AssetId, time: TimeNs, depth: usize },
}

impl Command {
    pub fn asset(&self) -> AssetId {
        match self {
            Command::Submit { order, .. } => order.asset,
            Command::Auction { asset, .. }
            | Command::Expire { asset, .. }
            | Command::Calibrate { asset, .. }
            | Command::Snapshot { asset, .. } => *asset,
        }
    }
}

#[derive(Clone, Debug)]
pub enum OutcomeKind {
    Order { order: Order, receipt: Receipt, trades: Vec<TradeRecord> },
    Auction(AuctionResult),
    Expired(Vec<RestingOrder>),
    Calibrated(Box<CalibrationOutcome>),
    Snapshot(LobSnapshot),
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub seq: u64,
    pub asset: AssetId,
    pub kind: OutcomeKind,
}

/// Book plus the pre-open order pool for one asset.
#[derive(Clone, Debug)]
pub struct AssetEngine {
    pub book: OrderBook,
    pool: Vec<RestingOrder>,
    calibration_ids: u64,
}

impl AssetEngine {
    pub fn new(asset: AssetId) -> Self {
        AssetEngine { book: OrderBook::new(asset), pool: Vec::new(), calibration_ids: 0 }
    }

    pub fn asset(&self) -> AssetId {
        self.book.asset()
    }

    pub fn pool(&self) -> &[RestingOrder] {
        &self.pool
    }

    fn queue_for_auction(&mut self, order: &Order) -> Receipt {
        let mut r = Receipt { order_id: order.id, target: order.target, status: ReceiptStatus::Queued, filled: 0, resting: 0, canceled: 0, discarded: 0 };
        match order.order_type {
            OrderType::Limit => {
                let arrival = self.book.stamp();
                self.pool.push(RestingOrder { id: order.id, side: order.side, price: order.price, volume: order.volume, arrival });
                r.resting = order.volume;
            }
            OrderType::Cancel => {
                let target = order.target.unwrap_or_default();
                if let Some(i) = self.pool.iter().position(|o| o.id == target) {
                    let o = self.pool.remove(i);
                    r.status = ReceiptStatus::Canceled;
                    r.canceled = o.volume;
                } else if let Some(o) = self.book.remove(target) {
                    r.status = ReceiptStatus::Canceled;
                    r.canceled = o.volume;
                } else {
                    r.status = ReceiptStatus::CancelNoop;
                }
            }
            OrderType::Market => unreachable!("market orders are rejected before the auction"),
        }
        r
    }

    pub fn execute(&mut self, cmd: Command) -> Outcome {
        let asset = cmd.asset();
        let (seq, kind) = match cmd {
            Command::Submit { seq, order, mode } => {
                let mut trades = Vec::new();
                let receipt = match mode {
                    Mode::Continuous => self.book.submit(&order, &mut trades),
                    Mode::Auction => self.queue_for_auction(&order),
                };
                (seq, OutcomeKind::Order { order, receipt, trades })
            }
            Command::Auction { seq, asset, time, p_ref } => {
                let mut orders = self.book.drain();
                orders.append(&mut self.pool);
                let result = run_call_auction(asset, orders, p_ref, time);
                for o in &result.residual {
                    self.book.insert_resting(*o);
                }
                (seq, OutcomeKind::Auction(result))
            }
            Command::Expire { seq, keep, .. } => {
                let mut removed = std::mem::take(&mut self.pool);
                for o in self.book.resting_orders() {
                    if keep.is_none_or(|(lo, hi)| o.price < lo || o.price > hi) {
                        removed.extend(self.book.remove(o.id));
                    }
                }
                (seq, OutcomeKind::Expired(removed))
            }
            Command::Calibrate { seq, time, checkpoint, target, params, band, .. } => {
                let out = calibrate_book(&mut self.book, &target, &params, band, time, checkpoint, &mut self.calibration_ids);
                (seq, OutcomeKind::Calibrated(Box::new(out)))
            }
            Command::Snapshot { seq, time, depth, .. } => (seq, OutcomeKind::Snapshot(self.book.snapshot(depth, time))),
        };
        Outcome { seq, asset, kind }
    }
}

enum Msg {
    Batch(Vec<Command>),
    Barrier,
    Stop,
}

enum Reply {
    Done(Vec<Outcome>),
}

struct Threads {
    senders: Vec<Sender<Msg>>,
    replies: Receiver<Reply>,
    buffers: Vec<Vec<Command>>,
    handles: Vec<JoinHandle<Vec<AssetEngine>>>,
    batch: usize,
}

enum Inner {
    Inline { engines: Vec<AssetEngine>, queue: Vec<Command> },
    Threads(Threads),
}

/// Runs asset engines inline (`workers = 0`) or on `workers` threads,
/// asset `j` on thread `j % workers`.
pub struct WorkerPool {
    inner: Inner,
    assets: usize,
    pending: usize,
    syncs: u64,
}

pub const DEFAULT_BATCH: usize = 256;

fn worker_loop(mut engines: Vec<AssetEngine>, stride: usize, rx: Receiver<Msg>, tx: Sender<Reply>) -> Vec<AssetEngine> {
    let mut out = Vec::new();
    while let Ok(msg) = rx.recv() {
        match msg {
            Msg::Batch(cmds) => {
                for c in cmds {
                    let local = c.asset() / stride;
                    out.push(engines[local].execute(c));
                }
            }
            Msg::Barrier => {
                if tx.send(Reply::Done(std::mem::take(&mut out))).is_err() {
                    break;
                }
            }
            Msg::Stop => break,
        }
    }
    engines
}

impl WorkerPool {
    pub fn new(assets: usize, workers: usize) -> Self {
        Self::with_batch(assets, workers, DEFAULT_BATCH)
    }

    pub fn with_batch(assets: usize, workers: usize, batch: usize) -> Self {
        let engines: Vec<AssetEngine> = (0..assets).map(AssetEngine::new).collect();
        let inner = if workers == 0 {
            Inner::Inline { engines, queue: Vec::new() }
        } else {
            let (reply_tx, replies) = mpsc::channel();
            let mut per: Vec<Vec<AssetEngine>> = (0..workers).map(|_| Vec::new()).collect();
            for e in engines {
                per[e.asset() % workers].push(e);
            }
            let mut senders = Vec::new();
            let mut handles = Vec::new();
            for (w, mine) in per.into_iter().enumerate() {
                let (tx, rx) = mpsc::channel();
                let reply = reply_tx.clone();
                let h = std::thread::Builder::new()
                    .name(format!("match-{w}"))
                    .spawn(move || worker_loop(mine, workers, rx, reply))
                    .expect("spawn matching worker");
                senders.push(tx);
                handles.push(h);
            }
            Inner::Threads(Threads { senders, replies, buffers: vec![Vec::new(); workers], handles, batch: batch.max(1) })
        };
        WorkerPool { inner, assets, pending: 0, syncs: 0 }
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn workers(&self) -> usize {
        match &self.inner {
            Inner::Inline { .. } => 0,
            Inner::Threads(t) => t.senders.len(),
        }
    }

    /// Commands handed out since the last sync.
    pub fn pending(&self) -> usize {
        self.pending
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn submit(&mut self, cmd: Command) -> Result<()> {
        self.pending += 1;
        match &mut self.inner {
            Inner::Inline { queue, .. } => queue.push(cmd),
            Inner::Threads(t) => {
                let w = cmd.asset() % t.senders.len();
                t.buffers[w].push(cmd);
                if t.buffers[w].len() >= t.batch {
                    let b = std::mem::take(&mut t.buffers[w]);
                    t.senders[w].send(Msg::Batch(b)).map_err(|_| Error::Worker(format!("worker {w} is gone")))?;
                }
            }
        }
        Ok(())
    }

    /// Waits for every handed-out command and returns the outcomes in sequence order.
    pub fn sync(&mut self) -> Result<Vec<Outcome>> {
        self.syncs += 1;
        self.pending = 0;
        let mut out = match &mut self.inner {
            Inner::Inline { engines, queue } => queue.drain(..).map(|c| engines[c.asset()].execute(c)).collect::<Vec<_>>(),
            Inner::Threads(t) => {
                for (w, tx) in t.senders.iter().enumerate() {
                    let b = std::mem::take(&mut t.buffers[w]);
                    let lost = || Error::Worker(format!("worker {w} is gone"));
                    if !b.is_empty() {
                        tx.send(Msg::Batch(b)).map_err(|_| lost())?;
                    }
                    tx.send(Msg::Barrier).map_err(|_| lost())?;
                }
                let mut all = Vec::new();
                for _ in 0..t.senders.len() {
                    match t.replies.recv() {
                        Ok(Reply::Done(mut v)) => all.append(&mut v),
                        Err(_) => return Err(Error::Worker("a matching worker terminated".into())),
                    }
                }
                all
            }
        };
        out.sort_unstable_by_key(|o| o.seq);
        Ok(out)
    }

    /// Stops the workers and returns the engines, indexed by asset.
    pub fn into_engines(self) -> Result<Vec<AssetEngine>> {
        match self.inner {
            Inner::Inline { engines, .. } => Ok(engines),
            Inner::Threads(t) => {
                for tx in &t.senders {
                    let _ = tx.send(Msg::Stop);
                }
                let mut all = Vec::new();
                for h in t.handles {
                    all.extend(h.join().map_err(|_| Error::Worker("worker panicked".into()))?);
                }
                all.sort_by_key(|e| e.asset());
                Ok(all)
            }
        }
    }
}
