//! Trading-day calendar: each day is an ordered, contiguous list of sessions.

use serde::{Deserialize, Serialize};

use crate::types::{TimeNs, NANOS_PER_DAY, NANOS_PER_SEC};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    PreopenAuction,
    ContinuousTrading,
    IntradayBreak,
    EodClearing,
    /// Outside every configured session (overnight, before the first day).
    Closed,
}

impl SessionKind {
    pub fn accepts_orders(self) -> bool {
        matches!(self, SessionKind::PreopenAuction | SessionKind::ContinuousTrading)
    }

    pub fn label(self) -> &'static str {
        match self {
            SessionKind::PreopenAuction => "preopen",
            SessionKind::ContinuousTrading => "continuous",
            SessionKind::IntradayBreak => "break",
            SessionKind::EodClearing => "eod",
            SessionKind::Closed => "closed",
        }
    }
}

/// One session, as wall-clock offsets `HH:MM[:SS]` within the day.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub kind: SessionKind,
    pub start: String,
    pub end: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarSpec {
    /// Trading-day indices; day `d` starts at `d * 86400 s` of event time.
    pub days: Vec<u32>,
    pub sessions: Vec<SessionSpec>,
}

impl Default for CalendarSpec {
    fn default() -> Self {
        let s = |kind, start: &str, end: &str| SessionSpec { kind, start: start.into(), end: end.into() };
        CalendarSpec {
            days: vec![0],
            sessions: vec![
                s(SessionKind::PreopenAuction, "09:15", "09:30"),
                s(SessionKind::ContinuousTrading, "09:30", "11:30"),
                s(SessionKind::IntradayBreak, "11:30", "13:00"),
                s(SessionKind::ContinuousTrading, "13:00", "15:00"),
                s(SessionKind::EodClearing, "15:00", "15:30"),
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Session {
    pub kind: SessionKind,
    /// Offset from the day start.
    pub start: TimeNs,
    pub end: TimeNs,
}

/// Where an instant falls in the calendar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase {
    /// Position in the horizon's day list (not the raw day index).
    pub day: usize,
    pub session: Option<usize>,
    pub kind: SessionKind,
}

#[derive(Clone, Debug)]
pub struct SessionCalendar {
    days: Vec<u32>,
    sessions: Vec<Session>,
}

pub fn parse_clock(s: &str) -> Result<TimeNs, String> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(format!("bad clock time `{s}` (want HH:MM or HH:MM:SS)"));
    }
    let mut secs = 0u64;
    for (i, p) in parts.iter().enumerate() {
        let v: u64 = p.parse().map_err(|_| format!("bad clock time `{s}`"))?;
        let limit = if i == 0 { 24 } else { 59 };
        if v > limit {
            return Err(format!("bad clock time `{s}`"));
        }
        secs = secs * 60 + v;
    }
    if parts.len() == 2 {
        secs *= 60;
    }
    Ok(secs * NANOS_PER_SEC)
}

impl SessionCalendar {
    pub fn from_spec(spec: &CalendarSpec) -> Result<Self, String> {
        if spec.days.is_empty() {
            return Err("calendar has no trading days".into());
        }
        if spec.days.windows(2).any(|w| w[0] >= w[1]) {
            return Err("calendar days must be strictly increasing".into());
        }
        if spec.sessions.is_empty() {
            return Err("calendar has no sessions".into());
        }
        let mut sessions = Vec::with_capacity(spec.sessions.len());
        for s in &spec.sessions {
            if s.kind == SessionKind::Closed {
                return Err("`closed` is not a configurable session kind".into());
            }
            let (start, end) = (parse_clock(&s.start)?, parse_clock(&s.end)?);
            if start >= end || end > NANOS_PER_DAY {
                return Err(format!("session {}-{} is empty or past midnight", s.start, s.end));
            }
            sessions.push(Session { kind: s.kind, start, end });
        }
        if sessions.windows(2).any(|w| w[0].end != w[1].start) {
            return Err("sessions must be contiguous and non-overlapping".into());
        }
        Ok(SessionCalendar { days: spec.days.clone(), sessions })
    }

    pub fn days(&self) -> usize {
        self.days.len()
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn day_start(&self, day: usize) -> TimeNs {
        self.days[day] as TimeNs * NANOS_PER_DAY
    }

    pub fn session_bounds(&self, day: usize, session: usize) -> (TimeNs, TimeNs) {
        let base = self.day_start(day);
        let s = &self.sessions[session];
        (base + s.start, base + s.end)
    }

    pub fn horizon_end(&self) -> TimeNs {
        self.session_bounds(self.days.len() - 1, self.sessions.len() - 1).1
    }

    pub fn locate(&self, t: TimeNs) -> Phase {
        let raw = (t / NANOS_PER_DAY) as u32;
        let off = t % NANOS_PER_DAY;
        let day = self.days.partition_point(|&d| d < raw);
        if day < self.days.len() && self.days[day] == raw {
            if let Some(i) = self.sessions.iter().position(|s| s.start <= off && off < s.end) {
                return Phase { day, session: Some(i), kind: self.sessions[i].kind };
            }
        }
        // Attribute closed time to the last day that has started.
        let day = if day < self.days.len() && self.days[day] == raw && off >= self.sessions[0].start {
            day
        } else {
            day.saturating_sub(1)
        };
        Phase { day, session: None, kind: SessionKind::Closed }
    }

    /// Every session start in the horizon, in time order: `(time, day, session)`.
    pub fn transitions(&self) -> Vec<(TimeNs, usize, usize)> {
        let mut out = Vec::with_capacity(self.days.len() * self.sessions.len());
        for d in 0..self.days.len() {
            for i in 0..self.sessions.len() {
                out.push((self.session_bounds(d, i).0, d, i));
            }
        }
        out
    }

    /// `[start, end)` windows of every session of the given kind.
    pub fn windows(&self, kind: SessionKind) -> Vec<(TimeNs, TimeNs)> {
        self.transitions()
            .into_iter()
            .filter(|&(_, _, i)| self.sessions[i].kind == kind)
            .map(|(_, d, i)| self.session_bounds(d, i))
            .collect()
    }

    /// `t` itself if it lies in an order-accepting session, otherwise the
    /// start of the next such session.
    pub fn next_trading_time(&self, t: TimeNs) -> Option<TimeNs> {
        if self.locate(t).kind.accepts_orders() {
            return Some(t);
        }
        self.transitions()
            .into_iter()
            .find(|&(s, _, i)| s > t && self.sessions[i].kind.accepts_orders())
            .map(|(s, _, _)| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hm(h: u64, m: u64) -> TimeNs {
        (h * 3600 + m * 60) * NANOS_PER_SEC
    }

    #[test]
    fn default_day_phases() {
        let c = SessionCalendar::from_spec(&CalendarSpec::default()).unwrap();
        assert_eq!(c.locate(hm(9, 20)).kind, SessionKind::PreopenAuction);
        assert_eq!(c.locate(hm(9, 30)).kind, SessionKind::ContinuousTrading);
        assert_eq!(c.locate(hm(12, 0)).kind, SessionKind::IntradayBreak);
        assert_eq!(c.locate(hm(15, 10)).kind, SessionKind::EodClearing);
        assert_eq!(c.locate(hm(16, 0)).kind, SessionKind::Closed);
        assert_eq!(c.locate(hm(8, 0)).kind, SessionKind::Closed);
        assert_eq!(c.horizon_end(), hm(15, 30));
    }

    #[test]
    fn next_trading_time_skips_break_and_night() {
        let spec = CalendarSpec { days: vec![0, 1], ..CalendarSpec::default() };
        let c = SessionCalendar::from_spec(&spec).unwrap();
        assert_eq!(c.next_trading_time(hm(12, 0)), Some(hm(13, 0)));
        assert_eq!(c.next_trading_time(hm(10, 0)), Some(hm(10, 0)));
        assert_eq!(c.next_trading_time(hm(15, 5)), Some(NANOS_PER_DAY + hm(9, 15)));
        assert_eq!(c.next_trading_time(NANOS_PER_DAY + hm(15, 5)), None);
        assert_eq!(c.locate(NANOS_PER_DAY + hm(1, 0)).day, 0);
    }

    #[test]
    fn rejects_gaps() {
        let mut spec = CalendarSpec::default();
        spec.sessions[1].start = "09:31".into();
        assert!(SessionCalendar::from_spec(&spec).is_err());
        assert!(parse_clock("25:00").is_err());
        assert_eq!(parse_clock("00:00:03").unwrap(), 3 * NANOS_PER_SEC);
    }
}
