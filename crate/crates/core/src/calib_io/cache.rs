//! Ranking cache: one `<t_seconds> <view_id …>` line per second, views
//! ordered best to worst with the ego camera first.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::text::{content_lines, parse_seconds};
use crate::{Error, Result, ViewId};

/// The view order at one timestep, without scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOrder {
    pub timestamp: u32,
    pub order: Vec<ViewId>,
}

impl RankOrder {
    pub fn rank_of(&self, view: ViewId) -> Option<usize> {
        self.order.iter().position(|&v| v == view)
    }

    pub fn worst(&self) -> ViewId {
        *self.order.last().expect("rank order is never empty")
    }
}

pub fn parse_ranking_cache(text: &str) -> Result<Vec<RankOrder>> {
    let mut out: Vec<RankOrder> = Vec::new();
    let mut view_set: Option<HashSet<ViewId>> = None;
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let timestamp = parse_seconds(tokens.next().expect("non-empty line"), line)?;
        let order = tokens
            .map(|tok| {
                tok.parse::<u32>()
                    .map(ViewId)
                    .map_err(|_| Error::parse(line, format!("view id `{tok}` is not an unsigned integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        if order.len() < 2 {
            return Err(Error::invalid(Some(line), "a ranking needs the ego view and at least one exo view"));
        }
        if order[0] != ViewId::EGO {
            return Err(Error::invalid(Some(line), "ranking must start with the ego view (0)"));
        }
        let set: HashSet<ViewId> = order.iter().copied().collect();
        if set.len() != order.len() {
            return Err(Error::invalid(Some(line), "ranking repeats a view id"));
        }
        match &view_set {
            Some(expected) if *expected != set => {
                return Err(Error::invalid(Some(line), "ranking covers a different set of views than earlier lines"))
            }
            Some(_) => {}
            None => view_set = Some(set),
        }
        if let Some(prev) = out.last() {
            if timestamp <= prev.timestamp {
                return Err(Error::invalid(Some(line), format!("timestamp {timestamp} is not increasing")));
            }
        }
        out.push(RankOrder { timestamp, order });
    }
    if out.is_empty() {
        return Err(Error::invalid(None, "ranking cache is empty"));
    }
    Ok(out)
}

pub fn serialize_ranking_cache(orders: &[RankOrder]) -> String {
    let mut out = String::new();
    for r in orders {
        let _ = write!(out, "{}", r.timestamp);
        for v in &r.order {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let c = parse_ranking_cache("0 0 2 1\n1 0 1 2\n").unwrap();
        assert_eq!(c[1].order, vec![ViewId(0), ViewId(1), ViewId(2)]);
        assert_eq!(c[0].worst(), ViewId(1));
        assert_eq!(serialize_ranking_cache(&c), "0 0 2 1\n1 0 1 2\n");
        assert!(parse_ranking_cache("0 1 0\n").is_err());
        assert!(parse_ranking_cache("0 0 1 1\n").is_err());
        assert!(parse_ranking_cache("0 0 1\n0 0 1\n").is_err());
        assert!(parse_ranking_cache("0 0 1\n1 0 2\n").is_err());
        assert!(parse_ranking_cache("").is_err());
    }
}
