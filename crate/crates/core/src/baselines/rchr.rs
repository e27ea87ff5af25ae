//! Reverse-chronological feed: the cascade with the freshest activity first.

use crate::error::Result;
use crate::model::Cascade;
use crate::rank_eval::{last_event_global, order_by_score, Ranker};

/// Orders `candidates` by their latest event before `t`, newest first; ties by id.
pub fn rank_rchr(cascades: &[Cascade], candidates: &[usize], t: f64) -> Vec<usize> {
    let scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&i| {
            (
                i,
                last_event_global(&cascades[i], t).unwrap_or(f64::NEG_INFINITY),
            )
        })
        .collect();
    order_by_score(cascades, t, &scored, false)
}

#[derive(Clone, Debug, Default)]
pub struct RchrRanker;

impl Ranker for RchrRanker {
    fn name(&self) -> &str {
        "RCHR"
    }

    fn rank(
        &mut self,
        _user: &str,
        t: f64,
        cascades: &[Cascade],
        candidates: &[usize],
    ) -> Result<Vec<usize>> {
        Ok(rank_rchr(cascades, candidates, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;

    fn cascade(id: &str, origin: f64, comments: &[f64]) -> Cascade {
        Cascade::new(
            id,
            "g",
            origin,
            Event::new(0.0, "p", vec![]),
            comments
                .iter()
                .map(|t| Event::new(*t, "u", vec![]))
                .collect(),
            1000.0,
        )
        .unwrap()
    }

    #[test]
    fn freshest_first() {
        let cs = vec![
            cascade("a", 0.0, &[10.0]),
            cascade("b", 5.0, &[2.0, 20.0]),
            cascade("c", 15.0, &[]),
        ];
        // Latest events before 30: a@10, b@25, c@15.
        assert_eq!(rank_rchr(&cs, &[0, 1, 2], 30.0), vec![1, 2, 0]);
        // Before 22 the comment on b at 25 is invisible: b@7.
        assert_eq!(rank_rchr(&cs, &[0, 1, 2], 22.0), vec![2, 0, 1]);
    }

    #[test]
    fn ties_by_id_and_trivial_inputs() {
        let cs = vec![cascade("b", 0.0, &[]), cascade("a", 0.0, &[])];
        assert_eq!(rank_rchr(&cs, &[0, 1], 5.0), vec![1, 0]);
        assert_eq!(rank_rchr(&cs, &[0], 5.0), vec![0]);
        assert!(rank_rchr(&cs, &[], 5.0).is_empty());
    }
}
