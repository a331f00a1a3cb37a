//! Exhaustive n-of-m search over a candidate angle grid, plus the result type
//! shared with the evolutionary search.

use std::io::Write;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{reconstruction_fitness, CorrelationScore};
use crate::image_io::GrayImage;
use crate::radon::AngleSet;

/// Default cap on the number of subsets an exhaustive search may evaluate.
pub const DEFAULT_BUDGET_CAP: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    /// 1-based index of the fitness evaluation.
    pub evaluation: usize,
    pub best_so_far: CorrelationScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_angles: AngleSet,
    pub best_score: CorrelationScore,
    pub evaluations: usize,
    pub history: Vec<HistoryPoint>,
}

impl SearchResult {
    /// CSV with columns `evaluation,best_so_far`; undefined scores are left empty.
    pub fn write_history_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["evaluation", "best_so_far"])?;
        for point in &self.history {
            let score = point.best_so_far.value().map(|v| v.to_string()).unwrap_or_default();
            w.write_record([point.evaluation.to_string(), score])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Running best over a sequence of evaluations. Ties keep the earlier entry.
#[derive(Debug, Default)]
pub(crate) struct BestTracker {
    best: Option<(AngleSet, CorrelationScore)>,
    history: Vec<HistoryPoint>,
}

impl BestTracker {
    pub(crate) fn record(&mut self, angles: &AngleSet, score: CorrelationScore) {
        let improved = match &self.best {
            None => true,
            Some((_, best)) => score.rank() > best.rank(),
        };
        if improved {
            self.best = Some((angles.clone(), score));
        }
        let best_so_far = self.best.as_ref().map(|b| b.1).unwrap_or_default();
        self.history.push(HistoryPoint {
            evaluation: self.history.len() + 1,
            best_so_far,
        });
    }

    pub(crate) fn best_score(&self) -> Option<CorrelationScore> {
        self.best.as_ref().map(|b| b.1)
    }

    pub(crate) fn finish(self) -> Option<SearchResult> {
        let (best_angles, best_score) = self.best?;
        Some(SearchResult {
            best_angles,
            best_score,
            evaluations: self.history.len(),
            history: self.history,
        })
    }
}

/// Exact binomial coefficient `C(m, n)`.
pub fn count_combinations(n: usize, m: usize) -> Result<BigUint> {
    if n > m {
        return Err(Error::SubsetTooLarge { n, m });
    }
    let k = n.min(m - n);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        // the running product of i+1 consecutive integers is divisible by (i+1)!
        acc = acc * BigUint::from(m - i) / BigUint::from(i + 1);
    }
    Ok(acc)
}

/// All `n`-element index subsets of `0..m` in lexicographic order.
pub fn combinations(n: usize, m: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = (n <= m).then(|| (0..n).collect::<Vec<_>>());
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut following = current.clone();
        let mut i = n;
        while i > 0 {
            i -= 1;
            if following[i] < m - n + i {
                following[i] += 1;
                for j in i + 1..n {
                    following[j] = following[j - 1] + 1;
                }
                next = Some(following);
                break;
            }
        }
        Some(current)
    })
}

/// Evaluates `objective` on every `n`-subset of `candidates` and returns the
/// best. Subsets are evaluated in parallel on the current rayon pool but
/// reduced in lexicographic order, so the result does not depend on the
/// number of workers.
pub fn exhaustive_search_with<F>(objective: F, n: usize, candidates: &AngleSet, budget_cap: u64) -> Result<SearchResult>
where
    F: Fn(&AngleSet) -> Result<CorrelationScore> + Sync,
{
    let m = candidates.len();
    if n == 0 {
        return Err(Error::InvalidAngles("cannot search for zero angles".into()));
    }
    let required = count_combinations(n, m)?;
    if required > BigUint::from(budget_cap) {
        return Err(Error::BudgetExceeded {
            required: required.to_string(),
            cap: budget_cap,
        });
    }
    let subsets: Vec<AngleSet> = combinations(n, m)
        .map(|idx| candidates.subset(&idx))
        .collect::<Result<_>>()?;
    let scores: Vec<CorrelationScore> = subsets.par_iter().map(&objective).collect::<Result<_>>()?;

    let mut tracker = BestTracker::default();
    for (angles, score) in subsets.iter().zip(scores) {
        tracker.record(angles, score);
    }
    Ok(tracker.finish().expect("at least one subset"))
}

/// Exhaustive search with the reconstruction-correlation objective.
pub fn exhaustive_search(img: &GrayImage, n: usize, candidates: &AngleSet, budget_cap: u64) -> Result<SearchResult> {
    img.side()?;
    exhaustive_search_with(|a| reconstruction_fitness(img, a), n, candidates, budget_cap)
}
