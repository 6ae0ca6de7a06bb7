use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::io::{Issue, SimplifiedAnalysis};

use super::similarity::similarity;

/// Minimum text similarity for an issue pair to be eligible.
pub const TEXT_MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    /// Index into the prediction's flattened issue list.
    pub pred: usize,
    /// Index into the ground truth's flattened issue list.
    pub gt: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched_pairs: Vec<MatchedPair>,
}

impl MatchResult {
    /// All three scores are 1 when both sides are empty.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let (precision, recall, f1) = if tp + fp + fn_ == 0 {
            (1.0, 1.0, 1.0)
        } else {
            prf(tp, fp, fn_)
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
            matched_pairs: Vec::new(),
        }
    }
}

/// Precision, recall and F1; each is 0 when its denominator is 0.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f1)
}

struct Flat<'a> {
    rule: &'a str,
    issue: &'a Issue,
}

fn flatten(a: &SimplifiedAnalysis) -> Vec<Flat<'_>> {
    a.issues()
        .map(|(r, i)| Flat {
            rule: &r.rule_name,
            issue: i,
        })
        .collect()
}

/// One-to-one matching of predicted to ground-truth issues.
///
/// A pair is eligible when rule names and start lines are equal and the
/// `Text` similarity is at least [`TEXT_MATCH_THRESHOLD`]. Pairs are taken
/// greedily by descending similarity, then any remaining augmenting path is
/// applied so `tp` is the maximum possible.
pub fn match_issues(pred: &SimplifiedAnalysis, gt: &SimplifiedAnalysis) -> MatchResult {
    let p = flatten(pred);
    let g = flatten(gt);

    let mut edges: Vec<MatchedPair> = Vec::new();
    for (pi, pf) in p.iter().enumerate() {
        for (gi, gf) in g.iter().enumerate() {
            if pf.rule != gf.rule || pf.issue.start_line != gf.issue.start_line {
                continue;
            }
            let s = similarity(&pf.issue.text, &gf.issue.text);
            if s >= TEXT_MATCH_THRESHOLD {
                edges.push(MatchedPair {
                    pred: pi,
                    gt: gi,
                    similarity: s,
                });
            }
        }
    }
    edges.sort_by(|x, y| {
        y.similarity
            .total_cmp(&x.similarity)
            .then(g[x.gt].issue.start_line.cmp(&g[y.gt].issue.start_line))
            .then(g[x.gt].rule.cmp(g[y.gt].rule))
            .then(x.gt.cmp(&y.gt))
            .then(x.pred.cmp(&y.pred))
    });

    let mut pred_of: Vec<Option<usize>> = vec![None; g.len()];
    let mut gt_of: Vec<Option<usize>> = vec![None; p.len()];
    for e in &edges {
        if gt_of[e.pred].is_none() && pred_of[e.gt].is_none() {
            gt_of[e.pred] = Some(e.gt);
            pred_of[e.gt] = Some(e.pred);
        }
    }

    // Greedy can leave a prediction unmatched that a swap would place.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); p.len()];
    for e in &edges {
        adj[e.pred].push(e.gt);
    }
    for start in 0..p.len() {
        if gt_of[start].is_none() && !adj[start].is_empty() {
            let mut seen = vec![false; g.len()];
            augment(start, &adj, &mut seen, &mut pred_of, &mut gt_of);
        }
    }

    let sim: HashMap<(usize, usize), f64> = edges
        .iter()
        .map(|e| ((e.pred, e.gt), e.similarity))
        .collect();
    let mut matched_pairs: Vec<MatchedPair> = gt_of
        .iter()
        .enumerate()
        .filter_map(|(pi, gi)| {
            gi.map(|gi| MatchedPair {
                pred: pi,
                gt: gi,
                similarity: sim[&(pi, gi)],
            })
        })
        .collect();
    matched_pairs.sort_by_key(|m| m.gt);

    let tp = matched_pairs.len();
    let mut out = MatchResult::from_counts(tp, p.len() - tp, g.len() - tp);
    out.matched_pairs = matched_pairs;
    out
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    pred_of: &mut [Option<usize>],
    gt_of: &mut [Option<usize>],
) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        let free = match pred_of[v] {
            None => true,
            Some(w) => augment(w, adj, seen, pred_of, gt_of),
        };
        if free {
            pred_of[v] = Some(u);
            gt_of[u] = Some(v);
            return true;
        }
    }
    false
}
