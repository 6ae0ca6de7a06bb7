use std::collections::HashMap;

/// Gestalt pattern-matching ratio over Unicode scalar values, `2M / (|a| + |b|)`.
///
/// Produces the same value as Python's `difflib.SequenceMatcher(None, a, b,
/// autojunk=False).ratio()`, including 1.0 for two empty strings.
pub fn similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matched_chars(&a, &b) as f64 / total as f64
}

/// Sum of matching-block lengths.
pub fn matched_chars(a: &[char], b: &[char]) -> usize {
    let mut b2j: HashMap<char, Vec<usize>> = HashMap::new();
    for (j, c) in b.iter().enumerate() {
        b2j.entry(*c).or_default().push(j);
    }
    let mut finder = LongestMatch::new(b.len());
    let mut total = 0;
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        let (i, j, k) = finder.find(a, &b2j, alo, ahi, blo, bhi);
        if k == 0 {
            continue;
        }
        total += k;
        if alo < i && blo < j {
            stack.push((alo, i, blo, j));
        }
        if i + k < ahi && j + k < bhi {
            stack.push((i + k, ahi, j + k, bhi));
        }
    }
    total
}

/// Scratch rows for the longest-common-block search.
struct LongestMatch {
    prev: Vec<usize>,
    next: Vec<usize>,
    prev_touched: Vec<usize>,
    next_touched: Vec<usize>,
}

impl LongestMatch {
    fn new(n: usize) -> Self {
        Self {
            prev: vec![0; n + 1],
            next: vec![0; n + 1],
            prev_touched: Vec::new(),
            next_touched: Vec::new(),
        }
    }

    /// Longest block `a[i..i+k] == b[j..j+k]` inside the window; earliest `i`
    /// wins, then earliest `j`.
    fn find(
        &mut self,
        a: &[char],
        b2j: &HashMap<char, Vec<usize>>,
        alo: usize,
        ahi: usize,
        blo: usize,
        bhi: usize,
    ) -> (usize, usize, usize) {
        let (mut besti, mut bestj, mut bestk) = (alo, blo, 0);
        // prev[j + 1] = length of the match ending at (i - 1, j).
        for (i, c) in a.iter().enumerate().take(ahi).skip(alo) {
            if let Some(js) = b2j.get(c) {
                let start = js.partition_point(|&j| j < blo);
                for &j in &js[start..] {
                    if j >= bhi {
                        break;
                    }
                    let k = self.prev[j] + 1;
                    self.next[j + 1] = k;
                    self.next_touched.push(j + 1);
                    if k > bestk {
                        besti = i + 1 - k;
                        bestj = j + 1 - k;
                        bestk = k;
                    }
                }
            }
            for &t in &self.prev_touched {
                self.prev[t] = 0;
            }
            self.prev_touched.clear();
            std::mem::swap(&mut self.prev, &mut self.next);
            std::mem::swap(&mut self.prev_touched, &mut self.next_touched);
        }
        for &t in &self.prev_touched {
            self.prev[t] = 0;
        }
        self.prev_touched.clear();
        (besti, bestj, bestk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        assert_eq!(similarity("abcd", "abcd"), 1.0);
    }

    #[test]
    fn shifted_by_one() {
        assert_eq!(similarity("abcd", "bcde"), 0.75);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(similarity("", ""), 1.0);
        assert_eq!(similarity("", "abc"), 0.0);
    }

    #[test]
    fn recursion_on_both_flanks() {
        // difflib: blocks "ab" and "d" -> M = 3
        assert_eq!(
            matched_chars(&['a', 'b', 'x', 'd'], &['a', 'b', 'y', 'd']),
            3
        );
        // non-commutative block choice: "abxcd" vs "cdxab"
        assert!((similarity("abxcd", "cdxab") - 0.4).abs() < 1e-12);
    }
}
