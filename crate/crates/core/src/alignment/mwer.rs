//! Minimum-WER resegmentation of a token stream onto a reference segmentation.

use std::ops::Range;

use crate::error::{Error, Result};

/// Contiguous partition of a token stream, stored as cumulative offsets
/// `[0, b_1, ..., b_{m-1}, n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segmentation {
    offsets: Vec<usize>,
}

impl Segmentation {
    pub fn from_offsets(offsets: Vec<usize>) -> Result<Self> {
        if offsets.first() != Some(&0) {
            return Err(Error::Invalid("segmentation offsets must start at 0".into()));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Invalid("segmentation offsets must be nondecreasing".into()));
        }
        Ok(Segmentation { offsets })
    }

    /// Segmentation induced by a list of segment lengths.
    pub fn from_lengths<I: IntoIterator<Item = usize>>(lengths: I) -> Self {
        let mut offsets = vec![0];
        let mut acc = 0;
        for l in lengths {
            acc += l;
            offsets.push(acc);
        }
        Segmentation { offsets }
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Interior cut points `b_1..b_{m-1}`.
    pub fn boundaries(&self) -> &[usize] {
        let n = self.offsets.len();
        if n <= 2 {
            &[]
        } else {
            &self.offsets[1..n - 1]
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spans(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.offsets.windows(2).map(|w| w[0]..w[1])
    }

    pub fn apply<'a, T>(&'a self, tokens: &'a [T]) -> impl Iterator<Item = &'a [T]> + 'a {
        self.spans().map(move |r| &tokens[r])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resegmentation {
    pub segmentation: Segmentation,
    /// Total word-level edit distance summed over aligned segments.
    pub cost: usize,
}

/// Splits `hyp` into `refs.len()` contiguous (possibly empty) spans so that
/// the summed word edit distance against the reference segments is minimal.
///
/// The optimum equals the edit distance between `hyp` and the concatenated
/// references. Among optimal partitions, the lexicographically smallest
/// boundary vector is returned.
pub fn mwer_resegment<T: PartialEq>(hyp: &[T], refs: &[&[T]]) -> Result<Resegmentation> {
    let m = refs.len();
    if m == 0 {
        return Err(Error::Invalid("no reference segments to align to".into()));
    }
    let n = hyp.len();
    let cat: Vec<&T> = refs.iter().flat_map(|r| r.iter()).collect();
    let total = cat.len();
    let ref_offsets = Segmentation::from_lengths(refs.iter().map(|r| r.len()));

    // suffix[i][j] = ED(hyp[j..], cat[ref_offsets[i]..]) for reference
    // boundary i in 1..m.
    let mut suffix: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut next: Vec<u32> = (0..=n).map(|j| (n - j) as u32).collect();
    let mut cur = vec![0u32; n + 1];
    let mut boundary = m; // walks ref_offsets from the end
    let store = |p: usize, col: &[u32], boundary: &mut usize, suffix: &mut Vec<Vec<u32>>| {
        while *boundary > 0 && ref_offsets.offsets()[*boundary] == p {
            if *boundary < m {
                suffix[*boundary] = col.to_vec();
            }
            *boundary -= 1;
        }
    };
    store(total, &next, &mut boundary, &mut suffix);
    for p in (0..total).rev() {
        cur[n] = (total - p) as u32;
        for j in (0..n).rev() {
            let sub = next[j + 1] + u32::from(hyp[j] != *cat[p]);
            cur[j] = sub.min(next[j] + 1).min(cur[j + 1] + 1);
        }
        std::mem::swap(&mut cur, &mut next);
        store(p, &next, &mut boundary, &mut suffix);
    }
    let optimum = next[0];

    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0);
    let mut start = 0usize;
    let mut spent = 0u32;
    let mut prev = vec![0u32; n + 1];
    let mut row = vec![0u32; n + 1];
    for (i, seg) in refs.iter().enumerate() {
        // prev[k] = ED(hyp[start..k], seg) for k >= start
        for (k, v) in prev.iter_mut().enumerate().skip(start) {
            *v = (k - start) as u32;
        }
        for (l, tok) in seg.iter().enumerate() {
            row[start] = (l + 1) as u32;
            for k in start + 1..=n {
                let sub = prev[k - 1] + u32::from(hyp[k - 1] != *tok);
                row[k] = sub.min(prev[k] + 1).min(row[k - 1] + 1);
            }
            std::mem::swap(&mut prev, &mut row);
        }
        let end = if i + 1 == m {
            n
        } else {
            (start..=n)
                .find(|&k| spent + prev[k] + suffix[i + 1][k] == optimum)
                .expect("an optimal cut exists for every reference boundary")
        };
        spent += prev[end];
        offsets.push(end);
        start = end;
    }
    debug_assert_eq!(spent, optimum);
    Ok(Resegmentation {
        segmentation: Segmentation { offsets },
        cost: optimum as usize,
    })
}

/// Word-level Levenshtein distance.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y))
                .min(prev[j + 1] + 1)
                .min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    /// Every way to cut `n` tokens into `m` contiguous, possibly empty spans.
    fn all_partitions(n: usize, m: usize) -> Vec<Vec<usize>> {
        fn rec(n: usize, left: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                let mut offs = vec![0];
                offs.extend(cur.iter().copied());
                offs.push(n);
                out.push(offs);
                return;
            }
            for b in from..=n {
                cur.push(b);
                rec(n, left - 1, b, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, m - 1, 0, &mut Vec::new(), &mut out);
        out
    }

    fn brute_force(hyp: &[&str], refs: &[Vec<&str>]) -> (usize, Vec<usize>) {
        let mut best: Option<(usize, Vec<usize>)> = None;
        for offs in all_partitions(hyp.len(), refs.len()) {
            let cost: usize = offs
                .windows(2)
                .zip(refs)
                .map(|(w, r)| edit_distance(&hyp[w[0]..w[1]], r))
                .sum();
            // partitions are enumerated in lexicographic order
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, offs));
            }
        }
        best.unwrap()
    }

    fn run(hyp: &str, refs: &[&str]) -> Resegmentation {
        let h = toks(hyp);
        let r: Vec<Vec<&str>> = refs.iter().map(|s| toks(s)).collect();
        let rr: Vec<&[&str]> = r.iter().map(Vec::as_slice).collect();
        mwer_resegment(&h, &rr).unwrap()
    }

    #[test]
    fn worked_example() {
        let res = run("a b c d", &["a b", "c"]);
        assert_eq!(res.cost, 1);
        assert_eq!(res.segmentation.offsets(), &[0, 2, 4]);
        let (cost, offs) = brute_force(&toks("a b c d"), &[toks("a b"), toks("c")]);
        assert_eq!((cost, offs.as_slice()), (1, [0, 2, 4].as_slice()));
    }

    #[test]
    fn identity_partition() {
        let res = run("x y z w v", &["x y", "z", "w v"]);
        assert_eq!(res.cost, 0);
        assert_eq!(res.segmentation.offsets(), &[0, 2, 3, 5]);
    }

    #[test]
    fn empty_hypothesis() {
        let res = run("", &["a", "b"]);
        assert_eq!(res.cost, 2);
        assert_eq!(res.segmentation.offsets(), &[0, 0, 0]);
    }

    #[test]
    fn empty_reference_segment() {
        let res = run("a b", &["a", "", "b"]);
        assert_eq!(res.cost, 0);
        assert_eq!(res.segmentation.offsets(), &[0, 1, 1, 2]);
    }

    #[test]
    fn no_references_is_an_error() {
        let empty: [&[&str]; 0] = [];
        assert!(mwer_resegment(&["a"], &empty).is_err());
    }

    #[test]
    fn segmentation_accessors() {
        let s = Segmentation::from_offsets(vec![0, 2, 2, 5]).unwrap();
        assert_eq!(s.boundaries(), &[2, 2]);
        assert_eq!(s.len(), 3);
        let toks = [1, 2, 3, 4, 5];
        let parts: Vec<&[i32]> = s.apply(&toks).collect();
        assert_eq!(parts, vec![&[1, 2][..], &[][..], &[3, 4, 5][..]]);
        assert!(Segmentation::from_offsets(vec![0, 3, 2]).is_err());
        assert!(Segmentation::from_offsets(vec![1, 2]).is_err());
    }

    fn vocab() -> impl Strategy<Value = &'static str> {
        prop_oneof![Just("a"), Just("b"), Just("c")]
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(
            hyp in proptest::collection::vec(vocab(), 0..=8),
            refs in proptest::collection::vec(proptest::collection::vec(vocab(), 0..=3), 1..=3),
        ) {
            let rr: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
            let res = mwer_resegment(&hyp, &rr).unwrap();
            let (cost, offs) = brute_force(&hyp, &refs);
            prop_assert_eq!(res.cost, cost);
            prop_assert_eq!(res.segmentation.offsets(), offs.as_slice());
            let cat: Vec<&str> = refs.concat();
            prop_assert_eq!(res.cost, edit_distance(&hyp, &cat));
            let rejoined: Vec<&str> = res.segmentation.apply(&hyp).flatten().copied().collect();
            prop_assert_eq!(rejoined, hyp.clone());
            prop_assert_eq!(res.cost == 0, hyp == cat);
        }
    }
}
