//! Masked linear-chain CRF: Viterbi decoding, the forward-algorithm
//! normalizer and the training loss.
//!
//! Transition, start and end scores live in log domain; the boolean mask
//! turns structurally invalid transitions into `-inf` so no decoded path and
//! no probability mass ever crosses them.

use crate::core::span::LabelScheme;
use crate::error::{Error, Result};
use crate::models::params::Ctx;
use crate::models::tape::{logsumexp, Var};
use ndarray::{Array1, Array2};

/// Boolean legality of transitions plus start/end constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMask {
    pub transitions: Array2<bool>,
    pub start: Array1<bool>,
    pub end: Array1<bool>,
}

impl TransitionMask {
    /// No structural constraints (used by the binary prosody heads).
    pub fn allow_all(labels: usize) -> Self {
        TransitionMask {
            transitions: Array2::from_elem((labels, labels), true),
            start: Array1::from_elem(labels, true),
            end: Array1::from_elem(labels, true),
        }
    }

    /// BIES validity for a label scheme: B-x may only continue with I-x or
    /// E-x, spans may only start at B/S/O and stop at E/S/O.
    pub fn bies(scheme: &LabelScheme) -> Self {
        let l = scheme.label_count();
        TransitionMask {
            transitions: Array2::from_shape_fn((l, l), |(i, j)| scheme.transition_allowed(i, j)),
            start: Array1::from_shape_fn(l, |i| scheme.start_allowed(i)),
            end: Array1::from_shape_fn(l, |i| scheme.end_allowed(i)),
        }
    }

    pub fn labels(&self) -> usize {
        self.start.len()
    }
}

/// Borrowed view of a CRF head's scores for the pure (inference-side)
/// algorithms.
pub struct CrfValues<'a> {
    pub transitions: ndarray::ArrayView2<'a, f64>,
    pub start: ndarray::ArrayView1<'a, f64>,
    pub end: ndarray::ArrayView1<'a, f64>,
    pub mask: &'a TransitionMask,
}

impl<'a> CrfValues<'a> {
    pub fn new(
        transitions: &'a Array2<f64>,
        start: &'a Array1<f64>,
        end: &'a Array1<f64>,
        mask: &'a TransitionMask,
    ) -> Self {
        CrfValues {
            transitions: transitions.view(),
            start: start.view(),
            end: end.view(),
            mask,
        }
    }

    fn t(&self, i: usize, j: usize) -> f64 {
        if self.mask.transitions[[i, j]] {
            self.transitions[[i, j]]
        } else {
            f64::NEG_INFINITY
        }
    }

    fn s(&self, i: usize) -> f64 {
        if self.mask.start[i] {
            self.start[i]
        } else {
            f64::NEG_INFINITY
        }
    }

    fn e(&self, i: usize) -> f64 {
        if self.mask.end[i] {
            self.end[i]
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Highest-scoring mask-legal label path and its score. Ties break toward
/// the lowest label id at the earliest differing position.
///
/// Runs the max-product recursion backwards (best completion score per
/// state), then walks forward greedily picking the smallest label on an
/// optimal path, which yields exactly the lexicographically smallest argmax.
pub fn crf_viterbi(emissions: &Array2<f64>, head: &CrfValues<'_>) -> Result<(Vec<usize>, f64)> {
    let n = emissions.nrows();
    let l = head.mask.labels();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    assert_eq!(emissions.ncols(), l, "emission width != label count");

    // beta[t][j]: best score of completing the path from label j at t,
    // counting emissions after t and the end bonus.
    let mut beta = Array2::from_elem((n, l), f64::NEG_INFINITY);
    for j in 0..l {
        beta[[n - 1, j]] = head.e(j);
    }
    for t in (0..n - 1).rev() {
        for j in 0..l {
            let mut best = f64::NEG_INFINITY;
            for k in 0..l {
                let v = step_score(head, emissions, &beta, t, j, k);
                if v > best {
                    best = v;
                }
            }
            beta[[t, j]] = best;
        }
    }

    let total = |j: usize| head.s(j) + emissions[[0, j]] + beta[[0, j]];
    let mut best = f64::NEG_INFINITY;
    for j in 0..l {
        let v = total(j);
        if v > best {
            best = v;
        }
    }
    if best == f64::NEG_INFINITY || best.is_nan() {
        return Err(Error::NoLegalPath);
    }

    let mut path = Vec::with_capacity(n);
    let first = (0..l).find(|&j| total(j) == best).expect("argmax exists");
    path.push(first);
    for t in 0..n - 1 {
        let cur = *path.last().expect("non-empty");
        let target = beta[[t, cur]];
        let next = (0..l)
            .find(|&k| step_score(head, emissions, &beta, t, cur, k) == target)
            .expect("successor on an optimal path");
        path.push(next);
    }
    Ok((path, best))
}

/// Score of extending label `j` at position `t` with label `k` at `t+1`,
/// including everything after. Shared by the DP and the path walk so the
/// float arithmetic is identical in both.
#[inline]
fn step_score(
    head: &CrfValues<'_>,
    emissions: &Array2<f64>,
    beta: &Array2<f64>,
    t: usize,
    j: usize,
    k: usize,
) -> f64 {
    head.t(j, k) + (emissions[[t + 1, k]] + beta[[t + 1, k]])
}

/// Log of the summed exponentiated scores over all mask-legal paths,
/// computed stably in log domain (the forward algorithm).
pub fn crf_log_partition(emissions: &Array2<f64>, head: &CrfValues<'_>) -> Result<f64> {
    let n = emissions.nrows();
    let l = head.mask.labels();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let mut alpha: Vec<f64> = (0..l).map(|j| head.s(j) + emissions[[0, j]]).collect();
    for t in 1..n {
        let mut next = vec![f64::NEG_INFINITY; l];
        for (j, slot) in next.iter_mut().enumerate() {
            *slot = logsumexp((0..l).map(|i| alpha[i] + head.t(i, j))) + emissions[[t, j]];
        }
        alpha = next;
    }
    let z = logsumexp((0..l).map(|j| alpha[j] + head.e(j)));
    if z == f64::NEG_INFINITY {
        return Err(Error::NoLegalPath);
    }
    Ok(z)
}

/// Score of one specific path; errors if the path crosses a masked
/// transition or violates the start/end constraints.
pub fn crf_path_score(
    emissions: &Array2<f64>,
    head: &CrfValues<'_>,
    path: &[usize],
) -> Result<f64> {
    let n = emissions.nrows();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    assert_eq!(path.len(), n, "path length != sequence length");
    if !head.mask.start[path[0]] {
        return Err(Error::IllegalGoldPath(0));
    }
    let mut score = head.start[path[0]] + emissions[[0, path[0]]];
    for t in 1..n {
        if !head.mask.transitions[[path[t - 1], path[t]]] {
            return Err(Error::IllegalGoldPath(t));
        }
        score += head.transitions[[path[t - 1], path[t]]] + emissions[[t, path[t]]];
    }
    if !head.mask.end[path[n - 1]] {
        return Err(Error::IllegalGoldPath(n - 1));
    }
    Ok(score + head.end[path[n - 1]])
}

/// Negative log-likelihood of the gold path on the tape:
/// `log Z - score(gold)`. Always >= 0; errors if the gold path is illegal.
pub fn crf_nll_tape<'t>(
    ctx: &Ctx<'t, '_>,
    emissions: Var<'t>,
    transitions: Var<'t>,
    start: Var<'t>,
    end: Var<'t>,
    mask: &TransitionMask,
    gold: &[usize],
) -> Result<Var<'t>> {
    let n = gold.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if !mask.start[gold[0]] {
        return Err(Error::IllegalGoldPath(0));
    }
    for t in 1..n {
        if !mask.transitions[[gold[t - 1], gold[t]]] {
            return Err(Error::IllegalGoldPath(t));
        }
    }
    if !mask.end[gold[n - 1]] {
        return Err(Error::IllegalGoldPath(n - 1));
    }

    let trans_masked = transitions.mask_fill(&mask.transitions, f64::NEG_INFINITY);
    let start_masked = start.mask_fill1(&mask.start, f64::NEG_INFINITY);
    let end_masked = end.mask_fill1(&mask.end, f64::NEG_INFINITY);

    // Forward recursion.
    let mut alpha = start_masked.add(emissions.row(0));
    for t in 1..n {
        alpha = trans_masked
            .add_colvec(alpha)
            .logsumexp_axis0()
            .add(emissions.row(t));
    }
    let log_z = alpha.add(end_masked).logsumexp_1d();

    // Gold path score (unmasked entries only, checked above).
    let mut gold_score = start.pick1(gold[0]).add(emissions.pick(0, gold[0]));
    for t in 1..n {
        gold_score = gold_score
            .add(transitions.pick(gold[t - 1], gold[t]))
            .add(emissions.pick(t, gold[t]));
    }
    gold_score = gold_score.add(end.pick1(gold[n - 1]));

    let _ = ctx;
    Ok(log_z.sub(gold_score))
}

/// Convenience: NLL as a plain number (used by tests and evaluation).
pub fn crf_nll_value(
    emissions: &Array2<f64>,
    head: &CrfValues<'_>,
    gold: &[usize],
) -> Result<f64> {
    let z = crf_log_partition(emissions, head)?;
    let g = crf_path_score(emissions, head, gold)?;
    Ok(z - g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::params::{Ctx, Params};
    use crate::models::tape::Tape;
    use ndarray::arr1;
    use ndarray::arr2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: enumerate every label path, skipping illegal
    /// ones; returns (argmax path with lexicographic tie-break, max score,
    /// logsumexp of all legal scores).
    pub(crate) fn brute_force(
        emissions: &Array2<f64>,
        head: &CrfValues<'_>,
    ) -> Option<(Vec<usize>, f64, f64)> {
        let n = emissions.nrows();
        let l = head.mask.labels();
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut scores = Vec::new();
        let mut path = vec![0usize; n];
        loop {
            let mut legal = head.mask.start[path[0]] && head.mask.end[path[n - 1]];
            if legal {
                for t in 1..n {
                    if !head.mask.transitions[[path[t - 1], path[t]]] {
                        legal = false;
                        break;
                    }
                }
            }
            if legal {
                let mut s = head.start[path[0]] + emissions[[0, path[0]]];
                for t in 1..n {
                    s += head.transitions[[path[t - 1], path[t]]] + emissions[[t, path[t]]];
                }
                s += head.end[path[n - 1]];
                scores.push(s);
                // Lexicographic enumeration order means strictly-greater
                // keeps the earliest (smallest) optimal path.
                if best.as_ref().map_or(true, |(_, b)| s > *b) {
                    best = Some((path.clone(), s));
                }
            }
            // Next path in lexicographic order.
            let mut t = n;
            loop {
                if t == 0 {
                    let (p, s) = best?;
                    return Some((p, s, logsumexp(scores.iter().copied())));
                }
                t -= 1;
                path[t] += 1;
                if path[t] < l {
                    break;
                }
                path[t] = 0;
            }
        }
    }

    fn random_case(
        rng: &mut ChaCha8Rng,
        n: usize,
        l: usize,
        with_mask: bool,
    ) -> (Array2<f64>, Array2<f64>, Array1<f64>, Array1<f64>, TransitionMask) {
        let emissions = Array2::from_shape_fn((n, l), |_| rng.random_range(-2.0..2.0));
        let transitions = Array2::from_shape_fn((l, l), |_| rng.random_range(-2.0..2.0));
        let start = Array1::from_shape_fn(l, |_| rng.random_range(-2.0..2.0));
        let end = Array1::from_shape_fn(l, |_| rng.random_range(-2.0..2.0));
        let mask = if with_mask {
            // Random mask that always keeps self-loops and start/end open so
            // at least one path stays legal.
            let mut m = TransitionMask {
                transitions: Array2::from_shape_fn((l, l), |_| rng.random_range(0.0..1.0) > 0.3),
                start: Array1::from_shape_fn(l, |_| rng.random_range(0.0..1.0) > 0.3),
                end: Array1::from_shape_fn(l, |_| rng.random_range(0.0..1.0) > 0.3),
            };
            m.start[0] = true;
            m.end[0] = true;
            for i in 0..l {
                m.transitions[[i, i]] = true;
            }
            m
        } else {
            TransitionMask::allow_all(l)
        };
        (emissions, transitions, start, end, mask)
    }

    #[test]
    fn single_token_favoring_first_label() {
        let emissions = arr2(&[[5.0, 0.0, 0.0]]);
        let transitions = Array2::zeros((3, 3));
        let start = Array1::zeros(3);
        let end = Array1::zeros(3);
        let mask = TransitionMask::allow_all(3);
        let head = CrfValues::new(&transitions, &start, &end, &mask);
        let (path, score) = crf_viterbi(&emissions, &head).unwrap();
        assert_eq!(path, vec![0]);
        assert!((score - 5.0).abs() < 1e-12);
        // n=1 partition is logaddexp over labels.
        let z = crf_log_partition(&emissions, &head).unwrap();
        assert!((z - logsumexp([5.0, 0.0, 0.0].into_iter())).abs() < 1e-12);
    }

    #[test]
    fn viterbi_and_partition_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..60 {
            let n = rng.random_range(1..=5);
            let l = rng.random_range(2..=6);
            let (emissions, transitions, start, end, mask) =
                random_case(&mut rng, n, l, case % 2 == 0);
            let head = CrfValues::new(&transitions, &start, &end, &mask);
            let (oracle_path, oracle_best, oracle_z) = brute_force(&emissions, &head).unwrap();
            let (path, score) = crf_viterbi(&emissions, &head).unwrap();
            assert_eq!(path, oracle_path, "case {case}");
            assert!((score - oracle_best).abs() < 1e-9, "case {case}");
            let z = crf_log_partition(&emissions, &head).unwrap();
            assert!((z - oracle_z).abs() < 1e-6, "case {case}");
        }
    }

    #[test]
    fn ties_break_to_lowest_label_at_earliest_position() {
        // All scores integer-zero: every path ties; expect all-zero labels.
        let emissions = Array2::zeros((3, 3));
        let transitions = Array2::zeros((3, 3));
        let start = Array1::zeros(3);
        let end = Array1::zeros(3);
        let mask = TransitionMask::allow_all(3);
        let head = CrfValues::new(&transitions, &start, &end, &mask);
        let (path, _) = crf_viterbi(&emissions, &head).unwrap();
        assert_eq!(path, vec![0, 0, 0]);

        // Self-transitions penalized: [0,1] and [1,0] tie as the optima and
        // the lexicographically smallest must win. Integer scores keep the
        // float sums exact.
        let emissions = Array2::zeros((2, 2));
        let transitions = arr2(&[[-5.0, 0.0], [0.0, -5.0]]);
        let start = Array1::zeros(2);
        let end = Array1::zeros(2);
        let mask = TransitionMask::allow_all(2);
        let head = CrfValues::new(&transitions, &start, &end, &mask);
        let (path, score) = crf_viterbi(&emissions, &head).unwrap();
        assert_eq!(path, vec![0, 1]);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn masked_transition_never_decoded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Forbid 0 -> 1 entirely; random emissions heavily favoring it.
        let mut mask = TransitionMask::allow_all(2);
        mask.transitions[[0, 1]] = false;
        let transitions = Array2::zeros((2, 2));
        let start = Array1::zeros(2);
        let end = Array1::zeros(2);
        for _ in 0..50 {
            let emissions = Array2::from_shape_fn((4, 2), |_| rng.random_range(-3.0..3.0));
            let head = CrfValues::new(&transitions, &start, &end, &mask);
            let (path, _) = crf_viterbi(&emissions, &head).unwrap();
            for w in path.windows(2) {
                assert!(!(w[0] == 0 && w[1] == 1));
            }
        }
    }

    #[test]
    fn over_constrained_mask_is_an_error() {
        let mut mask = TransitionMask::allow_all(2);
        mask.start[0] = false;
        mask.start[1] = false;
        let emissions = Array2::zeros((2, 2));
        let transitions = Array2::zeros((2, 2));
        let start = Array1::zeros(2);
        let end = Array1::zeros(2);
        let head = CrfValues::new(&transitions, &start, &end, &mask);
        assert!(matches!(
            crf_viterbi(&emissions, &head),
            Err(Error::NoLegalPath)
        ));
        assert!(matches!(
            crf_log_partition(&emissions, &head),
            Err(Error::NoLegalPath)
        ));
    }

    #[test]
    fn single_legal_path_partition_equals_its_score() {
        // Mask everything except the path 0 -> 1.
        let mut mask = TransitionMask::allow_all(2);
        mask.transitions[[0, 0]] = false;
        mask.transitions[[1, 0]] = false;
        mask.transitions[[1, 1]] = false;
        mask.start[1] = false;
        mask.end[0] = false;
        let emissions = arr2(&[[0.7, -0.3], [0.1, 1.1]]);
        let transitions = arr2(&[[0.0, 0.4], [0.0, 0.0]]);
        let start = arr1(&[0.2, 0.0]);
        let end = arr1(&[0.0, -0.5]);
        let head = CrfValues::new(&transitions, &start, &end, &mask);
        let z = crf_log_partition(&emissions, &head).unwrap();
        let s = crf_path_score(&emissions, &head, &[0, 1]).unwrap();
        assert!((z - s).abs() < 1e-12);
        let nll = crf_nll_value(&emissions, &head, &[0, 1]).unwrap();
        assert!(nll.abs() < 1e-12);
    }

    #[test]
    fn tape_nll_matches_pure_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..20 {
            let n = rng.random_range(1..=4);
            let l = rng.random_range(2..=5);
            let (emissions, transitions, start, end, mask) =
                random_case(&mut rng, n, l, case % 2 == 1);
            // A legal gold path: greedy walk through allowed transitions.
            let mut gold = vec![(0..l).find(|&j| mask.start[j]).unwrap()];
            for _ in 1..n {
                let prev = *gold.last().unwrap();
                gold.push((0..l).find(|&j| mask.transitions[[prev, j]]).unwrap());
            }
            if !mask.end[gold[n - 1]] {
                continue;
            }
            let head = CrfValues::new(&transitions, &start, &end, &mask);
            let pure = crf_nll_value(&emissions, &head, &gold).unwrap();
            assert!(pure >= -1e-12);

            let mut params = Params::new();
            params.insert("e", emissions.clone().into_dyn());
            params.insert("t", transitions.clone().into_dyn());
            params.insert("s", start.clone().into_dyn());
            params.insert("z", end.clone().into_dyn());
            let tape = Tape::new();
            let ctx = Ctx::new(&tape, &params);
            let loss = crf_nll_tape(
                &ctx,
                ctx.p("e"),
                ctx.p("t"),
                ctx.p("s"),
                ctx.p("z"),
                &mask,
                &gold,
            )
            .unwrap();
            assert!((loss.scalar_value() - pure).abs() < 1e-9, "case {case}");
        }
    }

    #[test]
    fn illegal_gold_path_is_an_error() {
        let mut mask = TransitionMask::allow_all(2);
        mask.transitions[[0, 1]] = false;
        let mut params = Params::new();
        params.insert("e", Array2::<f64>::zeros((2, 2)).into_dyn());
        params.insert("t", Array2::<f64>::zeros((2, 2)).into_dyn());
        params.insert("s", Array1::<f64>::zeros(2).into_dyn());
        params.insert("z", Array1::<f64>::zeros(2).into_dyn());
        let tape = Tape::new();
        let ctx = Ctx::new(&tape, &params);
        let r = crf_nll_tape(
            &ctx,
            ctx.p("e"),
            ctx.p("t"),
            ctx.p("s"),
            ctx.p("z"),
            &mask,
            &[0, 1],
        );
        assert!(matches!(r, Err(Error::IllegalGoldPath(1))));
    }

    #[test]
    fn path_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for case in 0..10 {
            let n = rng.random_range(1..=4);
            let l = rng.random_range(2..=4);
            let (emissions, transitions, start, end, mask) =
                random_case(&mut rng, n, l, case % 2 == 0);
            let head = CrfValues::new(&transitions, &start, &end, &mask);
            let z = crf_log_partition(&emissions, &head).unwrap();
            // Enumerate legal paths, sum exp(score - z).
            let mut total = 0.0;
            let mut path = vec![0usize; n];
            'outer: loop {
                if let Ok(s) = crf_path_score(&emissions, &head, &path) {
                    let p = (s - z).exp();
                    assert!(p > 0.0 && p <= 1.0 + 1e-9);
                    total += p;
                }
                let mut t = n;
                loop {
                    if t == 0 {
                        break 'outer;
                    }
                    t -= 1;
                    path[t] += 1;
                    if path[t] < l {
                        break;
                    }
                    path[t] = 0;
                }
            }
            assert!((total - 1.0).abs() < 1e-6, "case {case}: total {total}");
        }
    }
}
