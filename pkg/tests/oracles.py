"""Independent brute-force oracles used to check the fast paths.

These deliberately re-derive results from the definitions with naive
nested loops; they share no helper code with the package.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from math import comb


def oracle_vote_cells(decoded: list[list[tuple[int, int, str, float]]]):
    """All (extent, class) -> (votes, scores) cells, by definition.

    decoded: per pipeline, a list of (start, end, class_id, score).
    """
    extents = sorted({(s, e) for spans in decoded for (s, e, _, _) in spans})
    classes = sorted({c for spans in decoded for (_, _, c, _) in spans})
    cells = {}
    for (s, e) in extents:
        for c in classes:
            votes = 0
            scores = []
            for spans in decoded:
                contained = [sp for sp in spans if sp[0] >= s and sp[1] <= e and sp[2] == c]
                if contained:
                    votes += 1
                    scores.append(max(sp[3] for sp in contained))
            if votes:
                cells[(s, e, c)] = (votes, scores)
    return cells


def _mean(scores: list[float]) -> float:
    return sum(sorted(scores)) / len(scores)


def oracle_ensemble_sentence(
    decoded: list[list[tuple[int, int, str, float]]],
    class_order: list[str],
    min_votes: int,
    tie_break: str,
) -> list[tuple[int, int, str, float]]:
    """Exhaustive re-derivation of the span-vote resolution for one sentence."""
    cells = oracle_vote_cells(decoded)
    extents = sorted({(s, e) for (s, e, _) in cells})
    max_votes = {
        ext: max(votes for (s, e, c), (votes, _) in cells.items() if (s, e) == ext)
        for ext in extents
    }
    ordered = sorted(extents, key=lambda ext: (-(ext[1] - ext[0]), -max_votes[ext], ext[0]))
    emitted: list[tuple[int, int, str, float]] = []
    for (s, e) in ordered:
        if any(s < oe and os_ < e for (os_, oe, _, _) in emitted):
            continue
        candidates = {c: cells[(s, e, c)] for (cs, ce, c) in list(cells) if (cs, ce) == (s, e)}
        top = max(v for v, _ in candidates.values())
        tied = [c for c, (v, _) in candidates.items() if v == top]
        if len(tied) > 1 and tie_break == "highest_mean_score":
            best = max(_mean(candidates[c][1]) for c in tied)
            tied = [c for c in tied if _mean(candidates[c][1]) == best]
        winner = min(tied, key=class_order.index)
        votes, scores = candidates[winner]
        if votes >= min_votes:
            emitted.append((s, e, winner, min(1.0, _mean(scores))))
    return sorted(emitted, key=lambda sp: sp[0])


def oracle_relation_vote(
    per_pipeline_labels: list[str],
    per_pipeline_probs: list[list[float]],
    class_order: list[str],
) -> str:
    """Plurality with mean-probability then class-index tie-breaking."""
    counts = Counter(per_pipeline_labels)
    top = max(counts.values())
    tied = [label for label, n in counts.items() if n == top]
    if len(tied) > 1:
        def mean_prob(label: str) -> float:
            idx = class_order.index(label)
            return sum(sorted(row[idx] for row in per_pipeline_probs)) / len(per_pipeline_probs)

        best = max(mean_prob(label) for label in tied)
        tied = [label for label in tied if mean_prob(label) == best]
    return min(tied, key=class_order.index)


def oracle_binomial_two_sided(x: int, n: int) -> float:
    """Exact two-sided binomial(n, 1/2) p-value for observing x."""
    half = Fraction(1, 2) ** n
    lower = sum(comb(n, i) for i in range(0, x + 1)) * half
    upper = sum(comb(n, i) for i in range(x, n + 1)) * half
    return float(min(Fraction(1), 2 * min(lower, upper)))


def oracle_majority_accuracy(n_pipelines: int, p_correct: float, threshold: int) -> float:
    """P(at least `threshold` of n independent pipelines are correct)."""
    return sum(
        comb(n_pipelines, k) * p_correct**k * (1 - p_correct) ** (n_pipelines - k)
        for k in range(threshold, n_pipelines + 1)
    )
