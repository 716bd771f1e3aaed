#!/usr/bin/env python3
"""Generate the frozen golden fixtures under fixtures/.

Every expected value here is derived with exact rational arithmetic,
independently of the package implementation, and verified before being
written.  Tests (Python and the frontend's) consume the frozen files;
regenerating them must be a no-op unless this script changes.
"""

from __future__ import annotations

import json
import sys
from fractions import Fraction
from pathlib import Path

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

BETA = Fraction("1.05")
B2 = BETA * BETA


# -- rubric oracle -------------------------------------------------------


def oracle_rate(errors: list[Fraction]) -> Fraction:
    return 100 * sum(errors, Fraction(0)) / len(errors)


def oracle_score(rate: Fraction) -> int:
    # Definition route: walk the band edges rather than chained ifs.
    for upper, score in ((10, 5), (25, 4), (40, 3), (50, 2), (100, 1)):
        if rate <= upper:
            return score
    raise AssertionError(f"rate out of range: {rate}")


def frac_list(*spec: tuple[str, int]) -> list[Fraction]:
    out: list[Fraction] = []
    for value, count in spec:
        out.extend([Fraction(value)] * count)
    return out


def make_score_golden() -> None:
    cases: list[tuple[str, list[Fraction]]] = [
        ("all_clean_1", frac_list(("0", 1))),
        ("all_clean_12", frac_list(("0", 12))),
        ("all_wrong_5", frac_list(("1", 5))),
        ("all_half_4", frac_list(("1/2", 4))),
        ("single_half", frac_list(("1/2", 1))),
        ("single_wrong", frac_list(("1", 1))),
        ("sum_4p5_of_17", frac_list(("1", 4), ("1/2", 1), ("0", 12))),
        ("boundary_10_exact", frac_list(("1/2", 1), ("0", 4))),
        ("just_above_10", frac_list(("1/2", 1), ("0", 3))),
        ("boundary_25_exact", frac_list(("1", 1), ("0", 3))),
        ("just_above_25", frac_list(("1", 2), ("1/2", 1), ("0", 6))),
        ("boundary_40_exact", frac_list(("1", 2), ("0", 3))),
        ("just_above_40", frac_list(("1", 2), ("1/2", 1), ("0", 3))),
        ("boundary_50_exact", frac_list(("1", 1), ("0", 1))),
        ("just_above_50", frac_list(("1", 5), ("1/2", 1), ("0", 4))),
        ("boundary_100", frac_list(("1", 3))),
        ("mix_small", frac_list(("1", 1), ("1/2", 2), ("0", 5))),
        ("mix_thirds", frac_list(("1", 1), ("1/2", 1), ("0", 1))),
        ("long_clean_tail", frac_list(("1", 1), ("0", 39))),
        ("sevenths", frac_list(("1", 2), ("0", 5))),
        ("elevenths", frac_list(("1", 3), ("1/2", 2), ("0", 6))),
        ("thirteenths", frac_list(("1/2", 5), ("0", 8))),
        ("nineteen_units", frac_list(("1", 1), ("1/2", 3), ("0", 15))),
        ("twenty_three", frac_list(("1", 6), ("1/2", 2), ("0", 15))),
        ("dense_half", frac_list(("1/2", 9), ("0", 1))),
        ("near_half_low", frac_list(("1", 49), ("0", 51))),
        ("half_exact_100", frac_list(("1", 50), ("0", 50))),
        ("above_half_100", frac_list(("1", 51), ("0", 49))),
        ("one_of_three", frac_list(("1", 1), ("0", 2))),
        ("two_of_nine", frac_list(("1", 2), ("0", 7))),
        ("heavy_half", frac_list(("1", 1), ("1/2", 6), ("0", 1))),
        ("rate_between_40_50", frac_list(("1", 4), ("1/2", 1), ("0", 5))),
    ]
    out = []
    for name, errors in cases:
        rate = oracle_rate(errors)
        score = oracle_score(rate)
        out.append(
            {
                "name": name,
                "phrase_errors": [float(e) for e in errors],
                "rate": float(rate),
                "rate_exact": f"{rate.numerator}/{rate.denominator}",
                "score": score,
                "binarized": 1 if score <= 2 else 0,
            }
        )
    # Spot checks the construction relies on.
    by_name = {c["name"]: c for c in out}
    assert by_name["sum_4p5_of_17"]["score"] == 3
    assert abs(by_name["sum_4p5_of_17"]["rate"] - 450 / 17) < 1e-12
    assert by_name["boundary_10_exact"]["score"] == 5
    assert by_name["just_above_10"]["score"] == 4
    assert by_name["boundary_50_exact"]["score"] == 2
    assert by_name["just_above_50"]["score"] == 1
    assert by_name["half_exact_100"]["binarized"] == 1
    (FIXTURES / "score_golden.json").write_text(
        json.dumps({"cases": out}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"score_golden.json: {len(out)} cases")


# -- agreement pairs -----------------------------------------------------


def make_agreement_pairs() -> None:
    pairs: list[tuple[int, int]] = []
    # 201 pairs with identical scores (binarized also identical).
    identical = [(5, 5)] * 70 + [(4, 4)] * 55 + [(3, 3)] * 40 + [(2, 2)] * 24 + [(1, 1)] * 12
    assert len(identical) == 201
    # 36 pairs differing in score but on the same side of the <=2 cut.
    same_side = [(4, 5)] * 12 + [(3, 4)] * 10 + [(3, 5)] * 8 + [(1, 2)] * 6
    assert len(same_side) == 36
    # 63 pairs crossing the cut.
    crossing = [(2, 3)] * 25 + [(1, 3)] * 15 + [(2, 4)] * 13 + [(1, 5)] * 10
    assert len(crossing) == 63
    pairs = identical + same_side + crossing
    assert len(pairs) == 300

    exact = Fraction(sum(1 for a, b in pairs if a == b), len(pairs))
    bin_of = lambda s: 1 if s <= 2 else 0
    binarized = Fraction(sum(1 for a, b in pairs if bin_of(a) == bin_of(b)), len(pairs))
    assert exact == Fraction(67, 100), exact
    assert binarized == Fraction(79, 100), binarized
    (FIXTURES / "agreement_pairs.json").write_text(
        json.dumps(
            {
                "pairs": [[a, b] for a, b in pairs],
                "exact_agreement": float(exact),
                "binarized_agreement": float(binarized),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"agreement_pairs.json: {len(pairs)} pairs, exact={float(exact)}, binarized={float(binarized)}")


# -- calibration set -----------------------------------------------------


def grid_fractions(lo: Fraction, hi: Fraction, step: Fraction) -> list[Fraction]:
    out = []
    t = lo
    while t <= hi:
        out.append(t)
        t += step
    return out


def oracle_f(tp: int, fp: int, fn: int) -> Fraction:
    denom = (1 + B2) * tp + B2 * fn + fp
    return Fraction(0) if denom == 0 else (1 + B2) * tp / denom


def make_calibration_set() -> None:
    # All cosines sit strictly inside 0.005-wide buckets so "cosine < t"
    # is unambiguous at every grid threshold.
    samples: list[tuple[Fraction, int]] = []

    def add(value: str, label: int, count: int) -> None:
        samples.extend([(Fraction(value), label)] * count)

    # Below 0.08: 60 to-discard (tp at 0.08) and 13 keepers (fp).
    add("0.0765", 1, 25)
    add("0.0715", 1, 20)
    add("0.0615", 1, 10)
    add("0.0315", 1, 5)
    add("-0.0485", 0, 6)
    add("0.0115", 0, 7)
    # Dense keepers just above 0.08 so raising the threshold hurts fast.
    add("0.0825", 0, 50)
    # Above 0.085: 104 to-discard spread one per bucket, keepers four or
    # five per bucket across the whole remaining range.
    step = Fraction("0.005")
    for i in range(104):
        samples.append((Fraction("0.085") + i * step + Fraction("0.0015"), 1))
    n_buckets = 183
    extra = 773 - 4 * n_buckets
    for i in range(n_buckets):
        count = 4 + (1 if i < extra else 0)
        samples.extend([(Fraction("0.085") + i * step + Fraction("0.003"), 0)] * count)

    assert len(samples) == 1000, len(samples)
    n_pos = sum(l for _, l in samples)
    assert n_pos == 164, n_pos

    lo, hi = Fraction("-0.2"), Fraction("1.0")
    grid = grid_fractions(lo, hi, step)
    assert len(grid) == 241

    best_t, best_f = None, Fraction(-1)
    rows = []
    for t in grid:
        tp = sum(1 for c, l in samples if l == 1 and c < t)
        fp = sum(1 for c, l in samples if l == 0 and c < t)
        fn = n_pos - tp
        tn = (1000 - n_pos) - fp
        f = oracle_f(tp, fp, fn)
        rows.append((t, tp, fp, fn, tn, f))
        if f > best_f:
            best_t, best_f = t, f

    assert best_t == Fraction("0.08"), f"argmax at {best_t}"
    # Strictly best: no other grid point attains the same F.
    ties = [t for t, _, _, _, _, f in rows if f == best_f]
    assert ties == [Fraction("0.08")], ties
    chosen = next(r for r in rows if r[0] == Fraction("0.08"))
    _, tp, fp, fn, tn, f = chosen
    assert (tp, fp, fn, tn) == (60, 13, 104, 823), (tp, fp, fn, tn)
    exact_match = Fraction(tp + tn, 1000)
    filter_rate = Fraction(tp + fp, 1000)
    assert exact_match == Fraction("0.883")
    assert filter_rate == Fraction("0.073")
    assert f == Fraction(50460, 101524), f

    with (FIXTURES / "calibration_set.jsonl").open("w", encoding="utf-8") as fh:
        for i, (c, l) in enumerate(samples):
            fh.write(json.dumps({"clip_id": f"cal-{i:04d}", "cosine": float(c), "label": l}) + "\n")
    (FIXTURES / "calibration_expected.json").write_text(
        json.dumps(
            {
                "chosen_threshold": 0.08,
                "best_f": float(f),
                "exact_match_rate": float(exact_match),
                "filter_rate": float(filter_rate),
                "tp": tp,
                "fp": fp,
                "fn": fn,
                "tn": tn,
                "n_samples": 1000,
                "n_positive": n_pos,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"calibration_set.jsonl: 1000 samples, argmax F at 0.08 (F={float(f):.6f})")


# -- submit payload byte fixtures ---------------------------------------


def make_submit_payloads() -> None:
    cases = [
        {
            "name": "plain",
            "fields": {
                "task_id": "t0",
                "annotator_id": "a1",
                "detailness": 2,
                "phrase_errors": [0, 1, 0.5],
                "extra_units": ["phantom siren"],
            },
        },
        {
            "name": "no_extras",
            "fields": {
                "task_id": "t-17",
                "annotator_id": "a2",
                "detailness": 3,
                "phrase_errors": [0, 0],
                "extra_units": [],
            },
        },
        {
            "name": "all_halves",
            "fields": {
                "task_id": "task_9",
                "annotator_id": "rev-3",
                "detailness": 1,
                "phrase_errors": [0.5, 0.5, 0.5, 0.5],
                "extra_units": ["hum", "hiss"],
            },
        },
        {
            "name": "unicode_extra",
            "fields": {
                "task_id": "tU",
                "annotator_id": "a1",
                "detailness": 3,
                "phrase_errors": [1, 0.5],
                "extra_units": ["café noise"],
            },
        },
    ]
    for case in cases:
        case["body"] = json.dumps(case["fields"], separators=(",", ":"), ensure_ascii=False)
    (FIXTURES / "submit_payloads.json").write_text(
        json.dumps({"cases": cases}, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(f"submit_payloads.json: {len(cases)} cases")


def main() -> int:
    FIXTURES.mkdir(exist_ok=True)
    make_score_golden()
    make_agreement_pairs()
    make_calibration_set()
    make_submit_payloads()
    return 0


if __name__ == "__main__":
    sys.exit(main())
