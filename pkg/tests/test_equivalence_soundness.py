import math

import numpy as np
import pytest

from hardymult.equivalence import EQUIVALENCES, equivalence_report, random_table
from hardymult.formulas import MultiplierTable, hardy_last_terms
from hardymult.harmonics import torus
from hardymult.soundness import necessity_probe, soundness_row


@pytest.mark.parametrize("which, trials", [("square-function", 6), ("lepingle", 6),
                                           ("corollary-omission", 6), ("weisz", 2)])
def test_reports_have_brackets_and_witnesses(which, trials):
    rep = equivalence_report(which, trials, 0)
    ratios = [r["ratio"] for r in rep.rows]
    assert rep.summary["min_ratio"] == min(ratios) and rep.summary["max_ratio"] == max(ratios)
    assert rep.witnesses["argmax"]["sample"] == int(np.argmax(ratios))
    assert len(rep.rows) == trials


def test_known_one_sided_facts():
    # the full corollary formula is at least its first summand; Lepingle never enlarges the norm
    assert equivalence_report("corollary-omission", 10, 1).summary["min_ratio"] >= 1
    assert equivalence_report("lepingle", 10, 1).summary["max_ratio"] <= 1 + 1e-12


def test_unknown_tag_and_trials():
    with pytest.raises(ValueError):
        equivalence_report("nope", 1, 0)
    with pytest.raises(ValueError):
        equivalence_report("lepingle", 0, 0)
    assert set(EQUIVALENCES) == {"square-function", "dg-square", "muller", "weisz", "lepingle",
                                 "corollary-omission"}


def test_random_table_in_cone():
    t = random_table(np.random.default_rng(0), 8, 3, 6, cone=True)
    assert len(t) == 6 and all(n.is_last_positive for n, _ in t.entries)


def test_probe_single_character_is_exact():
    # one entry: the character itself attains lambda, which is also the Fefferman term
    lam = MultiplierTable.from_pairs([((3, 2), 1.5)])
    probe = necessity_probe(lam, torus(8, 2))
    assert probe.value == pytest.approx(1.5, rel=1e-9)
    assert probe.t1 == pytest.approx(1.5)


def test_probe_all_ones_recovers_fefferman_scale():
    lam = MultiplierTable.sequence([0.0] + [1.0] * 8)
    probe = necessity_probe(lam, torus(32, 1), seed=1)
    t1 = hardy_last_terms(lam).t1
    assert t1 == pytest.approx(math.sqrt(18))
    # the probe value is a genuine ratio, so it can not exceed the true operator norm
    assert 0.1 * t1 <= probe.value <= hardy_last_terms(lam).value * 50


def test_soundness_row_fields():
    lam = random_table(np.random.default_rng(3), 16, 2, 4, cone=True)
    row = soundness_row(lam, torus(16, 2), 10, 3, 4)
    assert row["max_ratio"] <= row["formula"] * 50
    assert row["probe"] > 0 and row["probe_k"] in (1, 2)
