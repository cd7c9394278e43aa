"""Coreference evaluation: MUC, B-cubed, entity-alignment CEAF, and their
arithmetic mean (the CoNLL score).

All three metrics accept either a Clustering or any iterable of mention-id
sets. Degenerate denominators never raise: the affected metric reports 0 and
the metric name is listed in the report's `undefined` flags.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import assignment


@dataclass
class EvalOptions:
    exclude_gold_singletons: bool = False
    drop_unlabeled: bool = True  # mentions outside the gold clustering never count


@dataclass
class MetricReport:
    muc: tuple
    b3: tuple
    ceaf_e: tuple
    conll: float
    undefined: tuple = ()

    def to_dict(self):
        def triple(t):
            return {"precision": t[0], "recall": t[1], "f1": t[2]}

        return {
            "muc": triple(self.muc),
            "b3": triple(self.b3),
            "ceaf_e": triple(self.ceaf_e),
            "conll": self.conll,
            "undefined": list(self.undefined),
        }


def _clusters(x):
    if hasattr(x, "as_sets"):
        return [set(s) for s in x.as_sets() if s]
    return [set(s) for s in x if s]


def _mention_map(clusters):
    out = {}
    for idx, cluster in enumerate(clusters):
        for m in cluster:
            out[m] = idx
    return out


def _prf(p_num, p_den, r_num, r_den):
    p = p_num / p_den if p_den > 0 else 0.0
    r = r_num / r_den if r_den > 0 else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def _vilain(clusters, other_map):
    """Link counts for one direction of MUC: for each cluster, the links
    found are its size minus the number of parts the other side cuts it into
    (mentions missing from the other side count as singleton parts)."""
    num = 0
    den = 0
    for cluster in clusters:
        parts = set()
        missing = 0
        for m in cluster:
            if m in other_map:
                parts.add(other_map[m])
            else:
                missing += 1
        num += len(cluster) - missing - len(parts)
        den += len(cluster) - 1
    return num, den


def muc(gold, response):
    gold_c = _clusters(gold)
    resp_c = _clusters(response)
    r_num, r_den = _vilain(gold_c, _mention_map(resp_c))
    p_num, p_den = _vilain(resp_c, _mention_map(gold_c))
    return _prf(p_num, p_den, r_num, r_den)


def _b3_one_way(clusters_a, clusters_b):
    """Sum over mentions of A of |A(m) ∩ B(m)| / |A(m)|."""
    b_map = _mention_map(clusters_b)
    total = 0.0
    count = 0
    for cluster in clusters_a:
        for m in cluster:
            count += 1
            b_cluster = clusters_b[b_map[m]] if m in b_map else set()
            total += len(cluster & b_cluster) / len(cluster)
    return total, count


def b_cubed(gold, response):
    gold_c = _clusters(gold)
    resp_c = _clusters(response)
    r_num, r_den = _b3_one_way(gold_c, resp_c)
    p_num, p_den = _b3_one_way(resp_c, gold_c)
    return _prf(p_num, p_den, r_num, r_den)


def phi4(a, b):
    """Entity similarity 2|K∩R| / (|K|+|R|)."""
    if not a or not b:
        return 0.0
    return 2.0 * len(a & b) / (len(a) + len(b))


def ceaf_e(gold, response):
    gold_c = _clusters(gold)
    resp_c = _clusters(response)
    if not gold_c or not resp_c:
        return _prf(0.0, len(resp_c), 0.0, len(gold_c))
    scores = np.zeros((len(gold_c), len(resp_c)))
    for i, k in enumerate(gold_c):
        for j, r in enumerate(resp_c):
            scores[i, j] = phi4(k, r)
    total = assignment.matching_total(scores, assignment.solve_max(scores))
    return _prf(total, len(resp_c), total, len(gold_c))


def conll(f1_scores):
    """Arithmetic mean of the three metric F1 values."""
    vals = list(f1_scores)
    return float(sum(vals)) / len(vals)


def filter_for_eval(gold, response, options=None):
    """Apply the evaluation filters and return (gold', response') as cluster
    lists. Mentions not present in the gold clustering are dropped from the
    response; with exclude_gold_singletons, all mentions of size-1 gold
    clusters are removed from both sides and the response re-partitions."""
    options = options or EvalOptions()
    gold_c = _clusters(gold)
    resp_c = _clusters(response)
    keep = set().union(*gold_c) if gold_c else set()
    if options.exclude_gold_singletons:
        for cluster in gold_c:
            if len(cluster) == 1:
                keep -= cluster
        gold_c = [c & keep for c in gold_c]
        gold_c = [c for c in gold_c if c]
    resp_c = [c & keep for c in resp_c]
    resp_c = [c for c in resp_c if c]
    return gold_c, resp_c


def evaluate(gold, response, options=None):
    """Full metric report over the filtered mention set."""
    gold_c, resp_c = filter_for_eval(gold, response, options)
    undefined = []

    muc_p, muc_r, muc_f = muc(gold_c, resp_c)
    if sum(len(c) - 1 for c in gold_c) == 0 or sum(len(c) - 1 for c in resp_c) == 0:
        undefined.append("muc")
    b3_p, b3_r, b3_f = b_cubed(gold_c, resp_c)
    if not gold_c or not resp_c:
        undefined.append("b3")
    ceaf_p, ceaf_r, ceaf_f = ceaf_e(gold_c, resp_c)
    if not gold_c or not resp_c:
        undefined.append("ceaf_e")

    return MetricReport(
        muc=(muc_p, muc_r, muc_f),
        b3=(b3_p, b3_r, b3_f),
        ceaf_e=(ceaf_p, ceaf_r, ceaf_f),
        conll=conll([muc_f, b3_f, ceaf_f]),
        undefined=tuple(undefined),
    )


def report_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_table(report):
    """Aligned plain-text table of all precision/recall/F1 values."""
    rows = [
        ("muc", report.muc),
        ("b3", report.b3),
        ("ceaf_e", report.ceaf_e),
    ]
    lines = [f"{'metric':<8} {'precision':>10} {'recall':>10} {'f1':>10}"]
    for name, (p, r, f1) in rows:
        flag = " (undefined)" if name in report.undefined else ""
        lines.append(f"{name:<8} {p:>10.6f} {r:>10.6f} {f1:>10.6f}{flag}")
    lines.append(f"{'conll':<8} {'':>10} {'':>10} {report.conll:>10.6f}")
    return "\n".join(lines) + "\n"
