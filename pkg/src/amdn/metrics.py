"""Error rates of learned models and accuracy trend tables."""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EmptyInput, MixedVariation, SchemaMismatch
from .pddl import SLOTS, Domain

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlotDiff:
    missing: int  # in truth, not learned
    extra: int  # learned, not in truth

    @property
    def errors(self) -> int:
        return self.missing + self.extra


@dataclass(frozen=True)
class ModelDiff:
    schema: str
    candidates: int
    slots: Mapping[str, SlotDiff]

    def rate(self, slot: str) -> float:
        if self.candidates == 0:
            return 0.0
        return self.slots[slot].errors / self.candidates

    @property
    def err(self) -> float:
        return sum(self.rate(s) for s in SLOTS) / len(SLOTS)


@dataclass(frozen=True)
class Scores:
    diffs: tuple[ModelDiff, ...]

    @property
    def err(self) -> float:
        if not self.diffs:
            return 0.0
        return sum(d.err for d in self.diffs) / len(self.diffs)

    @property
    def acc(self) -> float:
        return 1.0 - self.err

    def to_json(self) -> dict:
        return {
            "schemas": {
                d.schema: {
                    "candidates": d.candidates,
                    **{f"err_{s}": d.rate(s) for s in SLOTS},
                    **{f"missing_{s}": d.slots[s].missing for s in SLOTS},
                    **{f"extra_{s}": d.slots[s].extra for s in SLOTS},
                }
                for d in self.diffs
            },
            "err": self.err,
            "acc": self.acc,
        }


def err_rates(learned: Domain, truth: Domain) -> Scores:
    """Per-slot symmetric difference over the candidate-set size, averaged.

    Literals are stored by parameter position, so two models that differ only
    in parameter names compare equal.  A schema with no candidates scores 0.
    """
    if set(learned.actions) != set(truth.actions):
        raise SchemaMismatch(
            f"schema sets differ: {sorted(set(learned.actions) ^ set(truth.actions))}"
        )
    diffs = []
    for name in sorted(truth.actions):
        a, b = learned.actions[name], truth.actions[name]
        if a.param_types != b.param_types:
            raise SchemaMismatch(f"{name}: parameter types {a.param_types} vs {b.param_types}")
        n = len(truth.candidates(name))
        if n == 0:
            log.info("%s has no candidate literals; its error counts as 0", name)
        slots = {s: SlotDiff(len(b.slot(s) - a.slot(s)), len(a.slot(s) - b.slot(s))) for s in SLOTS}
        diffs.append(ModelDiff(name, n, slots))
    return Scores(tuple(diffs))


def accuracy(learned: Domain, truth: Domain) -> float:
    return err_rates(learned, truth).acc


@dataclass(frozen=True)
class TrendRow:
    value: object
    n: int
    mean: float
    stdev: float


def trend_report(runs: Iterable[tuple[Mapping, float]]) -> tuple[str, list[TrendRow]]:
    """Group runs by the single configuration key that varies.

    Returns ``(key, rows)`` with rows sorted by the key's value.  With one
    distinct configuration the key is ``""`` and there is one row.
    """
    runs = [(dict(c), float(a)) for c, a in runs]
    if not runs:
        raise EmptyInput("no runs to summarize")
    keys = sorted(set().union(*(c.keys() for c, _ in runs)))
    varying = [k for k in keys if len({repr(c.get(k)) for c, _ in runs}) > 1]
    if len(varying) > 1:
        raise MixedVariation(f"more than one parameter varies: {varying}")
    key = varying[0] if varying else ""
    groups: dict = {}
    for c, acc in runs:
        groups.setdefault(c.get(key) if key else None, []).append(acc)
    rows = []
    for v in sorted(groups, key=lambda v: (v is None, v)):
        xs = groups[v]
        sd = statistics.stdev(xs) if len(xs) > 1 else 0.0
        rows.append(TrendRow(v, len(xs), statistics.fmean(xs), sd))
    return key, rows
