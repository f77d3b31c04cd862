"""Stratified annotation-sample construction.

The evaluation-set design: split the corpus into publications from before
and after the model's training cutoff, then spread draws within each split
across publication-year and character-count quartiles, maximizing publisher
and identifier-class diversity inside each cell. Everything is seeded and
order-independent of the corpus file, so a (corpus, spec) pair always
produces the same sample.

Known false-positive pairs can be forced into the sample through
``include_pairs``; they count toward the sample size.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .corpus import Corpus, PairRecord


class SamplerError(ValueError):
    pass


class AllocationError(SamplerError):
    def __init__(self, strata: list):
        self.strata = strata
        super().__init__(f"cannot fill allocation for strata: {strata}")


@dataclass(frozen=True)
class StrataSpec:
    cutoff_date: date
    sample_size: int
    seed: int
    quartile_fields: tuple[str, ...] = ("pub_year", "char_count")
    diversity_fields: tuple[str, ...] = ("publisher", "identifier_class")
    include_pairs: tuple[str, ...] = ()

    def __post_init__(self):
        if self.sample_size < 0:
            raise SamplerError("sample_size must be >= 0")
        known = {"pub_year", "char_count"}
        for f in self.quartile_fields:
            if f not in known:
                raise SamplerError(f"unsupported quartile field {f!r}")
        known_div = {"publisher", "identifier_class"}
        for f in self.diversity_fields:
            if f not in known_div:
                raise SamplerError(f"unsupported diversity field {f!r}")


def load_strata_spec(path) -> StrataSpec:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return StrataSpec(
        cutoff_date=date.fromisoformat(obj["cutoff_date"]),
        sample_size=int(obj["sample_size"]),
        seed=int(obj["seed"]),
        quartile_fields=tuple(obj.get("quartile_fields", ("pub_year", "char_count"))),
        diversity_fields=tuple(obj.get("diversity_fields", ("publisher", "identifier_class"))),
        include_pairs=tuple(obj.get("include_pairs", ())),
    )


def _field_value(pair: PairRecord, name: str):
    if name == "pub_year":
        return pair.publication.pub_year
    if name == "char_count":
        return pair.publication.char_count
    if name == "publisher":
        return pair.publication.publisher
    if name == "identifier_class":
        return pair.identifier.identifier_class
    raise SamplerError(f"unknown field {name!r}")


def _is_pre_cutoff(pub_year: int, cutoff: date) -> bool:
    # only the year is recorded; treat the year's midpoint as its date
    return date(pub_year, 7, 1) < cutoff


def _quartile_cuts(values: list) -> list:
    if len(set(values)) < 2:
        return []
    return statistics.quantiles(values, n=4, method="inclusive")


def _quartile(value, cuts) -> int:
    return sum(value > c for c in cuts)


def _allocate(capacities: dict, n: int) -> dict:
    """Proportional allocation with largest-remainder rounding, capped at
    each stratum's capacity; excess is redistributed where room remains."""
    total = sum(capacities.values())
    if n > total:
        raise AllocationError([k for k, v in sorted(capacities.items()) if v == 0] or sorted(capacities))
    if not capacities or n == 0:
        return {k: 0 for k in capacities}

    quotas = {k: n * size / total for k, size in capacities.items()}
    alloc = {k: int(q) for k, q in quotas.items()}
    remainders = sorted(
        capacities, key=lambda k: (-(quotas[k] - alloc[k]), k)
    )
    short = n - sum(alloc.values())
    for k in remainders:
        if short == 0:
            break
        if alloc[k] < capacities[k]:
            alloc[k] += 1
            short -= 1

    # cap and redistribute anything that exceeded its stratum
    overflow = 0
    for k in alloc:
        if alloc[k] > capacities[k]:
            overflow += alloc[k] - capacities[k]
            alloc[k] = capacities[k]
    overflow += short if short > 0 else 0
    while overflow > 0:
        progressed = False
        for k in remainders:
            if overflow == 0:
                break
            if alloc[k] < capacities[k]:
                alloc[k] += 1
                overflow -= 1
                progressed = True
        if not progressed:
            raise AllocationError(sorted(k for k, v in capacities.items() if v == 0))
    return alloc


def stratified_sample(corpus: Corpus, spec: StrataSpec) -> list[PairRecord]:
    """Draw ``spec.sample_size`` pairs without replacement, stratified over
    the pre/post-cutoff split and the quartile cells of the configured
    fields, with diversity-aware round-robin inside each cell."""
    if spec.sample_size > len(corpus):
        raise SamplerError(
            f"sample_size {spec.sample_size} exceeds corpus size {len(corpus)}"
        )
    for pair_id in spec.include_pairs:
        if pair_id not in corpus:
            raise SamplerError(f"include_pairs references unknown pair {pair_id!r}")

    included = [corpus.get(pid) for pid in sorted(set(spec.include_pairs))]
    if len(included) > spec.sample_size:
        raise SamplerError("include_pairs is larger than the sample size")
    budget = spec.sample_size - len(included)

    include_set = set(spec.include_pairs)
    candidates = sorted(
        (p for p in corpus.pairs if p.pair_id not in include_set),
        key=lambda p: p.pair_id,
    )

    # cell key: (pre/post, quartile per configured field)
    by_split: dict[bool, list[PairRecord]] = {True: [], False: []}
    for pair in candidates:
        by_split[_is_pre_cutoff(pair.publication.pub_year, spec.cutoff_date)].append(pair)

    cells: dict[tuple, list[PairRecord]] = {}
    for pre, members in by_split.items():
        cuts = {
            f: _quartile_cuts([_field_value(p, f) for p in members])
            for f in spec.quartile_fields
        }
        for pair in members:
            key = (("pre" if pre else "post"),) + tuple(
                _quartile(_field_value(pair, f), cuts[f]) for f in spec.quartile_fields
            )
            cells.setdefault(key, []).append(pair)

    alloc = _allocate({k: len(v) for k, v in cells.items()}, budget)

    rng = random.Random(spec.seed)
    chosen: list[PairRecord] = list(included)
    for key in sorted(cells):
        quota = alloc.get(key, 0)
        if quota == 0:
            continue
        # round-robin across diversity groups so publishers/classes spread out
        groups: dict[tuple, list[PairRecord]] = {}
        for pair in cells[key]:
            gkey = tuple(_field_value(pair, f) for f in spec.diversity_fields)
            groups.setdefault(gkey, []).append(pair)
        group_order = sorted(groups)
        rng.shuffle(group_order)
        for gkey in group_order:
            rng.shuffle(groups[gkey])
        while quota > 0:
            progressed = False
            for gkey in group_order:
                if quota == 0:
                    break
                if groups[gkey]:
                    chosen.append(groups[gkey].pop())
                    quota -= 1
                    progressed = True
            if not progressed:
                raise AllocationError([key])

    chosen.sort(key=lambda p: p.pair_id)
    return chosen
