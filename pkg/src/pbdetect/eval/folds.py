"""Cross-validation plans: leave-one-subject-out, cohort-balanced
leave-some-subjects-out, and instance-level leave-some-instances-out."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence as Seq

from ..dataio import Cohort
from ..rng import stream
from ..windowing import InstanceKey


class Scheme(str, enum.Enum):
    LOSO = "loso"
    LSSO = "lsso"
    LSIO = "lsio"

    @classmethod
    def parse(cls, text: "str | Scheme") -> "Scheme":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ValueError(f"unknown fold scheme {text!r} (expected loso, lsso or lsio)") from None


@dataclass(frozen=True)
class Fold:
    index: int
    train: tuple[Hashable, ...]
    test: tuple[Hashable, ...]


@dataclass(frozen=True)
class FoldPlan:
    """Test units are subject ids (LOSO/LSSO) or ``InstanceKey``s (LSIO)."""

    scheme: Scheme
    folds: tuple[Fold, ...]
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.folds)

    @property
    def by_instance(self) -> bool:
        return self.scheme == Scheme.LSIO

    def units(self) -> list[Hashable]:
        return [u for f in self.folds for u in f.test]

    def to_dict(self) -> dict:
        enc = (lambda u: list(u)) if self.by_instance else (lambda u: u)
        return {
            "scheme": self.scheme.value,
            "seed": self.seed,
            "folds": [[enc(u) for u in f.test] for f in self.folds],
        }


def _plan(scheme: Scheme, groups: list[list], seed: int | None) -> FoldPlan:
    everything = [u for g in groups for u in g]
    folds = []
    for i, test in enumerate(groups):
        held = set(test)
        folds.append(Fold(i, tuple(u for u in everything if u not in held), tuple(test)))
    return FoldPlan(scheme, tuple(folds), seed)


def _check_unique(ids: Seq[str]) -> None:
    dupes = sorted(k for k, n in Counter(ids).items() if n > 1)
    if dupes:
        raise ValueError(f"duplicate subject ids: {dupes}")


def make_loso(subjects: Iterable[str]) -> FoldPlan:
    ids = list(subjects)
    _check_unique(ids)
    if len(ids) < 2:
        raise ValueError(f"leave-one-subject-out needs at least 2 subjects, got {len(ids)}")
    return _plan(Scheme.LOSO, [[s] for s in ids], None)


def make_lsso(subjects: Iterable[tuple[str, Cohort | str]], folds: int = 6, seed: int = 0) -> FoldPlan:
    """Seeded partition in which every test fold holds the same number of CP
    and of healthy subjects (3 + 2 for 18 CP, 12 healthy and 6 folds)."""
    pairs = [(sid, Cohort.parse(c)) for sid, c in subjects]
    _check_unique([sid for sid, _ in pairs])
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = stream(seed, "lsso")
    groups: list[list[str]] = [[] for _ in range(folds)]
    for cohort in (Cohort.CP, Cohort.HEALTHY):
        ids = [sid for sid, c in pairs if c == cohort]
        if len(ids) % folds:
            per = -(-len(ids) // folds)
            raise ValueError(
                f"cannot split {len(ids)} {cohort.value} subjects evenly over {folds} folds: "
                f"short by {per * folds - len(ids)} for {per} per fold (or {len(ids) % folds} too many for {per - 1})"
            )
        per = len(ids) // folds
        order = [ids[j] for j in rng.permutation(len(ids))]
        for k in range(folds):
            groups[k].extend(order[k * per : (k + 1) * per])
    if any(not g for g in groups):
        raise ValueError("some folds would have no test subjects")
    return _plan(Scheme.LSSO, [sorted(g) for g in groups], seed)


def make_lsio(instances: Iterable[InstanceKey], test_fraction: float = 0.2, seed: int = 0) -> FoldPlan:
    """Instance-level plan with ``round(1 / test_fraction)`` folds.

    Each subject's instances are shuffled and dealt round-robin over the folds
    (the dealing position carries on from one subject to the next), so fold
    sizes differ by at most one and every subject with at least two instances
    lands in training and in testing.
    """
    keys = list(instances)
    if not keys:
        raise ValueError("no instances to split")
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate instance keys")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test fraction must lie in (0, 1), got {test_fraction}")
    k = max(2, round(1.0 / test_fraction))
    if k > len(keys):
        raise ValueError(f"{len(keys)} instances cannot fill {k} test folds")
    rng = stream(seed, "lsio")
    by_subject: dict[str, list[InstanceKey]] = {}
    for key in keys:
        by_subject.setdefault(key.subject_id, []).append(key)
    groups: list[list[InstanceKey]] = [[] for _ in range(k)]
    pos = 0
    for sid in sorted(by_subject):
        own = by_subject[sid]
        for j in rng.permutation(len(own)):
            groups[pos % k].append(own[j])
            pos += 1
    return _plan(Scheme.LSIO, [sorted(g) for g in groups], seed)
