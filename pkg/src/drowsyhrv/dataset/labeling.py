"""Session labels from PVT reaction times, relative to each subject's baseline."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DegenerateBaseline

BASELINE_SESSION = 1
Z_THRESHOLD = 3.0


class SessionLabel(enum.IntEnum):
    AWAKE = 0
    DROWSY = 1


@dataclass(frozen=True)
class PvtSession:
    subject_id: str
    session_index: int
    reaction_times_ms: np.ndarray

    def __post_init__(self):
        rt = np.asarray(self.reaction_times_ms, dtype=np.float64).reshape(-1)
        if self.session_index not in (1, 2, 3):
            raise ValueError(f"session_index must be 1, 2 or 3, got {self.session_index}")
        if rt.size < 2:
            raise ValueError("a PVT session needs at least 2 reaction times")
        if not np.all(rt > 0):
            raise ValueError("reaction times must be positive")
        object.__setattr__(self, "reaction_times_ms", rt)
        object.__setattr__(self, "subject_id", str(self.subject_id))


def zscore_flags(baseline: PvtSession, target: PvtSession, threshold: float = Z_THRESHOLD) -> np.ndarray:
    """One-sided anomaly flags: z > threshold against the baseline mean and population std."""
    base = baseline.reaction_times_ms
    sd = float(np.std(base))
    if sd == 0:
        raise DegenerateBaseline(f"subject {baseline.subject_id}: baseline PVT has zero spread")
    z = (target.reaction_times_ms - float(np.mean(base))) / sd
    return z > threshold


def label_session(baseline: PvtSession, target: PvtSession, threshold: float = Z_THRESHOLD) -> SessionLabel:
    """Drowsy when strictly more than half of the target's reactions are anomalous."""
    if target.session_index == BASELINE_SESSION:
        return SessionLabel.AWAKE
    flags = zscore_flags(baseline, target, threshold)
    return SessionLabel.DROWSY if 2 * int(flags.sum()) > flags.size else SessionLabel.AWAKE


def label_subjects(sessions: list[PvtSession], threshold: float = Z_THRESHOLD) -> dict[tuple[str, int], SessionLabel]:
    """Label every session, grouping by subject and using session 1 as baseline."""
    by_subject: dict[str, dict[int, PvtSession]] = {}
    for s in sessions:
        by_subject.setdefault(s.subject_id, {})[s.session_index] = s
    labels = {}
    for subject in sorted(by_subject):
        group = by_subject[subject]
        if BASELINE_SESSION not in group:
            raise ValueError(f"subject {subject} has no baseline session")
        base = group[BASELINE_SESSION]
        for idx in sorted(group):
            labels[(subject, idx)] = label_session(base, group[idx], threshold)
    return labels


def read_pvt_file(path: str | Path, subject_id: str, session_index: int) -> PvtSession:
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            token = line.split(",")[-1].strip()
            try:
                values.append(float(token))
            except ValueError:
                if lineno == 0 and not values:
                    continue
                raise ValueError(f"{path}:{lineno + 1}: not a number: {token!r}") from None
    return PvtSession(subject_id, session_index, np.asarray(values))


def write_pvt_file(path: str | Path, session: PvtSession) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("reaction_time_ms\n")
        for v in session.reaction_times_ms:
            fh.write(f"{float(v)!r}\n")
