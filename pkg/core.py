# core.py

from __future__ import annotations

import multiprocessing as mp
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_FRAME_SHIFT_MS = 12.5
SECONDS_PER_HOUR = 3600.0

# log(0) stand-in; sums of a few of these stay finite
LOG_ZERO = -1.0e30

SPACE = "[space]"

ARPABET = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH",
    "EH", "ER", "EY", "F", "G", "HH", "IH", "IY", "JH", "K",
    "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH",
    "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH",
)


# ---------------- Errors ----------------
class DurkitError(Exception):
    """Base class for every error the toolkit reports."""


class ValidationError(DurkitError, ValueError):
    pass


class FormatError(ValidationError):
    """Malformed input file; keeps the location so the CLI can point at it."""

    def __init__(self, message, path=None, line=None, offset=None):
        self.path = path
        self.line = line
        self.offset = offset
        where = str(path) if path is not None else "<input>"
        if line is not None:
            where += f":{line}"
        if offset is not None:
            where += f"@{offset}"
        super().__init__(f"{where}: {message}")


class AlignmentError(DurkitError):
    pass


class UsageError(DurkitError):
    pass


def strip_stress(symbol: str) -> str:
    """AH0 -> AH; bracketed tokens are left alone."""
    if symbol.startswith("["):
        return symbol
    return symbol.rstrip("012")


# ---------------- Phoneme inventory ----------------
@dataclass(frozen=True)
class PhonemeInventory:
    symbols: tuple
    space_id: int
    silence_id: int
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(set(symbols)) != len(symbols):
            raise ValidationError("inventory symbols must be unique")
        for name in ("space_id", "silence_id"):
            idx = getattr(self, name)
            if not 0 <= idx < len(symbols):
                raise ValidationError(f"{name}={idx} outside inventory of {len(symbols)} symbols")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    @classmethod
    def arpabet(cls, silence: str | None = None) -> "PhonemeInventory":
        symbols = list(ARPABET) + [SPACE]
        if silence is not None and silence != SPACE:
            symbols.append(silence)
            return cls(tuple(symbols), symbols.index(SPACE), symbols.index(silence))
        space = symbols.index(SPACE)
        return cls(tuple(symbols), space, space)

    @classmethod
    def from_symbols(cls, symbols: Iterable[str], silence: str | None = None) -> "PhonemeInventory":
        symbols = [strip_stress(s) for s in symbols]
        if SPACE not in symbols:
            symbols.append(SPACE)
        if silence is not None and silence not in symbols:
            symbols.append(silence)
        space = symbols.index(SPACE)
        return cls(tuple(symbols), space, symbols.index(silence) if silence else space)

    @classmethod
    def from_file(cls, path, silence: str | None = None) -> "PhonemeInventory":
        with open(path, encoding="utf-8") as fh:
            symbols = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
        return cls.from_symbols(symbols, silence=silence)

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, symbol):
        return isinstance(symbol, str) and strip_stress(symbol) in self._index

    def id_of(self, symbol: str) -> int:
        if not isinstance(symbol, str):
            raise ValidationError(f"phoneme symbols must be strings, got {symbol!r}")
        try:
            return self._index[strip_stress(symbol)]
        except KeyError:
            raise ValidationError(f"unknown phoneme {symbol!r}") from None

    def symbol_of(self, phoneme_id: int) -> str:
        if not 0 <= phoneme_id < len(self.symbols):
            raise ValidationError(f"unknown phoneme id {phoneme_id}")
        return self.symbols[phoneme_id]

    def encode(self, symbols: Iterable[str]) -> tuple:
        return tuple(self.id_of(s) for s in symbols)

    def decode(self, ids: Iterable[int]) -> list:
        return [self.symbol_of(i) for i in ids]

    def is_space(self, phoneme_id: int) -> bool:
        return phoneme_id == self.space_id or phoneme_id == self.silence_id


# ---------------- Utterances ----------------
@dataclass(frozen=True)
class AlignedUtterance:
    utterance_id: str
    phonemes: tuple
    durations: tuple
    frame_shift_ms: float = DEFAULT_FRAME_SHIFT_MS

    def __post_init__(self):
        object.__setattr__(self, "phonemes", tuple(int(p) for p in self.phonemes))
        object.__setattr__(self, "durations", tuple(int(d) for d in self.durations))

    @property
    def num_frames(self) -> int:
        return sum(self.durations)

    @property
    def seconds(self) -> float:
        return self.num_frames * self.frame_shift_ms / 1000.0

    def with_durations(self, durations: Sequence[int]) -> "AlignedUtterance":
        return AlignedUtterance(self.utterance_id, self.phonemes, tuple(durations), self.frame_shift_ms)


def validate_utterance(u: AlignedUtterance, inv: PhonemeInventory, hmm_derived: bool = False) -> AlignedUtterance:
    """Check every AlignedUtterance invariant and return ``u`` unchanged.

    ``hmm_derived`` additionally enforces that only [space]/silence tokens may
    carry a zero duration.
    """
    if len(u.phonemes) != len(u.durations):
        raise ValidationError(
            f"{u.utterance_id}: length mismatch ({len(u.phonemes)} phonemes, {len(u.durations)} durations)"
        )
    if not u.frame_shift_ms > 0:
        raise ValidationError(f"{u.utterance_id}: frame shift must be positive, got {u.frame_shift_ms}")
    for n, (p, d) in enumerate(zip(u.phonemes, u.durations)):
        if not 0 <= p < len(inv):
            raise ValidationError(f"{u.utterance_id}: unknown phoneme id {p} at position {n}")
        if d < 0:
            raise ValidationError(f"{u.utterance_id}: negative duration {d} at position {n}")
        if hmm_derived and d == 0 and not inv.is_space(p):
            raise ValidationError(
                f"{u.utterance_id}: phoneme {inv.symbol_of(p)} at position {n} has zero duration"
            )
    return u


def corpus_frames(corpus: Iterable[AlignedUtterance]) -> int:
    return sum(u.num_frames for u in corpus)


def total_audio_hours(corpus: Iterable[AlignedUtterance]) -> float:
    return sum(u.seconds for u in corpus) / SECONDS_PER_HOUR


# ---------------- Matrices ----------------
@dataclass(frozen=True)
class FeatureMatrix:
    """T x D real matrix (features, or N x D phoneme states before upsampling)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValidationError(f"feature matrix must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValidationError(f"feature matrix must be non-empty, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("feature matrix contains non-finite values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class EmissionMatrix:
    """T x S log-probabilities with the CTC blank at ``blank_index``.

    ``normalized`` is False only for matrices whose blank column was floored.
    """

    data: np.ndarray
    blank_index: int = 0
    normalized: bool = True

    def __post_init__(self):
        from scipy.special import logsumexp

        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 2:
            raise ValidationError(f"emission matrix must be T x S with S >= 2, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("emission matrix contains non-finite values")
        if not 0 <= self.blank_index < data.shape[1]:
            raise ValidationError(f"blank index {self.blank_index} outside {data.shape[1]} columns")
        if self.normalized:
            worst = float(np.max(np.abs(logsumexp(data, axis=1))))
            if worst > 1e-3:
                raise ValidationError(f"emission rows are not normalized (max |logsumexp| = {worst:.3g})")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def label_column(self, phoneme_id: int) -> int:
        """Inventory ids fill the non-blank columns in order."""
        column = phoneme_id if phoneme_id < self.blank_index else phoneme_id + 1
        if phoneme_id < 0 or column >= self.cols:
            raise ValidationError(f"phoneme id {phoneme_id} has no emission column (S={self.cols})")
        return column


# ---------------- Histograms ----------------
class DurationHistogram:
    """phoneme id -> {duration in frames: count}.

    Merging is commutative and associative, so partial histograms built on
    separate workers can be combined in any order.
    """

    def __init__(self, counts=None):
        self._counts = {}
        for phoneme, bins in (counts or {}).items():
            self._counts.setdefault(int(phoneme), {})
            for duration, count in bins.items():
                self.add(phoneme, duration, count)

    def add(self, phoneme: int, duration: int, count: int = 1):
        if count < 0:
            raise ValidationError(f"negative histogram count {count}")
        bins = self._counts.setdefault(int(phoneme), {})
        bins[int(duration)] = bins.get(int(duration), 0) + int(count)

    def merge(self, other: "DurationHistogram") -> "DurationHistogram":
        merged = DurationHistogram(self._counts)
        for phoneme, bins in other._counts.items():
            for duration, count in bins.items():
                merged.add(phoneme, duration, count)
        return merged

    def phonemes(self) -> list:
        return sorted(self._counts)

    def bins(self, phoneme: int) -> dict:
        return dict(sorted(self._counts.get(phoneme, {}).items()))

    def occurrences(self, phoneme: int) -> int:
        return sum(self._counts.get(phoneme, {}).values())

    def __contains__(self, phoneme):
        return phoneme in self._counts

    def __len__(self):
        return len(self._counts)

    def __eq__(self, other):
        if not isinstance(other, DurationHistogram):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def as_dict(self) -> dict:
        return {p: self.bins(p) for p in self.phonemes()}


# ---------------- Workers ----------------
class WorkerPool:
    """Ordered map over a process pool; runs inline when ``jobs`` is 1.

    Results always come back in input order, so output never depends on
    the number of workers.
    """

    def __init__(self, jobs: int = 1):
        self.jobs = int(jobs)
        if self.jobs < 1:
            raise ValidationError(f"jobs must be >= 1, got {jobs}")
        self._pool = None

    def map(self, fn, items) -> list:
        items = list(items)
        if self.jobs == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        if self._pool is None:
            self._pool = mp.Pool(self.jobs)
        return self._pool.map(fn, items)

    def close(self):
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
