"""Server-side fault profiles.

Grammar::

    none
    drop:<p>                       with probability p, close the connection unanswered
    delay:<ms>                     answer after sleeping ms milliseconds
    byzantine:flip-bytes:<count>   XOR random nonzero bytes into count positions
    byzantine:random-block         replace the answer by uniform random bytes
    byzantine:stale-db:<path>      answer from another (obsolete) SPDB file

Every decision is drawn from ``numpy.random.default_rng([seed, query_no])`` so
a server replays the same faults for the same query sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FaultProfileError


@dataclass(frozen=True)
class FaultProfile:
    kind: str = "none"  # none | drop | delay | byzantine
    drop_probability: float = 0.0
    delay_ms: float = 0.0
    mode: Optional[str] = None  # flip-bytes | random-block | stale-db
    flip_count: int = 0
    stale_path: Optional[str] = None

    @classmethod
    def parse(cls, text: str) -> "FaultProfile":
        text = (text or "none").strip()
        head, _, rest = text.partition(":")
        try:
            if head == "none" and not rest:
                return cls()
            if head == "drop":
                p = float(rest)
                if not 0.0 <= p <= 1.0:
                    raise FaultProfileError(f"drop probability {p} outside [0, 1]")
                return cls("drop", drop_probability=p)
            if head == "delay":
                ms = float(rest)
                if ms < 0:
                    raise FaultProfileError("delay must be non-negative")
                return cls("delay", delay_ms=ms)
            if head == "byzantine":
                mode, _, arg = rest.partition(":")
                if mode == "flip-bytes":
                    count = int(arg)
                    if count < 1:
                        raise FaultProfileError("flip-bytes count must be >= 1")
                    return cls("byzantine", mode=mode, flip_count=count)
                if mode == "random-block" and not arg:
                    return cls("byzantine", mode=mode)
                if mode == "stale-db" and arg:
                    return cls("byzantine", mode=mode, stale_path=arg)
        except ValueError as exc:
            if isinstance(exc, FaultProfileError):
                raise
            raise FaultProfileError(f"bad fault profile {text!r}: {exc}") from None
        raise FaultProfileError(f"bad fault profile {text!r}")

    def __str__(self) -> str:
        if self.kind == "drop":
            return f"drop:{self.drop_probability:g}"
        if self.kind == "delay":
            return f"delay:{self.delay_ms:g}"
        if self.kind == "byzantine":
            if self.mode == "flip-bytes":
                return f"byzantine:flip-bytes:{self.flip_count}"
            if self.mode == "stale-db":
                return f"byzantine:stale-db:{self.stale_path}"
            return "byzantine:random-block"
        return "none"

    def should_drop(self, rng: np.random.Generator) -> bool:
        return self.kind == "drop" and rng.random() < self.drop_probability

    def corrupt(self, block: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Apply flip-bytes / random-block to an honest answer (stale-db is handled by the server)."""
        if self.kind != "byzantine":
            return block
        if self.mode == "random-block":
            return rng.integers(0, 256, size=block.size, dtype=np.uint8)
        if self.mode == "flip-bytes":
            out = block.copy()
            count = min(self.flip_count, block.size)
            pos = rng.choice(block.size, size=count, replace=False)
            out[pos] ^= rng.integers(1, 256, size=count, dtype=np.uint8)
            return out
        return block
