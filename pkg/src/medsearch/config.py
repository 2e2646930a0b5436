"""Feature flags for the incremental RUN 1-5 experiment matrix."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class RunConfig:
    run_id: str = "RUN1"
    index_fullforms: bool = False
    index_compounds: bool = False
    expand_fullforms: bool = False
    expand_compounds: bool = False
    heuristic_weighting: bool = False
    expand_synonyms: bool = False

    def index_key(self) -> tuple[bool, bool]:
        """Flags that change the index; runs sharing a key can share an index."""
        return (self.index_fullforms, self.index_compounds)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)

    def index_hash(self) -> str:
        payload = json.dumps(
            {"index_fullforms": self.index_fullforms, "index_compounds": self.index_compounds},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


RUN1 = RunConfig("RUN1")
RUN2 = replace(RUN1, run_id="RUN2", index_fullforms=True, expand_fullforms=True)
RUN3 = replace(RUN2, run_id="RUN3", index_compounds=True, expand_compounds=True)
RUN4 = replace(RUN3, run_id="RUN4", heuristic_weighting=True)
RUN5 = replace(RUN4, run_id="RUN5", expand_synonyms=True)

RUNS = {c.run_id: c for c in (RUN1, RUN2, RUN3, RUN4, RUN5)}


def get_run(name: str) -> RunConfig:
    key = name.strip().upper().replace(" ", "")
    if key.isdigit():
        key = "RUN" + key
    try:
        return RUNS[key]
    except KeyError:
        raise ValueError(f"unknown run {name!r}; expected one of {', '.join(RUNS)}") from None
