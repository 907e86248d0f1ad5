from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from functools import lru_cache
from importlib import resources

from dateutil.parser import isoparse

from waning_interest.errors import InvalidParameterError
from waning_interest.model import ModelParams
from waning_interest.theory import AsymptoticForm


@dataclass(frozen=True)
class Blogger:
    """One published blogger: post count, observation window and fitted CCDF form."""
    label: str
    posts: int
    first_post: date
    last_post: date
    prefactor: float
    t0: float
    gamma: float
    beta: float

    @classmethod
    def from_dict(cls, d: dict) -> "Blogger":
        form = d["ccdf_form"]
        return cls(
            label=d["label"],
            posts=int(d["posts"]),
            first_post=isoparse(d["first_post"]).date(),
            last_post=isoparse(d["last_post"]).date(),
            prefactor=float(form["prefactor"]),
            t0=float(form["t0"]),
            gamma=float(form["gamma"]),
            beta=float(form["beta"]),
        )

    def horizon_days(self) -> float:
        return float((self.last_post - self.first_post).days)

    def form(self) -> AsymptoticForm:
        return AsymptoticForm.from_prefactor(self.prefactor, self.gamma, self.t0, self.beta)

    def model_params(self) -> ModelParams:
        """Model parameters behind the fitted form: b = 1/t0, alpha = gamma/t0."""
        return ModelParams.from_cutoff_form(self.gamma, self.t0, self.beta)


@lru_cache(maxsize=1)
def load_bloggers() -> tuple[Blogger, ...]:
    src = resources.files("waning_interest") / "reference_data" / "bloggers.json"
    payload = json.loads(src.read_text(encoding="utf-8"))
    return tuple(Blogger.from_dict(d) for d in payload["bloggers"])


def get_blogger(label: str) -> Blogger:
    key = label.strip().upper()
    for blogger in load_bloggers():
        if blogger.label == key:
            return blogger
    known = ", ".join(b.label for b in load_bloggers())
    raise InvalidParameterError(f"unknown blogger {label!r} (known: {known})")
