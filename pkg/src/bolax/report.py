"""Certificate report container shared by the spectrum and certify modules."""

from dataclasses import dataclass, field

from .errors import BoundViolated, CountMismatch, GateFailed


@dataclass
class CertReport:
    name: str
    params: dict
    margins: list
    bound: float
    passed: bool
    samples: int
    gate_failed: bool = False
    offending: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def worst_margin(self):
        return min(self.margins) if self.margins else float("inf")

    def to_dict(self):
        return {
            "name": self.name,
            "params": self.params,
            "bound": self.bound,
            "passed": self.passed,
            "gate_failed": self.gate_failed,
            "samples": self.samples,
            "worst_margin": self.worst_margin if self.margins else None,
            "offending": [_jsonable(x) for x in self.offending[:20]],
            "notes": {k: _jsonable(v) for k, v in self.notes.items()},
        }

    def check(self):
        """Raise the matching :class:`CertificateFailure` unless the report passed."""
        if self.gate_failed:
            raise GateFailed(f"{self.name}: precondition gate failed", self)
        if self.passed:
            return self
        if self.name == "counting":
            n = self.offending[0][0] if self.offending else None
            raise CountMismatch(f"counting: eigenvalue count mismatch at n={n}", self, n=n)
        first = self.offending[0] if self.offending else None
        raise BoundViolated(f"{self.name}: bound violated at {first!r}", self)


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return x
