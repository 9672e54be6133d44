"""Exception hierarchy.

Every error carries a short machine-readable ``code`` and the ``module`` it
was raised from, so the CLI can emit a structured error record.
"""

from __future__ import annotations


class SkewlabError(Exception):
    exit_code = 3

    def __init__(self, code: str, message: str, module: str = "skewlab", **details):
        super().__init__(message)
        self.code = code
        self.module = module
        self.message = message
        self.details = details

    def record(self) -> dict:
        rec = {"code": self.code, "module": self.module, "message": self.message}
        if self.details:
            rec["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return rec


class InputError(SkewlabError):
    """Bad user input: missing files, unparsable maps, unknown keys."""

    exit_code = 2


class PreconditionError(SkewlabError):
    """An operation was called outside its documented domain."""

    exit_code = 2


class NumericalError(SkewlabError):
    """A numerical procedure failed (divergence, blow-up, escape...)."""

    exit_code = 3


class OrbitEscapedError(NumericalError):
    def __init__(self, module: str, index: int):
        super().__init__("orbit-escaped", f"orbit escaped at step {index}", module, index=index)
        self.index = index


class CriticalHitError(NumericalError):
    def __init__(self, module: str, index: int):
        super().__init__("log-of-zero", f"orbit hits a critical point at step {index}", module,
                         index=index)
        self.index = index


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return repr(v)
