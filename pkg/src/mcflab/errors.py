"""Error type shared by every simulation module."""

from __future__ import annotations


class LabError(ValueError):
    """A named failure of a geometric operation or simulation.

    ``code`` is a short machine-readable tag such as ``"cfl-violation"``; the
    CLI turns it into structured error JSON.
    """

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)

    def to_dict(self) -> dict:
        return {"error": self.code, "detail": self.detail}
