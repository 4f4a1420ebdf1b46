"""Programs and properties shipped with the package."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

PROGRAMS = ("fig2", "fig2-modified", "fig5", "pair", "ssend-ring", "recv-first",
            "barrier-order", "exchange")
CONTROLS = ("pair", "ssend-ring", "recv-first", "barrier-order", "exchange")


def path(name: str) -> Path:
    """Path of a corpus file; `.mpl` is assumed when no suffix is given."""
    if "." not in name:
        name += ".mpl"
    p = Path(str(resources.files(__name__).joinpath(name)))
    if not p.exists():
        raise FileNotFoundError(f"no corpus file {name!r}")
    return p


def read(name: str) -> str:
    return path(name).read_text()
