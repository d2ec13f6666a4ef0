"""Shipped example forms and Lie algebras."""
from importlib.resources import files
from pathlib import Path

NAMES = (
    "omega0", "phi0", "sigma0", "psi0",
    "nilpotent", "su2su2", "nk_omega", "nk_phi", "nk_phihat",
)


def data_path(name: str) -> Path:
    """Path of a shipped JSON file by stem, e.g. ``data_path("phi0")``."""
    if name not in NAMES:
        raise KeyError(f"unknown data file {name!r}; choose from {', '.join(NAMES)}")
    return Path(str(files(__name__).joinpath(f"{name}.json")))
