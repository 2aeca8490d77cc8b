"""Run-wide numerical tolerances, resource caps and error types."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import asdict, dataclass, replace


class ErgospinError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InputError(ErgospinError, ValueError):
    """Invalid arguments: dimension mismatch, bad support, malformed config."""

    exit_code = 2


class ResourceError(ErgospinError):
    """A dense representation would exceed the configured cap."""

    exit_code = 3


class ConstructionError(ErgospinError):
    """An object violates a structural invariant (e.g. non-self-adjoint term)."""

    exit_code = 1


class CertificationError(ErgospinError):
    """A numerical certificate could not be established."""

    exit_code = 1


@dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-12
    spectral: float = 1e-9
    automorphism: float = 1e-10
    lr_relative: float = 1e-9
    gram_cut: float = 1e-10
    intertwining: float = 1e-8
    ground_condition: float = 1e-8
    gauge_identity: float = 1e-9
    # dense caps
    max_dense_dim: int = 4096
    max_gns_sites: int = 5
    max_rough_sites: int = 30


TOL = Tolerances()


def with_overrides(**kwargs) -> Tolerances:
    """Return a copy of the default tolerances with selected fields replaced."""
    unknown = set(kwargs) - set(Tolerances.__dataclass_fields__)
    if unknown:
        raise InputError(f"unknown tolerance keys: {sorted(unknown)}")
    return replace(TOL, **kwargs)


@contextmanager
def overridden(**kwargs):
    """Temporarily change the shared tolerances in place (process-local)."""
    new = with_overrides(**kwargs)
    old = asdict(TOL)
    for key, val in asdict(new).items():
        object.__setattr__(TOL, key, val)
    try:
        yield TOL
    finally:
        for key, val in old.items():
            object.__setattr__(TOL, key, val)


def check_dense_dim(k: int, n_sites: int, cap: int | None = None) -> int:
    dim = k**n_sites
    cap = TOL.max_dense_dim if cap is None else cap
    if dim > cap:
        raise ResourceError(
            f"dense dimension {k}^{n_sites} = {dim} exceeds max_dense_dim = {cap}"
        )
    return dim
