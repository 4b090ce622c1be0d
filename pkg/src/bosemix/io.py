"""Binary checkpoints for lattice fields and many-body states.

Layout, all little-endian: magic ``b"BMIX"``, version u32, d u32, M u32, L f64.
Version 2 (many-body) appends N1 u32, N2 u32. The payload is complex128
(real, imaginary) pairs in row-major order: sites for a field, particle axes
species 1 first for a many-body state. An optional JSON sidecar next to the
file carries time, couplings, kinetics and R.
"""

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .interaction import CouplingMatrix
from .lattice import Field, GridSpec, KineticSpec
from .meanfield import MixtureSize

MAGIC = b"BMIX"
FIELD_VERSION = 1
MANYBODY_VERSION = 2
_HEADER = struct.Struct("<4sIIId")
_MIXTURE = struct.Struct("<II")
_DTYPE = np.dtype("<c16")


class CheckpointError(ValueError):
    pass


def _header(version, grid: GridSpec) -> bytes:
    return _HEADER.pack(MAGIC, version, grid.d, grid.M, float(grid.L))


def write_field(path, f: Field) -> None:
    with open(path, "wb") as fh:
        fh.write(_header(FIELD_VERSION, f.grid))
        fh.write(np.ascontiguousarray(f.values, dtype=_DTYPE).tobytes())


def write_manybody(path, state) -> None:
    with open(path, "wb") as fh:
        fh.write(_header(MANYBODY_VERSION, state.grid))
        fh.write(_MIXTURE.pack(state.mixture.N1, state.mixture.N2))
        fh.write(np.ascontiguousarray(state.values, dtype=_DTYPE).tobytes())


def read_checkpoint(path):
    """Return a Field (version 1) or a ManyBodyState (version 2)."""
    from .fock import ManyBodyState

    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, d, M, L = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    grid = GridSpec(d, M, L)
    offset = _HEADER.size
    if version == FIELD_VERSION:
        count = grid.n_sites
    elif version == MANYBODY_VERSION:
        N1, N2 = _MIXTURE.unpack_from(data, offset)
        offset += _MIXTURE.size
        mixture = MixtureSize(N1, N2)
        count = grid.n_sites**mixture.n_particles
    else:
        raise CheckpointError(f"{path}: unknown version {version}")
    payload = data[offset:]
    if len(payload) != count * _DTYPE.itemsize:
        raise CheckpointError(f"{path}: expected {count} amplitudes, found {len(payload) / _DTYPE.itemsize:g}")
    values = np.frombuffer(payload, dtype=_DTYPE).astype(complex)
    if version == FIELD_VERSION:
        return Field(grid, values)
    return ManyBodyState(mixture, grid, values)


def _kinetic_record(k: KineticSpec) -> dict:
    rec = {"kind": k.kind, "mass": k.mass}
    if k.A is not None and not callable(k.A):
        rec["A_links"] = np.asarray(k.A).tolist()
    elif callable(k.A):
        rec["A"] = getattr(k.A, "__name__", "callable")
    return rec


def write_sidecar(path, t: float, couplings: CouplingMatrix, kinetics, mixture: MixtureSize) -> Path:
    """JSON metadata next to a checkpoint, at ``<path>.json``."""
    meta = {
        "t": t,
        "couplings": asdict(couplings),
        "kinetics": [_kinetic_record(k) for k in kinetics],
        "N1": mixture.N1,
        "N2": mixture.N2,
        "R": mixture.R,
    }
    out = Path(str(path) + ".json")
    out.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return out


def read_sidecar(path) -> dict:
    return json.loads(Path(str(path) + ".json").read_text())
