import struct

import numpy as np
import pytest

from bosemix import io
from bosemix.fock import ManyBodyState, product_state
from bosemix.meanfield import MixtureSize

from conftest import mixture_setup


def test_field_round_trip_is_bit_exact(tmp_path):
    grid, k1, k2, c, psi, phi = mixture_setup(M=8)
    path = tmp_path / "psi.bmix"
    io.write_field(path, psi)
    back = io.read_checkpoint(path)
    assert back.grid == grid
    assert back.values.tobytes() == psi.values.tobytes()


def test_header_layout(tmp_path):
    grid, *_, psi, phi = mixture_setup(M=8, L=8.0)
    path = tmp_path / "f.bmix"
    io.write_field(path, psi)
    raw = path.read_bytes()
    assert raw[:4] == b"BMIX"
    assert struct.unpack_from("<IIId", raw, 4) == (1, 1, 8, 8.0)
    assert len(raw) == 24 + 16 * 8
    assert np.frombuffer(raw[24:40], "<f8")[0] == psi.values.ravel()[0].real


def test_manybody_round_trip(tmp_path):
    grid, k1, k2, c, psi, phi = mixture_setup(M=6, L=6.0)
    s = product_state(psi, phi, MixtureSize(2, 1))
    path = tmp_path / "state.bmix"
    io.write_manybody(path, s)
    back = io.read_checkpoint(path)
    assert isinstance(back, ManyBodyState)
    assert back.mixture == s.mixture and back.values.tobytes() == s.values.tobytes()


def test_sidecar(tmp_path):
    grid, k1, k2, c, psi, phi = mixture_setup(M=8)
    path = tmp_path / "psi.bmix"
    io.write_field(path, psi)
    io.write_sidecar(path, 0.5, c, (k1, k2), MixtureSize(4, 1))
    meta = io.read_sidecar(path)
    assert meta["t"] == 0.5 and meta["R"] == 2.0 and meta["couplings"]["lambda12"] == c.lambda12
    assert [k["kind"] for k in meta["kinetics"]] == [k1.kind, k2.kind]


def test_corrupt_files_are_rejected(tmp_path):
    grid, *_, psi, phi = mixture_setup(M=8)
    path = tmp_path / "f.bmix"
    io.write_field(path, psi)
    raw = path.read_bytes()
    for bad in (b"XXXX" + raw[4:], raw[:-8], raw[:10], raw[:4] + struct.pack("<I", 9) + raw[8:]):
        path.write_bytes(bad)
        with pytest.raises(io.CheckpointError):
            io.read_checkpoint(path)
