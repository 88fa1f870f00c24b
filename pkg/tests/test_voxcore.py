import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mstruct.errors import (
    BadMagic,
    HeaderParse,
    IndexOutOfRange,
    IoFailure,
    LabelOutOfRange,
    PayloadSizeMismatch,
)
from mstruct.synthgen import FixtureSpec, generate
from mstruct.voxcore import MAGIC, Axis, Kind, VoxelVolume, load_volume, save_volume, slice_volume


def _write(path, header: bytes, payload: bytes):
    path.write_bytes(MAGIC + header + b"\n" + payload)
    return path


def test_load_valid(tmp_path):
    p = _write(tmp_path / "a.mvx", b'{"dims":[4,4,4],"kind":"phase","n_phases":2,"voxel_size":1.0}', bytes(64))
    vol = load_volume(p)
    assert vol.dims == (4, 4, 4)
    assert vol.kind is Kind.PHASE and vol.n_phases == 2


def test_payload_size_mismatch(tmp_path):
    p = _write(tmp_path / "a.mvx", b'{"dims":[4,4,4],"kind":"phase","n_phases":2,"voxel_size":1.0}', bytes(60))
    with pytest.raises(PayloadSizeMismatch):
        load_volume(p)


def test_label_out_of_range(tmp_path):
    payload = bytearray(64)
    payload[5] = 3
    p = _write(tmp_path / "a.mvx", b'{"dims":[4,4,4],"kind":"phase","n_phases":2,"voxel_size":1.0}', bytes(payload))
    with pytest.raises(LabelOutOfRange):
        load_volume(p)


def test_bad_magic(tmp_path):
    p = tmp_path / "a.mvx"
    p.write_bytes(b"MVX2\n{}\n")
    with pytest.raises(BadMagic):
        load_volume(p)


@pytest.mark.parametrize(
    "header",
    [
        b"not json",
        b'{"dims":[4,4],"kind":"phase","n_phases":2,"voxel_size":1.0}',
        b'{"dims":[4,4,0],"kind":"phase","n_phases":2,"voxel_size":1.0}',
        b'{"dims":[4,4,4],"kind":"rgb","voxel_size":1.0}',
        b'{"dims":[4,4,4],"kind":"phase","voxel_size":1.0}',
        b'{"dims":[4,4,4],"kind":"phase","n_phases":2,"voxel_size":-1}',
    ],
)
def test_header_parse(tmp_path, header):
    p = _write(tmp_path / "a.mvx", header, bytes(64))
    with pytest.raises(HeaderParse):
        load_volume(p)


def test_unterminated_header(tmp_path):
    p = tmp_path / "a.mvx"
    p.write_bytes(MAGIC + b'{"dims":[1,1,1]')
    with pytest.raises(HeaderParse):
        load_volume(p)


def test_voxel_size_round_trip(tmp_path):
    vol = VoxelVolume(np.zeros((2, 3, 4), np.uint8), voxel_size=0.5)
    save_volume(vol, tmp_path / "v.mvx")
    assert b'"voxel_size":0.5' in (tmp_path / "v.mvx").read_bytes()
    assert load_volume(tmp_path / "v.mvx") == vol


def test_unwritable_path(tmp_path):
    vol = VoxelVolume(np.zeros((2, 2, 2), np.uint8))
    with pytest.raises(IoFailure):
        save_volume(vol, tmp_path / "missing" / "v.mvx")


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_volume(tmp_path / "nope.mvx")


def test_x_fastest_payload(tmp_path):
    arr = np.arange(24, dtype=np.uint8).reshape((2, 3, 4), order="F")
    vol = VoxelVolume(arr, Kind.GRAY)
    save_volume(vol, tmp_path / "v.mvx")
    payload = (tmp_path / "v.mvx").read_bytes().split(b"\n", 2)[2]
    assert payload == bytes(range(24))
    # index = x + nx*(y + ny*z)
    assert vol.array[1, 2, 3] == 1 + 2 * (2 + 3 * 3)


volumes = st.builds(
    lambda arr, gray, vs: VoxelVolume(arr, Kind.GRAY if gray else Kind.PHASE, None if gray else 256, vs),
    arrays(np.uint8, st.tuples(*[st.integers(1, 5)] * 3)),
    st.booleans(),
    st.sampled_from([1.0, 0.5, 2.5e-6, 3.0]),
)


@settings(max_examples=40, deadline=None)
@given(vol=volumes)
def test_save_load_save_bytes(tmp_path_factory, vol):
    d = tmp_path_factory.mktemp("rt")
    save_volume(vol, d / "a.mvx")
    back = load_volume(d / "a.mvx")
    assert back == vol
    save_volume(back, d / "b.mvx")
    assert (d / "a.mvx").read_bytes() == (d / "b.mvx").read_bytes()


@settings(max_examples=40, deadline=None)
@given(vol=volumes)
def test_slices_partition_voxels(vol):
    flat = np.sort(vol.array.ravel())
    for axis in Axis:
        pix = [slice_volume(vol, axis, k).pixels.ravel() for k in range(vol.dims[axis])]
        assert np.array_equal(np.sort(np.concatenate(pix)), flat)


def test_slice_orientation():
    arr = np.arange(2 * 3 * 4, dtype=np.uint8).reshape((2, 3, 4))
    vol = VoxelVolume(arr, Kind.GRAY)
    z = slice_volume(vol, Axis.Z, 1)
    assert z.dims == (2, 3)
    assert z.pixels[2, 1] == arr[1, 2, 1]  # row y, col x
    y = slice_volume(vol, Axis.Y, 2)
    assert y.dims == (2, 4)
    assert y.pixels[3, 0] == arr[0, 2, 3]  # row z, col x
    x = slice_volume(vol, Axis.X, 1)
    assert x.dims == (3, 4)
    assert x.pixels[3, 2] == arr[1, 2, 3]  # row z, col y


def test_slice_z_index0():
    vol = generate(FixtureSpec("bernoulli", (4, 4, 4), p=0.5), 3)
    img = slice_volume(vol, Axis.Z, 0)
    for x in range(4):
        for y in range(4):
            assert img.pixels[y, x] == vol.array[x, y, 0]


def test_slice_out_of_range():
    vol = VoxelVolume(np.zeros((4, 4, 4), np.uint8))
    with pytest.raises(IndexOutOfRange):
        slice_volume(vol, Axis.Z, 4)


def test_slice_pure():
    vol = generate(FixtureSpec("bernoulli", (5, 4, 3), p=0.3), 1)
    assert slice_volume(vol, "y", 2) == slice_volume(vol, "y", 2)


def test_laminate_z_slices_constant():
    vol = generate(FixtureSpec("laminate", (6, 6, 8), axis=Axis.Z, slab_thickness=2))
    for k in range(8):
        px = slice_volume(vol, Axis.Z, k).pixels
        assert (px == px[0, 0]).all()


def test_volume_is_immutable():
    vol = VoxelVolume(np.zeros((2, 2, 2), np.uint8))
    with pytest.raises(ValueError):
        vol.array[0, 0, 0] = 1
