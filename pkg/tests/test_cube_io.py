import numpy as np
import pytest

from hsipath import (
    FormatError,
    HyperCube,
    LabelMap,
    ValidationError,
    band_normalize,
    load_cube,
    load_label_map,
    load_render,
    save_cube,
    save_label_map,
    save_render,
    tile,
)


def _cube(rows, cols, bands, rng=None):
    data = (np.arange(rows * cols * bands, dtype=np.float32)
            if rng is None else
            rng.uniform(-5, 5, (rows, cols, bands)).astype(np.float32))
    return HyperCube.from_array(
        np.asarray(data, dtype=np.float32).reshape(rows, cols, bands),
        np.arange(bands, dtype=np.float64) + 400.0,
    )


def test_cube_file_is_band_sequential(tmp_path):
    """Payload value b*rows*cols + r*cols + c must land at data[r,c,b]."""
    path = tmp_path / "tiny.hsc"
    vals = np.arange(12, dtype="<f4")
    header = b"HSCUBE1 2 2 3\n400 500 600\n"
    path.write_bytes(header + vals.tobytes())
    cube = load_cube(path)
    assert (cube.rows, cube.cols, cube.bands) == (2, 2, 3)
    for b in range(3):
        for r in range(2):
            for c in range(2):
                assert cube.data[r, c, b] == b * 4 + r * 2 + c


def test_cube_payload_size_mismatch(tmp_path):
    path = tmp_path / "short.hsc"
    path.write_bytes(b"HSCUBE1 2 2 3\n400 500 600\n"
                     + np.zeros(10, dtype="<f4").tobytes())
    with pytest.raises(FormatError):
        load_cube(path)


def test_cube_large_declared_dims(tmp_path):
    # spatial grid of the full-scene protocol; payload kept thin
    cube = HyperCube.from_array(
        np.zeros((1384, 1035, 2), dtype=np.float32), [450.0, 800.0])
    path = tmp_path / "wide.hsc"
    save_cube(cube, path)
    back = load_cube(path)
    assert (back.rows, back.cols, back.bands) == (1384, 1035, 2)
    deep = HyperCube.from_array(
        np.zeros((2, 2, 351), dtype=np.float32),
        np.linspace(450.0, 800.0, 351))
    save_cube(deep, tmp_path / "deep.hsc")
    assert load_cube(tmp_path / "deep.hsc").bands == 351


def test_cube_round_trip_identity(tmp_path):
    rng = np.random.default_rng(0)
    cube = _cube(5, 4, 6, rng)
    path = tmp_path / "rt.hsc"
    save_cube(cube, path)
    back = load_cube(path)
    assert np.array_equal(back.data, cube.data)
    assert np.array_equal(back.wavelengths, cube.wavelengths)


def test_cube_zero_payload_bytes(tmp_path):
    cube = HyperCube.from_array(np.zeros((4, 4, 2), dtype=np.float32),
                                [500.0, 600.0])
    path = tmp_path / "z.hsc"
    save_cube(cube, path)
    blob = path.read_bytes()
    # header line, wavelength line, then 32 little-endian float32 zeros
    body = blob.split(b"\n", 2)[2]
    assert body == b"\x00" * (32 * 4)


def test_cube_resave_byte_identical(tmp_path):
    for seed in range(100):
        rng = np.random.default_rng(seed)
        cube = _cube(8, 8, 16, rng)
        p1 = tmp_path / ("a%d.hsc" % seed)
        p2 = tmp_path / ("b%d.hsc" % seed)
        save_cube(cube, p1)
        save_cube(load_cube(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


def test_cube_header_errors(tmp_path):
    cases = [
        b"NOTCUBE 2 2 1\n400\n" + b"\x00" * 16,
        b"HSCUBE1 2 x 1\n400\n" + b"\x00" * 16,
        b"HSCUBE1 2 2 2\n400\n" + b"\x00" * 32,          # wl count
        b"HSCUBE1 2 2 2\n500 400\n" + b"\x00" * 32,      # not increasing
        b"HSCUBE1 0 2 1\n400\n",
    ]
    for i, blob in enumerate(cases):
        path = tmp_path / ("bad%d.hsc" % i)
        path.write_bytes(blob)
        with pytest.raises(FormatError):
            load_cube(path)


def test_cube_rejects_non_finite_payload(tmp_path):
    payload = np.array([np.nan, 0, 0, 0], dtype="<f4").tobytes()
    path = tmp_path / "nan.hsc"
    path.write_bytes(b"HSCUBE1 2 2 1\n400\n" + payload)
    with pytest.raises(FormatError):
        load_cube(path)


def test_cube_validation():
    with pytest.raises(ValidationError):
        HyperCube.from_array(np.zeros((2, 2, 2), dtype=np.float32), [400.0])
    with pytest.raises(ValidationError):
        HyperCube.from_array(np.zeros((2, 2, 2), dtype=np.float32),
                             [500.0, 400.0])
    with pytest.raises(ValidationError):
        HyperCube.from_array(np.full((2, 2, 1), np.inf, dtype=np.float32),
                             [400.0])


def test_tile_full_scene_grid():
    grid = tile(1384, 1035, 230, 258)
    assert grid.count == 24
    assert grid.origins[0] == (0, 0)
    assert grid.bounds(0) == (0, 0, 230, 258)
    assert grid.bounds(23) == (1150, 774, 1380, 1032)
    # row-major origin order
    assert grid.origins[1] == (0, 258)
    assert max(b[2] for b in map(grid.bounds, range(24))) == 1380
    assert max(b[3] for b in map(grid.bounds, range(24))) == 1032


def test_tile_single_and_floor():
    assert tile(230, 258, 230, 258).count == 1
    assert tile(230, 258, 230, 258).origins == ((0, 0),)
    assert tile(459, 517, 230, 258).count == 2


def test_tile_patch_larger_than_image():
    with pytest.raises(ValidationError):
        tile(100, 100, 230, 258)


def test_band_normalize_identity_and_constant():
    cube = _cube(3, 3, 4)
    out = band_normalize(cube, np.ones(4))
    assert np.array_equal(out.data, cube.data)
    const = HyperCube.from_array(np.full((2, 2, 3), 2.0, dtype=np.float32),
                                 [450.0, 500.0, 550.0])
    out = band_normalize(const, np.full(3, 2.0))
    assert np.array_equal(out.data, np.ones((2, 2, 3), dtype=np.float32))


def test_band_normalize_inverts():
    rng = np.random.default_rng(7)
    cube = _cube(4, 5, 6, rng)
    ref = rng.uniform(0.5, 2.0, 6)
    out = band_normalize(cube, ref)
    recon = out.data.astype(np.float64) * ref[None, None, :]
    assert np.allclose(recon, cube.data, rtol=1e-6, atol=1e-6)


def test_band_normalize_rejects_bad_reference():
    cube = _cube(2, 2, 3)
    with pytest.raises(ValidationError):
        band_normalize(cube, [1.0, 0.0, 1.0])
    with pytest.raises(ValidationError):
        band_normalize(cube, [1.0, 1.0])


def test_label_map_round_trips(tmp_path):
    maps = [
        np.full((3, 3), 255, dtype=np.uint8),
        (np.indices((16, 16)).sum(axis=0) % 2).astype(np.uint8),
    ]
    rng = np.random.default_rng(1)
    maps.append(rng.choice([0, 1, 255], size=(9, 7)).astype(np.uint8))
    for i, arr in enumerate(maps):
        path = tmp_path / ("m%d.pgm" % i)
        save_label_map(LabelMap.from_array(arr), path)
        back = load_label_map(path)
        assert np.array_equal(back.labels, arr)


def test_label_map_rejects_out_of_range(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 1, 7, 255]))
    with pytest.raises(FormatError):
        load_label_map(path)


def test_label_map_rejects_wrong_maxval(tmp_path):
    path = tmp_path / "mx.pgm"
    path.write_bytes(b"P5\n2 2\n15\n" + bytes([0, 1, 1, 0]))
    with pytest.raises(FormatError):
        load_label_map(path)


def test_label_map_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# comment line\n2 2\n255\n" + bytes([0, 1, 1, 0]))
    back = load_label_map(path)
    assert back.labels.tolist() == [[0, 1], [1, 0]]


def test_label_map_validation():
    with pytest.raises(ValidationError):
        LabelMap.from_array(np.full((2, 2), 9, dtype=np.uint8))


def test_render_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    img = rng.uniform(0, 1, (5, 6, 3))
    path = tmp_path / "r.ppm"
    save_render(img, path)
    back = load_render(path)
    assert back.shape == (5, 6, 3)
    assert np.max(np.abs(back - img)) <= 0.5 / 255.0 + 1e-12
