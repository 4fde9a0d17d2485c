import numpy as np
import pytest
from scipy import ndimage

from parafrac.config import build, load_config
from parafrac.render import RenderSpec, read_pnm, render_cylinders, render_density, write_pnm

from .conftest import DATA, bundled


def test_bedford_mcmullen_level_one(bedford_mcmullen):
    img = render_cylinders(bedford_mcmullen, RenderSpec(60, 60, level=1))
    # bottom half (image rows 30..59) holds columns 0 and 2, top half holds columns 1 and 2
    blocks = (img.reshape(2, 30, 3, 20) == 255).all(axis=(1, 3))
    assert blocks.tolist() == [[False, True, True], [True, False, True]]
    assert set(np.unique(img)) == {0, 255}
    assert ndimage.label(img)[1] == 2  # only the bottom-left cell stands apart


def test_middle_third_squared_blocks():
    system, _ = build(load_config(DATA / "middle_third_squared.json"))
    img = render_cylinders(system, RenderSpec(18, 18, level=2))
    occupied = (img.reshape(3, 6, 3, 6) > 0).any(axis=(1, 3))
    assert occupied.sum() == 4 and not occupied[1].any() and not occupied[:, 1].any()
    assert ndimage.label(img)[1] == 16


def test_level_nesting(bedford_mcmullen):
    coarse = render_cylinders(bedford_mcmullen, RenderSpec(81, 64, level=2))
    fine = render_cylinders(bedford_mcmullen, RenderSpec(81, 64, level=3))
    assert np.all(coarse[fine > 0] > 0)
    assert np.count_nonzero(fine) < np.count_nonzero(coarse)


@pytest.mark.parametrize("suffix,magic", [(".pgm", b"P5"), (".ppm", b"P6")])
def test_pnm_round_trip(tmp_path, suffix, magic):
    rng = np.random.default_rng(0)
    # include whitespace byte values so the header parser is exercised
    img = rng.integers(0, 256, size=(17, 23), dtype=np.uint8)
    img[0, :4] = [9, 10, 13, 32]
    path = tmp_path / f"img{suffix}"
    write_pnm(path, img)
    assert path.read_bytes()[:2] == magic
    back = read_pnm(path)
    expected = img if magic == b"P5" else np.repeat(img[:, :, None], 3, axis=2)
    assert np.array_equal(back, expected)


def test_spec_bounds():
    with pytest.raises(ValueError):
        RenderSpec(8, 64)
    with pytest.raises(ValueError):
        RenderSpec(64, 10_000)
    with pytest.raises(ValueError):
        RenderSpec(64, 64, mode="contour")


def test_cantor_rejected(middle_third):
    with pytest.raises(TypeError):
        render_cylinders(middle_third, RenderSpec(32, 32))


def test_density_fig1_left(tmp_path):
    system, measure = bundled("fig1_left")
    spec = RenderSpec(64, 64, mode="density", samples=200_000, seed=3)
    img = render_density(system, measure, spec)
    assert img.max() == 255 and np.count_nonzero(img) > 64
    write_pnm(tmp_path / "d.pgm", img)
    assert np.array_equal(read_pnm(tmp_path / "d.pgm"), img)
    assert np.array_equal(render_density(system, measure, spec), img)


def test_density_inside_cylinders(bedford_mcmullen, quarter):
    spec = RenderSpec(54, 32, mode="density", samples=100_000)
    dens = render_density(bedford_mcmullen, quarter, spec)
    cyl = render_cylinders(bedford_mcmullen, RenderSpec(54, 32, level=1))
    assert np.all(cyl[dens > 0] > 0)
