import numpy as np
import pytest
from utils.geometry import Position3, clamp_to_area, euclidean_distance, link_angles
from utils.units import dbm_to_watt, watt_to_dbm
from utils.rng import RngStream, substream
from utils.progress import advance, format_metric, make_progress


@pytest.mark.parametrize("dbm, watt", [(30.0, 1.0), (-30.0, 1e-6), (-100.0, 1e-13)])
def test_dbm_to_watt(dbm, watt):
    assert dbm_to_watt(dbm) == pytest.approx(watt, rel=1e-12)
    assert watt_to_dbm(watt) == pytest.approx(dbm, abs=1e-9)


def test_unit_conversion_rejects_bad_input():
    with pytest.raises(ValueError):
        dbm_to_watt(float("nan"))
    with pytest.raises(ValueError):
        watt_to_dbm(0.0)


@pytest.mark.parametrize("a, b, expected", [
    (Position3(0, 0, 0), Position3(3, 4, 0), 5.0),
    (Position3(1, 1, 1), Position3(1, 1, 1), 0.0),
    (Position3(0, 0, 50), Position3(0, 0, 0), 50.0)
])
def test_euclidean_distance(a, b, expected):
    assert euclidean_distance(a, b) == pytest.approx(expected)


def test_position_rejects_negative_height():
    with pytest.raises(ValueError, match="z"):
        Position3(0.0, 0.0, -1.0)


def test_clamp_to_area():
    inside, outside = clamp_to_area(Position3(10, 20, 5), (0, 0, 400, 400))
    assert not outside and inside == Position3(10, 20, 5)
    clamped, outside = clamp_to_area(Position3(410, -3, 5), (0, 0, 400, 400))
    assert outside
    assert (clamped.x, clamped.y, clamped.z) == (400.0, 0.0, 5.0)


def test_link_angles():
    theta, xi = link_angles(Position3(0, 0, 0), Position3(0, 10, 10))
    assert theta == pytest.approx(np.pi / 4)
    assert xi == pytest.approx(np.pi / 2)
    with pytest.raises(ValueError):
        link_angles(Position3(1, 1, 1), Position3(1, 1, 1))


def test_rng_stream_determinism():
    a = RngStream(7, "fading/ep0/t0").generator.random(5)
    b = RngStream(7, "fading/ep0/t0").generator.random(5)
    c = RngStream(7, "fading/ep0/t1").generator.random(5)
    d = RngStream(8, "fading/ep0/t0").generator.random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_substream_does_not_consume_parent():
    parent = RngStream(3)
    child = substream(parent, "env")
    assert child.stream_label == "root/env"
    first = parent.generator.random()
    substream(parent, "other").generator.random()
    assert RngStream(3).generator.random() == first


def test_rng_stream_rejects_negative_seed():
    with pytest.raises(ValueError):
        RngStream(-1)


def test_format_metric():
    assert format_metric(None) == "[orange3]???"
    assert format_metric(1.5) == "1.500"
    assert format_metric(1e-5) == "1.000e-05"


def test_advance_without_host_is_noop():
    advance(None, None, 1.0)


def test_advance_updates_task():
    progress = make_progress()
    task = progress.add_task("test", total=2)
    advance(progress, task, 0.5)
    assert progress.tasks[0].completed == 1
    assert progress.tasks[0].fields["metric"] == 0.5
