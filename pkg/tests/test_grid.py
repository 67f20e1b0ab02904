import numpy as np
import pytest

from anomalyflow.geometry import MetricJet
from anomalyflow.grid import Grid, fd_derivative
from anomalyflow.jets import JetSpace
from anomalyflow.trig import kahler_metric_field, real_field
from anomalyflow.velocity import jet_velocity_values, velocity_values


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_fd_stencils_fourth_order(order):
    errs = []
    for N in (16, 32):
        x = np.arange(N) / N
        f = np.sin(2 * np.pi * x)
        exact = (2 * np.pi) ** order * np.sin(2 * np.pi * x + order * np.pi / 2)
        errs.append(np.abs(fd_derivative(f, 0, order, 1.0 / N) - exact).max())
    assert errs[0] / errs[1] > 12  # 16 for a clean fourth-order method


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(7)
    with pytest.raises(ValueError):
        Grid(8, ("x1", "x1"))
    with pytest.raises(ValueError):
        Grid(8, ("w9",))
    g = Grid(8, ("x1", "y2"))
    assert g.shape == (8, 8)
    assert g.space.dirs == (0, 1)
    assert np.allclose(g.points[1, 2], [1 / 8, 2j / 8, 0])


def _field():
    kx = np.array([[1, 0, 0], [1, 1, 0]])
    ky = np.zeros((2, 3), dtype=int)
    return kahler_metric_field(real_field(kx, ky, np.array([0.4, 0.2j]) / np.pi ** 2), 0.5)


def test_wirtinger_jets_converge_to_exact(full_space):
    field = _field()
    errs = []
    for N in (16, 32):
        grid = Grid(N)
        fd = grid.jet(field.evaluate(grid.points), 2)
        exact = field.jet(grid.points.reshape(-1, 3), 2, grid.space)
        errs.append(np.abs(fd.partials().reshape(exact.c.shape) - exact.partials()).max())
    assert errs[0] / errs[1] > 12


def test_fast_metric_derivatives_agree_with_jet_path():
    grid = Grid(16)
    g = _field().evaluate(grid.points)
    fast = velocity_values(g, *grid.metric_derivatives(g))
    slow = jet_velocity_values(MetricJet(grid.jet(g, 2)).g)
    assert np.abs(fast - slow).max() < 1e-12
