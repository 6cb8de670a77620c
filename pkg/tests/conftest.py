import pytest

from warpcheck.geometry import Chart, VectorField
from warpcheck.sampling import SamplePlan
from warpcheck.spacetime import DoublyWarpedSpacetime, SpacetimeField
from warpcheck.warped import DoublyWarpedProduct, SplitVectorField


@pytest.fixture
def plan():
    return SamplePlan(count=5, seed=7, tol=1e-8)


@pytest.fixture
def plane():
    return Chart.diagonal('E2', ['x', 'y'], [1, 1])


@pytest.fixture
def sphere_chart():
    return Chart('S2', ['th', 'ph'], [[1, 0], [0, 'sin(th)^2']])


@pytest.fixture
def sphere():
    """(0, pi) x_{sin th} S^1, the unit round sphere."""
    return DoublyWarpedProduct(
        Chart.diagonal('Th', ['th'], [1]),
        Chart.diagonal('S1', ['ph'], [1]),
        f1='sin(th)', f2=1, name='S',
    )


@pytest.fixture
def sphere_plan():
    return SamplePlan(box={'th': (0.3, 2.8), 'ph': (0.0, 6.0)}, count=5, seed=11)


@pytest.fixture
def doubly_warped():
    return DoublyWarpedProduct(
        Chart.diagonal('U', ['u'], [1]),
        Chart.diagonal('V', ['v'], [1]),
        f1='exp(u)', f2='1 + v^2', name='W',
    )


@pytest.fixture
def one_plus_two():
    return DoublyWarpedProduct(
        Chart.diagonal('T', ['t'], [1]),
        Chart.diagonal('P', ['th', 'z'], [1, 1]),
        f1='1 + t^2', f2='2 + cos(th)', name='W3',
    )


@pytest.fixture
def minkowski(plane):
    return DoublyWarpedSpacetime(plane, f=1, sigma=1, name='M')


@pytest.fixture
def de_sitter(plane):
    return DoublyWarpedSpacetime(plane, f=1, sigma='exp(t)', t_interval=(-0.5, 0.5), name='dS')


@pytest.fixture
def xy_plan():
    return SamplePlan(box={'x': (-1.0, 1.0), 'y': (-1.0, 1.0)}, count=5, seed=3)


@pytest.fixture
def position_field():
    return SpacetimeField('t', VectorField('E2', {'x': 'x', 'y': 'y'}))


@pytest.fixture
def rotation_split(sphere):
    return SplitVectorField(VectorField('Th'), VectorField('S1', {'ph': 1}))
