import pytest

from kaczmarz.bench import gen_gaussian, gen_sparse, make_consistent_system
from kaczmarz.utils import make_rng


@pytest.fixture
def rng():
    return make_rng(0)


@pytest.fixture
def dense_matrix():
    return gen_gaussian(30, 8, seed=3)


@pytest.fixture
def sparse_matrix():
    return gen_sparse(40, 10, 0.3, seed=5)


@pytest.fixture(params=['dense', 'sparse'])
def system(request):
    if request.param == 'dense':
        return make_consistent_system(gen_gaussian(30, 8, seed=3))
    return make_consistent_system(gen_sparse(40, 10, 0.3, seed=5))


@pytest.fixture
def mtx_file(tmp_path):
    """Factory writing Matrix Market text into the test's tmp dir."""
    def make(text, name='a.mtx'):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return make
