import numpy as np
import pytest

from mzworkbench.hilbert import Generator, HilbertSpace


def rotation_matrix_2d():
    """L e1 = e2, L e2 = -e1; exp(tL) e1 = (cos t, sin t)."""
    return np.array([[0.0, -1.0], [1.0, 0.0]])


def block_generator(frequencies, extra_zero_dims=0):
    """Plain block-diagonal skew generator, one plane per frequency."""
    dim = 2 * len(frequencies) + extra_zero_dims
    mat = np.zeros((dim, dim))
    for k, f in enumerate(frequencies):
        i = 2 * k
        mat[i, i + 1] = -f
        mat[i + 1, i] = f
    return Generator(matrix=mat, space=HilbertSpace(dim))


@pytest.fixture
def rotation_generator():
    return Generator(matrix=rotation_matrix_2d(), space=HilbertSpace(2))


@pytest.fixture
def four_d_block():
    """Frequencies 1 and 2; with z = (e1+e3)/sqrt(2) the kernel is
    -1.6 - 0.9 cos(sqrt(2.5) t) (partial fractions of the transformed
    autocorrelation (cos t + cos 2t)/2)."""
    return block_generator([1.0, 2.0])


def taylor_expm_oracle(mat, max_terms=80):
    """Scaling + Taylor series + squaring; independent of the library paths."""
    n = mat.shape[0]
    scale_pow = max(0, int(np.ceil(np.log2(max(np.linalg.norm(mat, np.inf), 1e-16))))) + 1
    a = mat / (2.0**scale_pow)
    term = np.eye(n)
    total = np.eye(n)
    for k in range(1, max_terms):
        term = term @ a / k
        total = total + term
        if np.max(np.abs(term)) < 1e-22:
            break
    for _ in range(scale_pow):
        total = total @ total
    return total
